//! Checks whether a simplicial complex with vertices on a smooth submanifold
//! of `R^N` triangulates it, by way of local charts at every vertex.
//!
//! The modules build on each other: [`geom`] and [`simplex`] for flats and
//! single simplices, [`distortion`] for metric distortion bounds,
//! [`complex`] for the combinatorics, [`manifolds`] for the analytic test
//! manifolds, [`atlas`] for charts, [`degree`] for piecewise-linear degree,
//! and [`certifier`] for the criteria and reports. [`meshgen`] builds test
//! meshes and [`cli`] is the command-line front end.

pub mod atlas;
pub mod certifier;
pub mod cli;
pub mod complex;
pub mod degree;
pub mod distortion;
pub mod geom;
pub mod manifolds;
pub mod meshgen;
pub mod simplex;

// Runs the code blocks of the guide as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/simplices.md")]
    mod simplices {}
    #[doc = include_str!("../../../book/src/distortion.md")]
    mod distortion {}
    #[doc = include_str!("../../../book/src/complexes.md")]
    mod complexes {}
    #[doc = include_str!("../../../book/src/manifolds.md")]
    mod manifolds {}
    #[doc = include_str!("../../../book/src/charts.md")]
    mod charts {}
    #[doc = include_str!("../../../book/src/degree.md")]
    mod degree {}
    #[doc = include_str!("../../../book/src/certification.md")]
    mod certification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/checking.md")]
    mod checking {}
}
