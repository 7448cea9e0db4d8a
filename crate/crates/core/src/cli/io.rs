//! The JSON complex interchange format.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{ComplexError, GeometricComplex};
use crate::geom::Vector;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path} is not a complex file: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: unsupported version {found}, expected {FORMAT_VERSION}")]
    Version { path: PathBuf, found: u32 },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Complex { path: PathBuf, source: ComplexError },
}

/// On-disk form of a complex.
///
/// Rows of `simplices` are sorted ascending when `orientation` is present;
/// `orientation[i]` is then the sign of simplex `i` relative to its sorted
/// row. Without `orientation` the given row order defines the orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexFileV1 {
    pub version: u32,
    pub dimension_m: usize,
    #[serde(rename = "ambient_N")]
    pub ambient_n: usize,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Vec<i8>>,
    /// `false` for a complex that carries no orientation at all.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub oriented: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl ComplexFileV1 {
    pub fn from_complex(c: &GeometricComplex) -> Self {
        ComplexFileV1 {
            version: FORMAT_VERSION,
            dimension_m: c.dimension(),
            ambient_n: c.ambient_dim(),
            vertices: (0..c.num_vertices() as u32).map(|v| c.vertex_coords(v).to_vec()).collect(),
            simplices: c.top_rows(),
            orientation: c.is_oriented().then(|| c.parities().to_vec()),
            oriented: c.is_oriented(),
        }
    }

    /// Validates the file contents and builds the complex. Errors are plain
    /// messages; [`read_complex`] attaches the path.
    pub fn to_complex(&self) -> Result<GeometricComplex, String> {
        if self.version != FORMAT_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        if let Some(o) = &self.orientation {
            if o.len() != self.simplices.len() {
                return Err(format!("orientation has {} entries for {} simplices", o.len(), self.simplices.len()));
            }
            if let Some(i) = o.iter().position(|s| *s != 1 && *s != -1) {
                return Err(format!("orientation entry {i} is not +1 or -1"));
            }
            if let Some(i) = self.simplices.iter().position(|r| r.windows(2).any(|w| w[0] >= w[1])) {
                return Err(format!("simplex {i} is not sorted ascending"));
            }
        }
        let vertices: Vec<Vector> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if v.len() != self.ambient_n {
                    Err(ComplexError::CoordinateCount(i, v.len(), self.ambient_n).to_string())
                } else if v.len() > crate::geom::MAX_DIM {
                    Err(ComplexError::BadAmbient { m: self.dimension_m, n: self.ambient_n }.to_string())
                } else {
                    Ok(Vector::from_slice(v))
                }
            })
            .collect::<Result<_, _>>()?;
        GeometricComplex::from_parts(
            self.dimension_m,
            self.ambient_n,
            &vertices,
            &self.simplices,
            self.orientation.as_deref(),
            self.oriented,
        )
        .map_err(|e| e.to_string())
    }
}

/// Serializes `c` as a single JSON document. Coordinates use the shortest
/// representation that parses back to the same `f64`.
pub fn complex_to_json(c: &GeometricComplex) -> String {
    serde_json::to_string(&ComplexFileV1::from_complex(c)).expect("complex file serializes")
}

pub fn write_complex(path: &Path, c: &GeometricComplex) -> Result<(), FileError> {
    fs::write(path, complex_to_json(c)).map_err(|source| FileError::Write { path: path.to_path_buf(), source })
}

pub fn read_complex(path: &Path) -> Result<GeometricComplex, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Read { path: path.to_path_buf(), source })?;
    let file: ComplexFileV1 =
        serde_json::from_str(&text).map_err(|source| FileError::Parse { path: path.to_path_buf(), source })?;
    if file.version != FORMAT_VERSION {
        return Err(FileError::Version { path: path.to_path_buf(), found: file.version });
    }
    file.to_complex().map_err(|message| FileError::Invalid { path: path.to_path_buf(), message })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Write { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::TestManifold;
    use crate::meshgen::{generate, Generator, MeshRecipe};

    #[test]
    fn round_trip_is_bit_exact() {
        let mesh = generate(&MeshRecipe::new(TestManifold::unit_sphere(), Generator::Icosphere(2))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.json");
        write_complex(&path, &mesh.complex).unwrap();
        let back = read_complex(&path).unwrap();
        assert_eq!(back, mesh.complex);
        for v in 0..back.num_vertices() as u32 {
            let a = back.vertex_coords(v).iter().map(|x| x.to_bits());
            assert!(a.eq(mesh.complex.vertex_coords(v).iter().map(|x| x.to_bits())));
        }
    }

    #[test]
    fn flipped_orientation_survives() {
        let mesh = generate(&MeshRecipe::new(TestManifold::circle(1.0).unwrap(), Generator::PolyCircle(8))).unwrap();
        let flipped = mesh.complex.with_flipped_parity(3);
        let file: ComplexFileV1 = serde_json::from_str(&complex_to_json(&flipped)).unwrap();
        assert_eq!(file.to_complex().unwrap(), flipped);
    }

    #[test]
    fn row_order_orients_when_orientation_missing() {
        let text = r#"{"version":1,"dimension_m":1,"ambient_N":2,
            "vertices":[[1,0],[0,1],[-1,0]],"simplices":[[1,0],[1,2],[2,0]]}"#;
        let file: ComplexFileV1 = serde_json::from_str(text).unwrap();
        let c = file.to_complex().unwrap();
        assert_eq!(c.parities(), &[-1, 1, -1]);
    }

    #[test]
    fn rejects_bad_files() {
        let bad = [
            r#"{"version":2,"dimension_m":1,"ambient_N":2,"vertices":[],"simplices":[]}"#,
            r#"{"version":1,"dimension_m":1,"ambient_N":2,"vertices":[[0,0],[1,0]],"simplices":[[0,5]]}"#,
            r#"{"version":1,"dimension_m":1,"ambient_N":2,"vertices":[[0,0],[1]],"simplices":[[0,1]]}"#,
            r#"{"version":1,"dimension_m":1,"ambient_N":2,"vertices":[[0,0],[1,0]],"simplices":[[1,0]],"orientation":[1]}"#,
            r#"{"version":1,"dimension_m":1,"ambient_N":2,"vertices":[[0,0],[1,0]],"simplices":[[0,1]],"orientation":[0]}"#,
        ];
        for text in bad {
            let file: ComplexFileV1 = serde_json::from_str(text).unwrap();
            assert!(file.to_complex().is_err(), "{text}");
        }
    }
}
