//! Command-line interface: mesh generation, certification and the lemma
//! sweeps.
//!
//! Exit codes: 0 certified (or all sweeps pass), 1 refuted (or a sweep
//! failed), 2 bad arguments, 3 file errors, 4 inconclusive, 5 input is not a
//! closed curve or surface complex on the given manifold.

pub mod io;
pub mod lemmas;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::certifier::{
    certify_differential_control, certify_generic, certify_submanifold, CertificationReport, CertifyConfig,
    CertifyError, ConstantsScope, GenericBound, SubmanifoldMode, Verdict,
};
use crate::manifolds::TestManifold;
use crate::meshgen::{generate, mesh_constants, Generator, MeshRecipe, Mutation, SizeScale};

pub const EXIT_CERTIFIED: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_NOT_MANIFOLD: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "tricert", version, about = "Certify that a simplicial complex triangulates a submanifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a mesh of a test manifold and write it as a complex file.
    Gen {
        /// sphere:m,N,radius | torus:R,r | circle:radius | bisphere:radius,gap
        #[arg(long)]
        manifold: TestManifold,
        /// icosphere:k | torusgrid:NUxNV | polycircle:n
        #[arg(long)]
        recipe: String,
        /// sliver:SIMPLEX:SEVERITY | flip:SIMPLEX | rogue:x,y,... (repeatable)
        #[arg(long)]
        mutation: Vec<String>,
        /// Output file; mesh constants are still printed without it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check the triangulation criteria for a complex file.
    Certify {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        manifold: TestManifold,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Report JSON output.
        #[arg(long)]
        report: PathBuf,
        /// Optional CSV of criterion margins.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Quality constants per star (local) or over the whole mesh (global).
        #[arg(long, value_enum, default_value_t = ScopeArg::Local)]
        scope: ScopeArg,
        /// Distortion threshold for generic mode.
        #[arg(long, value_enum, default_value_t = BoundArg::Uniform)]
        bound: BoundArg,
        /// Skip the sampled distance and angle consequences.
        #[arg(long)]
        skip_consequences: bool,
    },
    /// Run randomized checks of the supporting bounds.
    LemmaCheck {
        /// Sweep name, or "all".
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cases per sweep and manifold.
        #[arg(short = 'n', long = "cases", default_value_t = 10_000)]
        cases: usize,
        /// Also print the outcomes as JSON lines.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Lfs,
    Reach,
    Generic,
    Diff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    Local,
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundArg {
    Uniform,
    Sharp,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    configure_threads(err);
    match cli.command {
        Command::Gen { manifold, recipe, mutation, output } => cmd_gen(manifold, &recipe, &mutation, output, out, err),
        Command::Certify { complex, manifold, mode, report, csv, seed, scope, bound, skip_consequences } => {
            let config = CertifyConfig {
                seed,
                skip_consequences,
                scope: match scope {
                    ScopeArg::Local => ConstantsScope::Local,
                    ScopeArg::Global => ConstantsScope::Global,
                },
                generic_bound: match bound {
                    BoundArg::Uniform => GenericBound::Uniform,
                    BoundArg::Sharp => GenericBound::DimensionSharp,
                },
                ..CertifyConfig::default()
            };
            cmd_certify(&complex, manifold, mode, &report, csv.as_ref(), &config, out, err)
        }
        Command::LemmaCheck { lemma, seed, cases, json } => cmd_lemma_check(&lemma, seed, cases, json, out, err),
    }
}

/// Caps the global thread pool at `THREADS` when it is set.
fn configure_threads(err: &mut dyn Write) {
    let Ok(value) = std::env::var("THREADS") else { return };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // Fails only if the pool already exists, as in repeated calls
            // from tests; the first setting stays in effect.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => {
            let _ = writeln!(err, "warning: ignoring THREADS={value:?}, expected a positive integer");
        }
    }
}

fn cmd_gen(
    manifold: TestManifold,
    recipe: &str,
    mutations: &[String],
    output: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let generator: Generator = match recipe.parse() {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(err, "error: --recipe: {e}");
            return EXIT_USAGE;
        }
    };
    let mut mesh_recipe = MeshRecipe::new(manifold, generator);
    for m in mutations {
        match m.parse::<Mutation>() {
            Ok(m) => mesh_recipe = mesh_recipe.with_mutation(m),
            Err(e) => {
                let _ = writeln!(err, "error: --mutation: {e}");
                return EXIT_USAGE;
            }
        }
    }
    let mesh = match generate(&mesh_recipe) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(path) = output {
        if let Err(e) = io::write_complex(&path, &mesh.complex) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IO;
        }
    }
    let scale = if matches!(manifold, TestManifold::Torus { .. }) { SizeScale::LocalFeatureSize } else { SizeScale::Reach };
    let line = match mesh_constants(&mesh.complex, &manifold, scale) {
        Ok(c) => serde_json::json!({ "recipe": mesh_recipe, "stats": mesh.stats, "constants": c }),
        Err(_) => serde_json::json!({ "recipe": mesh_recipe, "stats": mesh.stats }),
    };
    let _ = writeln!(out, "{line}");
    EXIT_CERTIFIED
}

fn certify_error_code(e: &CertifyError) -> i32 {
    match e {
        CertifyError::DeltaOutOfWindow { .. } => EXIT_USAGE,
        CertifyError::NumericallyUnstableJacobian(_) => EXIT_INCONCLUSIVE,
        _ => EXIT_NOT_MANIFOLD,
    }
}

/// Exit code for a finished report.
pub fn verdict_code(report: &CertificationReport) -> i32 {
    match report.verdict {
        Verdict::Certified => EXIT_CERTIFIED,
        Verdict::Refuted { .. } => EXIT_REFUTED,
        Verdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_certify(
    complex_path: &PathBuf,
    manifold: TestManifold,
    mode: ModeArg,
    report_path: &PathBuf,
    csv_path: Option<&PathBuf>,
    config: &CertifyConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let complex = match io::read_complex(complex_path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IO;
        }
    };
    let result = match mode {
        ModeArg::Lfs => certify_submanifold(&manifold, &complex, SubmanifoldMode::Lfs, config),
        ModeArg::Reach => certify_submanifold(&manifold, &complex, SubmanifoldMode::Reach, config),
        ModeArg::Generic => certify_generic(&manifold, &complex, config),
        ModeArg::Diff => certify_differential_control(&manifold, &complex, config),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return certify_error_code(&e);
        }
    };
    if let Err(e) = io::write_text(report_path, &report.to_json()) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_IO;
    }
    if let Some(path) = csv_path {
        if let Err(e) = io::write_text(path, &report.to_csv()) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IO;
        }
    }
    let summary = match &report.verdict {
        Verdict::Certified => "certified".to_string(),
        Verdict::Refuted { failed } => format!("refuted: {}", failed.join(", ")),
        Verdict::Inconclusive { reason } => format!("inconclusive: {reason}"),
    };
    let _ = writeln!(out, "{summary}");
    verdict_code(&report)
}

fn cmd_lemma_check(name: &str, seed: u64, cases: usize, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let names: Vec<&str> = if name == "all" {
        lemmas::lemma_names().collect()
    } else if let Some(n) = lemmas::lemma_names().find(|n| *n == name) {
        vec![n]
    } else {
        let _ = writeln!(err, "error: unknown lemma {name:?}; available:");
        for (n, statement) in lemmas::LEMMAS {
            let _ = writeln!(err, "  {n:<26} {statement}");
        }
        let _ = writeln!(err, "  all");
        return EXIT_USAGE;
    };
    let start = std::time::Instant::now();
    let outcomes = lemmas::run_lemmas(&names, cases, seed);
    let _ = writeln!(
        out,
        "{:<26} {:<16} {:>7} {:>7} {:>10} {:>12}  status",
        "lemma", "manifold", "cases", "skipped", "violations", "worst_slack"
    );
    for o in &outcomes {
        let slack = if o.worst_slack.is_finite() { format!("{:.3e}", o.worst_slack) } else { "exact".to_string() };
        let _ = writeln!(
            out,
            "{:<26} {:<16} {:>7} {:>7} {:>10} {:>12}  {}",
            o.lemma,
            o.manifold,
            o.cases,
            o.skipped,
            o.violations,
            slack,
            if o.passes() { "PASS" } else { "FAIL" }
        );
    }
    if json {
        for o in &outcomes {
            let _ = writeln!(out, "{}", serde_json::to_string(o).expect("outcome serializes"));
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passes()).count();
    let _ = writeln!(
        out,
        "{} sweeps, {} failed, {:.1} s",
        outcomes.len(),
        failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        EXIT_CERTIFIED
    } else {
        EXIT_REFUTED
    }
}
