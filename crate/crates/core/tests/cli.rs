use std::path::Path;

use tricert::cli::{run, EXIT_CERTIFIED, EXIT_INCONCLUSIVE, EXIT_IO, EXIT_NOT_MANIFOLD, EXIT_REFUTED, EXIT_USAGE};

fn tricert(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("tricert").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn gen_writes_a_file_and_prints_constants() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = path(dir.path(), "ico3.json");
    let (code, out, _) = tricert(&["gen", "--manifold", "sphere:2,3,1", "--recipe", "icosphere:3", "-o", &mesh]);
    assert_eq!(code, EXIT_CERTIFIED);
    let line: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(line["stats"]["vertices"], 642);
    assert!(line["constants"]["eps0"].as_f64().unwrap() > 0.0);
    let file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&mesh).unwrap()).unwrap();
    assert_eq!(file["version"], 1);
    assert_eq!(file["ambient_N"], 3);
}

#[test]
fn gen_rejects_bad_recipes_and_paths() {
    let (code, _, err) = tricert(&["gen", "--manifold", "sphere:2,3,1", "--recipe", "icosphere:x"]);
    assert_eq!(code, EXIT_USAGE, "{err}");
    let (code, _, _) = tricert(&["gen", "--manifold", "sphere:2,3,1", "--recipe", "icosphere:1", "--mutation", "melt:3"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) =
        tricert(&["gen", "--manifold", "sphere:2,3,1", "--recipe", "icosphere:1", "-o", "/nonexistent/dir/mesh.json"]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn certify_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = path(dir.path(), "coarse.json");
    let polygon = path(dir.path(), "polygon.json");
    let report = path(dir.path(), "report.json");
    let csv = path(dir.path(), "report.csv");
    assert_eq!(tricert(&["gen", "--manifold", "sphere:2,3,1", "--recipe", "icosphere:0", "-o", &coarse]).0, 0);
    assert_eq!(tricert(&["gen", "--manifold", "circle:1", "--recipe", "polycircle:128", "-o", &polygon]).0, 0);

    let (code, out, _) = tricert(&[
        "certify", "--complex", &coarse, "--manifold", "sphere:2,3,1", "--mode", "reach", "--report", &report, "--csv", &csv,
    ]);
    assert_eq!(code, EXIT_REFUTED);
    assert!(out.starts_with("refuted:") && out.contains("sampling_quality"), "{out}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["criteria"].is_array());
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 1);

    let (code, out, _) =
        tricert(&["certify", "--complex", &polygon, "--manifold", "circle:1", "--mode", "reach", "--report", &report]);
    assert_eq!((code, out.trim()), (EXIT_CERTIFIED, "certified"));

    let (code, _, _) =
        tricert(&["certify", "--complex", &polygon, "--manifold", "circle:1", "--mode", "diff", "--report", &report]);
    assert_eq!(code, EXIT_INCONCLUSIVE);

    // A 2-complex against a curve.
    let (code, _, _) =
        tricert(&["certify", "--complex", &coarse, "--manifold", "circle:1", "--mode", "reach", "--report", &report]);
    assert_eq!(code, EXIT_NOT_MANIFOLD);

    let missing = path(dir.path(), "missing.json");
    let (code, _, _) =
        tricert(&["certify", "--complex", &missing, "--manifold", "circle:1", "--mode", "reach", "--report", &report]);
    assert_eq!(code, EXIT_IO);

    let (code, _, _) =
        tricert(&["certify", "--complex", &polygon, "--manifold", "circle:1", "--mode", "sideways", "--report", &report]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn reports_are_byte_identical_for_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = path(dir.path(), "ico2.json");
    assert_eq!(tricert(&["gen", "--manifold", "sphere:2,3,1", "--recipe", "icosphere:2", "-o", &mesh]).0, 0);
    let reports: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let report = path(dir.path(), &format!("r{i}.json"));
            tricert(&[
                "certify", "--complex", &mesh, "--manifold", "sphere:2,3,1", "--mode", "lfs", "--seed", "5", "--report", &report,
            ]);
            std::fs::read(&report).unwrap()
        })
        .collect();
    assert!(!reports[0].is_empty());
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn lemma_check_reports_each_sweep() {
    let (code, out, _) = tricert(&["lemma-check", "--lemma", "trilateration", "-n", "300", "--seed", "3"]);
    assert_eq!(code, EXIT_CERTIFIED, "{out}");
    assert!(out.lines().next().unwrap().starts_with("lemma"));
    assert_eq!(out.lines().filter(|l| l.starts_with("trilateration")).count(), 3);
    assert!(out.lines().last().unwrap().starts_with("3 sweeps, 0 failed"));

    let (code, _, err) = tricert(&["lemma-check", "--lemma", "no-such-bound"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("cogent-degree"));
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = tricert(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("lemma-check"));
    assert_eq!(tricert(&[]).0, EXIT_USAGE);
}
