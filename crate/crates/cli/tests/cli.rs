use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hdr_cli::{Boundary, Degree, MeshDocument};
use proptest::prelude::*;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn hdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdr")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON report")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_doc(dir: &tempfile::TempDir, name: &str, doc: &MeshDocument) -> PathBuf {
    let p = dir.path().join(name);
    doc.save(&p).unwrap();
    p
}

#[test]
fn empty_marking_leaves_document_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let input = example("laplace_exact.json");
    let o = hdr(&["refine", path_str(&input), "-o", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), std::fs::read_to_string(&input).unwrap());
}

#[test]
fn unrepaired_refinement_is_flagged() {
    let o = hdr(&["refine", path_str(&example("laplace_marked.json")), "--exact", "off"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("h1>0 risk"));
    let doc = MeshDocument::from_json(&stdout(&o)).unwrap();
    let expected = MeshDocument::load(&example("laplace_problematic.json")).unwrap();
    assert!(doc.domains().unwrap().same_refinement(&expected.domains().unwrap()));
}

#[test]
fn repaired_refinement_passes_the_pair_scan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exact.json");
    let o = hdr(&["refine", path_str(&example("laplace_marked.json")), "-o", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("corners added: 1"));
    assert!(stderr(&o).contains("final level: 1"));
    let scan = hdr(&["check", path_str(&out), "--what", "pairs"]);
    assert_eq!(code(&scan), 0);
    assert_eq!(json(&scan)["count"], 0);
    let shipped = MeshDocument::load(&example("laplace_exact.json")).unwrap();
    assert_eq!(MeshDocument::load(&out).unwrap(), shipped);
}

#[test]
fn admissible_refinement_with_supports() {
    let dir = tempfile::tempdir().unwrap();
    let base = write_doc(&dir, "base.json", &MeshDocument::uniform([6, 6], Degree::Uniform(2), Boundary::Open));
    let marks = dir.path().join("marks.json");
    std::fs::write(&marks, "[[0, 3, 3]]").unwrap();
    let once = dir.path().join("once.json");
    let o = hdr(&["refine", path_str(&base), "--marked", path_str(&marks), "--supports", "-o", path_str(&once)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    std::fs::write(&marks, "[[1, 6, 6]]").unwrap();
    let twice = dir.path().join("twice.json");
    let o = hdr(&[
        "refine",
        path_str(&once),
        "--marked",
        path_str(&marks),
        "--supports",
        "--admissible",
        "2",
        "-o",
        path_str(&twice),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let adm = hdr(&["check", path_str(&twice), "--what", "admissibility", "--variant", "hb", "--max-class", "2"]);
    assert_eq!(code(&adm), 0, "{}", stdout(&adm));
}

#[test]
fn refine_rejects_problematic_input_and_bad_marks() {
    let dir = tempfile::tempdir().unwrap();
    let marks = dir.path().join("marks.json");
    std::fs::write(&marks, "[[0, 1, 1]]").unwrap();
    let o = hdr(&["refine", path_str(&example("laplace_problematic.json")), "--marked", path_str(&marks), "--supports"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("problematic pair"));
    std::fs::write(&marks, "[[0, 9, 1]]").unwrap();
    let o = hdr(&["refine", path_str(&example("laplace_exact.json")), "--marked", path_str(&marks)]);
    assert_eq!(code(&o), 2);
    std::fs::write(&marks, "[[0, 2, 2]]").unwrap();
    let o = hdr(&["refine", path_str(&example("laplace_adaptive.json")), "--marked", path_str(&marks)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("union of supports"));
}

#[test]
fn cohomology_reports() {
    let o = hdr(&["check", path_str(&example("laplace_exact.json")), "--what", "cohomology"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!([&r["h0"], &r["h1"], &r["h2"]], [1, 0, 0]);

    let o = hdr(&["check", path_str(&example("maxwell_exact.json")), "--what", "cohomology", "--arithmetic", "float"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!([&r["h0"], &r["h1"], &r["h2"]], [0, 0, 1]);

    let o = hdr(&["check", path_str(&example("laplace_problematic.json")), "--what", "cohomology"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["h1"], 1);
}

#[test]
fn pair_scan_lists_the_problematic_pairs() {
    let o = hdr(&["check", path_str(&example("laplace_problematic.json")), "--what", "pairs"]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert_eq!(r["count"], 1);
    assert_eq!(r["pairs"][0]["level"], 0);
    assert_eq!(r["pairs"][0]["i"], serde_json::json!([3, 2]));
    assert_eq!(r["pairs"][0]["j"], serde_json::json!([5, 6]));

    let o = hdr(&["check", path_str(&example("maxwell_problematic.json")), "--what", "pairs"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["count"], 4);
}

#[test]
fn uniform_mesh_has_admissibility_class_one() {
    for variant in ["hb", "thb"] {
        let o = hdr(&["check", path_str(&example("laplace_adaptive.json")), "--what", "admissibility", "--variant", variant]);
        assert_eq!(code(&o), 0);
        assert_eq!(json(&o)["classes"], serde_json::json!([1, 1, 1]));
    }
    let o = hdr(&["check", path_str(&example("maxwell_exact.json")), "--what", "assumption1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["violations"], serde_json::json!([]));
}

#[test]
fn plot_draws_each_active_element_once() {
    let dir = tempfile::tempdir().unwrap();
    for n in [1, 3, 7] {
        let doc = write_doc(&dir, "u.json", &MeshDocument::uniform([n, n], Degree::Uniform(2), Boundary::Homogeneous));
        let o = hdr(&["plot", path_str(&doc)]);
        assert_eq!(code(&o), 0);
        assert_eq!(stdout(&o).matches(r#"class="element""#).count(), n * n);
    }
    for name in ["laplace_exact.json", "maxwell_problematic.json"] {
        let path = example(name);
        let svg = dir.path().join("mesh.svg");
        let o = hdr(&["plot", path_str(&path), "--out", path_str(&svg)]);
        assert_eq!(code(&o), 0);
        let cells = MeshDocument::load(&path).unwrap().domains().unwrap().mesh_elements().len();
        assert_eq!(std::fs::read_to_string(&svg).unwrap().matches(r#"class="element""#).count(), cells);
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn maxwell_spectrum_on_the_exact_mesh() {
    let o = hdr(&["solve", path_str(&example("maxwell_exact.json")), "--problem", "maxwell"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("index,eigenvalue\n"));
    let values: Vec<f64> = csv_rows(&text).iter().take(8).map(|r| r[1].parse().unwrap()).collect();
    for (v, e) in values.iter().zip([1.0, 1.0, 2.0, 4.0, 4.0, 5.0, 5.0, 8.0]) {
        assert!((v - e).abs() < 1e-5, "{values:?}");
    }
}

#[test]
fn laplace_error_column() {
    let o = hdr(&["solve", path_str(&example("laplace_exact.json")), "--problem", "laplace"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][2].parse::<f64>().unwrap() < 1e-10);
    assert_eq!(rows[0][3], "0");

    let o = hdr(&["solve", path_str(&example("laplace_problematic.json")), "--problem", "laplace"]);
    assert_eq!(code(&o), 1);
    let rows = csv_rows(&stdout(&o));
    assert!(rows[0][2].parse::<f64>().unwrap() > 1e-3);
    assert_eq!(rows[0][3], "1");
    assert_eq!(rows[0][4], "true");
}

#[test]
fn adaptive_history_reduces_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("history.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_hdr"))
        .env("HDR_THREADS", "2")
        .args([
            "solve",
            path_str(&example("laplace_adaptive.json")),
            "--problem",
            "laplace",
            "--field",
            "tanh-ring",
            "--steps",
            "3",
            "--out",
            path_str(&csv),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 3);
    let errors: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let dofs: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(dofs.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("schema.json", r#"{"schema":2,"degree":2,"boundary_mode":"open","base_intervals":[3,3],"levels":0,"generators":[]}"#),
        ("field.json", r#"{"schema":1,"degree":2,"boundary_mode":"open","base_intervals":[3,3],"levels":0,"generators":[],"theta":1}"#),
        ("levels.json", r#"{"schema":1,"degree":2,"boundary_mode":"open","base_intervals":[3,3],"levels":1,"generators":[]}"#),
        ("index.json", r#"{"schema":1,"degree":2,"boundary_mode":"open","base_intervals":[3,3],"levels":1,"generators":[[[9,9]]]}"#),
        ("syntax.json", "{"),
    ];
    for (name, text) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        let o = hdr(&["check", path_str(&p), "--what", "pairs"]);
        assert_eq!(code(&o), 2, "{name}");
        assert!(stderr(&o).contains(name), "{name}: {}", stderr(&o));
    }
    assert_eq!(code(&hdr(&["solve", path_str(&example("laplace_exact.json")), "--problem", "heat"])), 2);
    assert_eq!(code(&hdr(&["refine", path_str(&example("laplace_exact.json")), "--admissible", "two"])), 2);
}

fn document() -> impl Strategy<Value = MeshDocument> {
    let degree = prop_oneof![(1usize..6).prop_map(Degree::Uniform), [1usize..6, 1usize..6].prop_map(Degree::PerDirection)];
    let mode = prop_oneof![Just(Boundary::Homogeneous), Just(Boundary::Open)];
    let index = [1usize..40, 1usize..40];
    let generators = prop::collection::vec(prop::collection::vec(index, 1..5), 0..4);
    let marked = prop::option::of(prop::collection::vec([0usize..4, 1usize..30, 1usize..30], 0..6));
    (degree, mode, [1usize..20, 1usize..20], generators, marked).prop_map(|(degree, mode, n, generators, marked)| {
        MeshDocument {
            schema: 1,
            degree,
            boundary_mode: mode,
            base_intervals: n,
            levels: generators.len(),
            generators,
            marked,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(doc in document()) {
        prop_assert_eq!(MeshDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn saved_domains_reload_identically(
        n in 3usize..8,
        p in 1usize..4,
        open in any::<bool>(),
        picks in prop::collection::vec((0usize..64, 0usize..64), 1..4),
    ) {
        let mode = if open { Boundary::Open } else { Boundary::Homogeneous };
        let dim = if open { n + p } else { n + p - 2 };
        prop_assume!(dim > 0);
        let gens: Vec<[usize; 2]> = picks.iter().map(|&(a, b)| [a % dim + 1, b % dim + 1]).collect();
        let doc = MeshDocument { levels: 1, generators: vec![gens], ..MeshDocument::uniform([n, n], Degree::Uniform(p), mode) };
        let domains = doc.domains().unwrap();
        let saved = MeshDocument::from_domains(&domains);
        let reloaded = MeshDocument::from_json(&saved.to_json()).unwrap();
        prop_assert!(reloaded.domains().unwrap().same_refinement(&domains));
        prop_assert_eq!(MeshDocument::from_domains(&reloaded.domains().unwrap()), saved);
    }
}
