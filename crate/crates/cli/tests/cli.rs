use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use twisted_fs::io::{self, SystemFile};
use twisted_fs::system::library;
use twisted_fs::{samples, TwistedSystem};

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twisted-fs"));
    cmd.args(args).env_remove("TWISTED_FS_TOL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn write_system(dir: &TempDir, name: &str, file: &SystemFile) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(file).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn bundled_corpus_files_match_the_library() {
    for s in library::corpus() {
        let path = corpus_dir().join(format!("{}.json", s.name()));
        let text =
            std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            text.trim_end(),
            io::system_to_json(&s),
            "{} is stale",
            path.display()
        );
    }
}

#[test]
fn every_corpus_file_verifies() {
    for s in library::corpus() {
        let path = corpus_dir().join(format!("{}.json", s.name()));
        let o = run(&["verify", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}: {}", s.name(), stdout(&o));
        assert!(stdout(&o).contains("PASS"));
    }
}

#[test]
fn perturbed_unit_cocycle_value_is_a_violation() {
    let dir = TempDir::new().unwrap();
    let mut file = SystemFile::from_system(&library::pauli());
    // σ(g, e) must be 1.
    file.sigma[1][0] = vec![vec![vec![[0.0, 1.0]]]];
    let path = write_system(&dir, "bad.json", &file);
    let o = run(&["verify", &path]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn tolerance_comes_from_flag_or_environment() {
    let dir = TempDir::new().unwrap();
    let mut file = SystemFile::from_system(&library::pauli());
    file.sigma[1][0] = vec![vec![vec![[1.0 + 1e-6, 0.0]]]];
    let path = write_system(&dir, "near.json", &file);
    assert_eq!(code(&run(&["verify", &path])), 1);
    assert_eq!(code(&run(&["verify", &path, "--tol", "1e-3"])), 0);
    assert_eq!(
        code(&run_env(&["verify", &path], &[("TWISTED_FS_TOL", "1e-3")])),
        0
    );
}

#[test]
fn malformed_documents_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, "{\"group\": ").unwrap();
    assert_eq!(code(&run(&["verify", truncated.to_str().unwrap()])), 2);

    let mut doc: serde_json::Value =
        serde_json::from_str(&io::system_to_json(&library::flip())).unwrap();
    doc["colour"] = serde_json::json!("blue");
    let extra = dir.path().join("extra.json");
    std::fs::write(&extra, doc.to_string()).unwrap();
    let o = run(&["verify", extra.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    doc = serde_json::from_str(&io::system_to_json(&library::flip())).unwrap();
    doc["sigma"] = serde_json::json!([[]]);
    std::fs::write(&extra, doc.to_string()).unwrap();
    assert_eq!(code(&run(&["verify", extra.to_str().unwrap()])), 2);

    assert_eq!(code(&run(&["verify", "/definitely/not/here.json"])), 2);
    assert_eq!(code(&run(&["verify", "builtin:no-such-system"])), 2);
}

#[test]
fn crossed_product_reports_dimension_and_center() {
    for (name, line) in [
        ("flip-z2", "dim 4, center 1"),
        ("pauli-klein", "dim 4, center 1"),
        ("trivial-z2", "dim 2, center 2"),
    ] {
        let o = run(&["crossed-product", &format!("builtin:{name}")]);
        assert_eq!(code(&o), 0);
        assert_eq!(stdout(&o).lines().next(), Some(line), "{name}");
    }
}

#[test]
fn crossed_product_export_writes_basis_images() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("basis.json");
    let o = run(&[
        "crossed-product",
        "builtin:m2-inner-z2",
        "--export",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let docs: Vec<io::MatrixDoc> =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // dim A · |G| images, each of size d|G| × d|G|.
    assert_eq!(docs.len(), 8);
    assert!(docs
        .iter()
        .all(|m| m.len() == 4 && m.iter().all(|r| r.len() == 4)));
}

fn margins(text: &str) -> Vec<f64> {
    text.lines()
        .filter(|l| l.contains("margin"))
        .map(|l| {
            let rel = l.split("relative ").nth(1).unwrap();
            rel.split(')').next().unwrap().parse().unwrap()
        })
        .collect()
}

#[test]
fn pd_check_on_the_unit_map_passes_both_tests() {
    for s in library::corpus() {
        let o = run(&["pd-check", "--unit", &format!("builtin:{}", s.name())]);
        assert_eq!(code(&o), 0);
        let m = margins(&stdout(&o));
        assert_eq!(m.len(), 2);
        // Zero up to rounding: the unit kernel is singular.
        assert!(m.iter().all(|&v| v >= -1e-12), "{}: {m:?}", s.name());
        assert_eq!(stdout(&o).matches(": positive").count(), 2);
    }
}

#[test]
fn pd_check_on_a_non_positive_map_agrees_and_gr_refuses_it() {
    let dir = TempDir::new().unwrap();
    let s = Arc::new(library::m2_inner_z2());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = samples::pd_sample(&s, &mut rng).map;
    let (bad, _) = samples::non_pd_perturbation(&t, &mut rng);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, io::coeff_to_json(&bad)).unwrap();
    let o = run(&["pd-check", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).matches("not positive").count(), 2);
    assert!(margins(&stdout(&o)).iter().all(|&m| m < 0.0));
    assert_eq!(code(&run(&["gr", path.to_str().unwrap()])), 1);
}

fn round_trip(s: TwistedSystem, seed: u64) {
    let dir = TempDir::new().unwrap();
    let s = Arc::new(s);
    let t = samples::pd_sample(&s, &mut ChaCha8Rng::seed_from_u64(seed)).map;
    let input = dir.path().join("t.json");
    let rep = dir.path().join("rep.json");
    let back = dir.path().join("back.json");
    std::fs::write(&input, io::coeff_to_json(&t)).unwrap();
    let o = run(&[
        "gr",
        input.to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "coeff",
        rep.to_str().unwrap(),
        "--x",
        "0",
        "--y",
        "0",
        "-o",
        back.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t2 = io::coeff_from_json(&std::fs::read_to_string(&back).unwrap(), 1e-9).unwrap();
    assert!(t2.dist(&t) <= 1e-8, "{}: {:.3e}", s.name(), t2.dist(&t));
    assert_eq!(code(&run(&["coeff", rep.to_str().unwrap(), "--x", "3"])), 2);
}

#[test]
fn reconstruction_then_coefficient_reproduces_the_map() {
    for (i, s) in library::corpus().into_iter().enumerate() {
        round_trip(s, 100 + i as u64);
    }
}

#[test]
fn suite_reports_are_byte_identical_for_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&["suite", "--seed", "7", "--json-report", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
    let (ra, rb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ra, rb);
    let doc: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["passed"], true);
    let keys: Vec<&str> = doc["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["key"].as_str().unwrap())
        .collect();
    assert!(keys.contains(&"gelfand_raikov_roundtrip"));
}

#[test]
fn suite_accepts_system_files() {
    let path = corpus_dir().join("s3-permutation.json");
    let o = run(&[
        "suite",
        "--samples",
        "1",
        "--system",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| !l.starts_with("FAIL")));
}
