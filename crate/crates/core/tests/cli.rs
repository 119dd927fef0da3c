use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wedgelift::code::parse_matrix;

fn wedgelift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wedgelift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_block_instantiations() {
    let o = wedgelift(&["classify", "--ell-prime", "2", "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("q=16 ell=4 h=5 t=3 N=256 route=block"), "{s}");
    assert!(s.contains("bad=49 closed_form=49 naive_bound=48"), "{s}");

    let o = wedgelift(&["classify", "--ell-prime", "3", "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("bad=343 closed_form=343"));
}

#[test]
fn classify_single_coset_family() {
    let dir = tempfile::tempdir().unwrap();
    let o = wedgelift(&[
        "classify",
        "--ell",
        "4",
        "--subgroup-order",
        "15",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("t=1 N=256 route=block"), "{s}");
    assert!(s.contains("bad=31 closed_form=31 naive_bound=16"), "{s}");
    let csv = fs::read_to_string(dir.path().join("classify.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("a,b,bad,criterion_used"));
    assert_eq!(lines.next(), Some("0,0,0,block"));
    assert_eq!(csv.lines().count(), 257);
    assert!(csv.contains("\n15,15,1,block\n"));
}

#[test]
fn classify_non_block_family() {
    let o = wedgelift(&["classify", "--ell", "4", "--subgroup-order", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("h=3 t=5 N=256 route=coset"), "{s}");
    assert!(!s.contains("closed_form"), "{s}");
}

#[test]
fn classify_with_oracle() {
    let o = wedgelift(&["classify", "--ell", "3", "--subgroup-order", "7", "--oracle"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("route=oracle"));
}

#[test]
fn usage_and_resource_exit_codes() {
    assert_eq!(wedgelift(&["classify", "--ell", "4"]).status.code(), Some(2));
    assert_eq!(wedgelift(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        wedgelift(&["classify", "--ell", "4", "--subgroup-order", "6"]).status.code(),
        Some(2)
    );
    let o = wedgelift(&["build", "--ell", "4", "--subgroup-order", "5", "--max-matrix-bytes", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension-only"));
    let o = wedgelift(&["classify", "--ell", "4", "--subgroup-order", "5", "--oracle", "--budget", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

fn build_into(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["build", "--ell", "4", "--subgroup-order", "5", "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = wedgelift(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn build_writes_reproducible_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = build_into(a.path(), &["--binary"]);
    assert!(s.contains("N=256 q=16 t=3 dimension=208 redundancy=48 bad_monomials=49"), "{s}");
    assert!(s.contains("binary_dimension=208 binary_redundancy=48"), "{s}");
    build_into(b.path(), &["--binary"]);
    for name in ["code.json", "parity.txt", "generator.txt", "trace_generators.txt"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }

    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("code.json")).unwrap()).unwrap();
    assert_eq!(json["ell"], 4);
    assert_eq!(json["modulus"], 19);
    assert_eq!(json["subgroup_order"], 5);
    assert_eq!(json["coordinate_order"], "row-major-poly-basis");
    assert_eq!(json["dimension"], 208);
    assert_eq!(json["binary_dimension"], 208);

    let (q, rows) = parse_matrix(&fs::read_to_string(a.path().join("generator.txt")).unwrap()).unwrap();
    assert_eq!((q, rows.len(), rows[0].len()), (16, 208, 256));
    let (q, rows) = parse_matrix(&fs::read_to_string(a.path().join("parity.txt")).unwrap()).unwrap();
    assert_eq!((q, rows.len(), rows[0].len()), (16, 768, 256));
}

#[test]
fn smallest_build() {
    let dir = tempfile::tempdir().unwrap();
    let o = wedgelift(&["build", "--ell", "2", "--subgroup-order", "3", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("N=16 q=4 t=1 dimension=10 redundancy=6"));
}

#[test]
fn dimension_only_q64() {
    let o = wedgelift(&["build", "--ell", "6", "--subgroup-order", "9", "--dimension-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("N=4096 q=64 t=7 dimension=3754 redundancy=342"));
}

#[test]
fn verify_passes_and_is_deterministic() {
    let args = ["verify", "--ell", "4", "--subgroup-order", "5", "--seed", "1", "--trials", "100", "--binary"];
    let o = wedgelift(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("fq: trials=100 checks=76800 failures=0 PASS"), "{s}");
    assert!(s.contains("binary: trials=100 checks=76800 failures=0 PASS"), "{s}");
    assert!(s.contains("parallel_reads: k=3 PASS"), "{s}");
    assert_eq!(stdout(&wedgelift(&args)), s);
}

#[test]
fn verify_fails_loudly_on_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = wedgelift(&[
        "verify",
        "--ell",
        "4",
        "--subgroup-order",
        "5",
        "--trials",
        "10",
        "--inject-fault",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("repair verification failed"));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(json["fault_injected"], true);
    let failures = json["reports"][0]["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert_eq!(failures[0]["coordinate"], 0);
    assert_eq!(failures[0]["group"], 0);
}

#[test]
fn table_golden_rows() {
    let o = wedgelift(&["table"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for row in [
        "  2   0.2500    0.7018    0.7500  .702",
        "  3   0.1667    0.6511    0.6667  .651",
        "  4   0.1250    0.6193    0.6250  .619",
    ] {
        assert!(s.contains(row), "missing {row:?} in\n{s}");
    }
    assert!(s.contains("0.714 0.750 0.792 0.500"));
    assert!(s.contains("tends to 0.5000"));
}

#[test]
fn plan_outputs() {
    let s = stdout(&wedgelift(&["plan", "--alpha", "1/4", "--n", "2"]));
    assert!(s.contains("ell=4 q=16 h=5 t=3 N=256 t_sqrt_N=48"), "{s}");
    let s = stdout(&wedgelift(&["plan", "--alpha", "1/4", "--n", "3"]));
    assert!(s.contains("q=64 h=9 t=7"), "{s}");
    let o = wedgelift(&["plan", "--alpha", "3/8", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("one_minus_2alpha=1/2^2 ell=4 q=16 h=3 t=5"));
    assert_eq!(wedgelift(&["plan", "--alpha", "1/3"]).status.code(), Some(2));
}
