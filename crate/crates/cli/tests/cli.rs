use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_taxben");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic population plus the golden sector files.
fn small_inputs(dir: &Path, households: usize) -> PathBuf {
    let input = dir.join("input");
    let fx = fixtures();
    let n = format!("n_households={households}");
    let out = run(&["synth", "--quiet", "--config", s(&fx.join("synth.toml")), "--output-dir", s(&input), "--override", &n]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["sectors.csv", "sector_groups.csv"] {
        std::fs::copy(fx.join(f), input.join(f)).unwrap();
    }
    input
}

fn simulate(input: &Path, out: &Path, extra: &[&str]) -> Output {
    let config = fixtures().join("run.toml");
    let mut args = vec!["simulate", "--config", s(&config), "--input-dir", s(input), "--output-dir", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_the_seven_column_table() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 800);
    let out = tmp.path().join("out");
    let r = simulate(&input, &out, &[]);
    assert!(r.status.success(), "{}", stderr(&r));
    let t2 = std::fs::read_to_string(out.join("table2.csv")).unwrap();
    let lines: Vec<&str> = t2.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|l| l.split(',').count() == 8));
    for f in ["table3_women.csv", "table3_youth.csv", "deciles.csv", "budget.csv", "manifest_simulate.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(String::from_utf8_lossy(&r.stdout).contains("absolute_poverty_5_5"));
}

#[test]
fn quiet_suppresses_the_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 50);
    let r = simulate(&input, &tmp.path().join("out"), &["--quiet"]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert!(r.stdout.is_empty());
}

#[test]
fn missing_sectors_file_is_an_input_error_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 20);
    std::fs::remove_file(input.join("sectors.csv")).unwrap();
    let r = simulate(&input, &tmp.path().join("out"), &[]);
    assert_eq!(r.status.code(), Some(2));
    let e = stderr(&r);
    assert_eq!(e.lines().count(), 1);
    assert!(e.starts_with("error module="));
    assert!(e.contains("sectors.csv"));
}

#[test]
fn unknown_override_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 20);
    let r = simulate(&input, &tmp.path().join("out"), &["--override", "scenario.crisis_weeks=3"]);
    assert_eq!(r.status.code(), Some(3));
    assert!(stderr(&r).contains("module=config"));
}

#[test]
fn out_of_band_one_off_amount_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 20);
    let r = simulate(&input, &tmp.path().join("out"), &["--override", "measures.one_off_amounts.student=3000"]);
    assert_eq!(r.status.code(), Some(3), "{}", stderr(&r));
}

#[test]
fn unknown_subcommand_is_rejected() {
    let r = run(&["simulated"]);
    assert!(!r.status.success());
}

#[test]
fn check_validates_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 30);
    let config = fixtures().join("run.toml");
    let r = run(&["check", "--config", s(&config), "--input-dir", s(&input)]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert!(String::from_utf8_lossy(&r.stdout).starts_with("ok households 30"));

    std::fs::write(input.join("sectors.csv"), "sector_code,severity,actual_turnover_delta,actual_hours_delta\n10,2,,\n").unwrap();
    let r = run(&["check", "--config", s(&config), "--input-dir", s(&input)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("op=apply_shock"));
}

#[test]
fn dangling_household_reference_names_the_record() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 5);
    let path = input.join("individuals.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let first = lines[1].clone();
    let (pid, rest) = first.split_once(',').unwrap();
    let (_, tail) = rest.split_once(',').unwrap();
    lines.push(format!("{pid}X,H99,{tail}"));
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let r = run(&["check", "--config", s(&fixtures().join("run.toml")), "--input-dir", s(&input)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("record=H99"), "{}", stderr(&r));
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().to_string()).collect()
}

#[test]
fn simulate_at_three_months_matches_the_bounds_row() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 600);
    let out = tmp.path().join("out");
    let r = simulate(&input, &out, &["--quiet", "--override", "scenario.crisis_months=3"]);
    assert!(r.status.success(), "{}", stderr(&r));
    let config = fixtures().join("run.toml");
    let r = run(&["bounds", "--quiet", "--config", s(&config), "--input-dir", s(&input), "--output-dir", s(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));

    let t2 = std::fs::read_to_string(out.join("table2.csv")).unwrap();
    let bounds = std::fs::read_to_string(out.join("bounds.csv")).unwrap();
    let d3 = csv_column(&bounds, "d3");
    let mut i = 0;
    for line in t2.lines().skip(1) {
        for cell in line.split(',').skip(1) {
            assert_eq!(cell, d3[i]);
            i += 1;
        }
    }
    assert_eq!(i, d3.len());
}

#[test]
fn validate_fit_writes_the_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 500);
    let out = tmp.path().join("out");
    let config = fixtures().join("run.toml");
    let r = run(&["validate-fit", "--config", s(&config), "--input-dir", s(&input), "--output-dir", s(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));
    let fit = std::fs::read_to_string(out.join("fit.csv")).unwrap();
    assert!(fit.starts_with("slope,intercept,r_squared,n_sectors\n"));
}

#[test]
fn synth_is_deterministic_and_reweight_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let a = small_inputs(&tmp.path().join("a"), 200);
    let b = small_inputs(&tmp.path().join("b"), 200);
    for f in ["households.csv", "individuals.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }

    let targets = tmp.path().join("targets.toml");
    std::fs::write(
        &targets,
        "tolerance = 1e-8\nmax_iterations = 500\n[[margins]]\ndimension = \"gender\"\ntargets = { female = 1000000.0, male = 950000.0 }\n",
    )
    .unwrap();
    let out = tmp.path().join("raked");
    let r = run(&["reweight", "--input-dir", s(&a), "--targets", s(&targets), "--output-dir", s(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert_eq!(std::fs::read(a.join("individuals.csv")).unwrap(), std::fs::read(out.join("individuals.csv")).unwrap());
    assert_ne!(std::fs::read(a.join("households.csv")).unwrap(), std::fs::read(out.join("households.csv")).unwrap());
}

#[test]
fn manifest_carries_config_hash_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_inputs(tmp.path(), 40);
    let out = tmp.path().join("out");
    assert!(simulate(&input, &out, &["--quiet"]).status.success());
    let m = std::fs::read_to_string(out.join("manifest_simulate.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&m).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    assert!(v["files"]["table2.csv"].is_string());

    let out2 = tmp.path().join("out2");
    assert!(simulate(&input, &out2, &["--quiet", "--override", "scenario.seed=8"]).status.success());
    let m2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out2.join("manifest_simulate.json")).unwrap()).unwrap();
    assert_ne!(v["config_sha256"], m2["config_sha256"]);
}
