use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stablekernel"))
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("stablekernel-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

/// A config with small lattices so the parametrix pipelines finish in seconds.
fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(
        &p,
        format!("[grid]\nn = 1024\ntimes = [0.5, 1.0]\n\n[parametrix]\ncoarse_n = 64\nfine_n = 1024\n\n[mc]\npaths = 4000\n{extra}"),
    )
    .unwrap();
    p
}

#[test]
fn density_writes_fields_report_and_plots() {
    let out = tmp("density");
    let cfg = small_config(&out, "");
    let o = run(&["density", "--preset", "constant-1.5", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 * 1024 + 1);
    assert!(out.join("density.stkd").exists());
    let r = report(&out);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["provenance"]["pipeline"], "density");
    assert_eq!(r["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    let ids: Vec<&str> = r["reports"].as_array().unwrap().iter().map(|x| x["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"density.two_sided") && ids.contains(&"density.scaling"), "{ids:?}");
    let slices = fs::read_to_string(out.join("plots/density_slices.csv")).unwrap();
    assert_eq!(slices.lines().count(), 2 * 1024 + 1);
    assert!(slices.starts_with("label,t,x,value\n"));
}

#[test]
fn identical_configs_give_identical_reports_apart_from_the_timestamp() {
    let (a, b) = (tmp("det-a"), tmp("det-b"));
    let cfg = small_config(&a, "");
    for out in [&a, &b] {
        let o = run(&["mc", "--preset", "constant-0.75", "--config", cfg.to_str().unwrap(), "--seed", "7"], out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let strip = |d: &Path| {
        let mut v = report(d);
        v["provenance"]["timestamp"] = Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(fs::read(a.join("samples.csv")).unwrap(), fs::read(b.join("samples.csv")).unwrap());
    assert_eq!(fs::read_to_string(a.join("samples.csv")).unwrap().lines().count(), 4001);
    // another seed changes the hash and the samples
    let c = tmp("det-c");
    run(&["mc", "--preset", "constant-0.75", "--config", cfg.to_str().unwrap(), "--seed", "8"], &c);
    assert_ne!(report(&a)["provenance"]["config_hash"], report(&c)["provenance"]["config_hash"]);
}

#[test]
fn malformed_key_is_rejected_with_its_path() {
    let out = tmp("badkey");
    let cfg = out.join("bad.toml");
    fs::write(&cfg, "[parametrix]\ncoarse = 64\n").unwrap();
    let o = run(&["parametrix", "--preset", "constant-1.5", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"]["kind"], "configuration");
    assert!(e["error"]["message"].as_str().unwrap().contains("parametrix.coarse"), "{e}");
}

#[test]
fn configuration_errors_exit_with_2() {
    let out = tmp("cfgerr");
    let cfg = out.join("mismatch.toml");
    fs::write(&cfg, "pipeline = \"mc\"\n").unwrap();
    let o = run(&["density", "--preset", "constant-1.5", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["density", "--preset", "no-such-preset"], &out).status.code(), Some(2));
    assert_eq!(run(&["density"], &out).status.code(), Some(2), "a model is required");
    // the drift series is stated for alpha > 1
    let cfg = small_config(&out, "");
    let o = run(&["drift", "--preset", "even-alpha1", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "domain");
    let o = bin().args(["density", "--preset", "constant-1.5", "--out", "/proc/stablekernel"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "io");
}

#[test]
fn rejected_model_is_a_check_failure() {
    let out = tmp("reject");
    let o = run(&["density", "--preset", "sign-asymmetric-alpha1"], &out);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["status"], "fail");
    let odd = r["reports"].as_array().unwrap().iter().find(|x| x["id"] == "model.odd_moment").unwrap();
    assert_eq!(odd["status"], "fail");
    assert!(!out.join("density.csv").exists());
}

#[test]
fn collapse_check_passes_for_constant_kernel() {
    let out = tmp("collapse");
    let cfg = small_config(&out, "");
    let o = run(&["parametrix", "--preset", "constant-cauchy", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    let c = r["reports"].as_array().unwrap().iter().find(|x| x["id"] == "parametrix.collapse").unwrap();
    assert_eq!(c["status"], "pass");
    assert!(fs::read_to_string(out.join("plots/ratio_heatmap.csv")).unwrap().lines().count() > 1);
}

#[test]
fn drift_convergence_failure_exits_with_3() {
    let out = tmp("conv");
    let cfg = small_config(&out, "\n[drift]\nn_max = 2\ntail_tol = 1e-12\n");
    let o = run(&["drift", "--preset", "drift-1.5", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_json(&o)["error"]["kind"], "convergence");
}

#[test]
fn drift_pipeline_writes_term_decay() {
    let out = tmp("drift");
    let cfg = small_config(&out, "");
    let o = run(&["drift", "--preset", "drift-1.5", "--config", cfg.to_str().unwrap()], &out);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    let decay = fs::read_to_string(out.join("plots/term_decay.csv")).unwrap();
    assert!(decay.lines().any(|l| l.starts_with("drift,l,1,")), "{decay}");
    assert!(decay.lines().any(|l| l.starts_with("parametrix,F,1,")), "{decay}");
    assert!(out.join("l.csv").exists() && out.join("l.stkd").exists());
}

#[test]
fn verify_on_cauchy_preset_passes_density_checks() {
    let out = tmp("verify");
    // the preset checks include t = 0.25, which needs a finer lattice than the other tests
    let cfg = out.join("run.toml");
    fs::write(&cfg, "[parametrix]\ncoarse_n = 64\nfine_n = 2048\n").unwrap();
    let o = run(&["verify", "--preset", "constant-cauchy", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    let reps = r["reports"].as_array().unwrap();
    let density: Vec<_> = reps.iter().filter(|x| x["id"].as_str().unwrap().starts_with("density.")).collect();
    assert!(density.len() >= 4);
    assert!(density.iter().all(|x| x["status"] == "pass"), "{density:?}");
    assert!(reps.iter().any(|x| x["id"] == "density.cauchy"));
}

#[test]
fn verify_runs_selected_criteria() {
    let out = tmp("criteria");
    let o = run(&["verify", "--criterion", "3", "--criterion", "11"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("criterion  3 PASS") && stdout.contains("criterion 11 PASS"), "{stdout}");
    let crit = fs::read_to_string(out.join("plots/criteria.csv")).unwrap();
    assert!(crit.lines().skip(1).all(|l| l.starts_with("3,") || l.starts_with("11,")));
    assert_eq!(run(&["verify", "--criterion", "13"], &out).status.code(), Some(2));
}

#[test]
fn report_subcommand_rerenders_plots() {
    let out = tmp("rerender");
    let src = out.join("report.json");
    fs::write(
        &src,
        r#"{"status":"info","reports":[],"criteria":[],"convergence":[],"plots":{"slices":[],"ratio_heatmap":[]},"artifacts":[]}"#,
    )
    .unwrap();
    let o = bin().args(["report", src.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["density_slices", "ratio_heatmap", "term_decay", "constants", "criteria"] {
        let text = fs::read_to_string(out.join(format!("plots/{f}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 1, "{f}");
    }
    fs::write(&src, "not json").unwrap();
    assert_eq!(bin().args(["report", src.to_str().unwrap()]).output().unwrap().status.code(), Some(2));
}
