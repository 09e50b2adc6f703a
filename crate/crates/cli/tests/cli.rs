use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let dir = out.parent().unwrap();
    let cfg = dir.join(format!("{}.toml", out.file_name().unwrap().to_string_lossy()));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ulatv"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn result(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tmp() -> (tempfile::TempDir, PathBuf) {
    let t = tempfile::tempdir().unwrap();
    let p = t.path().to_path_buf();
    (t, p)
}

const PLAN: &str = r#"
operation = "plan"

[potential]
family = "isotropic_quadratic"
dim = 4

[route]
route = "strong_convex"

[plan]
epsilon = 0.25
"#;

#[test]
fn plan_reports_every_constant() {
    let (_t, dir) = tmp();
    let out = dir.join("plan");
    let o = run("plan", PLAN, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = result(&out);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["operation"], "plan");
    let hash = r["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    let plan = &r["result"]["plan"];
    for key in ["gamma", "p", "horizon", "kappa", "a_bar", "log_c_bar"] {
        assert!(plan[key].is_number(), "missing {key}");
    }
    assert!(r["result"]["c_bar"].is_number());
    assert!(plan["certified"]["total"].as_f64().unwrap() <= 0.25);
    assert!(r["metadata"]["generated_unix_seconds"].is_u64());
    assert!(out.join("curves.csv").exists());
}

#[test]
fn validate_bound_dominates_oracle() {
    let (_t, dir) = tmp();
    let out = dir.join("validate");
    let cfg = r#"
start = [3.0]

[potential]
family = "isotropic_quadratic"
dim = 1

[route]
route = "strong_convex"

[schedule]
kind = "constant"
gamma = 0.1

[validate]
p = [10, 50, 200, 1000]
grid_points = 1025
bounds = [-12.0, 12.0]
"#;
    let o = run("validate", cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("curves.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (b, tv, cf) = (col("bound"), col("oracle_tv"), col("closed_form_tv"));
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (bound, oracle, exact): (f64, f64, f64) = (rec[b].parse().unwrap(), rec[tv].parse().unwrap(), rec[cf].parse().unwrap());
        assert!(bound >= oracle);
        assert!((oracle - exact).abs() < 1e-3, "grid {oracle} vs closed form {exact}");
        n += 1;
    }
    assert_eq!(n, 4);
    let dens = fs::read_to_string(out.join("densities.csv")).unwrap();
    assert!(dens.starts_with("x,target,p_10,p_50,p_200,p_1000"));
}

#[test]
fn drift_domain_error_exits_with_config_code() {
    let (_t, dir) = tmp();
    let cfg = r#"
gamma_bar = 1.0

[potential]
family = "isotropic_quadratic"
dim = 2

[certificate]
class = "superexponential"
rho = 1.0
alpha = 2.0
m_rho = 0.0

[route]
route = "poincare"

[schedule]
kind = "constant"
gamma = 0.1

[certify]
p = [10, 100]
"#;
    let o = run("certify", cfg, &dir.join("bad"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("superexponential drift: gamma_bar = 1 must be strictly below 1/L"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let (_t, dir) = tmp();
    let cfg = PLAN.replace("epsilon = 0.25", "epsilon = 0.25\ntolerance = 3");
    let o = run("plan", &cfg, &dir.join("unknown"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown field `tolerance`"), "{}", stderr(&o));
    assert!(!dir.join("unknown").exists());
}

#[test]
fn operation_must_match_subcommand() {
    let (_t, dir) = tmp();
    let o = run("certify", PLAN, &dir.join("mismatch"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("declares operation 'plan'"));
}

#[test]
fn infeasible_budget_exits_with_two() {
    let (_t, dir) = tmp();
    let cfg = PLAN.replace("epsilon = 0.25", "budget = 5");
    let o = run("plan", &cfg, &dir.join("budget"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("smallest feasible budget"));
}

#[test]
fn failed_assertion_exits_with_three() {
    let (_t, dir) = tmp();
    let cfg = r#"
[route]
route = "strong_convex"

[scaling]
d_list = [1, 2, 4, 8]
epsilon = 0.25
slope_p = [5.0, 6.0]

[scaling.family]
family = "isotropic_gaussian"
"#;
    let out = dir.join("scaling");
    let o = run("scaling", cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let r = result(&out);
    assert_eq!(r["status"], "validation_failed");
    assert!(r["failures"][0].as_str().unwrap().starts_with("slope_p"));
}

fn strip_metadata(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("metadata");
    v
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let (_t, dir) = tmp();
    let cfg = r#"
seed = 11
start = [2.0, -1.0, 0.5]

[potential]
family = "huber"
dim = 3
scale = 1.0

[schedule]
kind = "constant"
gamma = 0.2

[sample]
n_chains = 5000
steps = 100
record_at = [10, 100]
"#;
    let (a, b) = (dir.join("a"), dir.join("b"));
    assert_eq!(run("sample", cfg, &a, &["--workers", "1"]).status.code(), Some(0));
    assert_eq!(run("sample", cfg, &b, &["--workers", "3"]).status.code(), Some(0));
    assert_eq!(fs::read(a.join("curves.csv")).unwrap(), fs::read(b.join("curves.csv")).unwrap());
    assert_eq!(strip_metadata(result(&a)), strip_metadata(result(&b)));
    let ja = fs::read_to_string(a.join("result.json")).unwrap();
    let jb = fs::read_to_string(b.join("result.json")).unwrap();
    let cut = |s: &str| s[..s.find("\"metadata\"").unwrap()].to_string();
    assert_eq!(cut(&ja), cut(&jb));
}

#[test]
fn couple_tail_within_bound() {
    let (_t, dir) = tmp();
    let cfg = r#"
seed = 3
start = [1.0]

[couple]
y = [-1.0]
dt = 2e-3
n_runs = 2000
t = [0.5, 1.0, 2.0]

[couple.drift]
kind = "linear"
rate = 0.5
"#;
    let out = dir.join("couple");
    let o = run("couple", cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = result(&out);
    assert_eq!(r["result"]["mode"], "tail");
    assert_eq!(r["result"]["report"]["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn explain_lists_the_formula_chain() {
    let (_t, dir) = tmp();
    let out = dir.join("explain");
    let o = run("explain", PLAN, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for needle in ["[drift]", "ln lambda = -1.5", "[rate]", "ln kappa", "[plan]", "p = "] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    let chain = result(&out)["result"]["chain"].as_array().unwrap().len();
    assert!(chain > 10);
}

#[test]
fn user_supplied_constants_carry_provenance() {
    let (_t, dir) = tmp();
    let cfg = r#"
[potential]
family = "isotropic_quadratic"
dim = 2

[certificate]
class = "log_concave"
eta = 1.0
m_eta = 2.0

[route]
route = "bobkov"
variance = 2.0
provenance = "exact"

[schedule]
kind = "constant"
gamma = 0.01

[certify]
p = [100, 1000]
"#;
    let out = dir.join("prov");
    let o = run("certify", cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = result(&out);
    assert_eq!(r["inputs"][0]["name"], "variance");
    assert_eq!(r["inputs"][0]["provenance"], "exact");
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = fs::read_to_string(&path).unwrap();
            let v: toml::Table = toml::from_str(&text).unwrap();
            assert!(v.contains_key("operation"), "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 6);
}
