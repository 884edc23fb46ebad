use std::io::Write;
use std::process::{Command, Output, Stdio};

use hamflow::expr::equivalent;
use hamflow::hamiltonian::{flow, Hamiltonian};
use hamflow::syntax::parse_expr;
use serde_json::Value;

const KDV: &str = "-(1/2)*u1^2+(1/3)*u^3";

fn hamflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamflow"))
        .args(args)
        .env_remove("HAMFLOW_NODE_BUDGET")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn kdv_check_passes() {
    let out = hamflow(&["check", "--order", "3", "--hamiltonian", KDV]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).ends_with("status: ok\n"));
}

#[test]
fn quintic_fails_at_first_order() {
    let out = hamflow(&["check", "--order", "1", "--hamiltonian", "-(1/2)*u1^2+(1/5)*u^5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["status"], "violated");
    assert_eq!(v["schema"], "1");
    let last = v["conditions"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["n"], 1);
    assert!(last["residual"].is_string());
}

#[test]
fn syntax_error_has_caret() {
    let out = hamflow(&["flow", "--hamiltonian", "u^^2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("u^^2") && err.contains('^'), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hamflow(&["flow"]).status.code(), Some(2));
    assert_eq!(hamflow(&["bogus"]).status.code(), Some(2));
    assert_eq!(hamflow(&["classify", "--hamiltonian", KDV, "--assume", "k<0"]).status.code(), Some(2));
    assert_eq!(hamflow(&["flow", "--hamiltonian", "u2"]).status.code(), Some(2));
}

#[test]
fn catalog_verify_json() {
    let out = hamflow(&["catalog", "verify", "2.1c", "--order", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["id"], "2.1c");
    assert_eq!(v["conditions"].as_array().unwrap().len(), 5);
    for c in v["conditions"].as_array().unwrap() {
        assert!(c["rho"].is_string());
        assert!(c["residual"].is_null());
    }
}

#[test]
fn catalog_list_names_every_entry() {
    let out = hamflow(&["catalog", "list", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ids: Vec<&str> = v["details"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    for id in ["2.1", "2.1a", "2.1b", "2.1c", "2.1d", "2.2", "2.3", "2.13", "kn"] {
        assert!(ids.contains(&id), "{id}");
    }
}

#[test]
fn json_output_is_deterministic() {
    let args = ["densities", "--max-n", "3", "--hamiltonian", KDV, "--format", "json"];
    assert_eq!(hamflow(&args).stdout, hamflow(&args).stdout);
    let args = ["classify", "--hamiltonian", "-(1/2)*u1^2 + u^3/3 + u^2/2", "--format", "json"];
    assert_eq!(hamflow(&args).stdout, hamflow(&args).stdout);
}

#[test]
fn node_budget_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_hamflow"))
        .args(["check", "--order", "3", "--hamiltonian", "-u1^2/(2*u^3) + (1/3)*c1*u^3 - c2/u", "--format", "json"])
        .env("HAMFLOW_NODE_BUDGET", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    assert_eq!(json(&out)["status"], "resource");
}

#[test]
fn classify_reports_id_and_trail() {
    let out = hamflow(&["classify", "--hamiltonian", "-(1/2)*u1^2 + 2*u^4", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["id"], "2.1a");
    assert!(!v["trail"].as_array().unwrap().is_empty());
}

#[test]
fn unclassified_exits_1() {
    let out = hamflow(&["classify", "--hamiltonian", "-(1/2)*u1^2 + u^5/5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["id"].is_null());
    assert_eq!(v["status"], "violated");
}

#[test]
fn assume_flag_changes_branch() {
    let h = "-u1^2/(2*(c1*u^2 + c3)^3) + u/(c1*u^2 + c3)";
    let plain = json(&hamflow(&["classify", "--hamiltonian", h, "--format", "json"]));
    let assumed = json(&hamflow(&["classify", "--hamiltonian", h, "--assume", "c1>0", "--format", "json"]));
    assert_eq!(plain["id"], "2.1");
    assert_eq!(assumed["id"], "2.1d");
}

#[test]
fn hamiltonian_from_stdin_and_file() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hamflow"))
        .args(["flow", "--hamiltonian", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(format!("{KDV}\n").as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "F = 2*u*u1 + u3\nstatus: ok\n");

    let path = std::env::temp_dir().join(format!("hamflow-cli-{}.txt", std::process::id()));
    std::fs::write(&path, KDV).unwrap();
    let out = hamflow(&["flow", "--hamiltonian", &format!("@{}", path.display())]);
    std::fs::remove_file(&path).ok();
    assert_eq!(stdout(&out), "F = 2*u*u1 + u3\nstatus: ok\n");
}

#[test]
fn text_output_reparses() {
    let h = "-u1^2/(2*(u^2 + c)^3) + (c1*u + c2)/(u^2 + c)";
    let out = hamflow(&["flow", "--hamiltonian", h]);
    let line = stdout(&out).lines().next().unwrap().to_string();
    let printed = parse_expr(line.strip_prefix("F = ").unwrap()).unwrap();
    let f = flow(&Hamiltonian::new(parse_expr(h).unwrap()).unwrap()).unwrap();
    assert!(equivalent(&printed, f.rhs()).is_equal());
}

#[test]
fn latex_output() {
    let out = hamflow(&["vder", "--hamiltonian", "4*(u1 + u^2)^(1/2)", "--format", "latex"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(s.contains("\\sqrt") && s.contains("u_{xx}"), "{s}");
}

#[test]
fn transform_spec_file() {
    let path = std::env::temp_dir().join(format!("hamflow-trail-{}.json", std::process::id()));
    std::fs::write(&path, r#"[{"kind": "dilatation", "alpha": "1", "beta": "1", "gamma": "2"}]"#).unwrap();
    let out = hamflow(&["transform", "--spec", path.to_str().unwrap(), "--hamiltonian", KDV, "--format", "json"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let h = parse_expr(v["results"]["H"].as_str().unwrap()).unwrap();
    assert!(equivalent(&h, &parse_expr("-(1/2)*u1^2 + (2/3)*u^3").unwrap()).is_equal(), "{h}");
}

#[test]
fn reciprocal_of_2_1c() {
    let out = hamflow(&["reciprocal", "--hamiltonian", "-u1^2/(2*u^3) + (1/3)*c1*u^3 - c2/u", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["results"]["rho"], "u");
}
