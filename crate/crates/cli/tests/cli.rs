use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subtrace")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

#[test]
fn check_member_and_exception() {
    let o = run(&["check", "--p", "7", "--n", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["schema"], "subtrace-campaign/1");
    assert_eq!(v["entries"][0]["status"], "member");
    assert_eq!(v["entries"][0]["certified_by"], "prime_sieve");
    assert!(v["entries"][0]["choice"].is_object());

    let v = json(&run(&["check", "--n", "6"]));
    assert_eq!(v["entries"][0]["status"], "exception_candidate");
    assert_eq!(v["summary"]["exception_candidates"][0]["n"], 6);
}

#[test]
fn rejects_bad_input() {
    let o = run(&["check", "--n", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n ≥ 5"));
    assert_eq!(run(&["check", "--p", "2", "--n", "9"]).status.code(), Some(1));
    assert_ne!(run(&["campaign", "--n", "x..9"]).status.code(), Some(0));
    assert_eq!(run(&["constants", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn campaign_csv_and_json_agree() {
    let dir = std::env::temp_dir().join(format!("subtrace-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("r.json");
    let o = run(&["campaign", "--k", "1..2", "--n", "6..12", "--jobs", "2", "--out", out.to_str().unwrap()]);
    // (49, 8) is not certified but is not a listed exception
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["summary"]["pairs"], 14);
    assert_eq!(v["summary"]["unlisted_candidates"][0]["k"], 2);
    let csv = String::from_utf8(run(&["campaign", "--k", "1..2", "--n", "6..12", "--format", "csv"]).stdout).unwrap();
    assert_eq!(csv.lines().count(), 15);
    assert!(csv.lines().nth(6).unwrap().starts_with("7,1,11,7,member,prime_sieve"));
    let again = run(&["campaign", "--k", "1..2", "--n", "6..12", "--jobs", "1"]);
    assert_eq!(again.stdout, std::fs::read(&out).unwrap());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn tables_and_constants() {
    let o = run(&["tables", "--which", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("19/19"));
    let o = run(&["constants"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["omega_membership"], 157);
    assert_eq!(v["n6_max_k"], 15);
}

#[test]
fn factor_order_and_oracle() {
    let v = json(&run(&["factor-order", "--n", "12"]));
    assert_eq!(v["complete"], true);
    assert_eq!(v["value"], "13841287200");
    let o = run(&["oracle", "--p", "3", "--n", "5"]);
    let v = json(&o);
    assert_eq!(v["ran"], true);
    assert!(v["witness"].is_object());
    assert_eq!(run(&["oracle", "--p", "7", "--n", "9"]).status.code(), Some(1));
}

#[test]
fn indeterminate_without_hints() {
    let o = run(&["check", "--k", "3", "--n", "29", "--no-builtin-hints"]);
    assert_eq!(o.status.code(), Some(3));
    let v = json(&o);
    assert_eq!(v["entries"][0]["status"], "indeterminate");
    assert!(v["entries"][0]["cofactor"].is_string());
    assert!(String::from_utf8_lossy(&o.stderr).contains("limited by factoring: (7^3,29)"));
    assert_eq!(run(&["check", "--k", "3", "--n", "29"]).status.code(), Some(0));
}
