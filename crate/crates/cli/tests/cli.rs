use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn seclab(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_seclab")).args(args).output().unwrap();
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.push("--json");
    let (out, err, code) = seclab(&all);
    assert!(err.is_empty(), "{err}");
    (serde_json::from_str(&out).unwrap(), code)
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seclab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

/// Low view of a rendered trace: `l` of every store and every `!`.
fn low_view(trace: &str) -> Vec<String> {
    trace
        .split(' ')
        .filter(|t| *t != "#H")
        .map(|t| match t.find("l=") {
            Some(i) => t[i..].trim_end_matches('}').to_string(),
            None => t.to_string(),
        })
        .collect()
}

#[test]
fn run_prints_the_observer_trace() {
    let (out, _, code) = seclab(&["run", "--lang", "target", "--term", "obs(h := 42)", "--store", "h=1,l=0"]);
    assert_eq!(code, 0);
    assert!(out.contains("trace: {h=1,l=0} ! {h=42,l=0} OK"), "{out}");
    let (v, _) = json(&["run", "--lang", "target", "--term", "obs(h := 42)", "--store", "h=1,l=0"]);
    assert_eq!(v["data"]["trace"], "{h=1,l=0} ! {h=42,l=0} OK");
    assert_eq!(v["data"]["steps"][0]["rules"], "bang1 <- asnH");
}

#[test]
fn beh_lists_one_trace_per_store() {
    let (v, code) = json(&["beh", "--term", "h := 42"]);
    assert_eq!(code, 0);
    let b = v["data"]["behavior"].as_array().unwrap();
    assert_eq!(b.len(), 4096);
    assert_eq!(b[0], "{h=0,l=0} #H {h=42,l=0} OK");
}

#[test]
fn sandbox_preserves_ni() {
    let (v, code) = json(&["check", "preserve", "--compiler", "sandbox", "--hyperprop", "ni", "--term-depth", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["checks"][0]["holds"], true);
    assert_eq!(v["bounds"]["term_depth"], 2);
}

#[test]
fn identity_ni_witness_replays() {
    let (out, _, code) = seclab(&["check", "preserve", "--compiler", "identity", "--hyperprop", "ni", "--term-depth", "2"]);
    assert_eq!(code, 1);
    assert!(out.contains("FAILS") && out.contains("witness:"), "{out}");

    let (v, _) = json(&["check", "preserve", "--compiler", "identity", "--hyperprop", "ni", "--term-depth", "2"]);
    let w = &v["checks"][0]["witness"];
    let (program, context) = (w["program"].as_str().unwrap(), w["context"].as_str().unwrap());
    let stores: Vec<&str> = w["stores"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    assert_eq!(stores.len(), 2);
    let traces: Vec<String> = stores
        .iter()
        .map(|s| {
            let (r, _) = json(&["run", "--lang", "target", "--term", program, "--ctx", context, "--store", s]);
            r["data"]["trace"].as_str().unwrap().to_string()
        })
        .collect();
    let (a, b) = (low_view(&traces[0]), low_view(&traces[1]));
    assert_eq!(a[0], b[0], "initial stores are low-equivalent");
    assert_ne!(a, b, "the traces are not");
    assert_eq!(w["traces"][0], traces[0].as_str());
}

#[test]
fn json_reports_are_deterministic() {
    let args = ["check", "fac", "--compiler", "identity", "--term-depth", "2", "--json"];
    let (a, _, _) = seclab(&args);
    let (b, _, _) = seclab(&args);
    assert_eq!(a, b);
    assert!(!a.contains("wall_time"));
    let (t, _, _) = seclab(&["check", "fac", "--term-depth", "1", "--json", "--timing"]);
    assert!(t.contains("wall_time_ms"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(seclab(&["run", "--bogus"]).2, 2);
    assert_eq!(seclab(&["check", "nothing"]).2, 2);
    let (_, err, code) = seclab(&["check", "preserve", "--compiler", "gcc"]);
    assert_eq!(code, 2);
    assert!(err.contains("known: identity, sandbox"), "{err}");
    let bad = scratch("bad.toml", "[universe]\nvars = []\nvmax = 3\nfuel = 4\nterm_depth = 1\nctx_depth = 1\n");
    let (_, err, code) = seclab(&["--config", bad.to_str().unwrap(), "beh", "--term", "skip"]);
    assert_eq!(code, 2);
    assert!(err.contains("at least one variable"), "{err}");
    assert_eq!(seclab(&["--config", "/nonexistent.toml", "beh", "--term", "skip"]).2, 2);
    assert_eq!(seclab(&["run", "--term", "obs(skip)", "--store", "h=0,l=0"]).2, 2);
}

#[test]
fn config_file_selects_universe_and_format() {
    let cfg = scratch(
        "tiny.toml",
        "output = \"json\"\n[universe]\nvmax = 1\nfuel = 1\nterm_depth = 1\nctx_depth = 1\n\n[[universe.vars]]\nname = \"l\"\nlevel = \"Low\"\n",
    );
    let (out, _, code) = seclab(&["--config", cfg.to_str().unwrap(), "check", "insertion"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"][0]["checked"], 65536);
    assert_eq!(v["bounds"]["vmax"], 1);
}

#[test]
fn explicit_hyperproperties_load_from_files() {
    let cfg = scratch(
        "one.toml",
        "[universe]\nvmax = 1\nfuel = 4\nterm_depth = 1\nctx_depth = 1\n\n[[universe.vars]]\nname = \"l\"\nlevel = \"Low\"\n",
    );
    let h = scratch("skip.txt", "{l=0} {l=0} OK\n{l=1} {l=1} OK\n");
    let explicit = format!("explicit:{}", h.display());
    let base = ["--config", cfg.to_str().unwrap(), "check", "ni-robust", "--hyperprop", explicit.as_str()];
    let (out, _, code) = seclab(&[&base[..], &["--term", "skip"]].concat());
    assert_eq!(code, 0, "{out}");
    assert_eq!(seclab(&[&base[..], &["--term", "l := 1"]].concat()).2, 1);
}

#[test]
fn tau_tilde_reports_members_and_both_sides() {
    let (v, code) = json(&["tau-tilde", "--compiler", "identity", "--hyperprop", "ni", "--term-depth", "1"]);
    assert_eq!(code, 1);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks[0]["holds"], false);
    assert_eq!(checks[1]["holds"], false);
    assert_eq!(checks[2]["holds"], true);
    assert!(v["data"]["member_count"].as_u64().unwrap() > 0);
    let (v, code) = json(&["tau-tilde", "--compiler", "sandbox", "--term-depth", "1", "--behaviors"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["members"][0]["behavior"].as_array().unwrap().len(), 4096);
}

#[test]
fn component_maps_can_be_swapped() {
    let (v, code) = json(&["check", "modl", "--s", "s_sandbox", "--b", "b_incl", "--term-depth", "1"]);
    assert_eq!(code, 1);
    assert_eq!(v["checks"][0]["name"], "modl(s_sandbox, b_incl)");
    assert_eq!(json(&["check", "mmodl", "--compiler", "sandbox", "--term-depth", "1"]).1, 0);
}

#[test]
fn repro_rows() {
    let (out, _, code) = seclab(&["repro", "--list"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l == "lemma-identity-ni"));
    let (out, _, code) = seclab(&["repro", "lemma-identity-ni"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("FAILS (expected)") && out.contains("known counterexample confirmed"), "{out}");
    let (v, code) = json(&["repro", "mmodl-sandbox"]);
    assert_eq!(code, 0);
    assert_eq!(v["checks"][0]["expected"], true);
    let (_, err, code) = seclab(&["repro", "no-such-row"]);
    assert_eq!(code, 2);
    assert!(err.contains("behaviors-h42"));
}
