use std::path::{Path, PathBuf};
use std::process::Command;

use num_bigint::BigInt;
use petkit_cli::{FamilySpec, SlotExpr};
use petkit_core::polycore::degeneracy_witness;
use petkit_core::PolyVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn petkit(args: &[&str]) -> (i32, Vec<Value>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_petkit")).args(args).current_dir(fixtures()).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let records = if args.contains(&"--pretty") {
        vec![]
    } else {
        stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    };
    (out.status.code().unwrap(), records, String::from_utf8(out.stderr).unwrap())
}

fn random_scalar(rng: &mut ChaCha8Rng, l: usize, w: usize, symbolic: bool) -> String {
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let exps: Vec<u32> = (0..l).map(|_| rng.gen_range(0..=2)).collect();
        let var = |j: usize| if l == 1 { "n".to_string() } else { format!("n{}", j + 1) };
        let mono: Vec<String> = exps.iter().enumerate().filter(|(_, &e)| e > 0).map(|(j, &e)| format!("{}^{e}", var(j))).collect();
        let coeff = if symbolic && !mono.is_empty() {
            let v: Vec<String> = exps.iter().map(ToString::to_string).collect();
            format!("b[{w},{}]", v.join(","))
        } else {
            rng.gen_range(-4..=4).to_string()
        };
        terms.push(if mono.is_empty() { coeff } else { format!("{coeff}*{}", mono.join("*")) });
    }
    terms.join(" + ")
}

fn random_file(rng: &mut ChaCha8Rng) -> String {
    loop {
        let d = rng.gen_range(1..=3);
        let l = rng.gen_range(1..=2);
        let k = rng.gen_range(1..=3);
        let mut text = format!("family d={d} L={l}\n");
        for i in 1..=k {
            let line = match rng.gen_range(0..3) {
                0 => {
                    let comps: Vec<String> = (0..d).map(|_| random_scalar(rng, l, i, false)).collect();
                    format!("[{}]", comps.join(", "))
                }
                1 => {
                    let v: Vec<String> = (0..d).map(|_| rng.gen_range(-3..=3).to_string()).collect();
                    format!("({}) * [{}]", random_scalar(rng, l, i, false), v.join(", "))
                }
                _ => random_scalar(rng, l, i, true),
            };
            text.push_str(&format!("p{i} = {line}\n"));
        }
        if FamilySpec::parse(&text).is_ok() {
            return text;
        }
    }
}

#[test]
fn render_parse_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let dir = std::env::temp_dir().join(format!("petkit-corpus-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for n in 0..50 {
        let path = dir.join(format!("f{n:02}.fam"));
        std::fs::write(&path, random_file(&mut rng)).unwrap();
    }
    for n in 0..50 {
        let text = std::fs::read_to_string(dir.join(format!("f{n:02}.fam"))).unwrap();
        let spec = FamilySpec::parse(&text).unwrap();
        let again = FamilySpec::parse(&spec.to_string()).unwrap();
        assert_eq!(again, spec, "{text}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn parse_forms() {
    let spec = FamilySpec::parse("family d=2 L=1\np1 = (n^2 + n) * [1, -1]\np2 = b[2,1]*n\n").unwrap();
    assert_eq!(spec.k(), 2);
    assert!(matches!(&spec.slots[0], SlotExpr::Split(_, v) if *v == vec![BigInt::from(1), BigInt::from(-1)]));
    assert!(spec.is_symbolic());
    let fam = spec.family();
    assert_eq!(fam[0], PolyVec::parse_vector("[n^2 + n, -n^2 - n]", 1, 0).unwrap());
    assert!(spec.split().is_none());
    assert_eq!(degeneracy_witness(&fam), None);
}

#[test]
fn parse_errors_carry_positions() {
    let err = |t: &str| FamilySpec::parse(t).unwrap_err().to_string();
    assert_eq!(err("family d=1 L=1\np1 = [n]\np2 = [n]\n"), "degenerate family: p1 - p2 is constant in n (pair (1, 2))");
    assert!(err("family d=2 L=1\n  p1 = [n, n +]\n").starts_with("line 2, column 15"));
    assert!(err("family d=2 L=1\np1 = (n) * [1]\n").starts_with("line 2, column 12"));
    assert!(err("family d=0 L=1\n").starts_with("line 1"));
    assert!(err("family d=1 L=1\n").contains("no slots"));
}

#[test]
fn exit_codes_on_fixture_corpus() {
    let mut valid: Vec<_> = std::fs::read_dir(fixtures().join("valid")).unwrap().map(|e| e.unwrap().path()).collect();
    valid.sort();
    for path in &valid {
        let (code, records, err) = petkit(&["report", "--theorem", "j3", "--family", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{}: {err}", path.display());
        assert_eq!(records.last().unwrap()["record"], "report");
    }
    for entry in std::fs::read_dir(fixtures().join("invalid")).unwrap() {
        let path = entry.unwrap().path();
        let (code, records, err) = petkit(&["reduce", "--family", path.to_str().unwrap()]);
        assert_eq!(code, 1, "{}", path.display());
        assert!(records.is_empty() && err.starts_with("error: "));
    }
    assert_eq!(petkit(&["reduce", "--family", "missing.fam"]).0, 1);
    assert_eq!(petkit(&["sim", "joint", "--system", "invalid.sys", "--family", "valid/rotation.fam"]).0, 1);
    assert_eq!(petkit(&["report", "--theorem", "j2", "--family", "valid/ex3.fam"]).0, 1);
    // Two cubic leading classes exhaust the schedule search.
    let (code, _, err) = petkit(&["groups", "--family", "valid/ex33.fam"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(petkit(&["frobnicate"]).0, 1);
}

#[test]
fn reduce_ex020() {
    let (code, records, _) = petkit(&["reduce", "--family", "valid/ex020.fam", "--function", "1"]);
    assert_eq!(code, 0);
    let summary = &records[0];
    assert_eq!(summary["schedule"], serde_json::json!([2, 2, 4]));
    assert_eq!(summary["bound"], "7*10^413344");
    let drops: Vec<u64> = records.iter().filter(|r| r["record"] == "step").map(|r| r["dropped"].as_u64().unwrap()).collect();
    assert_eq!(drops, vec![1, 2, 1]);
    let last = records.last().unwrap();
    assert_eq!(last["record"], "linear");
    assert_eq!(last["len"], 7);
    assert_eq!(last["slots"].as_array().unwrap().len(), 7);
}

#[test]
fn report_ex33() {
    let (code, records, _) = petkit(&["report", "--theorem", "mainthm", "--family", "valid/ex33.fam"]);
    assert_eq!(code, 0);
    let r = &records[0];
    assert_eq!(r["rendered"], "T1, T2·T3^{-1}, T4, T5, T4·T5^{-1}");
    assert_eq!(r["groups"].as_array().unwrap().len(), 5);
    assert_eq!(r["product_flag"], false);
}

#[test]
fn symbolic_reports_record_their_instance() {
    let a = petkit(&["report", "--theorem", "j3", "--family", "valid/ex020.fam", "--seed", "4"]);
    let b = petkit(&["report", "--theorem", "j3", "--family", "valid/ex020.fam", "--seed", "4"]);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1[0]["record"], "instance");
    assert_eq!(a.1[0]["seed"], 4);
    let j2 = petkit(&["report", "--theorem", "j2", "--family", "valid/ex1.fam"]);
    assert_eq!(j2.1[0]["applicable"], true);
    assert_eq!(j2.1[0]["rendered"], "T1, T2, T3");
}

#[test]
fn sim_records() {
    let (code, r, _) = petkit(&["sim", "joint", "--system", "rotation.sys", "--family", "valid/rotation.fam", "--N", "100000"]);
    assert_eq!(code, 0);
    assert_eq!(r[0]["pass"], true);
    let (_, r, _) = petkit(&["sim", "joint", "--system", "resonant.sys", "--family", "valid/rotation.fam", "--N", "1000"]);
    assert_eq!(r[0]["pass"], false);
    assert!(r[0]["residual"].as_f64().unwrap() >= 0.2);
    let (_, r, _) = petkit(&["sim", "seminorm", "--system", "rotation.sys", "--N", "10000"]);
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|x| x["pass"] == true));
    let (_, r, _) = petkit(&["sim", "null", "--system", "eigen.sys", "--family", "valid/herglotz.fam", "--N", "1000"]);
    assert_eq!(r[0]["nu_estimates"], serde_json::json!([0.0, 0.0, 0.0]));
    let (_, r, _) = petkit(&["sim", "null", "--N", "1000"]);
    assert_eq!(r[0]["null"], true);
    let (_, r, _) = petkit(&["sim", "average", "--system", "rotation.sys", "--family", "valid/rotation.fam", "--N", "10"]);
    assert_eq!(r[0]["record"], "average");
    let (code, _, _) = petkit(&["--pretty", "sim", "null", "--N", "10"]);
    assert_eq!(code, 0);
}
