use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("agentwire-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn agentwire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agentwire")).args(args).output().unwrap()
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn demo_trace_is_byte_identical_across_runs() {
    let dir = scratch("trace");
    for scenario in ["travel", "supplychain"] {
        let (a, b) = (dir.join(format!("{scenario}-a")), dir.join(format!("{scenario}-b")));
        for p in [&a, &b] {
            let o = agentwire(&["demo", scenario, "--seed", "7", "--trace", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
    let trace = fs::read_to_string(dir.join("travel-a")).unwrap();
    let first = trace.lines().next().unwrap();
    assert_eq!(first.split(" | ").count(), 6);
    assert!(first.contains("snl hello"));
}

#[test]
fn demo_metrics_block() {
    let o = agentwire(&["demo", "travel"]);
    let text = stdout(&o);
    assert!(text.contains("snl_messages=3\n"));
    assert!(text.contains("handshakes_completed=1\n"));
    assert!(text.contains("clarification_rounds=1\n"));
    let dir = scratch("metrics");
    let m = dir.join("m.txt");
    let o = agentwire(&["demo", "supplychain", "--metrics", m.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    assert!(fs::read_to_string(m).unwrap().contains("validations_ok=2\n"));
}

#[test]
fn policy_flag_changes_outcome() {
    let o = agentwire(&["demo", "supplychain", "--policy", &fx("policy/reference.json")]);
    assert!(o.status.success());
    let o = agentwire(&["demo", "travel", "--policy", "/nonexistent/policy.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn attacks_report_defences() {
    for (kind, needle) in [
        ("downgrade", "0 locked below floor"),
        ("poison", "0 locks"),
        ("sdos", "max 10 per 60s window"),
        ("inject", "2 quarantined"),
    ] {
        let o = agentwire(&["attack", kind]);
        assert!(o.status.success(), "{kind}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(needle), "{kind}");
    }
}

#[test]
fn context_hash_matches_oracle_table() {
    let table = fs::read_to_string(fixtures().join("context/hashes.txt")).unwrap();
    for line in table.lines() {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let o = agentwire(&["context", "hash", &fx(&format!("context/{}", cols[0]))]);
        assert_eq!(stdout(&o).trim(), cols[2], "{}", cols[0]);
    }
}

#[test]
fn verify_exit_codes() {
    let ok = agentwire(&["context", "verify", &fx("context/travel-v2.1.signed.json"), "--trust", &fx("trust/default.json")]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = agentwire(&[
        "context",
        "verify",
        &fx("context/payment-v1.0-poisoned.signed.json"),
        "--trust",
        &fx("trust/default.json"),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let revoked = agentwire(&[
        "context",
        "verify",
        &fx("context/payment-v1.0.signed.json"),
        "--trust",
        &fx("trust/with-revocations.json"),
    ]);
    assert_eq!(revoked.status.code(), Some(3));
}

#[test]
fn sign_then_verify_and_revoke() {
    let dir = scratch("sign");
    let signed = dir.join("signed.json");
    let o = agentwire(&[
        "context",
        "sign",
        &fx("context/payment-v2.0.json"),
        "--key",
        &fx("keys/sa-payment.key"),
        "--out",
        signed.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let ok = agentwire(&["context", "verify", signed.to_str().unwrap(), "--trust", &fx("trust/default.json")]);
    assert_eq!(ok.status.code(), Some(0));
    // signed by a key the store does not trust
    let rogue = dir.join("rogue.json");
    agentwire(&[
        "context",
        "sign",
        &fx("context/payment-v2.0.json"),
        "--key",
        &fx("keys/sa-rogue.key"),
        "--authority",
        "sa-rogue",
        "--out",
        rogue.to_str().unwrap(),
    ]);
    let untrusted = agentwire(&["context", "verify", rogue.to_str().unwrap(), "--trust", &fx("trust/default.json")]);
    assert_eq!(untrusted.status.code(), Some(2));

    let o = agentwire(&["authority", "revoke", "urn:contexts:payment:v1.0", "--key", &fx("keys/sa-payment.key")]);
    assert!(o.status.success());
    let issued = agentwire::authority::RevocationList::from_bytes(&o.stdout).unwrap();
    let shipped = agentwire::authority::RevocationList::from_bytes(&fs::read(fixtures().join("trust/revoked-payment-v1.0.json")).unwrap()).unwrap();
    assert_eq!(issued, shipped);
    let o = agentwire(&["authority", "revoke", "not-a-urn", "--key", &fx("keys/sa-payment.key")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_exit_codes() {
    let ctx = fx("context/supplyChain-v1.0.json");
    let ok = agentwire(&["validate", "--context", &ctx, "--message", &fx("wire/supply_publish.bin")]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    let frame = fs::read(fixtures().join("wire/supply_publish.bin")).unwrap();
    let mut doc = String::from_utf8(frame[4..].to_vec()).unwrap();
    doc = doc.replacen("\"my_reasoning\"", "\"my_mood\":\"happy\",\"my_reasoning\"", 1);
    let dir = scratch("validate");
    let moody = dir.join("moody.json");
    fs::write(&moody, doc).unwrap();
    let bad = agentwire(&["validate", "--context", &ctx, "--message", moody.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("my_mood"));

    let wrong = agentwire(&[
        "validate",
        "--context",
        &fx("context/travel-v2.1.signed.json"),
        "--message",
        &fx("wire/supply_publish.bin"),
    ]);
    assert_eq!(wrong.status.code(), Some(2));
}
