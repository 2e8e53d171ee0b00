use rpe_core::verify::{run_suite, SuiteOptions, Verdict};

fn opts(trials: u64, seed: u64) -> SuiteOptions {
    SuiteOptions {
        trials: Some(trials),
        seed,
    }
}

#[test]
fn verdicts_stable_under_tenfold_trials() {
    for (name, base) in [
        ("geometric-overlap", 200),
        ("lemma1-denominator", 2_000),
        ("lemma3-ratio", 1_000),
        ("thm1-cases", 20),
        ("suzuki-order", 10),
    ] {
        let small = run_suite(name, &opts(base, 17)).unwrap();
        let large = run_suite(name, &opts(10 * base, 17)).unwrap();
        assert_eq!(small.verdict, Verdict::Pass, "{name}: {small:?}");
        assert_eq!(small.verdict, large.verdict, "{name}");
    }
}

#[test]
fn suites_are_deterministic_under_fixed_seed() {
    for name in ["geometric-overlap", "thm1-cases", "lemma3-ratio", "rpe-chain"] {
        let a = run_suite(name, &opts(50, 3)).unwrap();
        let b = run_suite(name, &opts(50, 3)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn reports_serialize_with_verdict() {
    let r = run_suite("geometric-overlap", &opts(20, 1)).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["verdict"], "pass");
    assert_eq!(json["suite_name"], "geometric-overlap");
    assert_eq!(json["trials"], 20);
}
