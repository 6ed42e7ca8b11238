use proptest::prelude::*;

use padic_ergodic::analysis::{analyze, AnalysisOptions, Cell};
use padic_ergodic::constructor::{generate, near_miss, random_admissible, Profile, RandomSpec};
use padic_ergodic::document::SpecDocument;
use padic_ergodic::{FunctionSpec, PrimeConfig};

fn profile() -> impl Strategy<Value = Profile> {
    prop::sample::select(Profile::ALL.to_vec())
}

fn prime_and_precision() -> impl Strategy<Value = (u32, u32)> {
    prop::sample::select(vec![(2, 6), (2, 9), (3, 4), (3, 6), (5, 3), (7, 3)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_tables_never_disagree(seed in any::<u64>(), profile in profile(), (p, n) in prime_and_precision(), mutate in any::<bool>()) {
        let cfg = PrimeConfig::new(p, n).unwrap();
        let mut t = random_admissible(&RandomSpec { seed, cfg, profile });
        if mutate {
            t = near_miss(&t, seed ^ 0x5a5a);
        }
        let r = analyze(&FunctionSpec::vdp(t), &AnalysisOptions::default()).unwrap();
        prop_assert_eq!(r.disagreements(), 0);
        prop_assert!(r.failed_identities().is_empty(), "{:?}", r.failed_identities());
        prop_assert!(r.lipschitz_violation.is_none());
        for row in &r.agreement {
            prop_assert_eq!(row.cells.len(), n as usize);
        }
    }

    #[test]
    fn reports_survive_the_document_schema(seed in any::<u64>(), profile in profile()) {
        let cfg = PrimeConfig::new(2, 5).unwrap();
        let mut doc = generate(&RandomSpec { seed, cfg, profile });
        let r = analyze(&doc.spec, &AnalysisOptions::default()).unwrap();
        doc.report = Some(serde_json::to_value(&r).unwrap());
        let back = SpecDocument::parse(&doc.to_json()).unwrap();
        prop_assert_eq!(back, doc);
    }
}

#[test]
fn max_level_limits_the_matrix() {
    let cfg = PrimeConfig::new(2, 10).unwrap();
    let t = random_admissible(&RandomSpec {
        seed: 3,
        cfg,
        profile: Profile::ErgodicCore,
    });
    let opts = AnalysisOptions {
        max_level: Some(4),
        ..Default::default()
    };
    let r = analyze(&FunctionSpec::vdp(t), &opts).unwrap();
    assert_eq!(r.level, 4);
    assert_eq!(r.oracle.max_level, 4);
    assert!(r.agreement.iter().all(|row| row.cells.len() == 4));
    let exact = r
        .agreement
        .iter()
        .find(|row| row.criterion == "vdp_ergodic_exact_2")
        .unwrap();
    assert!(exact.cells.iter().all(|&c| c == Cell::Agree));
    let bad = AnalysisOptions {
        max_level: Some(11),
        ..Default::default()
    };
    assert!(analyze(
        &FunctionSpec::vdp(random_admissible(&RandomSpec {
            seed: 3,
            cfg,
            profile: Profile::Lipschitz
        })),
        &bad
    )
    .is_err());
}
