use discfrac::acceptance::{run_suite, Fault, SuiteConfig};

#[test]
fn every_criterion_passes() {
    let outcomes = run_suite(&SuiteConfig::default());
    assert_eq!(outcomes.len(), 14);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn corrupted_kernel_fails_the_convolution_check() {
    let cfg = SuiteConfig {
        filter: Some("kernel".into()),
        fault: Some(Fault::CorruptKernel),
        seed: 0,
    };
    let outcomes = run_suite(&cfg);
    assert!(outcomes.iter().all(|o| o.module == "kernel"));
    let conv = outcomes.iter().find(|o| o.id == 2).unwrap();
    assert!(!conv.passed, "{}", conv.line());
}

#[test]
fn filter_selects_one_module() {
    let cfg = SuiteConfig {
        filter: Some("holder".into()),
        ..SuiteConfig::default()
    };
    let outcomes = run_suite(&cfg);
    assert_eq!(outcomes.len(), 1);
    assert_eq!(outcomes[0].id, 12);
}
