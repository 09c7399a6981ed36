use cantorkit::{check_suite, parse, CheckConfig, Corpus, Status, Suite};

#[test]
fn a_runaway_item_is_isolated() {
    let src = "
        func slow(f) = mu n <= 100000000 : f(n) == 1
        func phi3(f) = f(0) + f(3)
        func firstbit(f) = f(0)
    ";
    let corpus = Corpus::from_program(&parse(src).unwrap()).unwrap();
    let config = CheckConfig {
        work_limit: 1 << 16,
        step_limit: 1 << 16,
        ..CheckConfig::default()
    };
    let report = check_suite(&corpus, Suite::Fan, config);
    assert!(report.passed(), "{:#?}", report.entries);
    assert!(!report.certified());
    for e in &report.entries {
        if e.name.contains("slow") {
            assert_eq!(e.status, Status::Uncertified, "{e:?}");
        } else {
            assert_eq!(e.status, Status::Pass, "{e:?}");
        }
    }
    assert!(report.entries.iter().any(|e| e.name.contains("slow")));
    assert!(report.entries.iter().any(|e| e.name.contains("phi3")));
}

#[test]
fn an_empty_corpus_passes() {
    let report = check_suite(&Corpus::empty(), Suite::All, CheckConfig::default());
    assert!(report.entries.is_empty());
    assert!(report.passed() && report.certified());
}

#[test]
fn reports_are_deterministic() {
    let corpus = Corpus::from_program(&parse("func p(f) = f(1) * f(2)\nfunc c(x) = 1/3").unwrap()).unwrap();
    let a = check_suite(&corpus, Suite::All, CheckConfig::default());
    let b = check_suite(&corpus, Suite::All, CheckConfig::default());
    assert_eq!(format!("{:?}", a.entries), format!("{:?}", b.entries));
    assert!(a.passed(), "{:#?}", a.entries);
}
