use superfluor_core::validation::{run_criterion, CRITERIA};

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for (id, _) in CRITERIA {
        let outcome = run_criterion(id).expect("known criterion");
        println!("{outcome}");
        if !outcome.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
