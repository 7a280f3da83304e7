use opstable::validation::{run_criterion, CRITERIA};

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for id in CRITERIA {
        let r = run_criterion(id, 20240607);
        println!("{}", r.line());
        if !r.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
