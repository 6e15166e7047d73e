use fracrd::suite::{run_check, run_suite, select, CHECKS};

#[test]
fn selection_by_group_and_id() {
    let k = select(&["kernels".into()]).unwrap();
    assert_eq!(k.len(), 1);
    assert_eq!(k[0].id, "kernel-slopes");
    let two = select(&["blowup".into(), "ml-closed-forms".into()]).unwrap();
    assert_eq!(two.iter().map(|c| c.id).collect::<Vec<_>>(), ["ml-closed-forms", "blowup", "comparison"]);
    assert!(select(&["bogus".into()]).is_err());
    assert_eq!(select(&[]).unwrap().len(), CHECKS.len());
}

#[test]
fn criteria_are_covered_once() {
    for c in 1..=10u8 {
        assert_eq!(CHECKS.iter().filter(|k| k.criterion == Some(c)).count(), 1, "criterion {c}");
    }
}

#[test]
fn seeded_checks_repeat_exactly() {
    let check = CHECKS.iter().find(|c| c.id == "kernel-identities").unwrap();
    let a = run_check(check, 11);
    let b = run_check(check, 11);
    assert_eq!(a.outcome, b.outcome);
    assert!(a.outcome.pass);
}

#[test]
fn parallel_and_sequential_agree() {
    let picked = select(&["ml".into(), "frac-ops".into(), "comparison".into()]).unwrap();
    let seq = run_suite(&picked, 5, false);
    let par = run_suite(&picked, 5, true);
    assert_eq!(seq.table(), par.table());
    assert!(seq.pass());
}
