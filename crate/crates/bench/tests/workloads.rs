use fluentkb::indexer::{self, IndexConfig};
use fluentkb::rules::{self, DEFAULT_MAX_ROUNDS};
use fluentkb_bench::{indexing_dataset, letter_rules, letters_dataset};

#[test]
fn letters_workload_saturates() {
    let mut ds = letters_dataset(50, 10);
    let report = rules::saturate(&mut ds, &letter_rules(), DEFAULT_MAX_ROUNDS).unwrap();
    assert!(report.new_fluents > 0);
    assert_eq!(report.new_static_triples, 50);
}

#[test]
fn indexing_workload_finds_candidates() {
    let mut ds = indexing_dataset(20, 3, 40);
    let kept = indexer::index_all(&mut ds, &IndexConfig::default()).unwrap();
    assert!(!kept.is_empty());
}
