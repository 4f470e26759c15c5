use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs;

use proptest::prelude::*;
use resonance_core::{PatternId, WavePattern};
use resonancedb::bench::gen_synthetic;
use resonancedb::segment::{quantize, record_len, segment_file_name, HEADER_LEN};
use resonancedb::{Error, Store};

const DIM: usize = 5;
const SEGMENT: u32 = 7;

#[derive(Debug, Clone)]
enum Op {
    Insert(u8, u64),
    Delete(u8),
    Get(u8),
    Reopen,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0u8..24, any::<u64>()).prop_map(|(i, s)| Op::Insert(i, s)),
        2 => (0u8..24).prop_map(Op::Delete),
        2 => (0u8..24).prop_map(Op::Get),
        1 => Just(Op::Reopen),
    ]
}

fn pattern(seed: u64) -> WavePattern {
    gen_synthetic(1, DIM, seed).pop().unwrap()
}

fn pid(i: u8) -> PatternId {
    PatternId::from_u128(i as u128)
}

fn check_against_model(store: &Store, model: &BTreeMap<PatternId, WavePattern>) {
    assert_eq!(store.len(), model.len());
    let index: Vec<PatternId> = store.index_entries().into_keys().collect();
    assert_eq!(index, model.keys().copied().collect::<Vec<_>>());
    let mut scanned: Vec<PatternId> = store.scan_live().map(|(id, _)| id).collect();
    scanned.sort();
    assert_eq!(scanned, index);
    for (id, p) in model {
        assert_eq!(&store.get(id).unwrap(), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_operations_survive_reopen(ops in prop::collection::vec(op(), 1..120)) {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path(), DIM, SEGMENT).unwrap();
        let mut model = BTreeMap::new();
        for op in ops {
            match op {
                Op::Insert(i, seed) => {
                    let p = pattern(seed);
                    let result = store.insert(pid(i), &p);
                    match model.entry(pid(i)) {
                        Entry::Occupied(_) => prop_assert!(matches!(result, Err(Error::DuplicateId(_)))),
                        Entry::Vacant(slot) => {
                            result.unwrap();
                            slot.insert(quantize(&p).unwrap());
                        }
                    }
                }
                Op::Delete(i) => {
                    let result = store.delete(&pid(i));
                    prop_assert_eq!(result.is_ok(), model.remove(&pid(i)).is_some());
                }
                Op::Get(i) => match model.get(&pid(i)) {
                    Some(p) => prop_assert_eq!(&store.get(&pid(i)).unwrap(), p),
                    None => prop_assert!(matches!(store.get(&pid(i)), Err(Error::NotFound(_)))),
                },
                Op::Reopen => {
                    drop(store);
                    store = Store::open_existing(dir.path()).unwrap();
                }
            }
        }
        check_against_model(&store, &model);
        drop(store);
        let reopened = Store::open_existing(dir.path()).unwrap();
        check_against_model(&reopened, &model);
    }
}

#[test]
fn truncation_in_a_later_segment_loses_only_the_cut_record() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), DIM, SEGMENT).unwrap();
    let patterns = gen_synthetic(10, DIM, 42);
    for (i, p) in patterns.iter().enumerate() {
        store.insert(pid(i as u8), p).unwrap();
    }
    store.delete(&pid(1)).unwrap();
    drop(store);

    // Records 7, 8, 9 live in the second segment; cut inside record 9.
    let path = dir.path().join(segment_file_name(1));
    let cut = HEADER_LEN + 2 * record_len(DIM) + record_len(DIM) / 2;
    fs::OpenOptions::new()
        .write(true)
        .open(&path)
        .unwrap()
        .set_len(cut as u64)
        .unwrap();

    let store = Store::open_existing(dir.path()).unwrap();
    let live: Vec<PatternId> = store.index_entries().into_keys().collect();
    let expected: Vec<PatternId> = [0u8, 2, 3, 4, 5, 6, 7, 8].into_iter().map(pid).collect();
    assert_eq!(live, expected);
    for i in [0usize, 2, 8] {
        assert_eq!(store.get(&pid(i as u8)).unwrap(), quantize(&patterns[i]).unwrap());
    }
    // The freed slot is reused and the file is usable again.
    store.insert(pid(9), &patterns[9]).unwrap();
    drop(store);
    let store = Store::open_existing(dir.path()).unwrap();
    assert_eq!(store.len(), 9);
    assert_eq!(store.get(&pid(9)).unwrap(), quantize(&patterns[9]).unwrap());
}

#[test]
fn unpublished_record_is_invisible() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), DIM, SEGMENT).unwrap();
    let patterns = gen_synthetic(3, DIM, 5);
    for (i, p) in patterns.iter().enumerate() {
        store.insert(pid(i as u8), p).unwrap();
    }
    drop(store);
    // Clear the flag of the last record: its body is present but was never published.
    let path = dir.path().join(segment_file_name(0));
    let mut bytes = fs::read(&path).unwrap();
    bytes[HEADER_LEN + 2 * record_len(DIM)] = 0;
    fs::write(&path, bytes).unwrap();
    let store = Store::open_existing(dir.path()).unwrap();
    assert_eq!(store.len(), 2);
    assert!(!store.contains(&pid(2)));
}
