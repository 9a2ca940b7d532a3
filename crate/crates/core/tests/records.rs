use std::collections::{BTreeSet, HashMap};

use biocurate_core::records::{
    delete_fields, frequency_count, select_fields, transform, FieldIndex, FieldOp, RecordOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn idx(p: usize) -> FieldIndex {
    FieldIndex::new(p).unwrap()
}

#[test]
fn complementarity_is_exhaustive_up_to_six_fields() {
    for n in 1..=6usize {
        let record: Vec<String> = (1..=n).map(|i| format!("f{i}")).collect();
        let fields: Vec<&str> = record.iter().map(String::as_str).collect();
        for mask in 0u32..(1 << n) {
            let drop: BTreeSet<FieldIndex> = (1..=n).filter(|p| mask & (1 << (p - 1)) != 0).map(idx).collect();
            let keep: Vec<FieldIndex> = (1..=n).filter(|p| mask & (1 << (p - 1)) == 0).map(idx).collect();
            assert_eq!(delete_fields(&fields, &drop).unwrap(), select_fields(&fields, &keep).unwrap(), "n={n} mask={mask:b}");
        }
    }
}

proptest! {
    #[test]
    fn selecting_every_field_is_the_identity(record in prop::collection::vec("[^\t\n]{0,4}", 1..20)) {
        let fields: Vec<&str> = record.iter().map(String::as_str).collect();
        let all: Vec<FieldIndex> = (1..=fields.len()).map(idx).collect();
        prop_assert_eq!(select_fields(&fields, &all).unwrap(), fields);
    }

    #[test]
    fn streaming_select_is_deterministic(lines in prop::collection::vec(prop::collection::vec("[a-c]{0,2}", 3), 0..30)) {
        let input: String = lines.iter().map(|l| l.join("\t") + "\n").collect();
        let op = FieldOp::Select(vec![idx(3), idx(1)]);
        let run = || {
            let mut out = Vec::new();
            transform(input.as_bytes(), &mut out, &op, &RecordOptions::default(), &mut |_| {}).unwrap();
            out
        };
        let first = run();
        prop_assert_eq!(&first, &run());
        let expected: String = lines.iter().map(|l| format!("{}\t{}\n", l[2], l[0])).collect();
        prop_assert_eq!(String::from_utf8(first).unwrap(), expected);
    }
}

#[test]
fn count_matches_a_hash_map_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut input = String::new();
    let mut oracle: HashMap<String, u64> = HashMap::new();
    for i in 0..10_000 {
        let key = format!("k{:02}", rng.gen_range(0..50));
        input.push_str(&format!("{key}\t{i}\n"));
        *oracle.entry(key).or_default() += 1;
    }
    let mut out = Vec::new();
    frequency_count(input.as_bytes(), &mut out, &[idx(1)], &RecordOptions::default(), &mut |_| {}).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut got: HashMap<String, u64> = HashMap::new();
    let mut keys = Vec::new();
    for line in text.lines() {
        let (k, c) = line.split_once('\t').unwrap();
        keys.push(k.to_owned());
        got.insert(k.to_owned(), c.parse().unwrap());
    }
    assert_eq!(got, oracle);
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn malformed_records_are_reported_or_fatal() {
    let input = "a\tb\tc\nshort\nx\ty\tz\n";
    let op = FieldOp::Select(vec![idx(3)]);
    let mut out = Vec::new();
    let mut lines = Vec::new();
    let stats = transform(input.as_bytes(), &mut out, &op, &RecordOptions::default(), &mut |e| {
        lines.push(e.to_string())
    })
    .unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "c\nz\n");
    assert_eq!((stats.records_in, stats.records_out, stats.errors), (3, 2, 1));
    assert!(lines[0].contains("line 2"), "{lines:?}");

    let strict = RecordOptions {
        strict: true,
        ..Default::default()
    };
    let err = transform(input.as_bytes(), &mut Vec::new(), &op, &strict, &mut |_| {}).unwrap_err();
    assert!(err.to_string().contains("line 2"));
}
