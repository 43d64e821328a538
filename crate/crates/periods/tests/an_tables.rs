use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use xns_periods::msym::AnTable;

fn seed(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fuzz/corpus/an_table/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn tables_roundtrip_through_tsv() {
    for label in ['A', 'B', 'C', 'D'] {
        let t = AnTable::compute(label, 300).unwrap();
        let back = AnTable::parse_tsv(&t.to_tsv()).unwrap();
        assert_eq!(back.to_tsv(), t.to_tsv());
    }
    assert_eq!(AnTable::parse_tsv(&seed("a40")).unwrap().to_tsv(), AnTable::compute('A', 40).unwrap().to_tsv());
}

#[test]
fn damaged_tables_are_rejected() {
    let good = seed("d12");
    let cases = [
        String::new(),
        good.replacen("xns-an v1", "xns-an v0", 1),
        good.replacen("nmax=12", "nmax=13", 1),
        good.replacen("nmax=12", "", 1),
        good.replacen("1\t1\n", "1\t2\n", 1),
        good.replacen("2\t", "3\t", 1),
        good.lines().take(5).collect::<Vec<_>>().join("\n"),
        good.replacen('\t', " ", 3),
    ];
    for c in cases {
        assert!(AnTable::parse_tsv(&c).is_err(), "{c:?}");
    }
}

proptest! {
    #![proptest_config(Config { cases: 256, rng_seed: RngSeed::Fixed(0x5eed_00f2), failure_persistence: None, ..Config::default() })]

    #[test]
    fn table_parser_never_panics(edits in prop::collection::vec((0usize..200, prop::sample::select(b"0123456789-\t\n# =x".to_vec())), 1..6)) {
        let mut b = seed("d12").into_bytes();
        for (i, c) in edits {
            let i = i % b.len();
            b[i] = c;
        }
        if let Ok(t) = AnTable::parse_tsv(&String::from_utf8_lossy(&b)) {
            prop_assert_eq!(AnTable::parse_tsv(&t.to_tsv()).unwrap().nmax(), t.nmax());
        }
    }
}
