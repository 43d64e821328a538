#![no_main]
use libfuzzer_sys::fuzz_target;
use xns_periods::msym::AnTable;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(t) = AnTable::parse_tsv(s) {
        let back = AnTable::parse_tsv(&t.to_tsv()).expect("table reparses");
        assert_eq!(back.nmax(), t.nmax());
    }
});
