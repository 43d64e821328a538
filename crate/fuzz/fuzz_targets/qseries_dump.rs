#![no_main]
use libfuzzer_sys::fuzz_target;
use xns_core::QSeries;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(a) = QSeries::parse_dump(s) {
        let back = QSeries::parse_dump(&a.dump()).expect("dump reparses");
        assert_eq!(back.known_to(), a.known_to());
        assert!((&back - &a).is_zero());
    }
});
