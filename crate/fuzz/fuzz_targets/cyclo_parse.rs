#![no_main]
use libfuzzer_sys::fuzz_target;
use xns_core::CycElem;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(a) = s.parse::<CycElem>() {
        let back: CycElem = a.to_string().parse().expect("printed element reparses");
        assert_eq!(back, a);
    }
});
