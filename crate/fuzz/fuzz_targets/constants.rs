#![no_main]
use libfuzzer_sys::fuzz_target;
use xns_core::derive::Constants;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = Constants::parse(s);
    }
});
