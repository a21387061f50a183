#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsig::classifier::Manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = Manifest::read(data) {
        let again = Manifest::read(m.to_csv_string().as_bytes()).expect("re-parse");
        assert_eq!(again, m);
    }
});
