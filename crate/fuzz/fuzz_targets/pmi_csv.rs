#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsig::classifier::pmi::{parse_pmi_csv, pmi_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(reports) = parse_pmi_csv(text) {
        let again = parse_pmi_csv(&pmi_to_csv(&reports)).expect("re-parse");
        assert_eq!(again, reports);
    }
});
