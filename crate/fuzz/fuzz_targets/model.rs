#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsig::classifier::ClassifierModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = text.parse::<ClassifierModel>() {
        let written = model.to_string();
        let again: ClassifierModel = written.parse().expect("re-parse");
        assert_eq!(again.to_string(), written);
        let _ = model.classify_features(&[0.5; ringsig::classifier::FEATURE_DIM]);
    }
});
