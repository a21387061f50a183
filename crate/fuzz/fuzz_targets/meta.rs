#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsig::iqfile::IqMeta;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(meta) = text.parse::<IqMeta>() {
        let again: IqMeta = meta.to_string().parse().expect("re-parse");
        assert_eq!(again, meta);
    }
});
