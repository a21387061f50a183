#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsig::iqfile::{decode_iq, encode_iq, read_iq};

fuzz_target!(|data: &[u8]| {
    let decoded = decode_iq(data);
    assert_eq!(decoded.is_ok(), read_iq(data).is_ok());
    if let Ok(samples) = decoded {
        assert_eq!(encode_iq(&samples), data);
    }
});
