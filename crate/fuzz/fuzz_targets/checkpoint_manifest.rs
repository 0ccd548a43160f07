#![no_main]

use embedhalluc::checkpoint::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Manifest::parse(text) {
        let _ = m.data_len();
        let _ = Manifest::parse(&m.to_text());
    }
});
