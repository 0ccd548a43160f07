#![no_main]

use embedhalluc::checkpoint::{decode_params, Manifest};
use libfuzzer_sys::fuzz_target;

// Manifest text, a NUL byte, then the raw parameter bytes.
fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let Ok(text) = std::str::from_utf8(&data[..split]) else { return };
    let Ok(manifest) = Manifest::parse(text) else { return };
    let bytes = data.get(split + 1..).unwrap_or(&[]);
    let _ = decode_params(&manifest, bytes);
});
