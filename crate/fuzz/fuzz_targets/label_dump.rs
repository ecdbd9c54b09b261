#![no_main]
use libfuzzer_sys::fuzz_target;

use excursion_lab::io::{decode_label_dump, decode_u32_le, encode_u32_le, parse_sidecar};

// Input layout: sidecar JSON, a NUL byte, then the raw array.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else {
        if let Ok(labels) = decode_u32_le(data) {
            assert_eq!(encode_u32_le(&labels), data);
        }
        return;
    };
    let Ok(text) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    if let Ok(side) = parse_sidecar(text) {
        let _ = decode_label_dump(&side, &data[split + 1..]);
    }
});
