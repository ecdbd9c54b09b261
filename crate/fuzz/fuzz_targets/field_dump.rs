#![no_main]
use libfuzzer_sys::fuzz_target;

use excursion_lab::io::{decode_f64_le, decode_field_dump, encode_f64_le, parse_sidecar};

// Input layout: sidecar JSON, a NUL byte, then the raw array.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else {
        if let Ok(values) = decode_f64_le(data) {
            assert_eq!(encode_f64_le(&values), data);
        }
        return;
    };
    let Ok(text) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    if let Ok(side) = parse_sidecar(text) {
        if let Ok(values) = decode_field_dump(&side, &data[split + 1..]) {
            assert_eq!(Some(values.len()), side.element_count());
        }
    }
});
