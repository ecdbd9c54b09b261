#![no_main]
use libfuzzer_sys::fuzz_target;

use excursion_lab::io::parse_pgm;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = parse_pgm(data) {
        assert_eq!(img.pixels.len(), img.width * img.height);
        assert_eq!(parse_pgm(&img.encode()).unwrap(), img);
    }
});
