#![no_main]
use libfuzzer_sys::fuzz_target;

use excursion_lab::harness::records::{read_records, write_records};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        assert_eq!(read_records(&buf[..]).unwrap(), records);
    }
});
