#![no_main]
use libfuzzer_sys::fuzz_target;

use excursion_lab::harness::plot::decay_tsv;
use excursion_lab::harness::read_decay_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(points) = read_decay_table(data) {
        let tsv = decay_tsv(&points);
        assert_eq!(tsv.lines().count(), points.len() + 1);
    }
});
