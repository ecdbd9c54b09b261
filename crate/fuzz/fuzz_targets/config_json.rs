#![no_main]
use libfuzzer_sys::fuzz_target;

use excursion_lab::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_json_str(text) {
        // Hashing must be stable across a serialize/parse round trip.
        let hash = cfg.hash();
        let again = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json_str(&again).unwrap();
        assert_eq!(hash, back.hash());
        // Keep validation cheap: a tiny budget turns big grids into errors.
        let mut cfg = cfg;
        cfg.memory_budget_bytes = cfg.memory_budget_bytes.min(1 << 24);
        let _ = cfg.validate();
    }
});
