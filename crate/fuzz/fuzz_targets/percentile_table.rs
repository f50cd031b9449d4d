#![no_main]
use libfuzzer_sys::fuzz_target;
use precarity_core::ingest::parse_percentile_table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = parse_percentile_table(text, "fuzz") {
        for p in [-1.0, 0.0, 12.5, 50.0, 99.9, 100.0, 150.0] {
            assert!(table.lookup(p).is_finite());
        }
    }
});
