#![no_main]
use libfuzzer_sys::fuzz_target;
use precarity_core::ingest::parse_expenditure_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_expenditure_table(text, "fuzz");
    }
});
