#![no_main]
use libfuzzer_sys::fuzz_target;
use precarity_core::ingest::parse_income_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(incomes) = parse_income_table(text, "fuzz") {
            assert!(incomes.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }
});
