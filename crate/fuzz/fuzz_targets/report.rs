#![no_main]
use libfuzzer_sys::fuzz_target;
use precarity_core::report::{compare, parse_report};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = parse_report(text, 2.0) {
        let again = parse_report(&report.to_csv(), 2.0).expect("round trip");
        assert_eq!(again.rows, report.rows);
        let _ = compare(&report, &again);
    }
});
