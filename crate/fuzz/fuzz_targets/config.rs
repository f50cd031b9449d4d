#![no_main]
use std::path::Path;

use libfuzzer_sys::fuzz_target;
use precarity_core::config::{parse_config, IncomeSection};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(mut cfg) = parse_config(text) else {
        return;
    };
    // no file access and no huge allocations
    cfg.population.net_worth_table = None;
    cfg.population.expenditure_table = None;
    if matches!(cfg.population.income, IncomeSection::File { .. }) {
        cfg.population.income = IncomeSection::default();
    }
    cfg.population.n = cfg.population.n.map(|n| n.min(64));
    let _ = cfg.resolve(Path::new("."), text, None);
});
