//! Executes resolved scenarios and writes report files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ResolvedConfig, Scenario};
use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::ingest;
use crate::metrics::PrecarityParams;
use crate::report::{compare, parse_report, ReportMetadata, ScenarioReport};

pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: ScenarioReport,
    pub metadata: ReportMetadata,
}

/// Simulates one scenario and summarizes its trajectory.
pub fn run_scenario(scenario: &Scenario, digest: &str) -> Result<ScenarioOutput> {
    let cfg = &scenario.config;
    let mut sim = Simulation::new(cfg)?;
    let threshold = sim.classifier().threshold_income;
    for _ in 0..cfg.rounds {
        sim.run_round()?;
    }
    let n = sim.households().len();
    let record = sim.into_record();
    let report = ScenarioReport::from_record(&scenario.name, &record, &cfg.precarity);
    let metadata = ReportMetadata {
        scenario: scenario.name.clone(),
        seed: cfg.seed,
        config_digest: digest.to_string(),
        agent_model: cfg.agent_model.as_str().to_string(),
        rounds: cfg.rounds,
        households: n,
        acceptance_quantile: cfg.acceptance_quantile,
        threshold_income: threshold,
        intervention: format!(
            "{} from round {}",
            cfg.intervention.kind.describe(),
            cfg.intervention.start_round
        ),
        bin_edges: report.bin_edges(),
    };
    Ok(ScenarioOutput { report, metadata })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs every scenario, writes `<name>.csv` and `<name>.meta.json` per
/// scenario plus a comparison of every scenario against the first one.
/// Returns the written paths.
pub fn execute(resolved: &ResolvedConfig, out_dir: &Path, parallel_scenarios: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let outputs: Vec<ScenarioOutput> = if parallel_scenarios {
        resolved
            .scenarios
            .par_iter()
            .map(|s| run_scenario(s, &resolved.digest))
            .collect::<Result<_>>()?
    } else {
        resolved
            .scenarios
            .iter()
            .map(|s| {
                log::info!("running scenario `{}`", s.name);
                run_scenario(s, &resolved.digest)
            })
            .collect::<Result<_>>()?
    };

    let mut written = Vec::new();
    for out in &outputs {
        let csv_path = out_dir.join(format!("{}.csv", out.report.scenario));
        write(&csv_path, &out.report.to_csv())?;
        let meta_path = out_dir.join(format!("{}.meta.json", out.report.scenario));
        let meta = serde_json::to_string_pretty(&out.metadata).expect("metadata serializes");
        write(&meta_path, &(meta + "\n"))?;
        written.push(csv_path);
        written.push(meta_path);
    }

    let baseline = &outputs[0].report;
    let mut combined = String::new();
    for (k, out) in outputs.iter().enumerate() {
        let table = compare(&out.report, baseline)?.to_csv();
        if k == 0 {
            combined.push_str(&table);
        } else {
            combined.extend(table.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    let cmp_path = out_dir.join(COMPARISON_FILE);
    write(&cmp_path, &combined)?;
    written.push(cmp_path);
    Ok(written)
}

/// Reads a report file. The histogram range comes from the `.meta.json`
/// sidecar when one sits next to it, otherwise from the default index
/// parameters.
pub fn load_report(path: &Path) -> Result<ScenarioReport> {
    let text = ingest::read_to_string(path)?;
    let sidecar = path.with_extension("meta.json");
    let upper = match fs::read_to_string(&sidecar) {
        Ok(meta) => {
            let meta: ReportMetadata = serde_json::from_str(&meta)
                .map_err(|e| Error::Report(format!("{}: {e}", sidecar.display())))?;
            *meta
                .bin_edges
                .last()
                .ok_or_else(|| Error::Report(format!("{}: no bin edges", sidecar.display())))?
        }
        Err(_) => PrecarityParams::default().upper_bound(),
    };
    parse_report(&text, upper).map_err(|e| match e {
        Error::Report(m) => Error::Report(format!("{}: {m}", path.display())),
        other => other,
    })
}
