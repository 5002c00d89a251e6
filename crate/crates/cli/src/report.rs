use std::path::Path;

use anyhow::Context;
use paillier_accel::pipeline_model::{model_report as build_report, ModelConfig};

use crate::args::Common;
use crate::bench::cycle_table;
use crate::{invalid, print_json, table, CliResult};

pub fn model_report(config: Option<&Path>, common: &Common) -> CliResult {
    let cfg: ModelConfig = match config {
        None => ModelConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
    };
    let report = build_report(&cfg).map_err(|e| invalid(e.to_string()))?;
    if common.json {
        return print_json(&report);
    }
    let s = &report.schedule;
    let r = &report.resources;
    let t = &report.simulated_throughput;
    outln!("Core: {}-bit operands, {}-bit words, multiplier latency {}", s.l, s.k, s.mult_latency);
    out!(
        "{}",
        table::fields(&[
            ("ideal cycles", s.ideal_cycles.to_string()),
            ("simulated cycles", s.simulated_cycles.to_string()),
            ("overhead ratio", format!("{:.4}", s.overhead_ratio)),
            ("DSP per core", r.dsp_per_core.to_string()),
            ("slices per core", r.slices_per_core.to_string()),
            ("chip budget", format!("{} DSP, {} slices", r.total_dsp, r.total_slices)),
            ("cores (DSP / area bound)", format!("{} ({} / {})", t.cores, t.dsp_bound_cores, t.area_bound_cores)),
            ("chip throughput", format!("{:.0} op/s", t.ops_per_second)),
        ])
    );
    outln!();
    let rows: Vec<Vec<String>> = report
        .core_table
        .iter()
        .map(|c| {
            vec![
                c.label.clone(),
                c.area_slices.to_string(),
                c.dsp.to_string(),
                format!("{:.0}", c.clock_mhz),
                format!("{:.2}", c.execution_time_us),
                format!("{:.0}", c.throughput_per_dsp),
            ]
        })
        .collect();
    out!("{}", table::render(&["core", "slices", "DSP", "MHz", "time (us)", "op/s per DSP"], &rows));
    outln!();
    out!("{}", cycle_table(&report.cycle_table));
    Ok(())
}
