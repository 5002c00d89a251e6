//! Cycle and resource model of the ModMult core and its use in Paillier.

mod resources;
mod schedule;

pub use resources::{
    chip_throughput, core_resources, dsp_count, ResourceError, ResourceModel, ResourceParams, ThroughputReport,
};
pub use schedule::{ideal_cycles, simulate_schedule, CoreConfig, ScheduleError, ScheduleReport, DEFAULT_IO_OVERHEAD_CYCLES};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bigint::BigUint;
use crate::montgomery::{predicted_mod_exp_muls, MontCounters};
use crate::paillier::{Keypair, PaillierError};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
}

/// 8.81 us at 500 MHz.
pub const OPERATING_POINT_CYCLES: u64 = 4405;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub core: CoreConfig,
    pub resources: ResourceParams,
    /// Measured cycles of one ModMult, evaluated alongside the simulation.
    pub operating_point_cycles: Option<u64>,
    /// Operand widths for the cycles-vs-ideal table.
    pub sweep_bits: Vec<u64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            core: CoreConfig::default(),
            resources: ResourceParams::default(),
            operating_point_cycles: Some(OPERATING_POINT_CYCLES),
            sweep_bits: vec![256, 512, 1024, 2048],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRow {
    pub l: u64,
    pub k: u64,
    pub ideal_cycles: u64,
    pub simulated_cycles: u64,
    pub overhead_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreRow {
    pub label: String,
    pub area_slices: u64,
    pub dsp: u64,
    pub clock_mhz: f64,
    pub execution_time_us: f64,
    pub throughput_per_dsp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub config: ModelConfig,
    pub schedule: ScheduleReport,
    pub resources: ResourceModel,
    pub simulated_throughput: ThroughputReport,
    pub operating_point_throughput: Option<ThroughputReport>,
    pub cycle_table: Vec<CycleRow>,
    pub core_table: Vec<CoreRow>,
}

pub fn cycle_row(l: u64, base: &CoreConfig) -> Result<CycleRow, ScheduleError> {
    let r = simulate_schedule(&CoreConfig { l, ..base.clone() })?;
    Ok(CycleRow {
        l,
        k: base.k,
        ideal_cycles: r.ideal_cycles,
        simulated_cycles: r.simulated_cycles,
        overhead_ratio: r.overhead_ratio,
    })
}

pub fn model_report(cfg: &ModelConfig) -> Result<ModelReport, ModelError> {
    let schedule = simulate_schedule(&cfg.core)?;
    let resources = core_resources(&cfg.core, &cfg.resources)?;
    let clock = cfg.core.clock_mhz;
    let simulated_throughput = chip_throughput(&resources, clock, schedule.simulated_cycles)?;
    let operating_point_throughput = cfg
        .operating_point_cycles
        .map(|c| chip_throughput(&resources, clock, c))
        .transpose()?;
    let cycle_table = cfg
        .sweep_bits
        .iter()
        .map(|&l| cycle_row(l, &cfg.core))
        .collect::<Result<Vec<_>, _>>()?;
    let row = |label: &str, t: &ThroughputReport| CoreRow {
        label: label.to_string(),
        area_slices: resources.slices_per_core,
        dsp: resources.dsp_per_core,
        clock_mhz: clock,
        execution_time_us: t.time_per_op_us,
        throughput_per_dsp: t.ops_per_second_per_dsp,
    };
    let mut core_table = vec![row("simulated schedule", &simulated_throughput)];
    if let Some(t) = &operating_point_throughput {
        core_table.push(row("operating point", t));
    }
    Ok(ModelReport {
        config: cfg.clone(),
        schedule,
        resources,
        simulated_throughput,
        operating_point_throughput,
        cycle_table,
        core_table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpEstimate {
    pub mont_muls_measured: u64,
    pub mont_muls_predicted: u64,
    pub inner_iterations: u64,
    pub cycles: u64,
    pub time_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaillierOpModel {
    pub key_bits: u64,
    /// Padded width of `n^2`, the modulus of the exponentiations.
    pub modulus_bits: u64,
    pub cycles_per_modmult: u64,
    pub encrypt: OpEstimate,
    pub decrypt: OpEstimate,
}

/// Each multiplication of `l/k` words costs `(l/k)(l/k + 1)` inner iterations
/// plus the pipeline fill and I/O of the simulated schedule, so the cycle
/// total follows from the counters regardless of the mix of moduli.
fn cycles_from_counters(c: &MontCounters, core: &CoreConfig) -> u64 {
    c.inner_iterations + c.mont_muls * (core.mult_latency + core.io_overhead_cycles)
}

/// Runs one real encryption and decryption with instrumentation and converts
/// the Montgomery counts into cycles on the modeled core.
pub fn paillier_op_model<R: Rng + ?Sized>(
    kp: &Keypair,
    core: &CoreConfig,
    rng: &mut R,
) -> Result<PaillierOpModel, ModelError> {
    let pk = &kp.public;
    let ctx = pk.context_n2();
    let l = ctx.operand_bits();
    let core_n2 = CoreConfig { l, k: ctx.radix_bits() as u64, ..core.clone() };
    let per_mul = simulate_schedule(&core_n2)?;
    // the n-sized contexts must be schedulable as well
    simulate_schedule(&CoreConfig { l: pk.context_n().operand_bits(), ..core_n2.clone() })?;

    let m = BigUint::random_below(pk.n(), rng);
    let r = pk.random_r(rng);
    let mut enc = MontCounters::default();
    let c = pk.encrypt_counted(&m, &r, &mut enc)?;
    let enc_predicted = if pk.generator_shortcut() { 0 } else { predicted_mod_exp_muls(&m) }
        + predicted_mod_exp_muls(pk.n())
        + 4;

    let mut dec = MontCounters::default();
    let back = kp.private.decrypt_counted(pk, &c, &mut dec)?;
    debug_assert_eq!(back, m);
    let dec_predicted = predicted_mod_exp_muls(kp.private.lambda()) + 4;

    let estimate = |c: &MontCounters, predicted: u64| {
        let cycles = cycles_from_counters(c, &core_n2);
        OpEstimate {
            mont_muls_measured: c.mont_muls,
            mont_muls_predicted: predicted,
            inner_iterations: c.inner_iterations,
            cycles,
            time_us: cycles as f64 / core.clock_mhz,
        }
    };
    Ok(PaillierOpModel {
        key_bits: pk.bit_length(),
        modulus_bits: l,
        cycles_per_modmult: per_mul.simulated_cycles,
        encrypt: estimate(&enc, enc_predicted),
        decrypt: estimate(&dec, dec_predicted),
    })
}
