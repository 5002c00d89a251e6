//! DSP accounting and the chip-level throughput equation.

use serde::{Deserialize, Serialize};

use super::schedule::CoreConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResourceError {
    #[error("multiplier widths must be powers of two with mult_bits >= native_bits, got {0} and {1}")]
    InvalidWidth(u64, u64),
    #[error("resource budget or cost is zero: {0}")]
    ZeroResource(&'static str),
    #[error("cycles per operation must be positive")]
    ZeroCycles,
}

/// DSP blocks for a `mult_bits x mult_bits` Karatsuba multiplier built from
/// `native_bits` DSP primitives: `3^log2(mult_bits / native_bits)`.
pub fn dsp_count(mult_bits: u64, native_bits: u64) -> Result<u64, ResourceError> {
    if !mult_bits.is_power_of_two() || !native_bits.is_power_of_two() || mult_bits < native_bits {
        return Err(ResourceError::InvalidWidth(mult_bits, native_bits));
    }
    let depth = (mult_bits / native_bits).trailing_zeros();
    Ok(3u64.pow(depth))
}

/// Chip budget and per-core constants that are inputs rather than outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceParams {
    pub dsp_native_bits: u64,
    pub multipliers_per_pe: u64,
    pub q_path_multipliers: u64,
    pub slices_per_core: u64,
    pub total_dsp: u64,
    pub total_slices: u64,
}

impl Default for ResourceParams {
    fn default() -> Self {
        // Xilinx VU9P (AWS F1)
        ResourceParams {
            dsp_native_bits: 16,
            multipliers_per_pe: 2,
            q_path_multipliers: 1,
            slices_per_core: 483,
            total_dsp: 6840,
            total_slices: 147_780,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceModel {
    pub dsp_per_multiplier: u64,
    pub multipliers_per_pe: u64,
    pub q_path_multipliers: u64,
    pub dsp_per_core: u64,
    pub slices_per_core: u64,
    pub total_dsp: u64,
    pub total_slices: u64,
}

pub fn core_resources(cfg: &CoreConfig, params: &ResourceParams) -> Result<ResourceModel, ResourceError> {
    let per_mult = dsp_count(cfg.k, params.dsp_native_bits)?;
    // one PE regardless of l: the inner loop is never unrolled into hardware
    let multipliers = params.multipliers_per_pe * cfg.pe_count.max(1) + params.q_path_multipliers;
    Ok(ResourceModel {
        dsp_per_multiplier: per_mult,
        multipliers_per_pe: params.multipliers_per_pe,
        q_path_multipliers: params.q_path_multipliers,
        dsp_per_core: multipliers * per_mult,
        slices_per_core: params.slices_per_core,
        total_dsp: params.total_dsp,
        total_slices: params.total_slices,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub cycles_per_op: u64,
    pub clock_mhz: f64,
    pub time_per_op_us: f64,
    pub dsp_bound_cores: u64,
    pub area_bound_cores: u64,
    pub cores: u64,
    pub ops_per_second_per_core: f64,
    pub ops_per_second: f64,
    pub ops_per_second_per_dsp: f64,
}

/// `cores * clock / cycles` with `cores = floor(min(dsp budget / dsp per core,
/// slice budget / slices per core))`.
pub fn chip_throughput(
    model: &ResourceModel,
    clock_mhz: f64,
    cycles_per_op: u64,
) -> Result<ThroughputReport, ResourceError> {
    if cycles_per_op == 0 {
        return Err(ResourceError::ZeroCycles);
    }
    if model.dsp_per_core == 0 {
        return Err(ResourceError::ZeroResource("dsp_per_core"));
    }
    if model.slices_per_core == 0 {
        return Err(ResourceError::ZeroResource("slices_per_core"));
    }
    if clock_mhz.is_nan() || clock_mhz <= 0.0 {
        return Err(ResourceError::ZeroResource("clock_mhz"));
    }
    let dsp_bound = model.total_dsp / model.dsp_per_core;
    let area_bound = model.total_slices / model.slices_per_core;
    let cores = dsp_bound.min(area_bound);
    if cores == 0 {
        return Err(ResourceError::ZeroResource("budget fits no core"));
    }
    let clock_hz = clock_mhz * 1e6;
    let per_core = clock_hz / cycles_per_op as f64;
    Ok(ThroughputReport {
        cycles_per_op,
        clock_mhz,
        time_per_op_us: cycles_per_op as f64 / clock_mhz,
        dsp_bound_cores: dsp_bound,
        area_bound_cores: area_bound,
        cores,
        ops_per_second_per_core: per_core,
        ops_per_second: cores as f64 * per_core,
        ops_per_second_per_dsp: per_core / model.dsp_per_core as f64,
    })
}
