//! Operation-level schedule of one Montgomery ModMult core.
//!
//! One PE holds the `x*y` and `q*m` multipliers and issues one inner
//! iteration per cycle. The outer loop starts every `l/k + 1` cycles. A
//! separate q-path multiplier first forms `X^0 * Y^(i+1)` and then, once word
//! `S^1` of iteration `i` is out of the PE, `q_(i+1) = (S^0 + X^0 Y^(i+1)) m'`.
//! The simulator lays out these events at the fixed initiation intervals and
//! then checks every data dependency and every multiplier port.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("invalid core configuration: {0}")]
    InvalidConfig(String),
    #[error("q for outer iteration {iteration} is ready at cycle {ready} but needed at cycle {needed}")]
    Infeasible { iteration: u64, ready: u64, needed: u64 },
    #[error("{unit} issues twice at cycle {cycle}")]
    PortConflict { unit: &'static str, cycle: u64 },
    #[error("inner iteration ({i}, {j}) consumes a value at cycle {needed} that is ready at cycle {ready}")]
    Hazard { i: u64, j: u64, ready: u64, needed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoreConfig {
    /// Operand width in bits.
    pub l: u64,
    /// Radix (word) width in bits.
    pub k: u64,
    /// Cycles from issuing a multiplication to a usable result.
    pub mult_latency: u64,
    pub pe_count: u64,
    /// Cycles spent on operand read-in and result write-out.
    pub io_overhead_cycles: u64,
    pub clock_mhz: f64,
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig {
            l: 2048,
            k: 32,
            mult_latency: 4,
            pe_count: 1,
            io_overhead_cycles: DEFAULT_IO_OVERHEAD_CYCLES,
            clock_mhz: 500.0,
        }
    }
}

pub const DEFAULT_IO_OVERHEAD_CYCLES: u64 = 2;

impl CoreConfig {
    pub fn with_operand(l: u64, k: u64) -> Self {
        CoreConfig { l, k, ..CoreConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |m: &str| Err(ScheduleError::InvalidConfig(m.to_string()));
        if self.k == 0 || self.l == 0 {
            return bad("l and k must be positive");
        }
        if !self.l.is_multiple_of(self.k) {
            return bad("k must divide l");
        }
        if self.k > 64 {
            return bad("k must be at most 64");
        }
        if self.pe_count != 1 {
            return bad("pe_count must be 1");
        }
        if !(self.clock_mhz.is_finite() && self.clock_mhz > 0.0) {
            return bad("clock_mhz must be positive");
        }
        Ok(())
    }

    pub fn words(&self) -> u64 {
        self.l / self.k
    }
}

/// `(l/k)(l/k + 1)`.
pub fn ideal_cycles(l: u64, k: u64) -> u64 {
    let n = l / k;
    n * (n + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub l: u64,
    pub k: u64,
    pub mult_latency: u64,
    pub ideal_cycles: u64,
    /// Issue of the first inner iteration to the final select, inclusive.
    pub body_cycles: u64,
    pub io_overhead_cycles: u64,
    pub simulated_cycles: u64,
    pub overhead_ratio: f64,
    pub outer_initiation_interval: u64,
    pub inner_initiation_interval: u64,
    /// Cycle at which q of each outer iteration is available.
    pub q_ready: Vec<u64>,
    /// Issue cycle of the first inner iteration that consumes it.
    pub q_needed: Vec<u64>,
    pub inner_iterations: u64,
    pub multiplications: u64,
}

impl ScheduleReport {
    pub fn time_us(&self, clock_mhz: f64) -> f64 {
        self.simulated_cycles as f64 / clock_mhz
    }
}

/// Issue times of one multiplier; a pipelined unit accepts one op per cycle.
struct Port {
    name: &'static str,
    issued: std::collections::BTreeSet<u64>,
}

impl Port {
    fn new(name: &'static str) -> Self {
        Port { name, issued: Default::default() }
    }

    fn issue(&mut self, cycle: u64) -> Result<(), ScheduleError> {
        if !self.issued.insert(cycle) {
            return Err(ScheduleError::PortConflict { unit: self.name, cycle });
        }
        Ok(())
    }
}

pub fn simulate_schedule(cfg: &CoreConfig) -> Result<ScheduleReport, ScheduleError> {
    cfg.validate()?;
    let n = cfg.words();
    let lat = cfg.mult_latency;
    let ii = n + 1;
    let issue = |i: u64, j: u64| i * ii + j;
    // a result issued at t can be used from t + lat; the S and carry
    // addends enter the last stage, one cycle earlier (same cycle when lat = 0)
    let avail = |t: u64| t + lat;
    let consume = |t: u64| t + lat.saturating_sub(1);

    let mut xy = Port::new("x*y multiplier");
    let mut qm = Port::new("q*m multiplier");
    let mut qpath = Port::new("q-path multiplier");
    let mut q_ready = Vec::with_capacity(n as usize);
    let mut q_needed = Vec::with_capacity(n as usize);

    // q_0 is formed while the operands stream in
    q_ready.push(0);
    q_needed.push(0);

    let mut last_issue = 0;
    for i in 0..n {
        for j in 0..=n {
            let t = issue(i, j);
            xy.issue(t)?;
            qm.issue(t)?;
            if i > 0 && j < n {
                // S^j of this iteration is S^(j+1) of the previous one
                let ready = avail(issue(i - 1, j + 1));
                if ready > consume(t) {
                    return Err(ScheduleError::Hazard { i, j, ready, needed: consume(t) });
                }
            }
            if j > 0 {
                let ready = avail(issue(i, j - 1));
                if ready > consume(t) {
                    return Err(ScheduleError::Hazard { i, j, ready, needed: consume(t) });
                }
            }
            last_issue = t;
        }
        if i + 1 < n {
            let pre = issue(i, 0);
            qpath.issue(pre)?;
            let s0 = avail(issue(i, 1));
            let q_issue = s0.max(avail(pre));
            qpath.issue(q_issue)?;
            let ready = avail(q_issue);
            let needed = issue(i + 1, 0);
            if ready > needed {
                return Err(ScheduleError::Infeasible { iteration: i + 1, ready, needed });
            }
            q_ready.push(ready);
            q_needed.push(needed);
        }
    }

    // last result plus one cycle for the conditional subtraction select
    let body_cycles = avail(last_issue) + 1;
    let ideal = ideal_cycles(cfg.l, cfg.k);
    let simulated = body_cycles + cfg.io_overhead_cycles;
    Ok(ScheduleReport {
        l: cfg.l,
        k: cfg.k,
        mult_latency: lat,
        ideal_cycles: ideal,
        body_cycles,
        io_overhead_cycles: cfg.io_overhead_cycles,
        simulated_cycles: simulated,
        overhead_ratio: simulated as f64 / ideal as f64,
        outer_initiation_interval: ii,
        inner_initiation_interval: 1,
        q_ready,
        q_needed,
        inner_iterations: n * (n + 1),
        multiplications: 2 * n * (n + 1) + 2 * (n - 1),
    })
}
