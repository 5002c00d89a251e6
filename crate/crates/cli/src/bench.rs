//! Software timings next to the cycle model.

use std::time::Instant;

use anyhow::anyhow;
use paillier_accel::engine::{Item, OpKind};
use paillier_accel::pipeline_model::{
    cycle_row, ideal_cycles, paillier_op_model, simulate_schedule, CoreConfig, CycleRow, PaillierOpModel,
    ScheduleReport,
};
use paillier_accel::{BigUint, EncodedNumber, Engine, Keypair, MontCounters, MontgomeryContext, QueueStats};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::args::Common;
use crate::files::{check_key_bits, engine_config};
use crate::{invalid, print_json, table, CliResult};

const SWEEP_BITS: [u64; 4] = [256, 512, 1024, 2048];

/// Odd modulus with exactly `bits` bits.
fn random_modulus(bits: u64, rng: &mut ChaCha20Rng) -> BigUint {
    let m = BigUint::random_bits(bits - 1, rng).add(&BigUint::one().shl_bits(bits - 1));
    if m.is_even() {
        m.add_u32(1)
    } else {
        m
    }
}

#[derive(Serialize)]
struct ModmultTiming {
    elapsed_ms: f64,
    ops_per_second: f64,
    /// Modeled core rate over the measured software rate.
    model_speedup: Option<f64>,
}

#[derive(Serialize)]
struct ModmultReport {
    bits: u64,
    word_size: u64,
    iters: u64,
    seed: u64,
    digits: usize,
    inner_iterations_per_mul: u64,
    inner_iterations_total: u64,
    ideal_cycles: u64,
    simulated_cycles: Option<u64>,
    overhead_ratio: Option<f64>,
    clock_mhz: f64,
    modeled_time_us: Option<f64>,
    modeled_ops_per_second: Option<f64>,
    schedule: Option<ScheduleReport>,
    schedule_error: Option<String>,
    /// Hex of the final chained product, for reproducibility checks.
    checksum: String,
    sweep: Vec<CycleRow>,
    timing: ModmultTiming,
}

pub fn modmult(bits: u64, word_size: u64, iters: u64, common: &Common) -> CliResult {
    if iters == 0 {
        return Err(invalid("--iters must be at least 1"));
    }
    if !(2..=32).contains(&word_size) {
        return Err(invalid(format!("--word-size must be between 2 and 32 (got {word_size})")));
    }
    if bits < 16 || !bits.is_multiple_of(word_size) {
        return Err(invalid(format!("--bits must be at least 16 and a multiple of the word size (got {bits})")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(common.seed);
    let m = random_modulus(bits, &mut rng);
    let ctx = MontgomeryContext::new(&m, word_size as u32).map_err(anyhow::Error::from)?;
    let y = BigUint::random_below(&m, &mut rng);
    let mut x = BigUint::random_below(&m, &mut rng);
    let mut counters = MontCounters::default();
    let start = Instant::now();
    for _ in 0..iters {
        x = ctx.mont_mul_counted(&x, &y, &mut counters).map_err(anyhow::Error::from)?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ops_per_second = iters as f64 / elapsed.max(1e-9);

    let core = CoreConfig { l: bits, k: word_size, ..CoreConfig::default() };
    let (schedule, schedule_error) = match simulate_schedule(&core) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let modeled_time_us = schedule.as_ref().map(|s| s.time_us(core.clock_mhz));
    let modeled_ops_per_second = modeled_time_us.map(|t| 1e6 / t);
    let sweep = SWEEP_BITS
        .iter()
        .filter(|&&l| l.is_multiple_of(word_size))
        .filter_map(|&l| cycle_row(l, &core).ok())
        .collect();
    let report = ModmultReport {
        bits,
        word_size,
        iters,
        seed: common.seed,
        digits: ctx.digit_count(),
        inner_iterations_per_mul: ctx.inner_iterations_per_mul(),
        inner_iterations_total: counters.inner_iterations,
        ideal_cycles: ideal_cycles(bits, word_size),
        simulated_cycles: schedule.as_ref().map(|s| s.simulated_cycles),
        overhead_ratio: schedule.as_ref().map(|s| s.overhead_ratio),
        clock_mhz: core.clock_mhz,
        modeled_time_us,
        modeled_ops_per_second,
        schedule,
        schedule_error,
        checksum: x.to_hex(),
        sweep,
        timing: ModmultTiming {
            elapsed_ms: elapsed * 1e3,
            ops_per_second,
            model_speedup: modeled_ops_per_second.map(|r| r / ops_per_second),
        },
    };
    if common.json {
        return print_json(&report);
    }
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    outln!("Montgomery multiplication, {bits}-bit modulus, {word_size}-bit words");
    out!(
        "{}",
        table::fields(&[
            ("iterations", iters.to_string()),
            ("software rate", format!("{:.0} op/s", ops_per_second)),
            ("inner iterations/mul", report.inner_iterations_per_mul.to_string()),
            ("ideal cycles", report.ideal_cycles.to_string()),
            ("simulated cycles", opt(report.simulated_cycles.map(|c| c.to_string()))),
            ("overhead ratio", opt(report.overhead_ratio.map(|r| format!("{r:.4}")))),
            ("modeled time", opt(modeled_time_us.map(|t| format!("{t:.3} us at {} MHz", core.clock_mhz)))),
            ("modeled rate", opt(modeled_ops_per_second.map(|r| format!("{r:.0} op/s")))),
            ("model / software", opt(report.timing.model_speedup.map(|r| format!("{r:.2}x")))),
        ])
    );
    if let Some(e) = &report.schedule_error {
        outln!("  schedule: {e}");
    }
    outln!();
    out!("{}", cycle_table(&report.sweep));
    Ok(())
}

pub fn cycle_table(rows: &[CycleRow]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.l.to_string(),
                r.ideal_cycles.to_string(),
                r.simulated_cycles.to_string(),
                format!("{:.4}", r.overhead_ratio),
            ]
        })
        .collect();
    table::render(&["bits", "ideal", "simulated", "ratio"], &rows)
}

#[derive(Serialize)]
struct PaillierTiming {
    keygen_ms: f64,
    encrypt_ms: f64,
    decrypt_ms: f64,
    encryptions_per_second: f64,
    decryptions_per_second: f64,
    encrypt_queue: QueueStats,
    decrypt_queue: QueueStats,
}

#[derive(Serialize)]
struct PaillierReport {
    bits: u64,
    ops: usize,
    workers: usize,
    batch_size: usize,
    seed: u64,
    verified: bool,
    /// Hex of the first ciphertext.
    checksum: String,
    modeled: Option<PaillierOpModel>,
    model_error: Option<String>,
    timing: PaillierTiming,
}

pub fn paillier(bits: u64, ops: usize, workers: Option<usize>, batch_size: Option<usize>, common: &Common) -> CliResult {
    check_key_bits(bits)?;
    if ops == 0 {
        return Err(invalid("--ops must be at least 1"));
    }
    let mut cfg = engine_config(workers, common.seed)?;
    if let Some(b) = batch_size {
        cfg.batch_size = b;
        cfg.validate().map_err(|e| invalid(e.to_string()))?;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(common.seed);
    let start = Instant::now();
    let kp = Keypair::generate(bits, &mut rng).map_err(anyhow::Error::from)?;
    let keygen_ms = start.elapsed().as_secs_f64() * 1e3;
    let pk = &kp.public;
    let plains: Vec<BigUint> = (0..ops).map(|_| BigUint::random_below(pk.n(), &mut rng)).collect();
    let engine = Engine::new(pk.clone(), Some(kp.private.clone()), cfg.clone()).map_err(anyhow::Error::from)?;

    let items = plains.iter().map(|m| Item::Encrypt(EncodedNumber { mantissa: m.clone(), exponent: 0 })).collect();
    let start = Instant::now();
    let ciphers = engine.run(0, OpKind::Encrypt, items).map_err(anyhow::Error::from)?;
    let encrypt_ms = start.elapsed().as_secs_f64() * 1e3;
    let encrypt_queue = engine.drain();

    let ciphers = ciphers
        .into_iter()
        .map(|o| o.into_cipher().ok_or_else(|| anyhow!("engine returned a plaintext")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let checksum = ciphers[0].value.to_hex();
    let items = ciphers.into_iter().map(Item::Decrypt).collect();
    let start = Instant::now();
    let back = engine.run(1 << 32, OpKind::Decrypt, items).map_err(anyhow::Error::from)?;
    let decrypt_ms = start.elapsed().as_secs_f64() * 1e3;
    let decrypt_queue = engine.drain();
    let verified = back.into_iter().zip(&plains).all(|(o, m)| o.into_plain().is_some_and(|p| &p.mantissa == m));
    if !verified {
        return Err(anyhow!("decryption did not reproduce the plaintexts").into());
    }

    let (modeled, model_error) = match paillier_op_model(&kp, &CoreConfig::default(), &mut rng) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = PaillierReport {
        bits,
        ops,
        workers: cfg.workers,
        batch_size: cfg.batch_size,
        seed: common.seed,
        verified,
        checksum,
        modeled,
        model_error,
        timing: PaillierTiming {
            keygen_ms,
            encrypt_ms,
            decrypt_ms,
            encryptions_per_second: ops as f64 / (encrypt_ms * 1e-3).max(1e-9),
            decryptions_per_second: ops as f64 / (decrypt_ms * 1e-3).max(1e-9),
            encrypt_queue,
            decrypt_queue,
        },
    };
    if common.json {
        return print_json(&report);
    }
    outln!("Paillier, {bits}-bit key, {ops} operations, {} workers, batches of {}", cfg.workers, cfg.batch_size);
    let t = &report.timing;
    let mut rows = vec![
        vec!["encrypt".to_string(), format!("{:.1}", t.encrypt_ms), format!("{:.1}", t.encryptions_per_second)],
        vec!["decrypt".to_string(), format!("{:.1}", t.decrypt_ms), format!("{:.1}", t.decryptions_per_second)],
    ];
    if let Some(m) = &report.modeled {
        for (row, est) in rows.iter_mut().zip([&m.encrypt, &m.decrypt]) {
            row.push(est.mont_muls_measured.to_string());
            row.push(est.cycles.to_string());
            row.push(format!("{:.1}", est.time_us));
        }
    }
    let mut headers = vec!["op", "wall ms", "op/s"];
    if report.modeled.is_some() {
        headers.extend(["mont muls", "model cycles", "model us"]);
    }
    out!("{}", table::render(&headers, &rows));
    if let Some(e) = &report.model_error {
        outln!("cycle model unavailable: {e}");
    }
    Ok(())
}
