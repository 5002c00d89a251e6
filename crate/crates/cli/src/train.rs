use std::path::Path;

use anyhow::{anyhow, Context};
use paillier_accel::fedsim::{max_weight_difference, plaintext_reference, trace_to_jsonl, DEFAULT_PRECISION};
use paillier_accel::{Dataset, Federation, Keypair, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::args::Command;
use crate::files::{check_key_bits, engine_config};
use crate::{invalid, table, CliError, CliResult};

/// Largest tolerated gap between encrypted and plaintext weights.
const REFERENCE_TOLERANCE: f64 = 1e-6;

pub fn train_demo(cmd: Command) -> CliResult {
    let Command::TrainDemo {
        model,
        dataset,
        iters,
        parties,
        samples,
        features,
        learning_rate,
        key_bits,
        standardize,
        workers,
        trace,
        common,
    } = cmd
    else {
        unreachable!("dispatched on TrainDemo")
    };
    check_key_bits(key_bits)?;
    if parties == 0 {
        return Err(invalid("--parties must be at least 1"));
    }
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(invalid("--learning-rate must be positive"));
    }
    let data = if dataset == "synthetic" {
        if samples == 0 || features < parties {
            return Err(invalid("synthetic data needs at least one sample and one feature per party"));
        }
        Dataset::synthetic(model, samples, features, common.seed)
    } else {
        let mut d = Dataset::from_csv(Path::new(&dataset)).map_err(anyhow::Error::from)?;
        if standardize {
            d.standardize();
        }
        d
    };
    if data.features() < parties {
        return Err(invalid(format!("{} features cannot be split across {parties} parties", data.features())));
    }

    let cfg = TrainConfig {
        model,
        parties,
        iterations: iters,
        learning_rate,
        key_bits,
        precision: DEFAULT_PRECISION,
        seed: common.seed,
        engine: engine_config(workers, common.seed)?,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(common.seed);
    let kp = Keypair::generate(key_bits, &mut rng).map_err(anyhow::Error::from)?;
    let result = Federation::new(data.clone(), &kp, cfg.clone())
        .and_then(|mut f| f.train())
        .map_err(anyhow::Error::from)?;
    let reference = plaintext_reference(&data, &cfg).map_err(anyhow::Error::from)?;
    let gap = max_weight_difference(&result, &reference);

    let jsonl = trace_to_jsonl(&result.trace);
    if let Some(path) = &trace {
        std::fs::write(path, &jsonl).with_context(|| format!("writing {}", path.display()))?;
    }
    if common.json {
        out!("{jsonl}");
    } else {
        let rows: Vec<Vec<String>> = result
            .trace
            .iter()
            .map(|r| {
                vec![
                    r.iteration.to_string(),
                    format!("{:.6}", r.loss),
                    format!("{:.1}", r.encrypt_ms),
                    format!("{:.1}", r.aggregate_ms),
                    format!("{:.1}", r.decrypt_ms),
                    format!("{:.2}", r.local_ms),
                    format!("{:.1}", r.total_ms),
                ]
            })
            .collect();
        out!(
            "{}",
            table::render(&["iter", "loss", "encrypt ms", "aggregate ms", "decrypt ms", "local ms", "total ms"], &rows)
        );
        outln!("max |w - w_plain| = {gap:.3e}");
    }

    let finite = result.trace.iter().all(|r| r.loss.is_finite());
    if !finite || gap > REFERENCE_TOLERANCE {
        return Err(CliError::Runtime(anyhow!(
            "convergence check failed: weights differ from the plaintext run by {gap:.3e} (tolerance {REFERENCE_TOLERANCE:e})"
        )));
    }
    Ok(())
}
