//! Vertically partitioned federated training over encrypted residuals.
//!
//! Each party owns a block of feature columns and its slice of the weight
//! vector; party 0 also owns the labels. Per iteration every party encrypts
//! its per-sample contribution to the residual, the coordinator adds the
//! ciphertexts sample by sample, and every party decrypts the aggregate and
//! takes a gradient step on its own weights. The coordinator holds only the
//! public key.

mod data;
pub mod model;

pub use data::{shuffled_indices, Dataset};
pub use model::ModelKind;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedNumber, EncodingError};
use crate::engine::{Engine, EngineConfig, EngineError, Item, OpKind};
use crate::paillier::{Ciphertext, Keypair, PublicKey};

pub const DEFAULT_KEY_BITS: u64 = 512;
/// Fixed exponent for every encoded value: a resolution of 16^-13 = 2^-52.
pub const DEFAULT_PRECISION: i32 = -13;

#[derive(Debug, thiserror::Error)]
pub enum FedError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("iteration {iteration}, party {party}, sample {sample}: {source}")]
    Encoding { iteration: usize, party: usize, sample: usize, source: EncodingError },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unexpected engine output")]
    UnexpectedOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub parties: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub key_bits: u64,
    pub precision: i32,
    pub seed: u64,
    pub engine: EngineConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::Linear,
            parties: 2,
            iterations: 10,
            learning_rate: 0.1,
            key_bits: DEFAULT_KEY_BITS,
            precision: DEFAULT_PRECISION,
            seed: 0,
            engine: EngineConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), FedError> {
        if self.parties == 0 {
            return Err(FedError::InvalidConfig("parties must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(FedError::InvalidConfig(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// State after one iteration. Iteration 0 is the initial model with zero timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// The trained objective: squared error, or the Taylor loss for logistic.
    pub loss: f64,
    /// Cross-entropy, logistic only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_loss: Option<f64>,
    pub weights: Vec<f64>,
    pub encrypt_ms: f64,
    pub aggregate_ms: f64,
    pub decrypt_ms: f64,
    pub local_ms: f64,
    pub total_ms: f64,
}

impl TraceRecord {
    pub fn phase_sum_ms(&self) -> f64 {
        self.encrypt_ms + self.aggregate_ms + self.decrypt_ms + self.local_ms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub weights: Vec<f64>,
    pub trace: Vec<TraceRecord>,
}

pub fn trace_to_jsonl(trace: &[TraceRecord]) -> String {
    trace
        .iter()
        .map(|r| serde_json::to_string(r).expect("trace serializes") + "\n")
        .collect()
}

/// One data holder.
#[derive(Debug, Clone)]
pub struct Party {
    pub id: usize,
    x: Vec<Vec<f64>>,
    labels: Option<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Party {
    pub fn new(id: usize, x: Vec<Vec<f64>>, labels: Option<Vec<f64>>) -> Self {
        let width = x.first().map_or(0, Vec::len);
        Party { id, x, labels, weights: vec![0.0; width] }
    }

    pub fn holds_labels(&self) -> bool {
        self.labels.is_some()
    }

    /// This party's additive share of the per-sample residual.
    pub fn contribution(&self, kind: ModelKind) -> Vec<f64> {
        let s = model::scores(&self.x, &self.weights);
        match (kind, &self.labels) {
            (ModelKind::Linear, None) => s,
            (ModelKind::Linear, Some(y)) => s.iter().zip(y).map(|(si, yi)| si - yi).collect(),
            (ModelKind::Logistic, None) => s.iter().map(|si| si / 4.0).collect(),
            (ModelKind::Logistic, Some(y)) => s.iter().zip(y).map(|(si, yi)| 0.5 + si / 4.0 - yi).collect(),
        }
    }

    pub fn step(&mut self, residual: &[f64], learning_rate: f64) {
        let g = model::xt_times(&self.x, residual, self.weights.len());
        for (w, gj) in self.weights.iter_mut().zip(g) {
            *w -= learning_rate * gj;
        }
    }
}

/// Aggregates encrypted shares; has no way to decrypt them.
pub struct Coordinator {
    engine: Engine,
}

impl Coordinator {
    pub fn new(pk: PublicKey, engine: EngineConfig) -> Result<Self, FedError> {
        Ok(Coordinator { engine: Engine::new(pk, None, engine)? })
    }

    pub fn public_key(&self) -> &PublicKey {
        self.engine.public_key()
    }

    /// Sample-wise sum of every party's ciphertexts.
    pub fn aggregate(&self, first_id: u64, shares: Vec<Vec<Ciphertext>>) -> Result<Vec<Ciphertext>, FedError> {
        let mut shares = shares.into_iter();
        let mut acc = shares.next().ok_or_else(|| FedError::Shape("no shares to aggregate".into()))?;
        for (round, next) in shares.enumerate() {
            if next.len() != acc.len() {
                return Err(FedError::Shape(format!("{} shares against {}", next.len(), acc.len())));
            }
            let items = acc.into_iter().zip(next).map(|(a, b)| Item::Add(a, b)).collect();
            acc = ciphers(self.engine.run(first_id + round as u64 * 1000, OpKind::Add, items)?)?;
        }
        Ok(acc)
    }
}

fn ciphers(out: Vec<crate::engine::Output>) -> Result<Vec<Ciphertext>, FedError> {
    out.into_iter().map(|o| o.into_cipher().ok_or(FedError::UnexpectedOutput)).collect()
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Parties, coordinator and the parties' shared key material.
pub struct Federation {
    pub parties: Vec<Party>,
    pub coordinator: Coordinator,
    party_engine: Engine,
    config: TrainConfig,
    dataset: Dataset,
}

impl Federation {
    pub fn new(dataset: Dataset, keypair: &Keypair, config: TrainConfig) -> Result<Self, FedError> {
        config.validate()?;
        let ranges = dataset.split_columns(config.parties)?;
        let parties = ranges
            .into_iter()
            .enumerate()
            .map(|(id, r)| Party::new(id, dataset.columns(r), (id == 0).then(|| dataset.y.clone())))
            .collect();
        let engine_cfg = EngineConfig { seed: config.seed, ..config.engine.clone() };
        Ok(Federation {
            parties,
            coordinator: Coordinator::new(keypair.public.clone(), engine_cfg.clone())?,
            party_engine: Engine::new(keypair.public.clone(), Some(keypair.private.clone()), engine_cfg)?,
            config,
            dataset,
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.parties.iter().flat_map(|p| p.weights.iter().copied()).collect()
    }

    fn record(&self, iteration: usize, phases: [f64; 4], total_ms: f64) -> Result<TraceRecord, FedError> {
        record(self.config.model, &self.dataset, self.weights(), iteration, phases, total_ms)
    }

    fn iterate(&mut self, t: usize) -> Result<TraceRecord, FedError> {
        let pk = self.coordinator.public_key().clone();
        let kind = self.config.model;
        let precision = self.config.precision;
        let base = t as u64 * 1_000_000;
        let start = Instant::now();
        let mut phases = [0.0; 4];

        let clock = Instant::now();
        let contributions: Vec<Vec<f64>> = self.parties.iter().map(|p| p.contribution(kind)).collect();
        phases[3] += ms(clock);

        let clock = Instant::now();
        let mut shares = Vec::with_capacity(self.parties.len());
        for (p, values) in contributions.iter().enumerate() {
            let items = values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    EncodedNumber::encode(v, &pk, Some(precision))
                        .map(Item::Encrypt)
                        .map_err(|source| FedError::Encoding { iteration: t, party: p, sample: i, source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            shares.push(ciphers(self.party_engine.run(base + p as u64 * 10_000, OpKind::Encrypt, items)?)?);
        }
        phases[0] += ms(clock);

        let clock = Instant::now();
        let aggregate = self.coordinator.aggregate(base + 500_000, shares)?;
        phases[1] += ms(clock);

        for p in 0..self.parties.len() {
            let clock = Instant::now();
            let items = aggregate.iter().cloned().map(Item::Decrypt).collect();
            let residual = self
                .party_engine
                .run(base + 600_000 + p as u64 * 10_000, OpKind::Decrypt, items)?
                .into_iter()
                .enumerate()
                .map(|(i, o)| {
                    let e = o.into_plain().ok_or(FedError::UnexpectedOutput)?;
                    e.decode(&pk).map_err(|source| FedError::Encoding { iteration: t, party: p, sample: i, source })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            phases[2] += ms(clock);

            let clock = Instant::now();
            self.parties[p].step(&residual, self.config.learning_rate);
            phases[3] += ms(clock);
        }
        let total = ms(start);
        self.record(t, phases, total)
    }

    /// Runs the configured number of iterations and returns the trace.
    pub fn train(&mut self) -> Result<TrainResult, FedError> {
        let mut trace = vec![self.record(0, [0.0; 4], 0.0)?];
        for t in 1..=self.config.iterations {
            trace.push(self.iterate(t)?);
        }
        Ok(TrainResult { weights: self.weights(), trace })
    }
}

fn record(
    kind: ModelKind,
    ds: &Dataset,
    weights: Vec<f64>,
    iteration: usize,
    phases: [f64; 4],
    total_ms: f64,
) -> Result<TraceRecord, FedError> {
    Ok(TraceRecord {
        iteration,
        loss: model::objective(kind, &ds.x, &ds.y, &weights)?,
        log_loss: match kind {
            ModelKind::Logistic => Some(model::logistic_loss(&ds.x, &ds.y, &weights)?),
            ModelKind::Linear => None,
        },
        weights,
        encrypt_ms: phases[0],
        aggregate_ms: phases[1],
        decrypt_ms: phases[2],
        local_ms: phases[3],
        total_ms,
    })
}

/// Generates a key of the configured size and trains under encryption.
pub fn train(dataset: Dataset, config: TrainConfig, rng: &mut impl rand::CryptoRng) -> Result<TrainResult, FedError> {
    config.validate()?;
    let kp = Keypair::generate(config.key_bits, rng)
        .map_err(|e| FedError::InvalidConfig(format!("key generation: {e}")))?;
    Federation::new(dataset, &kp, config)?.train()
}

/// The same protocol with the encryption round trip removed.
pub fn plaintext_reference(dataset: &Dataset, config: &TrainConfig) -> Result<TrainResult, FedError> {
    config.validate()?;
    let ranges = dataset.split_columns(config.parties)?;
    let mut parties: Vec<Party> = ranges
        .into_iter()
        .enumerate()
        .map(|(id, r)| Party::new(id, dataset.columns(r), (id == 0).then(|| dataset.y.clone())))
        .collect();
    let weights = |ps: &[Party]| ps.iter().flat_map(|p| p.weights.iter().copied()).collect::<Vec<f64>>();
    let mut trace = vec![record(config.model, dataset, weights(&parties), 0, [0.0; 4], 0.0)?];
    for t in 1..=config.iterations {
        let start = Instant::now();
        let mut residual = vec![0.0; dataset.samples()];
        for p in &parties {
            for (r, c) in residual.iter_mut().zip(p.contribution(config.model)) {
                *r += c;
            }
        }
        for p in parties.iter_mut() {
            p.step(&residual, config.learning_rate);
        }
        let local = ms(start);
        trace.push(record(config.model, dataset, weights(&parties), t, [0.0, 0.0, 0.0, local], local)?);
    }
    Ok(TrainResult { weights: weights(&parties), trace })
}

/// Largest absolute weight difference between two runs.
pub fn max_weight_difference(a: &TrainResult, b: &TrainResult) -> f64 {
    a.weights.iter().zip(&b.weights).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
