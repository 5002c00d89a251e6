//! Batched Paillier processing on a pool of worker threads.
//!
//! Requests are split into fixed-size batches. Each batch is copied into a
//! free buffer of a preallocated ring (blocking while all buffers are in
//! flight), queued, and processed by whichever worker is idle. Results come
//! back through a per-batch handle, so batches may complete out of order.

mod ring;
mod stats;

pub use ring::{BufferRing, Slot};
pub use stats::{BatchRecord, QueueStats};

use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Instant;

use crossbeam_channel::{Receiver, Sender};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{self, EncodedNumber};
use crate::paillier::{Ciphertext, PaillierError, PrivateKey, PublicKey};

pub const DEFAULT_BATCH_SIZE: usize = 1024;
pub const DEFAULT_RING_SLOTS: usize = 4;
pub const ENV_PREFIX: &str = "PAILLIER_ACCEL_";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch of {len} items exceeds the batch size {max}")]
    BatchTooLarge { len: usize, max: usize },
    #[error("item {index} does not match the batch operation {kind:?}")]
    MixedBatch { index: usize, kind: OpKind },
    #[error("decryption requested but the engine has no private key")]
    NoPrivateKey,
    #[error("engine is shut down")]
    ShutDown,
    #[error("item {index} failed: {source}")]
    Item { index: usize, source: PaillierError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Encrypt,
    Decrypt,
    Add,
    ScalarMul,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Encrypt(EncodedNumber),
    Decrypt(Ciphertext),
    Add(Ciphertext, Ciphertext),
    ScalarMul(Ciphertext, EncodedNumber),
}

impl Item {
    pub fn kind(&self) -> OpKind {
        match self {
            Item::Encrypt(_) => OpKind::Encrypt,
            Item::Decrypt(_) => OpKind::Decrypt,
            Item::Add(..) => OpKind::Add,
            Item::ScalarMul(..) => OpKind::ScalarMul,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Cipher(Ciphertext),
    Plain(EncodedNumber),
}

impl Output {
    pub fn into_cipher(self) -> Option<Ciphertext> {
        match self {
            Output::Cipher(c) => Some(c),
            Output::Plain(_) => None,
        }
    }

    pub fn into_plain(self) -> Option<EncodedNumber> {
        match self {
            Output::Plain(p) => Some(p),
            Output::Cipher(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchRequest {
    pub request_id: u64,
    pub kind: OpKind,
    pub items: Vec<Item>,
}

impl BatchRequest {
    pub fn new(request_id: u64, kind: OpKind, items: Vec<Item>) -> Self {
        BatchRequest { request_id, kind, items }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub workers: usize,
    pub batch_size: usize,
    pub ring_slots: usize,
    /// Root of the per-item randomness.
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            batch_size: DEFAULT_BATCH_SIZE,
            ring_slots: DEFAULT_RING_SLOTS,
            seed: 0,
        }
    }
}

impl EngineConfig {
    /// Overrides from `PAILLIER_ACCEL_WORKERS`, `PAILLIER_ACCEL_BATCH_SIZE`
    /// and `PAILLIER_ACCEL_RING_SLOTS`.
    pub fn with_env_overrides(self) -> Result<Self, EngineError> {
        self.with_overrides(|name| std::env::var(format!("{ENV_PREFIX}{name}")).ok())
    }

    pub fn with_overrides(mut self, get: impl Fn(&str) -> Option<String>) -> Result<Self, EngineError> {
        let parse = |name: &str, current: usize| -> Result<usize, EngineError> {
            match get(name) {
                None => Ok(current),
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| EngineError::InvalidConfig(format!("{ENV_PREFIX}{name}={v:?} is not a count"))),
            }
        };
        self.workers = parse("WORKERS", self.workers)?;
        self.batch_size = parse("BATCH_SIZE", self.batch_size)?;
        self.ring_slots = parse("RING_SLOTS", self.ring_slots)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.workers == 0 {
            return Err(EngineError::InvalidConfig("workers must be at least 1".into()));
        }
        if self.ring_slots < 2 {
            return Err(EngineError::InvalidConfig("ring_slots must be at least 2".into()));
        }
        if self.batch_size == 0 {
            return Err(EngineError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Randomness of one item: a ChaCha20 stream keyed by the engine seed, the
/// request id and the item index.
pub fn item_rng(seed: u64, request_id: u64, index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&request_id.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

pub fn process_item(
    pk: &PublicKey,
    sk: Option<&PrivateKey>,
    seed: u64,
    request_id: u64,
    index: u64,
    item: &Item,
) -> Result<Output, PaillierError> {
    Ok(match item {
        Item::Encrypt(x) => {
            let mut rng = item_rng(seed, request_id, index);
            Output::Cipher(encoding::encrypt_encoded(pk, x, &mut rng)?)
        }
        Item::Decrypt(c) => {
            let sk = sk.expect("checked at submit");
            Output::Plain(encoding::decrypt_encoded(sk, pk, c)?)
        }
        Item::Add(a, b) => Output::Cipher(encoding::add_encrypted(pk, a, b)?),
        Item::ScalarMul(c, s) => Output::Cipher(encoding::mul_encrypted(pk, c, s)?),
    })
}

/// Single-threaded reference: the same per-item computation in input order.
pub fn serial_reference(
    pk: &PublicKey,
    sk: Option<&PrivateKey>,
    seed: u64,
    requests: &[BatchRequest],
) -> Result<Vec<Vec<Output>>, EngineError> {
    requests
        .iter()
        .map(|req| {
            req.items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    process_item(pk, sk, seed, req.request_id, i as u64, item)
                        .map_err(|source| EngineError::Item { index: i, source })
                })
                .collect()
        })
        .collect()
}

struct Job {
    slot: usize,
    request_id: u64,
    kind: OpKind,
    items: usize,
    enqueued: Instant,
    reply: Sender<Result<Vec<Output>, EngineError>>,
}

struct Shared {
    pk: PublicKey,
    sk: Option<PrivateKey>,
    seed: u64,
    ring: BufferRing,
    stats: Mutex<stats::Recorder>,
    in_flight: Mutex<usize>,
    idle: Condvar,
}

/// Resolves to the results of one batch, in input order.
#[derive(Debug)]
pub struct BatchHandle {
    request_id: u64,
    rx: Receiver<Result<Vec<Output>, EngineError>>,
}

impl BatchHandle {
    pub fn request_id(&self) -> u64 {
        self.request_id
    }

    pub fn wait(self) -> Result<Vec<Output>, EngineError> {
        self.rx.recv().unwrap_or(Err(EngineError::ShutDown))
    }
}

pub struct Engine {
    shared: Arc<Shared>,
    config: EngineConfig,
    sender: Option<Sender<Job>>,
    workers: Vec<JoinHandle<()>>,
}

impl Engine {
    pub fn new(pk: PublicKey, sk: Option<PrivateKey>, config: EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let shared = Arc::new(Shared {
            pk,
            sk,
            seed: config.seed,
            ring: BufferRing::new(config.ring_slots, config.batch_size),
            stats: Mutex::new(stats::Recorder::new()),
            in_flight: Mutex::new(0),
            idle: Condvar::new(),
        });
        let (tx, rx) = crossbeam_channel::unbounded::<Job>();
        let workers = (0..config.workers)
            .map(|w| {
                let shared = Arc::clone(&shared);
                let rx = rx.clone();
                std::thread::Builder::new()
                    .name(format!("paillier-worker-{w}"))
                    .spawn(move || worker_loop(w, &shared, rx))
                    .expect("spawn worker")
            })
            .collect();
        Ok(Engine { shared, config, sender: Some(tx), workers })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.shared.pk
    }

    pub fn ring(&self) -> &BufferRing {
        &self.shared.ring
    }

    /// Queues one batch, blocking while every ring slot is in flight.
    pub fn submit(&self, req: BatchRequest) -> Result<BatchHandle, EngineError> {
        let sender = self.sender.as_ref().ok_or(EngineError::ShutDown)?;
        if req.items.is_empty() {
            return Err(EngineError::EmptyBatch);
        }
        if req.items.len() > self.config.batch_size {
            return Err(EngineError::BatchTooLarge { len: req.items.len(), max: self.config.batch_size });
        }
        if let Some(index) = req.items.iter().position(|it| it.kind() != req.kind) {
            return Err(EngineError::MixedBatch { index, kind: req.kind });
        }
        if req.kind == OpKind::Decrypt && self.shared.sk.is_none() {
            return Err(EngineError::NoPrivateKey);
        }

        let slot = self.shared.ring.acquire();
        let items = req.items.len();
        {
            let mut buf = self.shared.ring.slot(slot);
            buf.inputs.clear();
            buf.inputs.extend(req.items);
        }
        *self.shared.in_flight.lock().unwrap() += 1;
        let enqueued = Instant::now();
        self.shared.stats.lock().unwrap().enqueued(enqueued);
        let (reply, rx) = crossbeam_channel::bounded(1);
        let job = Job { slot, request_id: req.request_id, kind: req.kind, items, enqueued, reply };
        if sender.send(job).is_err() {
            self.shared.ring.release(slot);
            self.finish_one();
            return Err(EngineError::ShutDown);
        }
        Ok(BatchHandle { request_id: req.request_id, rx })
    }

    /// Splits `items` of one kind into batches, submits them all and
    /// returns the concatenated results. Request ids start at `first_id`.
    pub fn run(&self, first_id: u64, kind: OpKind, items: Vec<Item>) -> Result<Vec<Output>, EngineError> {
        let b = self.config.batch_size;
        let mut handles = Vec::with_capacity(items.len().div_ceil(b));
        let mut items = items.into_iter().peekable();
        let mut id = first_id;
        while items.peek().is_some() {
            let chunk: Vec<Item> = items.by_ref().take(b).collect();
            handles.push(self.submit(BatchRequest::new(id, kind, chunk))?);
            id += 1;
        }
        let mut out = Vec::new();
        for h in handles {
            out.extend(h.wait()?);
        }
        Ok(out)
    }

    /// Waits for every submitted batch, then returns and resets the stats.
    pub fn drain(&self) -> QueueStats {
        let mut n = self.shared.in_flight.lock().unwrap();
        while *n > 0 {
            n = self.shared.idle.wait(n).unwrap();
        }
        drop(n);
        let peak = self.shared.ring.take_peak();
        self.shared.stats.lock().unwrap().take(peak, self.config.batch_size)
    }

    fn finish_one(&self) {
        finish_one(&self.shared);
    }

    /// Stops accepting work, lets queued batches finish and joins the workers.
    pub fn shutdown(&mut self) {
        self.sender.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn finish_one(shared: &Shared) {
    let mut n = shared.in_flight.lock().unwrap();
    *n -= 1;
    if *n == 0 {
        shared.idle.notify_all();
    }
}

fn worker_loop(worker: usize, shared: &Shared, rx: Receiver<Job>) {
    while let Ok(job) = rx.recv() {
        let started = Instant::now();
        shared.stats.lock().unwrap().started(started);
        let result = {
            let mut guard = shared.ring.slot(job.slot);
            let Slot { inputs, outputs } = &mut *guard;
            outputs.clear();
            let mut failure = None;
            for (i, item) in inputs.iter().enumerate() {
                match process_item(&shared.pk, shared.sk.as_ref(), shared.seed, job.request_id, i as u64, item) {
                    Ok(o) => outputs.push(o),
                    Err(source) => {
                        failure = Some(EngineError::Item { index: i, source });
                        break;
                    }
                }
            }
            let result = match failure {
                Some(e) => Err(e),
                None => Ok(outputs.clone()),
            };
            inputs.clear();
            outputs.clear();
            result
        };
        shared.ring.release(job.slot);
        let finished = Instant::now();
        shared.stats.lock().unwrap().record(BatchRecordInput {
            request_id: job.request_id,
            kind: job.kind,
            items: job.items,
            slot: job.slot,
            worker,
            enqueued: job.enqueued,
            started,
            finished,
        });
        let _ = job.reply.send(result);
        finish_one(shared);
    }
}

struct BatchRecordInput {
    request_id: u64,
    kind: OpKind,
    items: usize,
    slot: usize,
    worker: usize,
    enqueued: Instant,
    started: Instant,
    finished: Instant,
}
