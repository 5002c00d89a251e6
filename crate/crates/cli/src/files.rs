//! Key generation and whole-file encryption.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use paillier_accel::engine::{Item, OpKind};
use paillier_accel::paillier::{PrivateKeyDocument, PublicKeyDocument};
use paillier_accel::{BigUint, Ciphertext, EncodedNumber, Engine, EngineConfig, Keypair, PublicKey};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::args::Common;
use crate::{invalid, print_json, table, CliError, CliResult};

pub fn key_path(base: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(base.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn load_public(base: &Path) -> anyhow::Result<PublicKey> {
    let doc: PublicKeyDocument = read_json(&key_path(base, ".pub.json"))?;
    Ok(PublicKey::from_document(&doc)?)
}

pub fn load_keypair(base: &Path) -> anyhow::Result<Keypair> {
    let public: PublicKeyDocument = read_json(&key_path(base, ".pub.json"))?;
    let private: PrivateKeyDocument = read_json(&key_path(base, ".priv.json"))?;
    Ok(Keypair::from_documents(&public, &private)?)
}

pub fn check_key_bits(bits: u64) -> Result<(), CliError> {
    if bits < 16 || !bits.is_multiple_of(2) {
        return Err(invalid(format!("key size must be an even number of bits, at least 16 (got {bits})")));
    }
    Ok(())
}

pub fn engine_config(workers: Option<usize>, seed: u64) -> Result<EngineConfig, CliError> {
    let mut cfg = EngineConfig { seed, ..EngineConfig::default() }
        .with_env_overrides()
        .map_err(|e| invalid(e.to_string()))?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct KeygenReport {
    bits: u64,
    n_bits: u64,
    seed: u64,
    public_key: PathBuf,
    private_key: PathBuf,
}

pub fn keygen(bits: u64, out: &Path, common: &Common) -> CliResult {
    check_key_bits(bits)?;
    let mut rng = ChaCha20Rng::seed_from_u64(common.seed);
    let kp = Keypair::generate(bits, &mut rng).map_err(anyhow::Error::from)?;
    let report = KeygenReport {
        bits,
        n_bits: kp.public.n().bits(),
        seed: common.seed,
        public_key: key_path(out, ".pub.json"),
        private_key: key_path(out, ".priv.json"),
    };
    write_json(&report.public_key, &kp.public.to_document())?;
    write_json(&report.private_key, &kp.private.to_document())?;
    if common.json {
        return print_json(&report);
    }
    out!(
        "{}",
        table::fields(&[
            ("key bits", report.bits.to_string()),
            ("public key", report.public_key.display().to_string()),
            ("private key", report.private_key.display().to_string()),
        ])
    );
    Ok(())
}

/// A file split into little-endian chunks, each strictly below `n`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncryptedFile {
    pub key_bits: u64,
    pub n: BigUint,
    /// Plaintext length in bytes.
    pub length: u64,
    pub chunk_bytes: usize,
    pub chunks: Vec<Ciphertext>,
}

fn chunk_bytes(pk: &PublicKey) -> usize {
    ((pk.n().bits() - 1) / 8) as usize
}

#[derive(Serialize)]
struct FileReport<'a> {
    input: &'a Path,
    output: &'a Path,
    bytes: u64,
    chunks: usize,
}

fn report_file(r: &FileReport, common: &Common) -> CliResult {
    if common.json {
        return print_json(r);
    }
    out!(
        "{}",
        table::fields(&[
            ("input", r.input.display().to_string()),
            ("output", r.output.display().to_string()),
            ("bytes", r.bytes.to_string()),
            ("chunks", r.chunks.to_string()),
        ])
    );
    Ok(())
}

pub fn encrypt(key: &Path, input: &Path, out: &Path, workers: Option<usize>, common: &Common) -> CliResult {
    let cfg = engine_config(workers, common.seed)?;
    let pk = load_public(key)?;
    let data = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let width = chunk_bytes(&pk);
    if width == 0 {
        return Err(invalid("key too small to hold a byte"));
    }
    let items = data
        .chunks(width)
        .map(|c| Item::Encrypt(EncodedNumber { mantissa: BigUint::from_bytes_le(c), exponent: 0 }))
        .collect();
    let engine = Engine::new(pk.clone(), None, cfg).map_err(anyhow::Error::from)?;
    let chunks = engine
        .run(0, OpKind::Encrypt, items)
        .map_err(anyhow::Error::from)?
        .into_iter()
        .map(|o| o.into_cipher().ok_or_else(|| anyhow!("engine returned a plaintext")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let file = EncryptedFile { key_bits: pk.bit_length(), n: pk.n().clone(), length: data.len() as u64, chunk_bytes: width, chunks };
    write_json(out, &file)?;
    report_file(&FileReport { input, output: out, bytes: file.length, chunks: file.chunks.len() }, common)
}

pub fn decrypt(key: &Path, input: &Path, out: &Path, workers: Option<usize>, common: &Common) -> CliResult {
    let cfg = engine_config(workers, common.seed)?;
    let kp = load_keypair(key)?;
    let file: EncryptedFile = read_json(input)?;
    if &file.n != kp.public.n() {
        return Err(anyhow!("{} was encrypted under a different key", input.display()).into());
    }
    if file.chunk_bytes == 0 || (file.length as usize).div_ceil(file.chunk_bytes) != file.chunks.len() {
        return Err(anyhow!("{}: chunk count does not match the recorded length", input.display()).into());
    }
    let items = file.chunks.into_iter().map(Item::Decrypt).collect();
    let engine = Engine::new(kp.public.clone(), Some(kp.private.clone()), cfg).map_err(anyhow::Error::from)?;
    let outputs = engine.run(0, OpKind::Decrypt, items).map_err(anyhow::Error::from)?;
    let count = outputs.len();
    let mut data = Vec::with_capacity(file.length as usize);
    for (i, o) in outputs.into_iter().enumerate() {
        let plain = o.into_plain().ok_or_else(|| anyhow!("engine returned a ciphertext"))?;
        if plain.exponent != 0 {
            return Err(anyhow!("chunk {i} has exponent {}", plain.exponent).into());
        }
        let want = if i + 1 == count { file.length as usize - i * file.chunk_bytes } else { file.chunk_bytes };
        let mut bytes = plain.mantissa.to_bytes_le();
        if bytes.len() > want {
            return Err(anyhow!("chunk {i} decrypts to more than {want} bytes").into());
        }
        bytes.resize(want, 0);
        data.extend_from_slice(&bytes);
    }
    std::fs::write(out, &data).with_context(|| format!("writing {}", out.display()))?;
    report_file(&FileReport { input, output: out, bytes: file.length, chunks: count }, common)
}
