pub mod bigint;
pub mod encoding;
pub mod engine;
pub mod fedsim;
pub mod montgomery;
pub mod paillier;
pub mod pipeline_model;

pub use bigint::{BigIntError, BigUint};
pub use montgomery::{MontCounters, MontForm, MontgomeryContext, MontgomeryError};
pub use paillier::{Ciphertext, Keypair, PaillierError, PrivateKey, PublicKey};
pub use encoding::{EncodedNumber, EncodingError, SparseWords};
pub use pipeline_model::{CoreConfig, ModelConfig, ResourceModel, ScheduleReport};
pub use engine::{BatchRequest, Engine, EngineConfig, QueueStats};
pub use fedsim::{Coordinator, Dataset, FedError, Federation, ModelKind, Party, TraceRecord, TrainConfig, TrainResult};
