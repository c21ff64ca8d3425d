//! Linear operator channels over finite fields: counting, channel models,
//! capacity bounds, and lifted code families.

pub mod capacity;
pub mod channel;
pub mod config;
pub mod counting;
pub mod error;
pub mod field;
pub mod linalg;
pub mod linear_code;
pub mod rank_metric;
pub mod rng;
pub mod validate;

pub use channel::{ChannelKind, ChannelModel, KernelTable, RankPmf};
pub use counting::CountingContext;
pub use error::{Error, Result};
pub use field::{field_arith, FieldConfig, FieldElement, FieldOp, FieldSpec};
pub use linalg::{Mat, Subspace};
pub use config::{CodeConfig, ConfigFile, ExperimentConfig, OutputFormat};
pub use counting::Check;
pub use validate::{run_suite, Suite, SuiteReport};
