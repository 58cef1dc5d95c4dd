//! Locale-aware universal domain classification.
//!
//! A multi-locale utterance classifier built around a shared BiLSTM encoder,
//! per-locale BiLSTM encoders combined by supervised locale attention, an
//! optional adversarial locale-prediction loss with gradient reversal, and
//! per-locale one-vs-rest prediction heads. Utterances of a domain are routed
//! to the locale components named by the domain's sharing set, so locales
//! exchange knowledge for shared domains while locale-specific domains stay
//! confined to their own locale.
//!
//! The crate also ships the supporting machinery needed to run experiments
//! end to end: a dense-tensor autodiff core with a finite-difference gradient
//! checker, a synthetic multi-locale corpus generator, an Adam trainer with
//! best-epoch checkpointing, baseline model variants, and a per-category
//! evaluation report.

pub mod adversarial;
pub mod attention;
pub mod checkpoint;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gradcheck;
pub mod heads;
pub mod lstm;
pub mod model;
pub mod optim;
pub mod presets;
pub mod registry;
pub mod rng;
pub mod tape;
pub mod tensor;
pub mod trainer;
pub mod vocab;

pub use error::{Error, Result};
pub use tape::{NodeId, ParamId, ParamStore, Parameter, Tape};
pub use tensor::Tensor;
