//! EEG complexity analysis built around multi-scale inherent fuzzy entropy.
//!
//! The crate covers the full path from raw multichannel recordings to group
//! statistics and phase classification:
//!
//! * [`signal`] — time-series containers, z-scoring, windowed-sinc FIR
//!   filtering, decimation, and amplitude-based artifact screening.
//! * [`emd`] — empirical mode decomposition and frequency-cutoff de-trending.
//! * [`entropy`] — coarse-graining plus the fuzzy / sample / approximate
//!   entropy family, multi-scale profiles, relative profiles, and
//!   transitional variance.
//! * [`cca`] — canonical-correlation artifact removal against sinusoidal
//!   stimulus templates.
//! * [`stats`] — paired/independent t-tests, Benjamini–Hochberg FDR, and
//!   one-way intra-class correlation.
//! * [`classify`] — LDA, kNN, and AdaBoost with a repeated stratified
//!   cross-validation harness, metrics, and ROC/AUC.
//! * [`synth`] — deterministic synthetic-EEG cohort generator (1/f^β noise
//!   with planted 15/30 Hz components).
//! * [`pipeline`] — end-to-end orchestration from a cohort directory to
//!   statistics and classification outputs.
//!
//! All operations are pure functions over immutable inputs; given identical
//! seeds, configuration, and data, every entry point is bit-reproducible
//! regardless of thread count.

pub mod cca;
pub mod classify;
pub mod emd;
pub mod entropy;
pub mod io;
pub mod linalg;
pub mod math;
pub mod pipeline;
pub mod rng;
pub mod signal;
pub mod stats;
pub mod synth;

pub use signal::{Condition, MultiChannelEpoch, TimeSeries};
