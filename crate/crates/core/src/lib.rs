//! Supervised classification of short organisational messages.
//!
//! The crate covers an end-to-end workflow: clean and stem free text
//! ([`textprep`]), build a sparse document-term matrix ([`dtm`]), fit
//! gradient-boosted decision trees with cross-validated early stopping
//! ([`gbt`]), evaluate predictions against hand-coded labels ([`metrics`]),
//! measure intercoder reliability ([`reliability`]), and scale a fitted
//! classifier to a full corpus with per-group share estimates ([`analyze`]).
//!
//! # Determinism
//!
//! Every randomised operation (sampling, train/test splits, fold assignment)
//! is driven by a ChaCha8 generator seeded from an explicit `u64`, so a given
//! (data, parameters, seed) triple reproduces results byte for byte, including
//! serialised model files. Parallel code paths reduce in a fixed order and
//! match the serial paths exactly.

pub mod analyze;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod dtm;
pub mod gbt;
pub mod metrics;
pub mod reliability;
pub mod textprep;
