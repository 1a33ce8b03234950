//! Anticipate attack classes from flow-record datasets.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. **Ingest** ([`schema`], [`table`], [`encode`], [`discretize`]): parse a
//!    flow CSV against a named schema, ordinal-encode categorical columns,
//!    and replace continuous columns with discrete magnitude/leading-digit
//!    pairs, dropping constants.
//! 2. **Learn** ([`resample`], [`learners`], [`eval`]): train multiclass
//!    classifiers (decision tree, random forest, gradient-boosted trees,
//!    categorical naive Bayes) on the encoded data, optionally rebalancing
//!    the training split, and score them with a confusion matrix and macro
//!    metrics.
//! 3. **Select** ([`select`]): rank features by chi-squared score, keep the
//!    best k, or eliminate recursively by model importance.
//! 4. **Forecast** ([`events`]): treat the selected features' observed code
//!    domains as a combinatorial event space, classify its events
//!    (exhaustively or by sampling), and report the per-class share of the
//!    space, raw and weighted by model accuracy.
//!
//! ```
//! use eventcast::discretize::log_sig;
//!
//! let p = log_sig(3456.0).unwrap();
//! assert_eq!((p.mag, p.sig), (3, 3));
//! ```
//!
//! Everything downstream of the one configured seed is deterministic,
//! including under multithreaded execution.

pub mod artifact;
pub mod discretize;
pub mod encode;
pub mod error;
pub mod eval;
pub mod events;
pub mod learners;
pub mod resample;
pub mod rng;
pub mod schema;
pub mod select;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
