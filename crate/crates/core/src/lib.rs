//! Labeling, analysis and prediction of inline code-review comment usefulness.
//!
//! The crate is organized along the pipeline:
//!
//! * [`corpus`]: review history model and corpus-JSON I/O
//! * [`ingest`]: forge REST client, unified-diff parser, synthetic corpora
//! * [`labeling`]: change-triggering usefulness labels
//! * [`text`] and [`experience`]: the textual and reviewer-experience features
//! * [`features`]: 15-variable feature vectors, datasets, imputation
//! * [`stats`]: nonparametric tests, effect sizes, the comparative study
//! * [`learn`]: naive Bayes, logistic regression, CART, random forest, PCA
//! * [`eval`]: cross-validation, metrics, ROC/PR curves, baseline comparison
//! * [`assist`]: single-comment prediction with per-feature rationale

pub mod assist;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experience;
pub mod features;
pub mod ingest;
pub mod labeling;
pub mod learn;
pub mod rng;
pub mod stats;
pub mod text;

pub use error::{Error, Result};
