//! Detecting quantum information masking in qubit states with tree
//! ensembles.
//!
//! The crate covers qubit state algebra ([`qstate`]), maskable sets and
//! their maskers ([`masking`]), seeded dataset generation ([`datagen`]),
//! gradient-boosted trees and a random forest written from scratch
//! ([`learners`]), pool-based active learning ([`active`]), evaluation
//! ([`metrics`]) and the experiment runners ([`experiment`]).

pub mod active;
pub mod datagen;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod linalg;
pub mod masking;
pub mod metrics;
pub mod qstate;

pub use active::{cosine_distance, entropy, run_al, select_batch, AlConfig, AlRun, CurvePoint};
pub use datagen::{build_balanced_dataset, Dataset, GenSpec, LabelMode, LabeledSample, SetSpec};
pub use error::{Error, Result};
pub use experiment::{named_set, ExperimentConfig, ExperimentId, NamedSet, ResultRow, Task};
pub use learners::{
    grid_search_cv, predict_rf, train_gbt, train_rf, ForestModel, GbtModel, GbtParams, Objective,
    RfParams,
};
pub use masking::{
    build_mixed_masker, build_pure_masker, verify_masking_invariance, CircleSpec, DiskSpec,
    MaskableSet, Masker, MaskingReport,
};
pub use metrics::{accuracy, pca_project, roc_auc, Roc, RocPoint};
pub use qstate::{BlochVector, DensityMatrix, FeatureVector, PureParams, TwoQubitDensity};
