//! Shared fixtures for the benchmarks.

use qim_core::datagen::{build_balanced_dataset, Dataset, GenSpec, SetSpec};
use qim_core::experiment::{named_set, NamedSet};
use qim_core::masking::MaskableSet;

/// Balanced MT1 dataset with `per_class` samples of each label.
pub fn mt1_dataset(per_class: usize, seed: u64) -> Dataset {
    let MaskableSet::Disk(d) = named_set(NamedSet::MT1) else {
        unreachable!()
    };
    build_balanced_dataset(&GenSpec::binary(SetSpec::Disk(d), per_class, per_class, seed))
        .expect("generation succeeds")
}
