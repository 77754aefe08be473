//! Shared fixtures for the benchmarks.

use freestart::datasets::{synth_blobs, Dataset, SynthSpec};

/// The reference synthetic task: 10 classes in 32 dimensions,
/// 20,000 training and 5,000 test samples.
pub fn reference_data() -> (Dataset, Dataset) {
    synth_blobs(&SynthSpec {
        classes: 10,
        per_class: 2500,
        dim: 32,
        separation: 3.6,
        noise: 1.0,
        seed: 1,
    })
    .expect("valid synthetic spec")
}
