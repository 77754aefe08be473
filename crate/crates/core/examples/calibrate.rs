//! Full-data accuracy of `mlp-small` on synthetic blobs for a range of
//! separations; used to pick the separation of the desk-scale benchmark.
//!
//! cargo run --release -p freestart-core --example calibrate -- 3.0 3.5 4.0

use std::time::Instant;

use freestart::datasets::{synth_blobs, SynthSpec};
use freestart::nn::{evaluate, init_random, train, NetworkSpec, TrainConfig};

fn main() {
    let seps: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("separation"))
        .collect();
    for sep in seps {
        let spec = SynthSpec {
            classes: 10,
            per_class: 2500,
            dim: 32,
            separation: sep,
            noise: 1.0,
            seed: 1,
        };
        let (train_set, test) = synth_blobs(&spec).unwrap();
        let net = NetworkSpec::mlp_small(32, 10);
        let ids: Vec<usize> = (0..train_set.len()).collect();
        let t = Instant::now();
        let model = init_random(&net, 0).unwrap();
        let trained = train(&model, &train_set, &ids, &TrainConfig::default()).unwrap();
        println!(
            "separation {sep}: full-data test accuracy {:.4} ({:.1}s)",
            evaluate(&trained, &test).unwrap(),
            t.elapsed().as_secs_f64()
        );
    }
}
