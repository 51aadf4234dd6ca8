//! Shared inputs for the pipeline benchmarks.

use devrank_core::evaluation::ratings_for;
use devrank_core::metrics::select;
use devrank_core::synth::SynthConfig;
use devrank_core::{generate, EventStore, RatingMatrix};

/// A seeded synthetic store of the given shape.
pub fn store(developers: usize, projects: usize, density: f64) -> EventStore {
    let cfg = SynthConfig {
        seed: 11,
        developers,
        projects,
        density,
        watch_rate: 0.02,
        ..SynthConfig::default()
    };
    generate(&cfg).expect("valid bench config")
}

/// Scaled ratings of the `comment` metric.
pub fn comment_ratings(store: &EventStore) -> RatingMatrix {
    let spec = select("comment").expect("catalog").remove(0);
    ratings_for(store, &spec, 0.0, 10.0).expect("scalable")
}
