//! Fixtures shared by the criterion benchmarks.

use bdf_core::{build_initial_state, InitialKind, MomentumSpace, NucleusState, SystemState};

/// Two approaching nuclei around a rotated vacuum on an `n³` lattice with `Λ = 2`.
pub fn bench_state(n_per_axis: usize, alpha: f64) -> SystemState {
    let space = MomentumSpace::new(2.0, n_per_axis).expect("valid lattice");
    let nuclei = vec![
        NucleusState::new(1.0, 100.0, 0.5, [-1.0, 0.0, 0.0], [0.01, 0.0, 0.0]).expect("valid nucleus"),
        NucleusState::new(1.0, 100.0, 0.5, [1.0, 0.0, 0.0], [-0.01, 0.0, 0.0]).expect("valid nucleus"),
    ];
    build_initial_state(&space, InitialKind::Perturbed { epsilon: 0.1, seed: 1 }, nuclei, alpha)
        .expect("valid initial state")
}
