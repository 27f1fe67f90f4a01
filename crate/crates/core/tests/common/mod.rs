//! Shared fixtures and independent oracles for the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use bdf_core::{build_initial_state, InitialKind, MomentumSpace, NucleusState, SystemState};

pub const CUTOFF: f64 = 2.0;
pub const N_PER_AXIS: usize = 5;
pub const ALPHA: f64 = 0.1;

pub fn reference_space() -> Arc<MomentumSpace> {
    MomentumSpace::new(CUTOFF, N_PER_AXIS).unwrap()
}

/// Two unit-charge Gaussian nuclei 2 apart on the x axis, approaching each
/// other slowly.
pub fn reference_nuclei() -> Vec<NucleusState> {
    vec![
        NucleusState::new(1.0, 100.0, 0.5, [-1.0, 0.0, 0.0], [0.01, 0.0, 0.0]).unwrap(),
        NucleusState::new(1.0, 100.0, 0.5, [1.0, 0.0, 0.0], [-0.01, 0.0, 0.0]).unwrap(),
    ]
}

pub fn reference_state(space: &Arc<MomentumSpace>, alpha: f64) -> SystemState {
    let kind = InitialKind::Perturbed { epsilon: 0.1, seed: 1 };
    build_initial_state(space, kind, reference_nuclei(), alpha).unwrap()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// `∬ f₁(x) f₂(y)/|x−y|` for unit-mass Gaussians of widths `s1`, `s2` whose
/// centres are `d` apart. The convolution `f₁ ∗ f₂` is a Gaussian of variance
/// `s1² + s2²`; by the shell theorem its potential at distance `d` is a 1-D
/// integral over shells of radius `r`, each contributing `1/max(r, d)`.
pub fn gaussian_pair_oracle(s1: f64, s2: f64, d: f64) -> f64 {
    let var = s1 * s1 + s2 * s2;
    let norm = (2.0 * PI * var).powf(-1.5);
    let upper = d + 14.0 * var.sqrt();
    let shell = |r: f64| {
        let lever = if r >= d { r } else { r * r / d };
        4.0 * PI * lever * (-(r * r) / (2.0 * var)).exp()
    };
    norm * simpson(0.0, upper, 20_000, shell)
}

/// `∬ ψ(x) ψ̄(y)/|x−y| dx dy` for the band-limited orbital whose Fourier
/// transform is `e^{−a²|p|²/2}` on the ball `|p| ≤ Λ`. By Parseval this is
/// `4π ∫_{|k|≤Λ} |ψ̂(k)|²/|k|² dk = 16π² ∫₀^Λ e^{−a²k²} dk`.
pub fn band_limited_exchange_oracle(a: f64, cutoff: f64) -> f64 {
    16.0 * PI * PI * simpson(0.0, cutoff, 20_000, |k| (-a * a * k * k).exp())
}
