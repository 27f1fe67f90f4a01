use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use super::{rk4_step, step_count, SystemState};
use crate::error::{BdfError, Result};
use crate::geom::{axpy, norm, sub};
use crate::opspace::random_hs_sample;

/// Relative slack allowed in `h(t) ≤ h(0) e^{Λ t}`.
pub const PROBE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub times: Vec<f64>,
    /// `h(t) = Σ_k |Δx̄_k| + ‖ΔQ‖₂`
    pub separation: Vec<f64>,
    /// Smallest `Λ ≥ 0` with `h(t) ≤ h(0) e^{Λt}` at every sample.
    pub rate: f64,
    pub bound_holds: bool,
}

fn separation(a: &SystemState, b: &SystemState) -> f64 {
    let dq = a.q.sub(&b.q).expect("same space").hs_norm();
    a.nuclei.iter().zip(&b.nuclei).map(|(x, y)| norm(sub(x.x, y.x))).sum::<f64>() + dq
}

/// Integrates `s0` and a copy whose `Q` is shifted by a seeded Hermitian
/// operator of norm `δ` and whose nuclear velocities are shifted by `δ` in a
/// seeded direction, then fits the exponential growth rate of their distance.
pub fn lipschitz_divergence_probe(
    s0: &SystemState,
    delta: f64,
    dt: f64,
    t_final: f64,
    alpha: f64,
    sample_every: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(BdfError::Config(format!("perturbation size must be nonnegative, got {delta}")));
    }
    if sample_every == 0 {
        return Err(BdfError::Config("sample_every must be positive".into()));
    }
    let steps = step_count(dt, t_final)?;
    let mut a = s0.clone();
    let mut b = s0.clone();
    if delta > 0.0 {
        b.q = b.q.add(&random_hs_sample(s0.q.space(), delta, seed))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for n in &mut b.nuclei {
            let e: [f64; 3] = UnitSphere.sample(&mut rng);
            n.v = axpy(n.v, delta, e);
        }
    }
    let mut times = vec![0.0];
    let mut h = vec![separation(&a, &b)];
    for i in 1..=steps {
        a = rk4_step(&a, dt, alpha, false)?;
        b = rk4_step(&b, dt, alpha, false)?;
        if i % sample_every == 0 || i == steps {
            let d = separation(&a, &b);
            if !d.is_finite() {
                return Err(BdfError::NonFinite(format!("probe separation at t = {}", i as f64 * dt)));
            }
            times.push(i as f64 * dt);
            h.push(d);
        }
    }
    let h0 = h[0];
    let rate = if h0 > 0.0 {
        times.iter().zip(&h).skip(1).map(|(&t, &x)| (x / h0).ln() / t).fold(0.0, f64::max)
    } else {
        0.0
    };
    let bound_holds = rate.is_finite()
        && times.iter().zip(&h).all(|(&t, &x)| x <= h0 * (rate * t).exp() * (1.0 + PROBE_TOLERANCE));
    Ok(ProbeReport { times, separation: h, rate, bound_holds })
}
