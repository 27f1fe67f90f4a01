use num_complex::Complex64 as C64;

use super::{rk4_step, SystemState};
use crate::coulomb::ChargeDensity;
use crate::error::{BdfError, Result};
use crate::geom::{axpy, norm, scale, sub, Vec3};
use crate::meanfield::{assemble_v_with_density, rhs_from_potential};
use crate::newton::{forces_from_density, NucleusState};
use crate::opspace::{density_of, KernelOperator};

/// Positions and velocities of every nucleus at one knot.
type NuclearKnot = Vec<(Vec3, Vec3)>;

#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Sup-norm distance between successive nuclear trajectories, one entry
    /// per iteration.
    pub distances: Vec<f64>,
    /// `distances[j+1] / distances[j]`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub tolerance: f64,
    /// Polynomial order of the dense output used to freeze trajectories and
    /// densities between knots (cubic Hermite).
    pub interpolation_order: usize,
    pub steps: usize,
    pub dt: f64,
    /// Sup-norm distance between the fixed point and a direct coupled RK4 run.
    pub direct_mismatch: f64,
    pub matches_direct: bool,
    /// Nuclear trajectory of the last iterate at the knots.
    pub knots: Vec<NuclearKnot>,
    /// State at `τ` from the last iterate.
    pub final_state: SystemState,
}

impl PicardReport {
    /// Whether the distances decrease strictly with every ratio below `bound`.
    pub fn contracts_below(&self, bound: f64) -> bool {
        self.ratios.iter().all(|&r| r < bound)
    }
}

fn hermite(theta: f64) -> [f64; 4] {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    [2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + theta, -2.0 * t3 + 3.0 * t2, t3 - t2]
}

/// Cubic Hermite interpolation of the nuclear trajectory between two knots.
fn interpolate_nuclei(a: &NuclearKnot, b: &NuclearKnot, theta: f64, dt: f64) -> Vec<Vec3> {
    let [h00, h10, h01, h11] = hermite(theta);
    a.iter()
        .zip(b)
        .map(|(&(xa, va), &(xb, vb))| {
            let x = axpy(scale(h00, xa), h10 * dt, va);
            axpy(axpy(x, h01, xb), h11 * dt, vb)
        })
        .collect()
}

fn interpolate_density(
    rho: (&ChargeDensity, &ChargeDensity),
    rate: (&ChargeDensity, &ChargeDensity),
    theta: f64,
    dt: f64,
) -> ChargeDensity {
    let [h00, h10, h01, h11] = hermite(theta);
    rho.0
        .scale(h00)
        .axpy(h10 * dt, rate.0)
        .and_then(|r| r.axpy(h01, rho.1))
        .and_then(|r| r.axpy(h11 * dt, rate.1))
        .expect("same space")
}

fn place(nuclei: &[NucleusState], x: &[Vec3]) -> Vec<NucleusState> {
    nuclei.iter().zip(x).map(|(n, &x)| NucleusState { x, ..n.clone() }).collect()
}

fn bdf_rhs_frozen(q: &KernelOperator, nuclei: &[NucleusState], alpha: f64) -> KernelOperator {
    let rho = density_of(q);
    let v = assemble_v_with_density(q, &rho, nuclei, alpha);
    rhs_from_potential(q, &v).expect("same space")
}

struct BdfSolution {
    rho: Vec<ChargeDensity>,
    rate: Vec<ChargeDensity>,
    last: KernelOperator,
}

/// ℱ^BDF: RK4 for `Q` alone with the nuclei moving along a prescribed
/// trajectory; records `ρ_Q` and `ρ_{Q̇}` at every knot.
fn solve_bdf(q0: &KernelOperator, nuclei: &[NucleusState], knots: &[NuclearKnot], dt: f64, alpha: f64) -> BdfSolution {
    let at = |j: usize, theta: f64| -> Vec<NucleusState> {
        if theta == 0.0 {
            place(nuclei, &knots[j].iter().map(|k| k.0).collect::<Vec<_>>())
        } else {
            place(nuclei, &interpolate_nuclei(&knots[j], &knots[j + 1], theta, dt))
        }
    };
    let step = |q: &KernelOperator, k: &KernelOperator, h: f64| q.axpy(C64::new(h, 0.0), k).expect("same space");
    let mut q = q0.clone();
    let mut rho = Vec::with_capacity(knots.len());
    let mut rate = Vec::with_capacity(knots.len());
    for j in 0..knots.len() - 1 {
        let mid = at(j, 0.5);
        let k1 = bdf_rhs_frozen(&q, &at(j, 0.0), alpha);
        rho.push(density_of(&q));
        rate.push(density_of(&k1));
        let k2 = bdf_rhs_frozen(&step(&q, &k1, 0.5 * dt), &mid, alpha);
        let k3 = bdf_rhs_frozen(&step(&q, &k2, 0.5 * dt), &mid, alpha);
        let k4 = bdf_rhs_frozen(&step(&q, &k3, dt), &at(j + 1, 0.0), alpha);
        for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
            q = step(&q, k, dt * w / 6.0);
        }
    }
    let end = knots.len() - 1;
    let last_nuclei = place(nuclei, &knots[end].iter().map(|k| k.0).collect::<Vec<_>>());
    rho.push(density_of(&q));
    rate.push(density_of(&bdf_rhs_frozen(&q, &last_nuclei, alpha)));
    BdfSolution { rho, rate, last: q }
}

/// ℱ^NEW: RK4 for the nuclei in the field of a prescribed density.
fn solve_newton(nuclei: &[NucleusState], bdf: &BdfSolution, dt: f64, alpha: f64) -> Vec<NuclearKnot> {
    let accel = |x: &[Vec3], rho: &ChargeDensity| -> Vec<Vec3> {
        let placed = place(nuclei, x);
        forces_from_density(rho, &placed, alpha)
            .into_iter()
            .zip(nuclei)
            .map(|(f, n)| scale(1.0 / n.m, f))
            .collect()
    };
    let mut x: Vec<Vec3> = nuclei.iter().map(|n| n.x).collect();
    let mut v: Vec<Vec3> = nuclei.iter().map(|n| n.v).collect();
    let mut knots = vec![x.iter().copied().zip(v.iter().copied()).collect::<NuclearKnot>()];
    let shift = |base: &[Vec3], d: &[Vec3], h: f64| -> Vec<Vec3> {
        base.iter().zip(d).map(|(&b, &d)| axpy(b, h, d)).collect()
    };
    for j in 0..bdf.rho.len() - 1 {
        let rho_mid = interpolate_density((&bdf.rho[j], &bdf.rho[j + 1]), (&bdf.rate[j], &bdf.rate[j + 1]), 0.5, dt);
        let a1 = accel(&x, &bdf.rho[j]);
        let v1 = v.clone();
        let x2 = shift(&x, &v1, 0.5 * dt);
        let v2 = shift(&v, &a1, 0.5 * dt);
        let a2 = accel(&x2, &rho_mid);
        let x3 = shift(&x, &v2, 0.5 * dt);
        let v3 = shift(&v, &a2, 0.5 * dt);
        let a3 = accel(&x3, &rho_mid);
        let x4 = shift(&x, &v3, dt);
        let v4 = shift(&v, &a3, dt);
        let a4 = accel(&x4, &bdf.rho[j + 1]);
        for (dx, dv, w) in [(&v1, &a1, 1.0), (&v2, &a2, 2.0), (&v3, &a3, 2.0), (&v4, &a4, 1.0)] {
            x = shift(&x, dx, dt * w / 6.0);
            v = shift(&v, dv, dt * w / 6.0);
        }
        knots.push(x.iter().copied().zip(v.iter().copied()).collect());
    }
    knots
}

fn trajectory_distance(a: &[NuclearKnot], b: &[NuclearKnot]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ka, kb)| ka.iter().zip(kb))
        .map(|(&(xa, va), &(xb, vb))| norm(sub(xa, xb)).max(norm(sub(va, vb))))
        .fold(0.0, f64::max)
}

/// Alternates ℱ^NEW ∘ ℱ^BDF on `[0, τ]`, starting from free nuclear motion,
/// until successive nuclear trajectories agree to `tol` in sup norm.
///
/// Non-convergence within `max_iter` is reported through `converged`.
pub fn picard_schauder(
    s0: &SystemState,
    tau: f64,
    dt: f64,
    alpha: f64,
    max_iter: usize,
    tol: f64,
) -> Result<PicardReport> {
    if !(tau > 0.0 && tau.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(BdfError::Config(format!("need positive τ and dt, got {tau} and {dt}")));
    }
    if max_iter == 0 || tol.is_nan() || tol <= 0.0 {
        return Err(BdfError::Config("max_iter and tol must be positive".into()));
    }
    let steps = (tau / dt).ceil().max(1.0) as usize;
    let h = tau / steps as f64;

    let mut knots: Vec<NuclearKnot> = (0..=steps)
        .map(|j| {
            let t = j as f64 * h;
            s0.nuclei.iter().map(|n| (axpy(n.x, t, n.v), n.v)).collect()
        })
        .collect();
    let mut distances = Vec::new();
    let mut converged = false;
    let mut last_q = s0.q.clone();
    for _ in 0..max_iter {
        let bdf = solve_bdf(&s0.q, &s0.nuclei, &knots, h, alpha);
        let next = solve_newton(&s0.nuclei, &bdf, h, alpha);
        let d = trajectory_distance(&knots, &next);
        if !d.is_finite() {
            return Err(BdfError::NonFinite("Picard iterate".into()));
        }
        distances.push(d);
        knots = next;
        last_q = bdf.last;
        if d < tol {
            converged = true;
            break;
        }
    }
    let ratios = distances.windows(2).map(|w| w[1] / w[0]).collect();

    let mut direct = s0.clone();
    let mut direct_mismatch = trajectory_distance(&knots[..1], &[knot_of(&direct)]);
    for j in 1..=steps {
        direct = rk4_step(&direct, h, alpha, false)?;
        direct_mismatch = direct_mismatch.max(trajectory_distance(&knots[j..=j], &[knot_of(&direct)]));
    }

    let end = knots.last().expect("at least one knot");
    let final_state = SystemState {
        q: last_q,
        nuclei: s0
            .nuclei
            .iter()
            .zip(end)
            .map(|(n, &(x, v))| NucleusState { x, v, ..n.clone() })
            .collect(),
        t: s0.t + tau,
    };
    Ok(PicardReport {
        iterations: distances.len(),
        distances,
        ratios,
        converged,
        tolerance: tol,
        interpolation_order: 3,
        steps,
        dt: h,
        direct_mismatch,
        matches_direct: direct_mismatch <= 10.0 * tol,
        knots,
        final_state,
    })
}

fn knot_of(s: &SystemState) -> NuclearKnot {
    s.nuclei.iter().map(|n| (n.x, n.v)).collect()
}
