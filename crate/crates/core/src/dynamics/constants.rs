use std::sync::Arc;

use crate::coulomb::coulomb_norm;
use crate::error::{BdfError, Result};
use crate::geom::norm;
use crate::meanfield::{
    assemble_mean_field, bdf_rhs, direct_potential_op, self_consistent_potential,
};
use crate::newton::NucleusState;
use crate::opspace::{commutator, density_of, random_hs_sample, KernelOperator};
use crate::space::MomentumSpace;

/// Continuity constants of the coupled system and the admissible local time.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantReport {
    pub c_f: f64,
    /// `‖F(Q)‖₂ ≤ C_F ‖Q‖₂`
    pub c_big_f: f64,
    /// `‖[D_x̄, Q]‖₂ ≤ C₁ ‖Q‖₂`
    pub c1: f64,
    /// `‖[V′_Q, Q′]‖₂ ≤ C₂ ‖Q‖₂ ‖Q′‖₂`
    pub c2: f64,
    /// `‖[V′_Q, P⁰]‖₂ ≤ C₃ ‖Q‖₂`
    pub c3: f64,
    /// `‖ρ ∗ 1/|·|‖_op ≤ κ E(Λ) ‖ρ‖_𝒞`
    pub kappa: f64,
    pub c_e: f64,
    pub q_initial_norm: f64,
    pub alpha: f64,
    pub samples: usize,
    /// Largest τ with `1/(1 − τC_F) < C^e`.
    pub tau_bdf: f64,
    /// Largest τ with `α τ/m_k C_f (C^e‖Q_I‖ + C_f) ≤ |v̄⁰_k|` for all k;
    /// `None` when that inequality puts no constraint on τ.
    pub tau_newton: Option<f64>,
    pub tau_admissible: f64,
    /// `|v̄⁰_k| m_k` for every nucleus.
    momenta: Vec<f64>,
}

impl ConstantReport {
    /// `1/(1 − τC_F) < C^e`.
    pub fn satisfies_bdf(&self, tau: f64) -> bool {
        let denom = 1.0 - tau * self.c_big_f;
        denom > 0.0 && 1.0 / denom < self.c_e
    }

    /// `α τ/m_k C_f (C^e‖Q_I‖ + C_f) ≤ |v̄⁰_k|` for every nucleus.
    pub fn satisfies_newton(&self, tau: f64) -> bool {
        if self.tau_newton.is_none() {
            return true;
        }
        let growth = self.alpha * tau * self.c_f * (self.c_e * self.q_initial_norm + self.c_f);
        self.momenta.iter().all(|&p| growth <= p)
    }

    pub fn admits(&self, tau: f64) -> bool {
        tau >= 0.0 && self.satisfies_bdf(tau) && self.satisfies_newton(tau)
    }
}

/// `C_f = max_k max(‖z_k f_k‖_𝒞, ‖z_k ∇f_k‖_𝒞)` from the closed-form
/// continuum integrals.
pub fn gaussian_constant(nuclei: &[NucleusState]) -> f64 {
    nuclei
        .iter()
        .map(|n| n.z * n.shape.self_energy().sqrt().max(n.shape.gradient_self_energy().sqrt()))
        .fold(0.0, f64::max)
}

/// Empirical suprema of the continuity ratios over `samples` seeded random
/// Hermitian operators of norm `C^e‖Q_I‖` (or 1 when `Q_I = 0`), together
/// with the largest τ satisfying both local-existence inequalities.
pub fn estimate_constants(
    space: &Arc<MomentumSpace>,
    nuclei: &[NucleusState],
    alpha: f64,
    c_e: f64,
    q_initial_norm: f64,
    samples: usize,
    seed: u64,
) -> Result<ConstantReport> {
    if !(c_e > 1.0 && c_e.is_finite()) {
        return Err(BdfError::Config(format!("c_e must exceed 1, got {c_e}")));
    }
    if samples == 0 {
        return Err(BdfError::Config("samples must be at least 1".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) || !(q_initial_norm >= 0.0 && q_initial_norm.is_finite()) {
        return Err(BdfError::Config("alpha and the initial norm must be finite and nonnegative".into()));
    }
    let radius = if q_initial_norm > 0.0 { c_e * q_initial_norm } else { 1.0 };
    let d_x = assemble_mean_field(&KernelOperator::zero(space), nuclei, alpha);
    let p0 = KernelOperator::vacuum_projector(space);
    let e_max = space.max_energy();

    let (mut c_big_f, mut c1, mut c2, mut c3, mut kappa) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut q = random_hs_sample(space, radius, seed);
    for i in 0..samples {
        let next = random_hs_sample(space, radius, seed.wrapping_add(i as u64 + 1));
        let qn = q.hs_norm();
        c_big_f = c_big_f.max(bdf_rhs(&q, nuclei, alpha).hs_norm() / qn);
        c1 = c1.max(commutator(&d_x, &q)?.hs_norm() / qn);
        if alpha > 0.0 {
            let v = self_consistent_potential(&q, alpha);
            c2 = c2.max(commutator(&v, &next)?.hs_norm() / (qn * next.hs_norm()));
            c3 = c3.max(commutator(&v, &p0)?.hs_norm() / qn);
        }
        let rho = density_of(&q);
        let rho_norm = coulomb_norm(&rho);
        if rho_norm > 0.0 {
            kappa = kappa.max(direct_potential_op(&rho).operator().op_norm()? / (e_max * rho_norm));
        }
        q = next;
    }

    let c_f = gaussian_constant(nuclei);
    let mut report = ConstantReport {
        c_f,
        c_big_f,
        c1,
        c2,
        c3,
        kappa,
        c_e,
        q_initial_norm,
        alpha,
        samples,
        tau_bdf: 0.0,
        tau_newton: None,
        tau_admissible: 0.0,
        momenta: nuclei.iter().map(|n| norm(n.v) * n.m).collect(),
    };

    let mut tau_bdf = if c_big_f > 0.0 { (1.0 - 1.0 / c_e) / c_big_f } else { f64::INFINITY };
    while tau_bdf.is_finite() && tau_bdf > 0.0 && !report.satisfies_bdf(tau_bdf) {
        tau_bdf = tau_bdf.next_down();
    }
    report.tau_bdf = tau_bdf;

    let degenerate = q_initial_norm == 0.0 && report.momenta.iter().all(|&p| p == 0.0);
    if alpha > 0.0 && c_f > 0.0 && !degenerate && !report.momenta.is_empty() {
        let growth = alpha * c_f * (c_e * q_initial_norm + c_f);
        let mut tau = report.momenta.iter().map(|&p| p / growth).fold(f64::INFINITY, f64::min);
        report.tau_newton = Some(tau);
        while tau > 0.0 && !report.satisfies_newton(tau) {
            tau = tau.next_down();
            report.tau_newton = Some(tau);
        }
    }
    report.tau_admissible = report.tau_bdf.min(report.tau_newton.unwrap_or(f64::INFINITY));
    Ok(report)
}
