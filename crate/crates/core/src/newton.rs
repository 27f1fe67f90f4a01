//! Classical nuclei: the potential energy surface they move on and its
//! analytic gradient.

use std::sync::Arc;

use crate::coulomb::{
    coulomb_inner, coulomb_translation_gradient, gaussian_density, ChargeDensity, GaussianShape,
};
use crate::error::{BdfError, Result};
use crate::geom::{scale, Vec3};
use crate::opspace::{density_of, KernelOperator};
use crate::space::MomentumSpace;

/// One classical nucleus with a Gaussian charge distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct NucleusState {
    pub z: f64,
    pub m: f64,
    pub shape: GaussianShape,
    pub x: Vec3,
    pub v: Vec3,
}

impl NucleusState {
    pub fn new(z: f64, m: f64, sigma: f64, x: Vec3, v: Vec3) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return Err(BdfError::Config(format!("nuclear charge must be positive, got {z}")));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(BdfError::Config(format!("nuclear mass must be positive, got {m}")));
        }
        if x.iter().chain(&v).any(|c| !c.is_finite()) {
            return Err(BdfError::NonFinite("nuclear position or velocity".into()));
        }
        Ok(NucleusState { z, m, shape: GaussianShape::new(sigma)?, x, v })
    }

    /// `z f(· − x̄)` on the difference lattice.
    pub fn density(&self, space: &Arc<MomentumSpace>) -> ChargeDensity {
        gaussian_density(space, self.shape, self.z, self.x)
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.m * crate::geom::dot(self.v, self.v)
    }
}

/// `Σ_k z_k f_k(· − x̄_k)`.
pub fn nuclear_density(space: &Arc<MomentumSpace>, nuclei: &[NucleusState]) -> ChargeDensity {
    let mut total = ChargeDensity::zero(space);
    for n in nuclei {
        total = total.add(&n.density(space)).expect("same space");
    }
    total
}

/// `α Σ_{i<j} D(z_i f_i, z_j f_j)`.
pub fn nuclear_repulsion(space: &Arc<MomentumSpace>, nuclei: &[NucleusState], alpha: f64) -> f64 {
    let densities: Vec<ChargeDensity> = nuclei.iter().map(|n| n.density(space)).collect();
    let mut sum = 0.0;
    for i in 0..densities.len() {
        for j in i + 1..densities.len() {
            sum += coulomb_inner(&densities[i], &densities[j]).expect("same space").re;
        }
    }
    alpha * sum
}

/// `U = −α D(ρ_Q, Σ z_k f_k) + α Σ_{i<j} D(z_i f_i, z_j f_j)`.
pub fn potential_energy_u(q: &KernelOperator, nuclei: &[NucleusState], alpha: f64) -> f64 {
    potential_energy_from_density(&density_of(q), nuclei, alpha)
}

/// [`potential_energy_u`] for a precomputed `ρ_Q`.
pub fn potential_energy_from_density(rho_q: &ChargeDensity, nuclei: &[NucleusState], alpha: f64) -> f64 {
    let space = rho_q.space();
    let attraction = coulomb_inner(rho_q, &nuclear_density(space, nuclei)).expect("same space").re;
    -alpha * attraction + nuclear_repulsion(space, nuclei, alpha)
}

/// `F_k = −∇_{x̄_k} U`.
pub fn nuclear_force(q: &KernelOperator, nuclei: &[NucleusState], alpha: f64, k: usize) -> Result<Vec3> {
    if k >= nuclei.len() {
        return Err(BdfError::NucleusIndex { index: k, count: nuclei.len() });
    }
    Ok(force_from_density(&density_of(q), nuclei, alpha, k))
}

/// Force on nucleus `k` for a precomputed `ρ_Q`.
///
/// `−∇_k U = α ∇_k D(ρ_Q − Σ_{j≠k} z_j f_j, z_k f_k)`.
pub fn force_from_density(rho_q: &ChargeDensity, nuclei: &[NucleusState], alpha: f64, k: usize) -> Vec3 {
    if alpha == 0.0 {
        return [0.0; 3];
    }
    let space = rho_q.space();
    let mut source = rho_q.clone();
    for (j, n) in nuclei.iter().enumerate() {
        if j != k {
            source = source.sub(&n.density(space)).expect("same space");
        }
    }
    let nk = &nuclei[k];
    scale(alpha, coulomb_translation_gradient(&source, nk.shape, nk.z, nk.x))
}

/// All forces for a precomputed `ρ_Q`.
pub fn forces_from_density(rho_q: &ChargeDensity, nuclei: &[NucleusState], alpha: f64) -> Vec<Vec3> {
    (0..nuclei.len()).map(|k| force_from_density(rho_q, nuclei, alpha, k)).collect()
}

/// `(dx̄_k/dt, dv̄_k/dt) = (v̄_k, F_k/m_k)`.
pub fn newton_rhs(nuclei: &[NucleusState], q: &KernelOperator, alpha: f64) -> Vec<(Vec3, Vec3)> {
    let rho = density_of(q);
    newton_rhs_from_density(nuclei, &rho, alpha)
}

pub fn newton_rhs_from_density(nuclei: &[NucleusState], rho_q: &ChargeDensity, alpha: f64) -> Vec<(Vec3, Vec3)> {
    forces_from_density(rho_q, nuclei, alpha)
        .into_iter()
        .zip(nuclei)
        .map(|(f, n)| (n.v, scale(1.0 / n.m, f)))
        .collect()
}
