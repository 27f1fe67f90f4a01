use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::SystemState;
use crate::error::{BdfError, Result};
use crate::meanfield::assemble_mean_field;
use crate::newton::NucleusState;
use crate::opspace::{product, random_hs_sample, KernelOperator};
use crate::space::MomentumSpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialKind {
    /// `Q = 0`.
    Vacuum,
    /// The `charge` lowest positive-energy eigenvectors of `D⁰ + V_{0,x̄}`.
    Charged { charge: usize },
    /// `U P⁰ U* − P⁰` with `U = e^{iεA}` for a seeded Hermitian `A`, `‖A‖₂ = 1`.
    Perturbed { epsilon: f64, seed: u64 },
}

pub fn build_initial_state(
    space: &Arc<MomentumSpace>,
    kind: InitialKind,
    nuclei: Vec<NucleusState>,
    alpha: f64,
) -> Result<SystemState> {
    let q = match kind {
        InitialKind::Vacuum => KernelOperator::zero(space),
        InitialKind::Charged { charge } => charged(space, charge, &nuclei, alpha)?,
        InitialKind::Perturbed { epsilon, seed } => perturbed(space, epsilon, seed)?,
    };
    Ok(SystemState { q, nuclei, t: 0.0 })
}

/// Orthonormal basis of `ran(1 − P⁰)`, two columns per lattice point.
fn positive_basis(space: &MomentumSpace) -> Mat<C64> {
    let n = space.len();
    let mut w = Mat::<C64>::zeros(4 * n, 2 * n);
    for p in 0..n {
        let p0 = space.p0(p);
        let col = |c: usize| -> [C64; 4] {
            std::array::from_fn(|a| if a == c { C64::new(1.0, 0.0) - p0[(a, c)] } else { -p0[(a, c)] })
        };
        let normalize = |v: [C64; 4]| {
            let s = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.map(|z| z / s)
        };
        let e0 = normalize(col(0));
        let mut e1 = col(1);
        let overlap: C64 = e0.iter().zip(&e1).map(|(a, b)| a.conj() * b).sum();
        for (b, a) in e1.iter_mut().zip(&e0) {
            *b -= overlap * a;
        }
        let e1 = normalize(e1);
        for a in 0..4 {
            w[(4 * p + a, 2 * p)] = e0[a];
            w[(4 * p + a, 2 * p + 1)] = e1[a];
        }
    }
    w
}

fn charged(space: &Arc<MomentumSpace>, charge: usize, nuclei: &[NucleusState], alpha: f64) -> Result<KernelOperator> {
    let available = 2 * space.len();
    if charge > available {
        return Err(BdfError::ChargeTooLarge { requested: charge, available });
    }
    if charge == 0 {
        return Ok(KernelOperator::zero(space));
    }
    let d = assemble_mean_field(&KernelOperator::zero(space), nuclei, alpha).hermitian_part();
    let w = positive_basis(space);
    let dw = product(d.matrix(), w.as_ref());
    let h = product(w.adjoint(), dw.as_ref());
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| BdfError::Eigen(format!("{e:?}")))?;
    let u = eig.U();
    let coeffs = Mat::from_fn(available, charge, |i, k| u[(i, k)]);
    let phi = product(w.as_ref(), coeffs.as_ref());
    KernelOperator::from_matrix(space, product(phi.as_ref(), phi.adjoint()))
}

fn perturbed(space: &Arc<MomentumSpace>, epsilon: f64, seed: u64) -> Result<KernelOperator> {
    if !epsilon.is_finite() {
        return Err(BdfError::Config(format!("perturbation amplitude must be finite, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(KernelOperator::zero(space));
    }
    let a = random_hs_sample(space, 1.0, seed);
    let eig = a.matrix().self_adjoint_eigen(Side::Lower).map_err(|e| BdfError::Eigen(format!("{e:?}")))?;
    let lambda = eig.S().column_vector();
    let v = eig.U();
    let dim = space.dim();
    let phased = Mat::from_fn(dim, dim, |i, k| v[(i, k)] * C64::from_polar(1.0, epsilon * lambda[k].re));
    let unitary = product(phased.as_ref(), v.adjoint());
    let p0 = KernelOperator::vacuum_projector(space);
    let up = product(unitary.as_ref(), p0.matrix());
    let rotated = product(up.as_ref(), unitary.adjoint());
    let q = KernelOperator::from_matrix(space, rotated)?.sub(&p0)?.hermitian_part();
    if !q.hs_norm().is_finite() {
        return Err(BdfError::NonFinite("initial state".into()));
    }
    Ok(q)
}
