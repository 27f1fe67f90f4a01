//! Potentials, the mean-field operator and the right-hand side of the
//! density-matrix equation.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::coulomb::ChargeDensity;
use crate::error::Result;
use crate::geom::Vec3;
use crate::newton::{nuclear_density, NucleusState};
use crate::opspace::{density_of, hermitian_commutator, BlockDiagonal, KernelOperator};
use crate::space::MomentumSpace;

/// A multiplication-type operator with kernel `(2π)^{−3/2} v̂(p−q) I₄`.
#[derive(Debug, Clone)]
pub struct PotentialOperator {
    operator: KernelOperator,
    symbol: Vec<C64>,
}

impl PotentialOperator {
    pub fn operator(&self) -> &KernelOperator {
        &self.operator
    }

    pub fn into_operator(self) -> KernelOperator {
        self.operator
    }

    /// `v̂(k)` on the difference lattice.
    pub fn symbol(&self) -> &[C64] {
        &self.symbol
    }
}

fn potential_from_values(space: &Arc<MomentumSpace>, symbol: Vec<C64>) -> PotentialOperator {
    let h3 = space.lattice().cell_volume();
    let c = (2.0 * PI).powf(-1.5) * h3;
    let n = space.len();
    let mut m = Mat::<C64>::zeros(space.dim(), space.dim());
    for p in 0..n {
        for q in 0..n {
            let v = symbol[space.pair_difference(p, q)] * c;
            for a in 0..4 {
                m[(4 * p + a, 4 * q + a)] = v;
            }
        }
    }
    let operator = KernelOperator::from_matrix(space, m).expect("dimension matches its space");
    PotentialOperator { operator, symbol }
}

/// Builds the potential operator for an arbitrary symbol `v̂(k)`.
pub fn potential_from_symbol(
    space: &Arc<MomentumSpace>,
    mut symbol: impl FnMut(Vec3) -> C64,
) -> PotentialOperator {
    let values = space.difference().points().iter().map(|&k| symbol(k)).collect();
    potential_from_values(space, values)
}

/// `ρ ∗ 1/|·|` with `v̂(k) = 4π ρ̂(k) w(k)/h³`.
pub fn direct_potential_op(rho: &ChargeDensity) -> PotentialOperator {
    let space = rho.space();
    let diff = space.difference();
    let h3 = space.lattice().cell_volume();
    let values = rho
        .values()
        .iter()
        .zip(diff.weights())
        .map(|(r, w)| r * (4.0 * PI * w / h3))
        .collect();
    potential_from_values(space, values)
}

/// `Σ_k z_k f_k(· − x̄_k) ∗ 1/|·|`, without the coupling constant or sign.
pub fn nuclear_potential_op(space: &Arc<MomentumSpace>, nuclei: &[NucleusState]) -> PotentialOperator {
    direct_potential_op(&nuclear_density(space, nuclei))
}

/// The exchange operator with kernel `Q(x,y)/|x−y|`:
/// `R̂(p,q) = (4π/(2π)³) Σ_k w(k) Q̂(p−k, q−k)`.
pub fn exchange_op(q: &KernelOperator) -> KernelOperator {
    let space = q.space();
    let n = space.len();
    let m = q.matrix();
    let mut blocks = vec![[C64::new(0.0, 0.0); 16]; n * n];
    for s in 0..n {
        for t in 0..n {
            let b = &mut blocks[s * n + t];
            for a in 0..4 {
                for c in 0..4 {
                    b[4 * a + c] = m[(4 * s + a, 4 * t + c)];
                }
            }
        }
    }
    let diff = space.difference();
    let scale = 4.0 * PI / (2.0 * PI).powi(3);
    let mut out = Mat::<C64>::zeros(space.dim(), space.dim());
    let mut acc = vec![[C64::new(0.0, 0.0); 16]; n];
    for p in 0..n {
        for row in acc.iter_mut() {
            *row = [C64::new(0.0, 0.0); 16];
        }
        for s in 0..n {
            let w = diff.weight(space.pair_difference(p, s)) * scale;
            let shift = space.shift_row(space.pair_difference(s, p));
            let source = &blocks[s * n..(s + 1) * n];
            for (r, &t) in acc.iter_mut().zip(shift) {
                if t == u32::MAX {
                    continue;
                }
                let b = &source[t as usize];
                for i in 0..16 {
                    r[i] += b[i] * w;
                }
            }
        }
        for (qi, r) in acc.iter().enumerate() {
            for a in 0..4 {
                for c in 0..4 {
                    out[(4 * p + a, 4 * qi + c)] = r[4 * a + c];
                }
            }
        }
    }
    KernelOperator::from_matrix(space, out).expect("dimension matches its space")
}

/// `V'_Q = α(ρ_Q ∗ 1/|·| − Q(x,y)/|x−y|)`, the part of the potential that is
/// linear in `Q`.
pub fn self_consistent_potential(q: &KernelOperator, alpha: f64) -> KernelOperator {
    if alpha == 0.0 {
        return KernelOperator::zero(q.space());
    }
    let direct = direct_potential_op(&density_of(q)).into_operator();
    let exchange = exchange_op(q);
    direct.sub(&exchange).expect("same space").scale_real(alpha)
}

/// `V_{Q,x̄} = α(ρ_Q − Σ z_k f_k) ∗ 1/|·| − α Q(x,y)/|x−y|`.
pub fn assemble_v(q: &KernelOperator, nuclei: &[NucleusState], alpha: f64) -> KernelOperator {
    assemble_v_with_density(q, &density_of(q), nuclei, alpha)
}

/// [`assemble_v`] with `ρ_Q` supplied by the caller.
pub fn assemble_v_with_density(
    q: &KernelOperator,
    rho_q: &ChargeDensity,
    nuclei: &[NucleusState],
    alpha: f64,
) -> KernelOperator {
    let space = q.space();
    if alpha == 0.0 {
        return KernelOperator::zero(space);
    }
    let total = rho_q.sub(&nuclear_density(space, nuclei)).expect("same space");
    let direct = direct_potential_op(&total).into_operator();
    direct.sub(&exchange_op(q)).expect("same space").scale_real(alpha)
}

/// `D_{Q,x̄} = D⁰ + V_{Q,x̄}`.
pub fn assemble_mean_field(q: &KernelOperator, nuclei: &[NucleusState], alpha: f64) -> KernelOperator {
    let d0 = KernelOperator::free_dirac(q.space());
    d0.add(&assemble_v(q, nuclei, alpha)).expect("same space")
}

/// `dQ/dt = −i([D_{Q,x̄}, Q] + [V_{Q,x̄}, P⁰])`.
pub fn bdf_rhs(q: &KernelOperator, nuclei: &[NucleusState], alpha: f64) -> KernelOperator {
    let v = assemble_v(q, nuclei, alpha);
    rhs_from_potential(q, &v).expect("same space")
}

/// The right-hand side for a given `V`: since `D = D⁰ + V`,
/// `[D, Q] + [V, P⁰] = [D⁰, Q] + [V, Q + P⁰]`.
pub fn rhs_from_potential(q: &KernelOperator, v: &KernelOperator) -> Result<KernelOperator> {
    let space = q.space();
    let d0 = BlockDiagonal(space.d0_symbols().to_vec());
    let p0 = BlockDiagonal(space.p0_symbols().to_vec());
    let free = q.left_block_diagonal(&d0).sub(&q.right_block_diagonal(&d0))?;
    let mut total = free;
    if v.hs_norm() > 0.0 {
        let vq = hermitian_commutator(v, q)?;
        let vp = v.right_block_diagonal(&p0).sub(&v.left_block_diagonal(&p0))?;
        total = total.add(&vq)?.add(&vp)?;
    }
    Ok(total.scale(C64::new(0.0, -1.0)))
}
