//! Hilbert-Schmidt kernel operators on the momentum lattice.
//!
//! An operator with kernel `Q̂(p,q)` is stored as the dense matrix
//! `M = h³·Q̂` of size `4N × 4N`, indexed `4·point + spinor`. With that
//! scaling composition is the matrix product, the identity is the identity
//! matrix, `tr Q = tr M` and `‖Q‖₂` is the Frobenius norm of `M`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::linalg::matmul::matmul;
use faer::traits::Conjugate;
use faer::{Accum, Mat, MatRef, Par, Side};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coulomb::ChargeDensity;
use crate::error::{BdfError, Result};
use crate::geom::{dot, Vec3};
use crate::space::MomentumSpace;
use crate::spinor::SpinorMatrix;

/// Eigenvalues of `Q + P⁰` closer than this to 1/2 make retraction ambiguous.
pub const RETRACTION_TOLERANCE: f64 = 1e-6;

#[derive(Clone)]
pub struct KernelOperator {
    space: Arc<MomentumSpace>,
    matrix: Mat<C64>,
}

impl fmt::Debug for KernelOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelOperator")
            .field("points", &self.space.len())
            .field("hs_norm", &self.hs_norm())
            .finish()
    }
}

/// Block-diagonal operator `δ_{pq} B(p)`, the form of every symbol of the
/// free Dirac operator.
#[derive(Debug, Clone)]
pub struct BlockDiagonal(pub Vec<SpinorMatrix>);

impl BlockDiagonal {
    /// `B · M`
    pub fn left_mul(&self, m: MatRef<'_, C64>) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(m.nrows(), m.ncols());
        for (p, b) in self.0.iter().enumerate() {
            for j in 0..m.ncols() {
                let col = [m[(4 * p, j)], m[(4 * p + 1, j)], m[(4 * p + 2, j)], m[(4 * p + 3, j)]];
                for a in 0..4 {
                    out[(4 * p + a, j)] = b.0[a][0] * col[0]
                        + b.0[a][1] * col[1]
                        + b.0[a][2] * col[2]
                        + b.0[a][3] * col[3];
                }
            }
        }
        out
    }

    /// `M · B`
    pub fn right_mul(&self, m: MatRef<'_, C64>) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(m.nrows(), m.ncols());
        for (q, b) in self.0.iter().enumerate() {
            for c in 0..4 {
                for i in 0..m.nrows() {
                    out[(i, 4 * q + c)] = m[(i, 4 * q)] * b.0[0][c]
                        + m[(i, 4 * q + 1)] * b.0[1][c]
                        + m[(i, 4 * q + 2)] * b.0[2][c]
                        + m[(i, 4 * q + 3)] * b.0[3][c];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        BlockDiagonal(self.0.iter().map(|b| b.adjoint()).collect())
    }
}

pub(crate) fn product<L, R>(a: MatRef<'_, L>, b: MatRef<'_, R>) -> Mat<C64>
where
    L: Conjugate<Canonical = C64>,
    R: Conjugate<Canonical = C64>,
{
    let mut out = Mat::<C64>::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, C64::new(1.0, 0.0), Par::Seq);
    out
}

fn frobenius(m: MatRef<'_, C64>) -> f64 {
    let mut sum = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            sum += m[(i, j)].norm_sqr();
        }
    }
    sum.sqrt()
}

impl KernelOperator {
    pub fn zero(space: &Arc<MomentumSpace>) -> Self {
        let d = space.dim();
        KernelOperator { space: space.clone(), matrix: Mat::zeros(d, d) }
    }

    pub fn identity(space: &Arc<MomentumSpace>) -> Self {
        let d = space.dim();
        KernelOperator { space: space.clone(), matrix: Mat::identity(d, d) }
    }

    /// Wraps a matrix already in `h³·Q̂` form.
    pub fn from_matrix(space: &Arc<MomentumSpace>, matrix: Mat<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(BdfError::LatticeMismatch);
        }
        Ok(KernelOperator { space: space.clone(), matrix })
    }

    /// Builds the operator whose kernel is `kernel(p, q)`, i.e. `Q̂(p,q)`
    /// before the `h³` scaling.
    pub fn from_kernel(
        space: &Arc<MomentumSpace>,
        mut kernel: impl FnMut(usize, usize) -> SpinorMatrix,
    ) -> Self {
        let h3 = space.lattice().cell_volume();
        let mut op = Self::zero(space);
        for p in 0..space.len() {
            for q in 0..space.len() {
                op.set_block(p, q, kernel(p, q).scale_real(h3));
            }
        }
        op
    }

    pub fn block_diagonal(space: &Arc<MomentumSpace>, blocks: &BlockDiagonal) -> Self {
        let mut op = Self::zero(space);
        for (p, b) in blocks.0.iter().enumerate() {
            op.set_block(p, p, *b);
        }
        op
    }

    /// The free Dirac operator `D⁰`.
    pub fn free_dirac(space: &Arc<MomentumSpace>) -> Self {
        Self::block_diagonal(space, &BlockDiagonal(space.d0_symbols().to_vec()))
    }

    /// The vacuum projector `P⁰`.
    pub fn vacuum_projector(space: &Arc<MomentumSpace>) -> Self {
        Self::block_diagonal(space, &BlockDiagonal(space.p0_symbols().to_vec()))
    }

    /// `|ψ⟩⟨ψ|` for a vector `ψ` in the discrete one-particle space.
    pub fn rank_one(space: &Arc<MomentumSpace>, psi: &[C64]) -> Result<Self> {
        let d = space.dim();
        if psi.len() != d {
            return Err(BdfError::LatticeMismatch);
        }
        let matrix = Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj());
        Ok(KernelOperator { space: space.clone(), matrix })
    }

    pub fn space(&self) -> &Arc<MomentumSpace> {
        &self.space
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `h³·Q̂(p,q)`.
    pub fn block(&self, p: usize, q: usize) -> SpinorMatrix {
        SpinorMatrix::from_fn(|a, b| self.matrix[(4 * p + a, 4 * q + b)])
    }

    pub fn set_block(&mut self, p: usize, q: usize, block: SpinorMatrix) {
        for a in 0..4 {
            for b in 0..4 {
                self.matrix[(4 * p + a, 4 * q + b)] = block.0[a][b];
            }
        }
    }

    /// The kernel value `Q̂(p,q)`.
    pub fn kernel(&self, p: usize, q: usize) -> SpinorMatrix {
        self.block(p, q).scale_real(1.0 / self.space.lattice().cell_volume())
    }

    pub fn same_space(&self, other: &KernelOperator) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(BdfError::LatticeMismatch)
        }
    }

    fn with_matrix(&self, matrix: Mat<C64>) -> Self {
        KernelOperator { space: self.space.clone(), matrix }
    }

    pub fn adjoint(&self) -> Self {
        self.with_matrix(self.matrix.adjoint().to_owned())
    }

    /// `‖Q − Q†‖₂`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut sum = 0.0;
        for j in 0..d {
            for i in 0..d {
                sum += (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm_sqr();
            }
        }
        sum.sqrt()
    }

    /// `(Q + Q†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dim();
        self.with_matrix(Mat::from_fn(d, d, |i, j| {
            (self.matrix[(i, j)] + self.matrix[(j, i)].conj()) * 0.5
        }))
    }

    pub fn add(&self, other: &KernelOperator) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.with_matrix(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &KernelOperator) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.with_matrix(&self.matrix - &other.matrix))
    }

    pub fn scale(&self, s: C64) -> Self {
        let d = self.dim();
        self.with_matrix(Mat::from_fn(d, d, |i, j| s * self.matrix[(i, j)]))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self + s·other`
    pub fn axpy(&self, s: C64, other: &KernelOperator) -> Result<Self> {
        self.same_space(other)?;
        let d = self.dim();
        Ok(self.with_matrix(Mat::from_fn(d, d, |i, j| {
            self.matrix[(i, j)] + s * other.matrix[(i, j)]
        })))
    }

    pub fn compose(&self, other: &KernelOperator) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.with_matrix(product(self.matrix.as_ref(), other.matrix.as_ref())))
    }

    pub fn left_block_diagonal(&self, b: &BlockDiagonal) -> Self {
        self.with_matrix(b.left_mul(self.matrix.as_ref()))
    }

    pub fn right_block_diagonal(&self, b: &BlockDiagonal) -> Self {
        self.with_matrix(b.right_mul(self.matrix.as_ref()))
    }

    /// `U Q U†` for block-diagonal `U`.
    pub fn conjugate_block_diagonal(&self, u: &BlockDiagonal) -> Self {
        let left = u.left_mul(self.matrix.as_ref());
        self.with_matrix(u.adjoint().right_mul(left.as_ref()))
    }

    /// `tr Q = h³ Σ_p tr Q̂(p,p)`.
    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// `tr(A†B)`, the Hilbert-Schmidt inner product.
    pub fn hs_inner(&self, other: &KernelOperator) -> Result<C64> {
        self.same_space(other)?;
        let d = self.dim();
        let mut sum = C64::new(0.0, 0.0);
        for j in 0..d {
            for i in 0..d {
                sum += self.matrix[(i, j)].conj() * other.matrix[(i, j)];
            }
        }
        Ok(sum)
    }

    /// `‖Q‖₂ = (∬|Q̂(p,q)|² dp dq)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        frobenius(self.matrix.as_ref())
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> Result<f64> {
        let s = self
            .matrix
            .singular_values()
            .map_err(|e| BdfError::Eigen(format!("{e:?}")))?;
        Ok(s.first().copied().unwrap_or(0.0))
    }

    /// Eigenvalues in nondecreasing order, assuming `Q` Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| BdfError::Eigen(format!("{e:?}")))
    }

    /// The kernel of `Q(x − a, y − a)`: `Q̂(p,q)·e^{−i(p−q)·a}`.
    pub fn translate(&self, a: Vec3) -> Self {
        let lat = self.space.lattice();
        let phase: Vec<C64> =
            lat.points().iter().map(|&p| C64::from_polar(1.0, -dot(p, a))).collect();
        let d = self.dim();
        self.with_matrix(Mat::from_fn(d, d, |i, j| {
            self.matrix[(i, j)] * phase[i / 4] * phase[j / 4].conj()
        }))
    }

    /// `Σ_p tr_{ℂ⁴}[B(p)·(h³Q̂(p,p))]` for a block-diagonal `B`; this is
    /// `tr(BQ)` touching only the diagonal blocks.
    pub fn trace_with_block_diagonal(&self, b: &BlockDiagonal) -> C64 {
        let mut sum = C64::new(0.0, 0.0);
        for (p, bp) in b.0.iter().enumerate() {
            sum += (*bp * self.block(p, p)).trace();
        }
        sum
    }
}

pub fn commutator(a: &KernelOperator, b: &KernelOperator) -> Result<KernelOperator> {
    a.same_space(b)?;
    let ab = product(a.matrix.as_ref(), b.matrix.as_ref());
    let ba = product(b.matrix.as_ref(), a.matrix.as_ref());
    Ok(a.with_matrix(ab - ba))
}

/// `[A, B]` for Hermitian `A` and `B`: `AB − (AB)†`, one product.
pub fn hermitian_commutator(a: &KernelOperator, b: &KernelOperator) -> Result<KernelOperator> {
    a.same_space(b)?;
    let ab = product(a.matrix.as_ref(), b.matrix.as_ref());
    let d = ab.nrows();
    Ok(a.with_matrix(Mat::from_fn(d, d, |i, j| ab[(i, j)] - ab[(j, i)].conj())))
}

pub fn hs_norm(q: &KernelOperator) -> f64 {
    q.hs_norm()
}

/// `tr P⁰QP⁰ + tr (1−P⁰)Q(1−P⁰)`.
pub fn p0_split_trace(q: &KernelOperator) -> f64 {
    split_trace_of_diagonal(q, |_, b| b)
}

/// The P⁰-split trace of `D⁰Q`, `tr_{P⁰}(D⁰Q)`.
pub fn p0_split_trace_d0(q: &KernelOperator) -> f64 {
    let space = q.space.clone();
    split_trace_of_diagonal(q, move |p, b| *space.d0(p) * b)
}

fn split_trace_of_diagonal(
    q: &KernelOperator,
    diag: impl Fn(usize, SpinorMatrix) -> SpinorMatrix,
) -> f64 {
    let id = SpinorMatrix::identity();
    let mut sum = C64::new(0.0, 0.0);
    for p in 0..q.space.len() {
        let b = diag(p, q.block(p, p));
        let minus = *q.space.p0(p);
        let plus = id - minus;
        sum += (minus * b * minus).trace() + (plus * b * plus).trace();
    }
    sum.re
}

/// `tr(Q³)`.
pub fn charge_tr_q3(q: &KernelOperator) -> f64 {
    let q2 = product(q.matrix.as_ref(), q.matrix.as_ref());
    // tr(Q²·Q) without forming the third power.
    let d = q.dim();
    let mut sum = C64::new(0.0, 0.0);
    for j in 0..d {
        for i in 0..d {
            sum += q2[(i, j)] * q.matrix[(j, i)];
        }
    }
    sum.re
}

/// `ρ̂(k) = (2π)^{−3/2} h³ Σ_q tr Q̂(q+k, q)` on the difference lattice.
pub fn density_of(q: &KernelOperator) -> ChargeDensity {
    let space = &q.space;
    let mut values = vec![C64::new(0.0, 0.0); space.difference().len()];
    for p in 0..space.len() {
        for r in 0..space.len() {
            let mut tr = C64::new(0.0, 0.0);
            for a in 0..4 {
                tr += q.matrix[(4 * p + a, 4 * r + a)];
            }
            values[space.pair_difference(p, r)] += tr;
        }
    }
    let norm = (2.0 * PI).powf(-1.5);
    for v in &mut values {
        *v *= norm;
    }
    ChargeDensity::new(space, values).expect("density built on its own space")
}

/// `‖P² − P‖₂` for `P = Q + P⁰`.
pub fn projector_residual(q: &KernelOperator) -> f64 {
    // P² − P = Q² + QP⁰ + P⁰Q − Q
    let p0 = BlockDiagonal(q.space.p0_symbols().to_vec());
    let q2 = product(q.matrix.as_ref(), q.matrix.as_ref());
    let qp = p0.right_mul(q.matrix.as_ref());
    let pq = p0.left_mul(q.matrix.as_ref());
    let d = q.dim();
    let r = Mat::from_fn(d, d, |i, j| q2[(i, j)] + qp[(i, j)] + pq[(i, j)] - q.matrix[(i, j)]);
    frobenius(r.as_ref())
}

/// Rounds the spectrum of `Q + P⁰` to `{0, 1}` and returns `P' − P⁰`.
pub fn retract_to_projector(q: &KernelOperator) -> Result<KernelOperator> {
    let p = q.add(&KernelOperator::vacuum_projector(&q.space))?.hermitian_part();
    let eig = p
        .matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| BdfError::Eigen(format!("{e:?}")))?;
    let values = eig.S().column_vector();
    let vectors = eig.U();
    let d = q.dim();
    let mut occupied = Vec::new();
    for i in 0..d {
        let lambda = values[i].re;
        if !lambda.is_finite() {
            return Err(BdfError::NonFinite("retraction eigenvalues".into()));
        }
        if (lambda - 0.5).abs() < RETRACTION_TOLERANCE {
            return Err(BdfError::RetractionAmbiguous {
                eigenvalue: lambda,
                tolerance: RETRACTION_TOLERANCE,
            });
        }
        if lambda > 0.5 {
            occupied.push(i);
        }
    }
    let v = Mat::from_fn(d, occupied.len(), |i, k| vectors[(i, occupied[k])]);
    let projector = product(v.as_ref(), v.adjoint());
    let p0 = BlockDiagonal(q.space.p0_symbols().to_vec());
    let mut out = projector;
    for (r, b) in p0.0.iter().enumerate() {
        for a in 0..4 {
            for c in 0..4 {
                out[(4 * r + a, 4 * r + c)] -= b.0[a][c];
            }
        }
    }
    Ok(q.with_matrix(out))
}

/// A seeded Hermitian operator with Gaussian entries, scaled so that
/// `‖Q‖₂ = norm_bound` (up to one ulp from below).
pub fn random_hs_sample(space: &Arc<MomentumSpace>, norm_bound: f64, seed: u64) -> KernelOperator {
    assert!(norm_bound > 0.0, "norm_bound must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = space.dim();
    let mut raw = Mat::<C64>::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            raw[(i, j)] = C64::new(re, im);
        }
    }
    let herm = Mat::from_fn(d, d, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    let op = KernelOperator { space: space.clone(), matrix: herm };
    let mut s = norm_bound / op.hs_norm();
    let mut scaled = op.scale_real(s);
    while scaled.hs_norm() > norm_bound {
        s = s.next_down();
        scaled = op.scale_real(s);
    }
    scaled
}

/// Largest singular value; the operator-norm bound used in the commutator
/// estimates.
pub fn op_norm_bound(q: &KernelOperator) -> Result<f64> {
    q.op_norm()
}

/// `e^{−iD⁰t} Q e^{iD⁰t}` computed from the exact symbol phases.
pub fn free_evolution(q: &KernelOperator, t: f64) -> KernelOperator {
    let u = BlockDiagonal(
        q.space
            .lattice()
            .points()
            .iter()
            .map(|&p| crate::spinor::free_propagator(p, t))
            .collect(),
    );
    q.conjugate_block_diagonal(&u)
}
