//! The 4×4 Dirac algebra in the standard (Dirac) representation.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::geom::{dot, Vec3};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A 4×4 complex matrix acting on Dirac spinors, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorMatrix(pub [[C64; 4]; 4]);

impl SpinorMatrix {
    pub const fn zero() -> Self {
        SpinorMatrix([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::diagonal([1.0; 4])
    }

    pub fn diagonal(d: [f64; 4]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = C64::new(v, 0.0);
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(|i, j| s * self.0[i][j])
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }
}

impl Index<(usize, usize)> for SpinorMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for SpinorMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for SpinorMatrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl AddAssign for SpinorMatrix {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for SpinorMatrix {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl Neg for SpinorMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.0[i][j])
    }
}

impl Mul for SpinorMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

fn pauli() -> [[[C64; 2]; 2]; 3] {
    [
        [[ZERO, ONE], [ONE, ZERO]],
        [[ZERO, -I], [I, ZERO]],
        [[ONE, ZERO], [ZERO, -ONE]],
    ]
}

/// `(α₁, α₂, α₃, β)` with `α_k = [[0, σ_k], [σ_k, 0]]` and
/// `β = diag(1, 1, −1, −1)`.
pub fn dirac_matrices() -> (SpinorMatrix, SpinorMatrix, SpinorMatrix, SpinorMatrix) {
    let sigma = pauli();
    let alpha = |k: usize| {
        let mut m = SpinorMatrix::zero();
        for a in 0..2 {
            for b in 0..2 {
                m.0[a][b + 2] = sigma[k][a][b];
                m.0[a + 2][b] = sigma[k][a][b];
            }
        }
        m
    };
    let beta = SpinorMatrix::diagonal([1.0, 1.0, -1.0, -1.0]);
    (alpha(0), alpha(1), alpha(2), beta)
}

/// `E(p) = √(1 + |p|²)`.
#[inline]
pub fn dispersion(p: Vec3) -> f64 {
    (1.0 + dot(p, p)).sqrt()
}

/// Free Dirac symbol `α·p + β`.
pub fn d0_symbol(p: Vec3) -> SpinorMatrix {
    let c = |x: f64| C64::new(x, 0.0);
    let (px, py, pz) = (p[0], p[1], p[2]);
    // σ·p = [[pz, px − i py], [px + i py, −pz]]
    let sp = [[c(pz), C64::new(px, -py)], [C64::new(px, py), c(-pz)]];
    let mut m = SpinorMatrix::diagonal([1.0, 1.0, -1.0, -1.0]);
    for a in 0..2 {
        for b in 0..2 {
            m.0[a][b + 2] = sp[a][b];
            m.0[a + 2][b] = sp[a][b];
        }
    }
    m
}

/// Projector onto the negative spectral subspace of `d0_symbol(p)`,
/// `(I − D⁰(p)/E(p)) / 2`.
pub fn p0_symbol(p: Vec3) -> SpinorMatrix {
    let e = dispersion(p);
    (SpinorMatrix::identity() - d0_symbol(p).scale_real(1.0 / e)).scale_real(0.5)
}

/// `e^{−i D⁰(p) t} = cos(Et) − i sin(Et) D⁰(p)/E`.
pub fn free_propagator(p: Vec3, t: f64) -> SpinorMatrix {
    let e = dispersion(p);
    let (s, c) = (e * t).sin_cos();
    SpinorMatrix::identity().scale_real(c) - d0_symbol(p).scale(C64::new(0.0, s / e))
}
