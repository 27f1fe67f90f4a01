//! Charge densities on the difference lattice and the Coulomb pairing
//! `D(ρ₁, ρ₂) = 4π Σ_k w(k) conj ρ̂₁(k) ρ̂₂(k)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{BdfError, Result};
use crate::geom::{dot, Vec3};
use crate::space::MomentumSpace;

/// Fourier coefficients `ρ̂(k)` of a charge density, one per difference
/// lattice point.
#[derive(Debug, Clone)]
pub struct ChargeDensity {
    space: Arc<MomentumSpace>,
    values: Vec<C64>,
}

impl ChargeDensity {
    pub fn new(space: &Arc<MomentumSpace>, values: Vec<C64>) -> Result<Self> {
        if values.len() != space.difference().len() {
            return Err(BdfError::LatticeMismatch);
        }
        Ok(ChargeDensity { space: space.clone(), values })
    }

    pub fn zero(space: &Arc<MomentumSpace>) -> Self {
        ChargeDensity { space: space.clone(), values: vec![C64::new(0.0, 0.0); space.difference().len()] }
    }

    pub fn from_fn(space: &Arc<MomentumSpace>, mut f: impl FnMut(Vec3) -> C64) -> Self {
        let values = space.difference().points().iter().map(|&k| f(k)).collect();
        ChargeDensity { space: space.clone(), values }
    }

    pub fn space(&self) -> &Arc<MomentumSpace> {
        &self.space
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// `max_k |ρ̂(−k) − conj ρ̂(k)|`; zero for real densities.
    pub fn reality_defect(&self) -> f64 {
        let diff = self.space.difference();
        (0..self.values.len())
            .map(|d| (self.values[diff.negated(d)] - self.values[d].conj()).norm())
            .fold(0.0, f64::max)
    }

    fn same_space(&self, other: &ChargeDensity) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(BdfError::LatticeMismatch)
        }
    }

    /// `self + s·other`
    pub fn axpy(&self, s: f64, other: &ChargeDensity) -> Result<Self> {
        self.same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b * s).collect();
        Ok(ChargeDensity { space: self.space.clone(), values })
    }

    pub fn add(&self, other: &ChargeDensity) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &ChargeDensity) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, s: f64) -> Self {
        ChargeDensity { space: self.space.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }
}

/// Width of a normalized Gaussian charge `f(x) = (2πσ²)^{−3/2} e^{−|x|²/2σ²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianShape {
    sigma: f64,
}

impl GaussianShape {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(BdfError::Config(format!("gaussian width must be positive, got {sigma}")));
        }
        Ok(GaussianShape { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `‖f‖²_𝒞 = ∬ f(x)f(y)/|x−y|` in the continuum.
    pub fn self_energy(&self) -> f64 {
        1.0 / (self.sigma * PI.sqrt())
    }

    /// `‖∇f‖²_𝒞` summed over the three components, in the continuum.
    pub fn gradient_self_energy(&self) -> f64 {
        1.0 / (2.0 * PI.sqrt() * self.sigma.powi(3))
    }
}

/// `f̂(k) = (2π)^{−3/2} e^{−σ²|k|²/2}`.
pub fn fourier_gaussian(shape: GaussianShape, k: Vec3) -> C64 {
    let s2 = shape.sigma * shape.sigma;
    C64::new((2.0 * PI).powf(-1.5) * (-0.5 * s2 * dot(k, k)).exp(), 0.0)
}

/// The density of a Gaussian of charge `z` centred at `x`.
pub fn gaussian_density(space: &Arc<MomentumSpace>, shape: GaussianShape, z: f64, x: Vec3) -> ChargeDensity {
    ChargeDensity::from_fn(space, |k| fourier_gaussian(shape, k) * z * C64::from_polar(1.0, -dot(k, x)))
}

/// `ρ(· − x)`: multiplies every coefficient by `e^{−ik·x}`.
pub fn translate_density(rho: &ChargeDensity, x: Vec3) -> ChargeDensity {
    let points = rho.space.difference().points();
    let values = rho
        .values
        .iter()
        .zip(points)
        .map(|(v, &k)| v * C64::from_polar(1.0, -dot(k, x)))
        .collect();
    ChargeDensity { space: rho.space.clone(), values }
}

pub fn coulomb_inner(a: &ChargeDensity, b: &ChargeDensity) -> Result<C64> {
    a.same_space(b)?;
    let w = a.space.difference().weights();
    let sum: C64 = a.values.iter().zip(&b.values).zip(w).map(|((x, y), w)| x.conj() * y * *w).sum();
    Ok(sum * (4.0 * PI))
}

pub fn coulomb_norm(rho: &ChargeDensity) -> f64 {
    let w = rho.space.difference().weights();
    let sum: f64 = rho.values.iter().zip(w).map(|(v, w)| v.norm_sqr() * w).sum();
    (4.0 * PI * sum).sqrt()
}

/// `∇_x D(ρ, z f(· − x))`, the derivative of the pairing with respect to
/// the centre of a Gaussian charge.
pub fn coulomb_translation_gradient(
    rho: &ChargeDensity,
    shape: GaussianShape,
    z: f64,
    x: Vec3,
) -> Vec3 {
    let diff = rho.space.difference();
    let mut g = [C64::new(0.0, 0.0); 3];
    for (d, (v, &k)) in rho.values.iter().zip(diff.points()).enumerate() {
        let base = v.conj() * fourier_gaussian(shape, k) * z * C64::from_polar(1.0, -dot(k, x)) * diff.weight(d);
        for i in 0..3 {
            g[i] += base * C64::new(0.0, -k[i]);
        }
    }
    g.map(|c| 4.0 * PI * c.re)
}

/// `(4π Σ_k w(k)|k|²|ρ̂(k)|²)^{1/2}`, the Lipschitz constant of
/// `a ↦ translate_density(ρ, a)` in the Coulomb norm.
pub fn translation_lipschitz_bound(rho: &ChargeDensity) -> f64 {
    let diff = rho.space.difference();
    let sum: f64 = rho
        .values
        .iter()
        .zip(diff.points())
        .zip(diff.weights())
        .map(|((v, &k), w)| w * dot(k, k) * v.norm_sqr())
        .sum();
    (4.0 * PI * sum).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{norm, sub};
    use crate::quadrature::gauss_legendre;
    use proptest::prelude::*;

    /// `∬ f₁(x) f₂(y) / |x−y|` for Gaussians of widths `s1`, `s2` whose
    /// centres are `d` apart: the mean of `1/|r|` under the convolved
    /// Gaussian, by radial quadrature of its spherical average.
    fn pair_oracle(s1: f64, s2: f64, d: f64) -> f64 {
        let s2tot = s1 * s1 + s2 * s2;
        let s = s2tot.sqrt();
        let (x, w) = gauss_legendre(200);
        let hi = d + 12.0 * s;
        let mut sum = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let r = 0.5 * hi * (xi + 1.0);
            let shell = if d == 0.0 {
                (-(r * r) / (2.0 * s2tot)).exp() * r
            } else {
                // r · e^{−(r²+d²)/2s²} · sinh(rd/s²)/(rd/s²)
                let a = (-(r - d).powi(2) / (2.0 * s2tot)).exp();
                let b = (-(r + d).powi(2) / (2.0 * s2tot)).exp();
                (a - b) * s2tot / (2.0 * d)
            };
            sum += 0.5 * hi * wi * shell;
        }
        4.0 * PI * (2.0 * PI * s2tot).powf(-1.5) * sum
    }

    fn pair_value(space: &Arc<MomentumSpace>, s1: f64, s2: f64, d: f64) -> f64 {
        let a = gaussian_density(space, GaussianShape::new(s1).unwrap(), 1.0, [0.0; 3]);
        let b = gaussian_density(space, GaussianShape::new(s2).unwrap(), 1.0, [d, 0.0, 0.0]);
        coulomb_inner(&a, &b).unwrap().re
    }

    #[test]
    fn oracle_reproduces_closed_forms() {
        // d = 0: √(2/π)/s; d ≫ s: 1/d.
        for (s1, s2) in [(0.5_f64, 0.5_f64), (0.3, 1.1)] {
            let s = (s1 * s1 + s2 * s2).sqrt();
            assert!((pair_oracle(s1, s2, 0.0) - (2.0 / PI).sqrt() / s).abs() < 1e-12);
            assert!((pair_oracle(s1, s2, 30.0) - 1.0 / 30.0).abs() < 1e-12);
        }
        let g = GaussianShape::new(0.7).unwrap();
        assert!((pair_oracle(0.7, 0.7, 0.0) - g.self_energy()).abs() < 1e-12);
    }

    #[test]
    fn fourier_gaussian_examples() {
        let g = GaussianShape::new(0.8).unwrap();
        let c = (2.0 * PI).powf(-1.5);
        assert!((fourier_gaussian(g, [0.0; 3]).re - c).abs() < 1e-16);
        let k = [1.0 / 0.8, 0.0, 0.0];
        assert!((fourier_gaussian(g, k).re - c * (-0.5f64).exp()).abs() < 1e-16);
        let thin = GaussianShape::new(1e-9).unwrap();
        assert!((fourier_gaussian(thin, [3.0, 1.0, 0.0]).re - c).abs() < 1e-15);
        assert!(GaussianShape::new(0.0).is_err());
    }

    #[test]
    fn gaussian_pairs_improve_under_refinement() {
        for (s1, s2, d) in [(0.5, 0.5, 0.0), (0.5, 1.0, 1.0), (1.0, 1.0, 1.0)] {
            let exact = pair_oracle(s1, s2, d);
            let err = |n| {
                let space = MomentumSpace::new(2.0, n).unwrap();
                ((pair_value(&space, s1, s2, d) - exact) / exact).abs()
            };
            let (e7, e11) = (err(7), err(11));
            assert!(e7 < 0.03, "({s1},{s2},{d}): {e7}");
            assert!(e11 < e7, "({s1},{s2},{d}): {e7} -> {e11}");
        }
    }

    #[test]
    fn norm_is_translation_invariant() {
        let space = MomentumSpace::new(2.0, 5).unwrap();
        let g = GaussianShape::new(0.5).unwrap();
        let base = gaussian_density(&space, g, 1.0, [0.0; 3]);
        let n0 = coulomb_norm(&base);
        for x in [[0.3, -1.0, 2.0], [5.0, 0.0, 0.0]] {
            let moved = gaussian_density(&space, g, 1.0, x);
            assert!((coulomb_norm(&moved) - n0).abs() < 1e-14 * n0);
            let t = translate_density(&base, x);
            assert!(t.sub(&moved).unwrap().values().iter().all(|v| v.norm() < 1e-15));
        }
        assert_eq!(coulomb_norm(&ChargeDensity::zero(&space)), 0.0);
    }

    #[test]
    fn translation_gradient_matches_finite_differences() {
        let space = MomentumSpace::new(2.0, 5).unwrap();
        let g = GaussianShape::new(0.6).unwrap();
        let rho = gaussian_density(&space, GaussianShape::new(0.9).unwrap(), 1.3, [0.2, -0.1, 0.4]);
        let x = [0.5, 0.3, -0.7];
        let grad = coulomb_translation_gradient(&rho, g, 0.8, x);
        let f = |x: Vec3| coulomb_inner(&rho, &gaussian_density(&space, g, 0.8, x)).unwrap().re;
        let h = 1e-4;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(xp) - f(xm)) / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-8 * grad.iter().map(|v| v.abs()).fold(0.0, f64::max), "{i}: {fd} vs {}", grad[i]);
        }
    }

    fn random_density(space: &Arc<MomentumSpace>, seed: u64) -> ChargeDensity {
        let q = crate::opspace::random_hs_sample(space, 1.0, seed);
        crate::opspace::density_of(&q)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pairing_axioms(sa in 0u64..500, sb in 0u64..500, a in prop::array::uniform3(-3.0..3.0f64)) {
            let space = MomentumSpace::new(1.5, 3).unwrap();
            let r1 = random_density(&space, sa);
            let r2 = random_density(&space, sb);
            let d12 = coulomb_inner(&r1, &r2).unwrap();
            let d21 = coulomb_inner(&r2, &r1).unwrap();
            prop_assert!((d12 - d21.conj()).norm() <= 1e-14 * (1.0 + d12.norm()));
            prop_assert!(d12.im.abs() <= 1e-14 * (1.0 + d12.norm()));
            let (n1, n2) = (coulomb_norm(&r1), coulomb_norm(&r2));
            prop_assert!(coulomb_inner(&r1, &r1).unwrap().re >= 0.0);
            prop_assert!(d12.norm() <= n1 * n2 * (1.0 + 1e-12));
            prop_assert!(coulomb_norm(&r1.add(&r2).unwrap()) <= (n1 + n2) * (1.0 + 1e-12));

            let t1 = translate_density(&r1, a);
            let t2 = translate_density(&r2, a);
            prop_assert!((coulomb_inner(&t1, &t2).unwrap() - d12).norm() <= 1e-13 * (1.0 + d12.norm()));
            prop_assert!((coulomb_norm(&t1) - n1).abs() <= 1e-14 * (1.0 + n1));
        }

        #[test]
        fn translation_is_lipschitz(seed in 0u64..500, a in prop::array::uniform3(-1.0..1.0f64), b in prop::array::uniform3(-1.0..1.0f64)) {
            let space = MomentumSpace::new(1.5, 3).unwrap();
            let rho = random_density(&space, seed);
            let gap = coulomb_norm(&translate_density(&rho, a).sub(&translate_density(&rho, b)).unwrap());
            prop_assert!(gap <= norm(sub(a, b)) * translation_lipschitz_bound(&rho) * (1.0 + 1e-12));
        }
    }
}
