//! Gauss-Legendre rules and the cell integrals of `1/|u|^2` that back the
//! Coulomb weights of the difference lattice.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const ORDER: usize = 16;

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Composite Gauss-Legendre on `[lo, hi]` with `panels` equal panels.
fn composite(lo: f64, hi: f64, panels: usize) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = rule();
    let width = (hi - lo) / panels as f64;
    (0..panels).flat_map(move |k| {
        let a = lo + k as f64 * width;
        x.iter()
            .zip(w.iter())
            .map(move |(&xi, &wi)| (a + 0.5 * width * (xi + 1.0), 0.5 * width * wi))
    })
}

/// `∫_0^b ∫_0^c a / (a² + y² + z²) dz dy`, the contribution of the pyramid
/// with apex at the origin and base on the face `x = a` of the box
/// `[0,a]×[0,b]×[0,c]`.
fn pyramid(a: f64, b: f64, c: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 || c <= 0.0 {
        return 0.0;
    }
    // Panels no wider than `a` keep the peak at y = z = 0 resolved.
    let pb = (b / a).ceil().max(1.0) as usize;
    let pc = (c / a).ceil().max(1.0) as usize;
    let mut total = 0.0;
    for (y, wy) in composite(0.0, b, pb) {
        let mut inner = 0.0;
        for (z, wz) in composite(0.0, c, pc) {
            inner += wz * a / (a * a + y * y + z * z);
        }
        total += wy * inner;
    }
    total
}

/// `∫ du / |u|²` over the box `[0,a]×[0,b]×[0,c]` with one corner at the
/// origin. Splitting the box into three pyramids with apex at the origin
/// removes the singularity: along each ray the radial integral is exactly
/// the ray length.
pub fn corner_box_integral(a: f64, b: f64, c: f64) -> f64 {
    pyramid(a, b, c) + pyramid(b, a, c) + pyramid(c, a, b)
}

/// Signed decomposition of `[lo, hi]` into intervals `[0, len]` (mirrored
/// when negative), so a box integral becomes a signed sum of corner boxes.
fn signed_halflines(lo: f64, hi: f64) -> [(f64, f64); 2] {
    if lo >= 0.0 {
        [(hi, 1.0), (lo, -1.0)]
    } else if hi <= 0.0 {
        [(-lo, 1.0), (-hi, -1.0)]
    } else {
        [(-lo, 1.0), (hi, 1.0)]
    }
}

/// `∫_{cell(m)} du / |u|²` for the unit cube centred at the integer point `m`.
///
/// Cells touching the origin go through the corner-box decomposition; all
/// others are smooth and use a fixed product Gauss rule.
pub fn unit_cell_inverse_square(m: [i32; 3]) -> f64 {
    // The integral is invariant under axis reflections and permutations;
    // canonicalizing keeps symmetric weights bitwise equal.
    let mut m = m.map(i32::abs);
    m.sort_unstable();
    let touches_origin = m.iter().all(|c| c.abs() <= 1);
    if touches_origin {
        let mut total = 0.0;
        let lo = |i: usize| m[i] as f64 - 0.5;
        let hi = |i: usize| m[i] as f64 + 0.5;
        for (a, sa) in signed_halflines(lo(0), hi(0)) {
            for (b, sb) in signed_halflines(lo(1), hi(1)) {
                for (c, sc) in signed_halflines(lo(2), hi(2)) {
                    total += sa * sb * sc * corner_box_integral(a, b, c);
                }
            }
        }
        total
    } else {
        let (x, w) = rule();
        let mut total = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let u0 = m[0] as f64 + 0.5 * xi;
            for (j, &xj) in x.iter().enumerate() {
                let u1 = m[1] as f64 + 0.5 * xj;
                let base = u0 * u0 + u1 * u1;
                let mut inner = 0.0;
                for (k, &xk) in x.iter().enumerate() {
                    let u2 = m[2] as f64 + 0.5 * xk;
                    inner += w[k] / (base + u2 * u2);
                }
                total += w[i] * w[j] * inner;
            }
        }
        total * 0.125
    }
}

/// `c₀ = ∫_{[-1/2,1/2]³} du / |u|²`, the origin-cell constant.
pub fn origin_cell_constant() -> f64 {
    static C0: OnceLock<f64> = OnceLock::new();
    *C0.get_or_init(|| 8.0 * corner_box_integral(0.5, 0.5, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        // Degree 13 is the limit for 7 points.
        let exact = 2.0 / 13.0;
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((approx - exact).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn corner_box_of_unit_cube_matches_reduced_form() {
        // For the unit cube each pyramid reduces to ∫∫ 1/(1+a²+b²).
        let (x, w) = gauss_legendre(40);
        let mut reduced = 0.0;
        for (i, &a) in x.iter().enumerate() {
            for (j, &b) in x.iter().enumerate() {
                let (a, b) = (0.5 * (a + 1.0), 0.5 * (b + 1.0));
                reduced += 0.25 * w[i] * w[j] / (1.0 + a * a + b * b);
            }
        }
        let direct = corner_box_integral(1.0, 1.0, 1.0);
        assert!((direct - 3.0 * reduced).abs() < 1e-12, "{direct} vs {}", 3.0 * reduced);
    }

    #[test]
    fn far_cells_approach_midpoint_value() {
        for m in [[6, 0, 0], [4, 4, 4], [0, -9, 3]] {
            let r2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
            let ratio = unit_cell_inverse_square(m) * r2;
            // Cube average exceeds the centre value by ~ 1/(12 r²).
            assert!((ratio - 1.0 - 1.0 / (12.0 * r2)).abs() < 2e-3, "{m:?}: {ratio}");
        }
    }

    #[test]
    fn adjacent_and_far_rules_agree_at_the_boundary() {
        // [2,0,0] uses product Gauss, but the corner decomposition is also
        // valid there; the two must agree.
        let m = [2, 1, 0];
        let gauss = unit_cell_inverse_square(m);
        let mut boxes = 0.0;
        for (a, sa) in signed_halflines(1.5, 2.5) {
            for (b, sb) in signed_halflines(0.5, 1.5) {
                for (c, sc) in signed_halflines(-0.5, 0.5) {
                    boxes += sa * sb * sc * corner_box_integral(a, b, c);
                }
            }
        }
        assert!((gauss - boxes).abs() < 1e-12, "{gauss} vs {boxes}");
    }
}
