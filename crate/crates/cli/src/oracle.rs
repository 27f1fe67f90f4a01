//! Independent reference values for the `oracle` check suite.

use std::f64::consts::PI;

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// `∬ f₁(x) f₂(y)/|x−y|` for unit-mass Gaussians of widths `s1`, `s2` with
/// centres `d` apart: shells of `f₁ ∗ f₂` at radius `r` contribute `1/max(r, d)`.
pub fn gaussian_pair(s1: f64, s2: f64, d: f64) -> f64 {
    let var = s1 * s1 + s2 * s2;
    let shell = |r: f64| {
        let lever = if r >= d { r } else { r * r / d };
        4.0 * PI * lever * (-(r * r) / (2.0 * var)).exp()
    };
    (2.0 * PI * var).powf(-1.5) * simpson(0.0, d + 14.0 * var.sqrt(), 20_000, shell)
}

/// `∬ ψ(x) ψ̄(y)/|x−y|` for the orbital with `ψ̂(p) = e^{−a²|p|²/2}` on
/// `|p| ≤ Λ`, via Parseval: `16π² ∫₀^Λ e^{−a²k²} dk`.
pub fn band_limited_exchange(a: f64, cutoff: f64) -> f64 {
    16.0 * PI * PI * simpson(0.0, cutoff, 20_000, |k| (-a * a * k * k).exp())
}
