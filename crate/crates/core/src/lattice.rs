//! Momentum discretization of the cutoff space: a cubic grid intersected
//! with the ball `|p| ≤ Λ`, plus the lattice of pairwise differences on which
//! charge densities live.

use crate::error::{BdfError, Result};
use crate::geom::{norm, Vec3};
use crate::quadrature::unit_cell_inverse_square;

const NONE: u32 = u32::MAX;

/// Grid points of spacing `h = 2Λ/n` inside the closed ball of radius `Λ`.
///
/// Points are ordered lexicographically by their integer grid index, which
/// fixes the block order of every kernel operator built on the lattice.
#[derive(Debug, Clone)]
pub struct MomentumLattice {
    cutoff: f64,
    n_per_axis: usize,
    spacing: f64,
    points: Vec<Vec3>,
    grid: Vec<[i32; 3]>,
    lookup: Vec<u32>,
}

/// Builds the lattice for cutoff `cutoff` with `n_per_axis` grid points per
/// axis. Odd `n_per_axis` puts a point at the origin; even puts the grid at
/// half-integer multiples of the spacing.
pub fn build_lattice(cutoff: f64, n_per_axis: usize) -> Result<MomentumLattice> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(BdfError::Config(format!("cutoff must be positive, got {cutoff}")));
    }
    if n_per_axis < 2 {
        return Err(BdfError::Config(format!("n_per_axis must be at least 2, got {n_per_axis}")));
    }
    let n = n_per_axis;
    let spacing = 2.0 * cutoff / n as f64;
    let mut points = Vec::new();
    let mut grid = Vec::new();
    let mut lookup = vec![NONE; n * n * n];
    // Doubled coordinates s = 2i - (n - 1); |p| ≤ Λ  ⇔  Σ s² ≤ n².
    let doubled = |i: usize| 2 * i as i64 - (n as i64 - 1);
    let limit = (n * n) as i64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let s = [doubled(i), doubled(j), doubled(k)];
                if s.iter().map(|v| v * v).sum::<i64>() > limit {
                    continue;
                }
                lookup[(i * n + j) * n + k] = points.len() as u32;
                points.push(s.map(|v| 0.5 * spacing * v as f64));
                grid.push([i as i32, j as i32, k as i32]);
            }
        }
    }
    Ok(MomentumLattice { cutoff, n_per_axis, spacing, points, grid, lookup })
}

impl MomentumLattice {
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `h³`, the measure attached to each lattice point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    /// Integer grid index `(i, j, k)` of point `i`, each in `0..n`.
    pub fn grid_index(&self, i: usize) -> [i32; 3] {
        self.grid[i]
    }

    /// Point index at grid index `g`, if `g` is on the grid and in the ball.
    pub fn index_of(&self, g: [i32; 3]) -> Option<usize> {
        let n = self.n_per_axis as i32;
        if g.iter().any(|&c| c < 0 || c >= n) {
            return None;
        }
        let flat = ((g[0] * n + g[1]) * n + g[2]) as usize;
        match self.lookup[flat] {
            NONE => None,
            idx => Some(idx as usize),
        }
    }

    /// Index of `point(i) + m·h`, if that point is in the lattice.
    #[inline]
    pub fn shifted(&self, i: usize, m: [i32; 3]) -> Option<usize> {
        let g = self.grid[i];
        self.index_of([g[0] + m[0], g[1] + m[1], g[2] + m[2]])
    }

    /// Index of `−point(i)`; always present since the ball and grid are
    /// symmetric.
    pub fn negated(&self, i: usize) -> usize {
        let n = self.n_per_axis as i32 - 1;
        let g = self.grid[i];
        self.index_of([n - g[0], n - g[1], n - g[2]])
            .expect("lattice is symmetric under p -> -p")
    }

    pub fn same_as(&self, other: &MomentumLattice) -> bool {
        self.cutoff == other.cutoff && self.n_per_axis == other.n_per_axis
    }
}

/// All differences `k = p − q` of lattice points, each with its cell Coulomb
/// weight `w(k) = ∫_{cell(k)} dκ / |κ|²`.
#[derive(Debug, Clone)]
pub struct DifferenceLattice {
    spacing: f64,
    span: i32,
    offsets: Vec<[i32; 3]>,
    points: Vec<Vec3>,
    weights: Vec<f64>,
    lookup: Vec<u32>,
    negated: Vec<usize>,
}

pub fn build_difference_lattice(lattice: &MomentumLattice) -> DifferenceLattice {
    let span = lattice.n_per_axis as i32 - 1;
    let side = (2 * span + 1) as usize;
    let flat = |m: [i32; 3]| (((m[0] + span) as usize * side) + (m[1] + span) as usize) * side
        + (m[2] + span) as usize;

    let mut present = vec![false; side * side * side];
    for gp in &lattice.grid {
        for gq in &lattice.grid {
            present[flat([gp[0] - gq[0], gp[1] - gq[1], gp[2] - gq[2]])] = true;
        }
    }

    let h = lattice.spacing;
    let mut offsets = Vec::new();
    let mut lookup = vec![NONE; present.len()];
    for a in -span..=span {
        for b in -span..=span {
            for c in -span..=span {
                let m = [a, b, c];
                if present[flat(m)] {
                    lookup[flat(m)] = offsets.len() as u32;
                    offsets.push(m);
                }
            }
        }
    }
    let points = offsets.iter().map(|m| m.map(|v| v as f64 * h)).collect();
    // Scaling κ = h·u turns the cell integral into h · ∫_{unit cell} du/|u|².
    let weights = offsets.iter().map(|&m| h * unit_cell_inverse_square(m)).collect();
    let negated = offsets
        .iter()
        .map(|m| lookup[flat(m.map(|v| -v))] as usize)
        .collect();

    DifferenceLattice { spacing: h, span, offsets, points, weights, lookup, negated }
}

impl DifferenceLattice {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn point(&self, d: usize) -> Vec3 {
        self.points[d]
    }

    pub fn offset(&self, d: usize) -> [i32; 3] {
        self.offsets[d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, d: usize) -> f64 {
        self.weights[d]
    }

    /// Index of `−k` for difference point `d`.
    pub fn negated(&self, d: usize) -> usize {
        self.negated[d]
    }

    /// Index of the difference point with integer offset `m`.
    pub fn index_of(&self, m: [i32; 3]) -> Option<usize> {
        if m.iter().any(|c| c.abs() > self.span) {
            return None;
        }
        let side = (2 * self.span + 1) as usize;
        let flat = (((m[0] + self.span) as usize * side) + (m[1] + self.span) as usize) * side
            + (m[2] + self.span) as usize;
        match self.lookup[flat] {
            NONE => None,
            idx => Some(idx as usize),
        }
    }

    /// Index of the origin `k = 0`.
    pub fn origin(&self) -> usize {
        self.index_of([0, 0, 0]).expect("difference lattice contains 0")
    }

    /// `Σ w(k)` over difference points with `|k| ≤ radius`.
    pub fn weight_within(&self, radius: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(k, _)| norm(**k) <= radius)
            .map(|(_, w)| w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::origin_cell_constant;
    use std::f64::consts::PI;

    fn brute_force_count(cutoff: f64, n: usize) -> usize {
        let h = 2.0 * cutoff / n as f64;
        let mut count = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = |i: usize| (i as f64 - (n as f64 - 1.0) / 2.0) * h;
                    let r2 = c(i).powi(2) + c(j).powi(2) + c(k).powi(2);
                    if r2 <= cutoff * cutoff * (1.0 + 1e-12) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn two_per_axis_gives_the_eight_corner_points() {
        let lat = build_lattice(1.0, 2).unwrap();
        assert_eq!(lat.len(), 8);
        for p in lat.points() {
            assert!(p.iter().all(|c| (c.abs() - 0.5).abs() < 1e-15));
            assert!((norm(*p) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn point_count_matches_enumeration() {
        for (cutoff, n) in [(2.0, 5), (1.0, 2), (1.5, 3), (2.0, 7), (3.0, 8)] {
            let lat = build_lattice(cutoff, n).unwrap();
            assert_eq!(lat.len(), brute_force_count(cutoff, n), "Λ={cutoff}, n={n}");
        }
        assert_eq!(build_lattice(2.0, 5).unwrap().len(), 81);
    }

    #[test]
    fn lattice_is_symmetric_and_inside_ball() {
        for n in 2..9 {
            let lat = build_lattice(1.7, n).unwrap();
            for (i, p) in lat.points().iter().enumerate() {
                assert!(norm(*p) <= 1.7 * (1.0 + 1e-12));
                let j = lat.negated(i);
                let q = lat.point(j);
                assert!(p.iter().zip(q).all(|(a, b)| (a + b).abs() < 1e-14));
            }
            // lexicographic order by coordinates
            for w in lat.points().windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn origin_present_only_for_odd_n() {
        assert!(build_lattice(1.0, 5).unwrap().points().contains(&[0.0, 0.0, 0.0]));
        assert!(!build_lattice(1.0, 4).unwrap().points().contains(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn refinement_increases_count_cubically() {
        let counts: Vec<usize> =
            (3..=12).map(|n| build_lattice(1.0, n).unwrap().len()).collect();
        for w in counts.windows(2) {
            assert!(w[1] > w[0], "{counts:?}");
        }
        // N(n) / n³ → π/6 as n grows
        let ratio = counts[9] as f64 / 12f64.powi(3);
        assert!((ratio - PI / 6.0).abs() < 0.06, "{ratio}");
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(build_lattice(0.0, 5).is_err());
        assert!(build_lattice(-1.0, 5).is_err());
        assert!(build_lattice(1.0, 1).is_err());
        assert!(build_lattice(f64::NAN, 4).is_err());
    }

    #[test]
    fn difference_lattice_closed_under_negation_with_even_weights() {
        let lat = build_lattice(2.0, 5).unwrap();
        let diff = build_difference_lattice(&lat);
        let origin = diff.origin();
        assert_eq!(diff.point(origin), [0.0, 0.0, 0.0]);
        for d in 0..diff.len() {
            let nd = diff.negated(d);
            let (k, mk) = (diff.point(d), diff.point(nd));
            assert!(k.iter().zip(mk).all(|(a, b)| a + b == 0.0));
            assert_eq!(diff.weight(d), diff.weight(nd));
            assert!(diff.weight(d) > 0.0);
        }
        for p in 0..lat.len() {
            for q in 0..lat.len() {
                let gp = lat.grid_index(p);
                let gq = lat.grid_index(q);
                assert!(diff.index_of([gp[0] - gq[0], gp[1] - gq[1], gp[2] - gq[2]]).is_some());
            }
        }
    }

    #[test]
    fn origin_weight_is_c0_times_spacing() {
        let lat = build_lattice(2.0, 5).unwrap();
        let diff = build_difference_lattice(&lat);
        let w0 = diff.weight(diff.origin());
        assert!((w0 - origin_cell_constant() * lat.spacing()).abs() < 1e-14);
    }

    #[test]
    fn far_weights_approach_inverse_square() {
        let lat = build_lattice(4.0, 16).unwrap();
        let diff = build_difference_lattice(&lat);
        let h = lat.spacing();
        let mut last = f64::INFINITY;
        for m in [[2, 0, 0], [4, 0, 0], [8, 0, 0], [14, 0, 0]] {
            let d = diff.index_of(m).unwrap();
            let k2 = crate::geom::dot(diff.point(d), diff.point(d));
            let dev = (diff.weight(d) / (h.powi(3) / k2) - 1.0).abs();
            assert!(dev < last, "{m:?}");
            last = dev;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn ball_weight_sum_converges_to_four_pi_k() {
        // Σ_{|k|≤K} w(k) is the integral of 1/|κ|² over a union of cells that
        // approximates the ball, so its error against 4πK is boundary-limited.
        let radius = 2.0;
        let err = |n: usize| {
            let lat = build_lattice(2.0, n).unwrap();
            let diff = build_difference_lattice(&lat);
            (diff.weight_within(radius) - 4.0 * PI * radius).abs() / (4.0 * PI * radius)
        };
        for n in [9, 13, 17] {
            assert!(err(n) < 0.01, "{n}: {}", err(n));
        }
    }
}
