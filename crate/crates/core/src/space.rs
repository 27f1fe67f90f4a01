//! The shared discretization context every operator and density points to.

use std::sync::{Arc, OnceLock};

use crate::error::Result;
use crate::lattice::{build_difference_lattice, build_lattice, DifferenceLattice, MomentumLattice};
use crate::spinor::{d0_symbol, dispersion, p0_symbol, SpinorMatrix};

/// A momentum lattice together with its difference lattice and the free
/// Dirac symbols sampled at every point.
#[derive(Debug)]
pub struct MomentumSpace {
    lattice: MomentumLattice,
    difference: DifferenceLattice,
    pair_difference: Vec<u32>,
    d0: Vec<SpinorMatrix>,
    p0: Vec<SpinorMatrix>,
    energy: Vec<f64>,
    shifts: OnceLock<Vec<u32>>,
}

impl MomentumSpace {
    pub fn new(cutoff: f64, n_per_axis: usize) -> Result<Arc<Self>> {
        Ok(Self::from_lattice(build_lattice(cutoff, n_per_axis)?))
    }

    pub fn from_lattice(lattice: MomentumLattice) -> Arc<Self> {
        let difference = build_difference_lattice(&lattice);
        let n = lattice.len();
        let mut pair_difference = Vec::with_capacity(n * n);
        for p in 0..n {
            let gp = lattice.grid_index(p);
            for q in 0..n {
                let gq = lattice.grid_index(q);
                let d = difference
                    .index_of([gp[0] - gq[0], gp[1] - gq[1], gp[2] - gq[2]])
                    .expect("difference lattice contains every p - q");
                pair_difference.push(d as u32);
            }
        }
        let d0 = lattice.points().iter().map(|&p| d0_symbol(p)).collect();
        let p0 = lattice.points().iter().map(|&p| p0_symbol(p)).collect();
        let energy = lattice.points().iter().map(|&p| dispersion(p)).collect();
        Arc::new(MomentumSpace {
            lattice,
            difference,
            pair_difference,
            d0,
            p0,
            energy,
            shifts: OnceLock::new(),
        })
    }

    pub fn lattice(&self) -> &MomentumLattice {
        &self.lattice
    }

    pub fn difference(&self) -> &DifferenceLattice {
        &self.difference
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Dimension of the discrete one-particle space, `4 × len()`.
    pub fn dim(&self) -> usize {
        4 * self.lattice.len()
    }

    /// Difference-lattice index of `point(p) − point(q)`.
    #[inline]
    pub fn pair_difference(&self, p: usize, q: usize) -> usize {
        self.pair_difference[p * self.len() + q] as usize
    }

    /// Index of `point(q) + k_d` for difference point `d`, if it lies in
    /// the lattice. The table is built on first use.
    #[inline]
    pub fn shifted(&self, d: usize, q: usize) -> Option<usize> {
        match self.shift_table()[d * self.len() + q] {
            u32::MAX => None,
            t => Some(t as usize),
        }
    }

    /// Row `d` of the shift table: `point(q) + k_d` for every `q`, with
    /// `u32::MAX` marking points outside the lattice.
    pub fn shift_row(&self, d: usize) -> &[u32] {
        let n = self.len();
        &self.shift_table()[d * n..(d + 1) * n]
    }

    fn shift_table(&self) -> &[u32] {
        self.shifts.get_or_init(|| {
            let n = self.len();
            let mut table = Vec::with_capacity(self.difference.len() * n);
            for d in 0..self.difference.len() {
                let m = self.difference.offset(d);
                for q in 0..n {
                    table.push(self.lattice.shifted(q, m).map_or(u32::MAX, |t| t as u32));
                }
            }
            table
        })
    }

    pub fn d0(&self, p: usize) -> &SpinorMatrix {
        &self.d0[p]
    }

    pub fn p0(&self, p: usize) -> &SpinorMatrix {
        &self.p0[p]
    }

    pub fn d0_symbols(&self) -> &[SpinorMatrix] {
        &self.d0
    }

    pub fn p0_symbols(&self) -> &[SpinorMatrix] {
        &self.p0
    }

    /// `E(p)` at lattice point `p`.
    pub fn energy(&self, p: usize) -> f64 {
        self.energy[p]
    }

    /// Largest `E(p)` on the lattice, the discrete stand-in for `E(Λ)`.
    pub fn max_energy(&self) -> f64 {
        self.energy.iter().cloned().fold(0.0, f64::max)
    }

    pub fn same_as(&self, other: &MomentumSpace) -> bool {
        std::ptr::eq(self, other) || self.lattice.same_as(&other.lattice)
    }
}
