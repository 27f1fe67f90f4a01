//! Time integration of the coupled density-matrix / nuclei system.

mod constants;
mod initial;
mod picard;
mod probe;

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;

pub use constants::{estimate_constants, ConstantReport};
pub use initial::{build_initial_state, InitialKind};
pub use picard::{picard_schauder, PicardReport};
pub use probe::{lipschitz_divergence_probe, ProbeReport};

use crate::coulomb::{coulomb_inner, coulomb_norm, ChargeDensity};
use crate::error::{BdfError, Result};
use crate::geom::{axpy, Vec3};
use crate::meanfield::{assemble_v_with_density, exchange_op, rhs_from_potential};
use crate::newton::{nuclear_density, nuclear_repulsion, newton_rhs_from_density, NucleusState};
use crate::opspace::{
    charge_tr_q3, density_of, p0_split_trace, p0_split_trace_d0, projector_residual, retract_to_projector,
    KernelOperator,
};

/// The phase-space point `(Q, x̄₁…x̄_M, v̄₁…v̄_M)` at time `t`.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub q: KernelOperator,
    pub nuclei: Vec<NucleusState>,
    pub t: f64,
}

/// The individual terms of the conserved energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `tr_{P⁰}(D⁰Q)`
    pub free: f64,
    /// `−α D(ρ_Q, Σ z_k f_k)`
    pub attraction: f64,
    /// `(α/2) D(ρ_Q, ρ_Q)`
    pub direct: f64,
    /// `−(α/2) X(Q)`
    pub exchange: f64,
    /// `½ Σ m_k |v̄_k|²`
    pub nuclear_kinetic: f64,
    /// `α Σ_{i<j} D(z_i f_i, z_j f_j)`
    pub repulsion: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.free + self.attraction + self.direct + self.exchange + self.nuclear_kinetic + self.repulsion
    }
}

pub fn energy_breakdown(s: &SystemState, alpha: f64) -> EnergyBreakdown {
    let space = s.q.space();
    let free = p0_split_trace_d0(&s.q);
    let nuclear_kinetic = s.nuclei.iter().map(NucleusState::kinetic_energy).sum();
    if alpha == 0.0 {
        return EnergyBreakdown {
            free,
            attraction: 0.0,
            direct: 0.0,
            exchange: 0.0,
            nuclear_kinetic,
            repulsion: 0.0,
        };
    }
    let rho = density_of(&s.q);
    let nuclear = nuclear_density(space, &s.nuclei);
    let attraction = -alpha * coulomb_inner(&rho, &nuclear).expect("same space").re;
    let direct = 0.5 * alpha * coulomb_norm(&rho).powi(2);
    let exchange = -0.5 * alpha * exchange_energy(&s.q);
    let repulsion = nuclear_repulsion(space, &s.nuclei, alpha);
    EnergyBreakdown { free, attraction, direct, exchange, nuclear_kinetic, repulsion }
}

/// `X(Q) = ∬ |Q(x,y)|² / |x−y|`, as `⟨Q, R_Q⟩_{𝔖₂}`.
pub fn exchange_energy(q: &KernelOperator) -> f64 {
    q.hs_inner(&exchange_op(q)).expect("same space").re
}

/// The conserved energy of the coupled system.
pub fn total_energy(s: &SystemState, alpha: f64) -> f64 {
    energy_breakdown(s, alpha).total()
}

/// `LHS − RHS` of the coercivity bound
/// `E + (α/2)Σ‖z_k f_k‖²_𝒞 ≥ (1 − απ/4) tr_{P⁰}(D⁰Q) + (α/2)‖ρ_Q − Σ z_k f_k‖²_𝒞 + ½Σ m_k|v̄_k|²`.
pub fn coercivity_slack(s: &SystemState, alpha: f64) -> f64 {
    let e = energy_breakdown(s, alpha);
    let space = s.q.space();
    let self_energy: f64 = s.nuclei.iter().map(|n| coulomb_norm(&n.density(space)).powi(2)).sum();
    let lhs = e.total() + 0.5 * alpha * self_energy;
    let rho = density_of(&s.q);
    let net = rho.sub(&nuclear_density(space, &s.nuclei)).expect("same space");
    let rhs = (1.0 - alpha * PI / 4.0) * e.free + 0.5 * alpha * coulomb_norm(&net).powi(2) + e.nuclear_kinetic;
    lhs - rhs
}

/// `tr_{P⁰}(D⁰Q) − ‖Q‖²₂`; nonnegative whenever `Q + P⁰` is a projector.
pub fn norm_bound_slack(q: &KernelOperator) -> f64 {
    p0_split_trace_d0(q) - q.hs_norm().powi(2)
}

/// Time derivative of the full state.
#[derive(Debug, Clone)]
pub struct Derivative {
    pub dq: KernelOperator,
    pub nuclei: Vec<(Vec3, Vec3)>,
}

/// Right-hand side of the coupled system.
pub fn coupled_rhs(s: &SystemState, alpha: f64) -> Derivative {
    let rho = density_of(&s.q);
    coupled_rhs_with_density(s, &rho, alpha)
}

fn coupled_rhs_with_density(s: &SystemState, rho: &ChargeDensity, alpha: f64) -> Derivative {
    let v = assemble_v_with_density(&s.q, rho, &s.nuclei, alpha);
    let dq = rhs_from_potential(&s.q, &v).expect("same space");
    Derivative { dq, nuclei: newton_rhs_from_density(&s.nuclei, rho, alpha) }
}

fn advance(s: &SystemState, d: &Derivative, h: f64) -> SystemState {
    let q = s.q.axpy(C64::new(h, 0.0), &d.dq).expect("same space");
    let nuclei = s
        .nuclei
        .iter()
        .zip(&d.nuclei)
        .map(|(n, (dx, dv))| NucleusState { x: axpy(n.x, h, *dx), v: axpy(n.v, h, *dv), ..n.clone() })
        .collect();
    SystemState { q, nuclei, t: s.t + h }
}

/// Combines RK4 stages: `s + dt/6 (k₁ + 2k₂ + 2k₃ + k₄)`.
fn rk4_combine(s: &SystemState, k: [&Derivative; 4], dt: f64) -> SystemState {
    let w = [1.0, 2.0, 2.0, 1.0];
    let mut q = s.q.clone();
    for (ki, wi) in k.iter().zip(w) {
        q = q.axpy(C64::new(dt * wi / 6.0, 0.0), &ki.dq).expect("same space");
    }
    let nuclei = s
        .nuclei
        .iter()
        .enumerate()
        .map(|(j, n)| {
            let mut x = n.x;
            let mut v = n.v;
            for (ki, wi) in k.iter().zip(w) {
                x = axpy(x, dt * wi / 6.0, ki.nuclei[j].0);
                v = axpy(v, dt * wi / 6.0, ki.nuclei[j].1);
            }
            NucleusState { x, v, ..n.clone() }
        })
        .collect();
    SystemState { q, nuclei, t: s.t + dt }
}

/// One classical fourth-order Runge-Kutta step of the coupled system,
/// optionally followed by a projector retraction.
pub fn rk4_step(s: &SystemState, dt: f64, alpha: f64, retraction: bool) -> Result<SystemState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(BdfError::Config(format!("time step must be positive, got {dt}")));
    }
    let k1 = coupled_rhs(s, alpha);
    let k2 = coupled_rhs(&advance(s, &k1, 0.5 * dt), alpha);
    let k3 = coupled_rhs(&advance(s, &k2, 0.5 * dt), alpha);
    let k4 = coupled_rhs(&advance(s, &k3, dt), alpha);
    let mut next = rk4_combine(s, [&k1, &k2, &k3, &k4], dt);
    if retraction {
        next.q = retract_to_projector(&next.q)?;
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    /// Apply the projector retraction every `retraction_period` steps.
    pub retraction: bool,
    pub retraction_period: usize,
    /// Record diagnostics every `sample_every` steps (the initial and final
    /// states are always recorded).
    pub sample_every: usize,
    /// Abort once `‖Q‖₂` exceeds this value.
    pub divergence_bound: f64,
    /// Keep a copy of the state at every sample.
    pub keep_states: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            retraction: false,
            retraction_period: 10,
            sample_every: 10,
            divergence_bound: 1e3,
            keep_states: false,
        }
    }
}

/// One sampled row of diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub energy: f64,
    pub charge_tr_q3: f64,
    pub projector_residual: f64,
    pub hs_norm: f64,
    pub split_trace: f64,
    pub coercivity_slack: f64,
    pub norm_bound_slack: f64,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl DiagnosticsRow {
    pub fn measure(s: &SystemState, alpha: f64) -> Self {
        let e = energy_breakdown(s, alpha);
        let self_energy: f64 = s.nuclei.iter().map(|n| coulomb_norm(&n.density(s.q.space())).powi(2)).sum();
        let rho = density_of(&s.q);
        let net = rho.sub(&nuclear_density(s.q.space(), &s.nuclei)).expect("same space");
        let coercivity = e.total() + 0.5 * alpha * self_energy
            - ((1.0 - alpha * PI / 4.0) * e.free + 0.5 * alpha * coulomb_norm(&net).powi(2) + e.nuclear_kinetic);
        let hs = s.q.hs_norm();
        DiagnosticsRow {
            t: s.t,
            energy: e.total(),
            charge_tr_q3: charge_tr_q3(&s.q),
            projector_residual: projector_residual(&s.q),
            hs_norm: hs,
            split_trace: p0_split_trace(&s.q),
            coercivity_slack: coercivity,
            norm_bound_slack: e.free - hs * hs,
            positions: s.nuclei.iter().map(|n| n.x).collect(),
            velocities: s.nuclei.iter().map(|n| n.v).collect(),
        }
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        [self.t, self.energy, self.charge_tr_q3, self.projector_residual, self.hs_norm]
            .into_iter()
            .chain(self.positions.iter().zip(&self.velocities).flat_map(|(x, v)| x.iter().chain(v).copied()))
    }

    /// Name of the first non-finite column, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        let names = csv_header(self.positions.len());
        self.values().zip(names).find(|(v, _)| !v.is_finite()).map(|(_, n)| n)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    pub states: Vec<SystemState>,
    pub final_state: SystemState,
    pub steps: usize,
}

/// Number of steps of size `dt` needed to reach `t_final`.
pub fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(BdfError::Config(format!("dt must be positive, got {dt}")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(BdfError::Config(format!("t_final must be positive, got {t_final}")));
    }
    Ok((t_final / dt).round().max(1.0) as usize)
}

/// Integrates from `s0` to `t_final` with fixed steps, sampling diagnostics.
pub fn simulate(
    s0: &SystemState,
    dt: f64,
    t_final: f64,
    alpha: f64,
    opts: &SimulationOptions,
) -> Result<Trajectory> {
    let steps = step_count(dt, t_final)?;
    if opts.sample_every == 0 || (opts.retraction && opts.retraction_period == 0) {
        return Err(BdfError::Config("sampling and retraction periods must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut states = Vec::new();
    let mut state = s0.clone();
    let start = state.t;
    let mut record = |s: &SystemState, rows: &mut Vec<DiagnosticsRow>| -> Result<()> {
        let row = DiagnosticsRow::measure(s, alpha);
        if let Some(col) = row.first_non_finite() {
            return Err(BdfError::NonFinite(format!("{col} at t = {}", s.t)));
        }
        rows.push(row);
        if opts.keep_states {
            states.push(s.clone());
        }
        Ok(())
    };
    record(&state, &mut rows)?;
    for i in 1..=steps {
        let retract = opts.retraction && i % opts.retraction_period == 0;
        state = rk4_step(&state, dt, alpha, retract)?;
        // Avoid accumulating rounding in t.
        state.t = start + i as f64 * dt;
        let norm = state.q.hs_norm();
        if !norm.is_finite() {
            return Err(BdfError::NonFinite(format!("Q at t = {}", state.t)));
        }
        if norm > opts.divergence_bound {
            return Err(BdfError::Divergence { t: state.t, norm, bound: opts.divergence_bound });
        }
        if i % opts.sample_every == 0 || i == steps {
            record(&state, &mut rows)?;
        }
    }
    Ok(Trajectory { rows, states, final_state: state, steps })
}

pub fn csv_header(nuclei: usize) -> Vec<String> {
    let mut h: Vec<String> =
        ["t", "energy", "charge_trQ3", "projector_residual", "hs_norm_Q"].iter().map(|s| s.to_string()).collect();
    for k in 0..nuclei {
        for c in ["x", "y", "z", "vx", "vy", "vz"] {
            h.push(format!("{c}{}", k + 1));
        }
    }
    h
}

/// Writes diagnostics rows as CSV with the fixed column schema.
pub fn write_diagnostics_csv(rows: &[DiagnosticsRow], out: impl Write) -> Result<()> {
    let nuclei = rows.first().map_or(0, |r| r.positions.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(nuclei))?;
    for r in rows {
        // `{:e}` prints the shortest representation that round-trips.
        w.write_record(r.values().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
