//! Property suites run by `bdfsim check`.

use std::f64::consts::PI;

use bdf_core::dynamics::DiagnosticsRow;
use bdf_core::{
    charge_tr_q3, coulomb_inner, exchange_op, gaussian_density, projector_residual, rk4_step, simulate,
    GaussianShape, KernelOperator, MomentumSpace, SystemState,
};
use clap::ValueEnum;
use num_complex::Complex64 as C64;

use crate::commands::{initial_state, options, space_of, Failure};
use crate::config::{SimConfig, ALPHA_LIMIT};
use crate::oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    Invariants,
    Oracle,
    Order,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

impl Property {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Property { name: name.into(), value, limit: format!("≤ {limit:e}"), pass: value <= limit }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Property { name: name.into(), value, limit: format!("≥ {limit:e}"), pass: value >= limit }
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag} {}: {:e} ({})", self.name, self.value, self.limit)
    }
}

pub fn run_check(cfg: &SimConfig, suite: SuiteName) -> Result<Vec<Property>, Failure> {
    match suite {
        SuiteName::Invariants => invariants(cfg),
        SuiteName::Oracle => oracles(cfg),
        SuiteName::Order => order(cfg),
    }
}

fn fold_rows(rows: &[DiagnosticsRow], keep: impl Fn(&DiagnosticsRow) -> bool, f: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
    rows.iter().filter(|r| keep(r)).map(f).fold(0.0, f64::max)
}

fn invariants(cfg: &SimConfig) -> Result<Vec<Property>, Failure> {
    let space = space_of(cfg)?;
    let s0 = initial_state(cfg, &space)?;
    let charge = charge_tr_q3(&s0.q);
    let mut props = vec![
        Property::at_most("initial Hermitian defect", s0.q.hermitian_defect(), 1e-12),
        Property::at_most("initial projector residual", projector_residual(&s0.q), 1e-10),
        Property::at_most("initial charge integrality", (charge - charge.round()).abs(), 1e-8),
    ];
    let traj = simulate(&s0, cfg.dt, cfg.t_final, cfg.alpha, &options(cfg))?;
    let rows = &traj.rows;
    let e0 = rows[0].energy;
    let all = |_: &DiagnosticsRow| true;
    props.push(Property::at_most(
        "relative energy drift",
        fold_rows(rows, all, |r| (r.energy - e0).abs()) / e0.abs().max(1.0),
        1e-7,
    ));
    props.push(Property::at_most("charge drift", fold_rows(rows, all, |r| (r.charge_tr_q3 - rows[0].charge_tr_q3).abs()), 1e-8));
    props.push(Property::at_most(
        "split-trace identity",
        fold_rows(rows, |r| r.projector_residual <= 1e-9, |r| (r.split_trace - r.charge_tr_q3).abs()),
        1e-9,
    ));
    if cfg.alpha < ALPHA_LIMIT {
        let slack = rows.iter().map(|r| r.coercivity_slack).fold(f64::INFINITY, f64::min);
        props.push(Property::at_least("coercivity slack", slack, -1e-9));
    }
    let norm_slack = rows
        .iter()
        .filter(|r| r.projector_residual <= 1e-8)
        .map(|r| r.norm_bound_slack)
        .fold(f64::INFINITY, f64::min);
    if norm_slack.is_finite() {
        props.push(Property::at_least("norm bound slack", norm_slack, -1e-8));
    }
    let q = &traj.final_state.q;
    props.push(Property::at_most("final Hermitian defect", q.hermitian_defect() / q.hs_norm().max(1.0), 1e-10));
    Ok(props)
}

fn oracles(cfg: &SimConfig) -> Result<Vec<Property>, Failure> {
    let mut props = Vec::new();

    let tiny = MomentumSpace::new(cfg.lambda_cutoff, 3)?;
    let lat = tiny.lattice();
    let a = 1.0 / lat.spacing();
    let h32 = lat.cell_volume().sqrt();
    let zero = C64::new(0.0, 0.0);
    let psi: Vec<C64> = lat
        .points()
        .iter()
        .flat_map(|p| {
            let amp = (-0.5 * a * a * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp() * h32;
            [C64::new(amp, 0.0), zero, zero, zero]
        })
        .collect();
    let q = KernelOperator::rank_one(&tiny, &psi)?;
    let origin = lat
        .points()
        .iter()
        .position(|p| p.iter().all(|&c| c == 0.0))
        .expect("odd lattices contain the origin");
    let value = (2.0 * PI).powi(3) * exchange_op(&q).kernel(origin, origin)[(0, 0)].re;
    let reference = oracle::band_limited_exchange(a, cfg.lambda_cutoff);
    props.push(Property::at_most("rank-one exchange at n=3 (relative)", ((value - reference) / reference).abs(), 0.05));

    let space = MomentumSpace::new(cfg.lambda_cutoff, 7)?;
    let mut pairs = Vec::new();
    let shapes: Vec<(f64, [f64; 3])> = cfg.nuclei.iter().map(|n| (n.sigma, n.x0)).collect();
    for (i, &(si, xi)) in shapes.iter().enumerate() {
        pairs.push((si, si, 0.0));
        for &(sj, xj) in &shapes[i + 1..] {
            let d = ((xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2) + (xi[2] - xj[2]).powi(2)).sqrt();
            pairs.push((si, sj, d));
        }
    }
    if pairs.is_empty() {
        pairs = vec![(0.5, 0.5, 0.0), (0.5, 0.5, 2.0)];
    }
    for (s1, s2, d) in pairs {
        let f1 = gaussian_density(&space, GaussianShape::new(s1)?, 1.0, [0.0; 3]);
        let f2 = gaussian_density(&space, GaussianShape::new(s2)?, 1.0, [d, 0.0, 0.0]);
        let value = coulomb_inner(&f1, &f2)?.re;
        let reference = oracle::gaussian_pair(s1, s2, d);
        props.push(Property::at_most(
            format!("Gaussian pair σ=({s1}, {s2}) d={d} at n=7 (relative)"),
            ((value - reference) / reference).abs(),
            0.02,
        ));
    }
    Ok(props)
}

fn distance(a: &SystemState, b: &SystemState) -> f64 {
    let dq = a.q.sub(&b.q).expect("same space").hs_norm();
    a.nuclei.iter().zip(&b.nuclei).fold(dq, |m, (x, y)| {
        let dx = (0..3).map(|i| (x.x[i] - y.x[i]).powi(2)).sum::<f64>().sqrt();
        let dv = (0..3).map(|i| (x.v[i] - y.v[i]).powi(2)).sum::<f64>().sqrt();
        m.max(dx).max(dv)
    })
}

fn integrate(s0: &SystemState, steps: usize, span: f64, alpha: f64) -> Result<SystemState, Failure> {
    let dt = span / steps as f64;
    let mut s = s0.clone();
    for _ in 0..steps {
        s = rk4_step(&s, dt, alpha, false)?;
    }
    Ok(s)
}

/// Richardson study: global errors at `T/8`, `T/16`, `T/32` against a
/// `T/256` reference, with `T = min(t_final, 0.4)`.
fn order(cfg: &SimConfig) -> Result<Vec<Property>, Failure> {
    let space = space_of(cfg)?;
    let s0 = initial_state(cfg, &space)?;
    let span = cfg.t_final.min(0.4);
    let reference = integrate(&s0, 256, span, cfg.alpha)?;
    let errors = [8, 16, 32]
        .iter()
        .map(|&n| Ok(distance(&integrate(&s0, n, span, cfg.alpha)?, &reference)))
        .collect::<Result<Vec<f64>, Failure>>()?;
    if errors.iter().all(|&e| e <= 1e-13) {
        return Ok(vec![Property::at_most("RK4 global error (exact flow)", errors[0], 1e-13)]);
    }
    // Least-squares slope of log₂ e against log₂(1/dt).
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let slope = -((ys[2] - ys[0]) / 2.0);
    Ok(vec![Property {
        name: "RK4 convergence order".into(),
        value: slope,
        limit: "4 ± 0.3".into(),
        pass: (slope - 4.0).abs() <= 0.3,
    }])
}
