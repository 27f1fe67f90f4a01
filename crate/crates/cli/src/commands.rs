use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use bdf_core::checkpoint::write_checkpoint;
use bdf_core::dynamics::{write_diagnostics_csv, Trajectory};
use bdf_core::{
    build_initial_state, estimate_constants, simulate, BdfError, ConstantReport, MomentumSpace, SimulationOptions,
    SystemState,
};

use crate::config::{ConfigError, SimConfig};

/// Why a subcommand stopped; each maps to one exit status.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Suite(String),
    Divergence(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Runtime(_) => 1,
            Failure::Suite(_) => 2,
            Failure::Divergence(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Suite(m) | Failure::Divergence(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<BdfError> for Failure {
    fn from(e: BdfError) -> Self {
        match e {
            BdfError::Config(_) | BdfError::ChargeTooLarge { .. } => Failure::Config(e.to_string()),
            BdfError::Divergence { .. } | BdfError::NonFinite(_) => Failure::Divergence(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub fn space_of(cfg: &SimConfig) -> Result<Arc<MomentumSpace>, Failure> {
    MomentumSpace::new(cfg.lambda_cutoff, cfg.n_per_axis).map_err(|e| Failure::Config(e.to_string()))
}

pub fn initial_state(cfg: &SimConfig, space: &Arc<MomentumSpace>) -> Result<SystemState, Failure> {
    Ok(build_initial_state(space, cfg.initial_kind(), cfg.nuclei()?, cfg.alpha)?)
}

pub fn options(cfg: &SimConfig) -> SimulationOptions {
    SimulationOptions {
        retraction: cfg.integrator.retraction,
        retraction_period: cfg.integrator.retraction_period,
        sample_every: cfg.output.sample_every,
        divergence_bound: cfg.integrator.divergence_bound,
        keep_states: false,
    }
}

/// Drift metrics of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub steps: usize,
    pub samples: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub relative_energy_drift: f64,
    pub charge_initial: f64,
    pub charge_drift: f64,
    pub max_projector_residual: f64,
    pub min_coercivity_slack: f64,
    pub hs_norm_final: f64,
}

impl Summary {
    pub fn of(traj: &Trajectory) -> Self {
        let rows = &traj.rows;
        let first = &rows[0];
        let last = rows.last().expect("trajectory has rows");
        let max = |f: &dyn Fn(&bdf_core::dynamics::DiagnosticsRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        Summary {
            steps: traj.steps,
            samples: rows.len(),
            energy_initial: first.energy,
            energy_final: last.energy,
            relative_energy_drift: max(&|r| (r.energy - first.energy).abs()) / first.energy.abs().max(1.0),
            charge_initial: first.charge_tr_q3,
            charge_drift: max(&|r| (r.charge_tr_q3 - first.charge_tr_q3).abs()),
            max_projector_residual: max(&|r| r.projector_residual),
            min_coercivity_slack: rows.iter().map(|r| r.coercivity_slack).fold(f64::INFINITY, f64::min),
            hs_norm_final: last.hs_norm,
        }
    }

    pub fn render(&self, cfg: &SimConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "dt = {:e}", cfg.dt);
        let _ = writeln!(s, "t_final = {:e}", cfg.t_final);
        let _ = writeln!(s, "alpha = {:e}", cfg.alpha);
        for (key, v) in self.values() {
            let _ = writeln!(s, "{key} = {v:e}");
        }
        let _ = writeln!(s, "outside_proven_regime = {}", !cfg.warnings().is_empty());
        s
    }

    fn values(&self) -> [(&'static str, f64); 8] {
        [
            ("energy_initial", self.energy_initial),
            ("energy_final", self.energy_final),
            ("relative_energy_drift", self.relative_energy_drift),
            ("charge_initial", self.charge_initial),
            ("charge_drift", self.charge_drift),
            ("max_projector_residual", self.max_projector_residual),
            ("min_coercivity_slack", self.min_coercivity_slack),
            ("hs_norm_final", self.hs_norm_final),
        ]
    }

    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.values().into_iter().find(|(_, v)| !v.is_finite()).map(|(k, _)| k)
    }
}

pub fn run_simulate(cfg: &SimConfig, out: &Path) -> Result<Summary, Failure> {
    let space = space_of(cfg)?;
    let s0 = initial_state(cfg, &space)?;
    let traj = simulate(&s0, cfg.dt, cfg.t_final, cfg.alpha, &options(cfg))?;
    let summary = Summary::of(&traj);
    if let Some(key) = summary.first_non_finite() {
        return Err(Failure::Divergence(format!("non-finite value in summary field {key}")));
    }
    fs::create_dir_all(out)?;
    let csv = BufWriter::new(File::create(out.join(&cfg.output.path))?);
    write_diagnostics_csv(&traj.rows, csv)?;
    fs::write(out.join("summary.toml"), summary.render(cfg))?;
    if let Some(path) = &cfg.output.checkpoint {
        write_checkpoint(&traj.final_state.q, BufWriter::new(File::create(out.join(path))?))?;
    }
    Ok(summary)
}

pub fn constants_report(cfg: &SimConfig) -> Result<ConstantReport, Failure> {
    let space = space_of(cfg)?;
    let s0 = initial_state(cfg, &space)?;
    let c = &cfg.constants;
    Ok(estimate_constants(&space, &s0.nuclei, cfg.alpha, c.c_e, s0.q.hs_norm(), c.samples, c.seed)?)
}

pub fn render_constants(cfg: &SimConfig, r: &ConstantReport) -> Result<String, Failure> {
    let values = [
        ("C_f", r.c_f),
        ("C_F", r.c_big_f),
        ("C_1", r.c1),
        ("C_2", r.c2),
        ("C_3", r.c3),
        ("kappa", r.kappa),
        ("C_e", r.c_e),
        ("Q_I_norm", r.q_initial_norm),
        ("tau_bdf", r.tau_bdf),
    ];
    let mut s = String::new();
    for (key, v) in values {
        if !v.is_finite() {
            return Err(Failure::Divergence(format!("non-finite constant {key}")));
        }
        let _ = writeln!(s, "{key} = {v:e}");
    }
    match r.tau_newton {
        Some(t) => {
            let _ = writeln!(s, "tau_newton = {t:e}");
        }
        None => {
            let _ = writeln!(s, "tau_newton = \"unconstrained\"");
        }
    }
    let _ = writeln!(s, "tau_admissible = {:e}", r.tau_admissible);
    let _ = writeln!(s, "samples = {}", r.samples);
    let _ = writeln!(s, "dt_within_tau = {}", cfg.dt <= r.tau_admissible);
    let _ = writeln!(s, "t_final_within_tau = {}", cfg.t_final <= r.tau_admissible);
    Ok(s)
}
