use std::sync::Arc;

use super::constants::gaussian_constant;
use super::*;
use crate::coulomb::gaussian_density;
use crate::geom::{norm, sub};
use crate::meanfield::bdf_rhs;
use crate::opspace::free_evolution;
use crate::space::MomentumSpace;

fn space() -> Arc<MomentumSpace> {
    MomentumSpace::new(2.0, 3).unwrap()
}

fn pair(d: f64, v: f64) -> Vec<NucleusState> {
    vec![
        NucleusState::new(1.0, 100.0, 0.5, [-d / 2.0, 0.0, 0.0], [v, 0.0, 0.0]).unwrap(),
        NucleusState::new(1.0, 100.0, 0.5, [d / 2.0, 0.0, 0.0], [-v, 0.0, 0.0]).unwrap(),
    ]
}

fn perturbed(space: &Arc<MomentumSpace>, nuclei: Vec<NucleusState>, eps: f64) -> SystemState {
    build_initial_state(space, InitialKind::Perturbed { epsilon: eps, seed: 3 }, nuclei, 0.1).unwrap()
}

fn state_distance(a: &SystemState, b: &SystemState) -> f64 {
    let dq = a.q.sub(&b.q).unwrap().hs_norm();
    a.nuclei
        .iter()
        .zip(&b.nuclei)
        .map(|(x, y)| norm(sub(x.x, y.x)) + norm(sub(x.v, y.v)))
        .fold(dq, f64::max)
}

fn run(s: &SystemState, dt: f64, steps: usize, alpha: f64) -> SystemState {
    (0..steps).fold(s.clone(), |s, _| rk4_step(&s, dt, alpha, false).unwrap())
}

#[test]
fn energy_examples() {
    let s = space();
    let one = SystemState { q: KernelOperator::zero(&s), nuclei: pair(2.0, 0.0)[..1].to_vec(), t: 0.0 };
    assert_eq!(total_energy(&one, 0.1), 0.0);

    let two = SystemState { q: KernelOperator::zero(&s), nuclei: pair(2.0, 0.03), t: 0.0 };
    let a = gaussian_density(&s, two.nuclei[0].shape, 1.0, two.nuclei[0].x);
    let b = gaussian_density(&s, two.nuclei[1].shape, 1.0, two.nuclei[1].x);
    let expected = 100.0 * 0.03f64.powi(2) + 0.1 * coulomb_inner(&a, &b).unwrap().re;
    assert!((total_energy(&two, 0.1) - expected).abs() < 1e-14);

    let e = energy_breakdown(&two, 0.1);
    assert_eq!((e.free, e.attraction, e.direct, e.exchange), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn exchange_energy_is_nonnegative() {
    let s = space();
    for seed in 0..3 {
        let q = crate::opspace::random_hs_sample(&s, 1.0, seed);
        assert!(exchange_energy(&q) > 0.0);
    }
}

#[test]
fn rk4_step_is_consistent() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let rhs = coupled_rhs(&s0, 0.1);
    let defect = |dt: f64| {
        let next = rk4_step(&s0, dt, 0.1, false).unwrap();
        let euler = advance(&s0, &rhs, dt);
        state_distance(&next, &euler)
    };
    let ratio = defect(1e-2) / defect(5e-3);
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
    assert!(rk4_step(&s0, 0.0, 0.1, false).is_err());
    let stepped = rk4_step(&s0, 0.25, 0.1, false).unwrap();
    assert_eq!(stepped.t, 0.25);
}

#[test]
fn free_evolution_matches_exact_phases() {
    let s = space();
    let s0 = perturbed(&s, Vec::new(), 0.2);
    let end = run(&s0, 5e-3, 100, 0.0);
    let exact = free_evolution(&s0.q, 0.5);
    let err = end.q.sub(&exact).unwrap().hs_norm();
    assert!(err < 1e-8 * s0.q.hs_norm().max(1.0), "{err}");
}

#[test]
fn global_error_is_fourth_order() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let reference = run(&s0, 0.0125, 16, 0.1);
    let e1 = state_distance(&run(&s0, 0.1, 2, 0.1), &reference);
    let e2 = state_distance(&run(&s0, 0.05, 4, 0.1), &reference);
    let ratio = e1 / e2;
    assert!(ratio > 11.2 && ratio < 20.8, "{ratio}");
}

#[test]
fn retraction_restores_projector() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let plain = rk4_step(&s0, 0.1, 0.1, false).unwrap();
    let retracted = rk4_step(&s0, 0.1, 0.1, true).unwrap();
    assert!(projector_residual(&retracted.q) < 1e-12);
    assert!(projector_residual(&retracted.q) <= projector_residual(&plain.q));
}

#[test]
fn nuclei_move_freely_without_coupling() {
    let s = space();
    let nuclei = pair(2.0, 0.05);
    let s0 = perturbed(&s, nuclei.clone(), 0.1);
    let traj = simulate(&s0, 0.01, 0.5, 0.0, &SimulationOptions::default()).unwrap();
    for row in &traj.rows {
        for (k, n) in nuclei.iter().enumerate() {
            let exact = crate::geom::axpy(n.x, row.t, n.v);
            assert!(norm(sub(row.positions[k], exact)) < 1e-10);
            assert_eq!(row.velocities[k], n.v);
        }
    }
}

#[test]
fn simulate_samples_and_conserves() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let opts = SimulationOptions { sample_every: 5, keep_states: true, ..Default::default() };
    let traj = simulate(&s0, 0.01, 0.23, 0.1, &opts).unwrap();
    assert_eq!(traj.steps, 23);
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    assert_eq!(times.len(), 6);
    assert!((times[5] - 0.23).abs() < 1e-15);
    assert_eq!(traj.states.len(), traj.rows.len());
    let e0 = traj.rows[0].energy;
    for r in &traj.rows {
        assert!((r.energy - e0).abs() <= 1e-8 * e0.abs().max(1.0), "{} {}", r.energy, e0);
        assert!((r.charge_tr_q3 - traj.rows[0].charge_tr_q3).abs() < 1e-10);
        assert!(r.coercivity_slack >= -1e-9);
        assert!(r.norm_bound_slack >= -1e-8);
    }
}

#[test]
fn divergence_guard_trips() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.3);
    let opts = SimulationOptions { divergence_bound: 1e-3, ..Default::default() };
    let err = simulate(&s0, 0.01, 0.1, 0.1, &opts).unwrap_err();
    assert!(matches!(err, BdfError::Divergence { .. }), "{err}");
    let bad = SimulationOptions { sample_every: 0, ..Default::default() };
    assert!(matches!(simulate(&s0, 0.01, 0.1, 0.1, &bad), Err(BdfError::Config(_))));
    assert!(simulate(&s0, -0.01, 0.1, 0.1, &SimulationOptions::default()).is_err());
}

#[test]
fn csv_schema() {
    assert_eq!(
        csv_header(1),
        ["t", "energy", "charge_trQ3", "projector_residual", "hs_norm_Q", "x1", "y1", "z1", "vx1", "vy1", "vz1"]
    );
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let traj = simulate(&s0, 0.05, 0.1, 0.1, &SimulationOptions { sample_every: 1, ..Default::default() }).unwrap();
    let mut out = Vec::new();
    write_diagnostics_csv(&traj.rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0].split(',').count(), 17);
    let energy: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(energy, traj.rows[0].energy);
}

#[test]
fn initial_state_examples() {
    let s = space();
    let vac = build_initial_state(&s, InitialKind::Vacuum, pair(2.0, 0.0), 0.1).unwrap();
    assert_eq!(vac.q.hs_norm(), 0.0);

    let charged = build_initial_state(&s, InitialKind::Charged { charge: 1 }, pair(2.0, 0.0), 0.1).unwrap();
    assert!((charge_tr_q3(&charged.q) - 1.0).abs() < 1e-8);
    assert!(projector_residual(&charged.q) < 1e-10);
    let three = build_initial_state(&s, InitialKind::Charged { charge: 3 }, pair(2.0, 0.0), 0.1).unwrap();
    assert!((charge_tr_q3(&three.q) - 3.0).abs() < 1e-8);

    let too_many = 2 * s.len() + 1;
    let err = build_initial_state(&s, InitialKind::Charged { charge: too_many }, Vec::new(), 0.1).unwrap_err();
    assert!(matches!(err, BdfError::ChargeTooLarge { .. }));

    let small = perturbed(&s, Vec::new(), 0.05);
    let large = perturbed(&s, Vec::new(), 0.1);
    assert!(charge_tr_q3(&small.q).abs() < 1e-8);
    assert!(projector_residual(&large.q) < 1e-10);
    let ratio = large.q.hs_norm() / small.q.hs_norm();
    assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
}

#[test]
fn charged_orbital_lowers_energy_in_nuclear_field() {
    let s = space();
    let free = build_initial_state(&s, InitialKind::Charged { charge: 1 }, Vec::new(), 0.0).unwrap();
    let bound = build_initial_state(&s, InitialKind::Charged { charge: 1 }, pair(0.0, 0.0), 0.5).unwrap();
    assert!((p0_split_trace_d0(&free.q) - 1.0).abs() < 1e-12);
    let attraction = energy_breakdown(&bound, 0.5).attraction;
    assert!(attraction < 0.0);
}

#[test]
fn coercivity_and_norm_bound_on_states() {
    let s = space();
    for alpha in [0.05, 0.1, 0.5] {
        for kind in [InitialKind::Perturbed { epsilon: 0.3, seed: 5 }, InitialKind::Charged { charge: 2 }] {
            let st = build_initial_state(&s, kind, pair(1.0, 0.02), alpha).unwrap();
            assert!(coercivity_slack(&st, alpha) >= -1e-9);
            assert!(norm_bound_slack(&st.q) >= -1e-8);
        }
    }
}

#[test]
fn constants_examples() {
    let s = space();
    let nuclei = pair(2.0, 0.01);
    let free = estimate_constants(&s, &nuclei, 0.0, 2.0, 0.1, 3, 7).unwrap();
    assert_eq!((free.c2, free.c3), (0.0, 0.0));
    assert!((free.c_big_f - free.c1).abs() <= 1e-12 * free.c1);
    assert!(free.tau_newton.is_none());
    assert_eq!(free.tau_admissible, free.tau_bdf);
    assert!(free.admits(free.tau_admissible));
    assert!(1.0 / (1.0 - free.tau_admissible * free.c_big_f) < 2.0);

    let few = estimate_constants(&s, &nuclei, 0.1, 2.0, 0.1, 2, 7).unwrap();
    let many = estimate_constants(&s, &nuclei, 0.1, 2.0, 0.1, 4, 7).unwrap();
    assert!(many.c_big_f >= few.c_big_f);
    assert!(many.c1 >= few.c1 && many.c2 >= few.c2 && many.c3 >= few.c3);
    for r in [&few, &many] {
        assert!(r.admits(r.tau_admissible));
        assert!(!r.admits(r.tau_admissible * (1.0 + 1e-9)));
        for c in [r.c_f, r.c_big_f, r.c1, r.c2, r.c3, r.kappa, r.tau_admissible] {
            assert!(c.is_finite() && c >= 0.0);
        }
    }

    let resting = pair(2.0, 0.0);
    let degenerate = estimate_constants(&s, &resting, 0.1, 2.0, 0.0, 1, 7).unwrap();
    assert!(degenerate.tau_newton.is_none());
    assert!(estimate_constants(&s, &nuclei, 0.1, 1.0, 0.1, 1, 7).is_err());
    assert!(estimate_constants(&s, &nuclei, 0.1, 2.0, 0.1, 0, 7).is_err());
}

#[test]
fn gaussian_constant_is_translation_invariant() {
    let mut nuclei = pair(2.0, 0.0);
    let c = gaussian_constant(&nuclei);
    nuclei[0].x = [5.0, -3.0, 1.0];
    assert_eq!(gaussian_constant(&nuclei), c);
    let sigma: f64 = 0.5;
    let expected = (1.0 / (sigma * std::f64::consts::PI.sqrt()))
        .max(1.0 / (2.0 * std::f64::consts::PI.sqrt() * sigma.powi(3)))
        .sqrt();
    assert!((c - expected).abs() < 1e-15);
}

#[test]
fn picard_decouples_without_interaction() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let report = picard_schauder(&s0, 0.05, 0.01, 0.0, 5, 1e-10).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 1);
    assert!(report.matches_direct);
}

#[test]
fn picard_contracts_at_small_coupling() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let report = picard_schauder(&s0, 0.05, 0.01, 0.01, 10, 1e-13).unwrap();
    assert!(report.converged, "{:?}", report.distances);
    assert!(report.iterations >= 2);
    assert!(report.contracts_below(1.0), "{:?}", report.ratios);
    assert!(report.direct_mismatch < 1e-10, "{}", report.direct_mismatch);
    let direct = run(&s0, 0.01, 5, 0.01);
    assert!(report.final_state.q.sub(&direct.q).unwrap().hs_norm() < 1e-8);
}

#[test]
fn probe_examples() {
    let s = space();
    let s0 = perturbed(&s, pair(2.0, 0.01), 0.1);
    let none = lipschitz_divergence_probe(&s0, 0.0, 0.02, 0.2, 0.1, 2, 1).unwrap();
    assert!(none.separation.iter().all(|&h| h == 0.0));
    assert_eq!(none.rate, 0.0);

    let free = lipschitz_divergence_probe(&s0, 1e-4, 0.01, 0.2, 0.0, 5, 1).unwrap();
    assert!(free.bound_holds && free.rate.is_finite());
    // ‖ΔQ‖ is constant and Σ|Δx̄| = 2δt.
    for (&t, &h) in free.times.iter().zip(&free.separation) {
        let expected = free.separation[0] + 2.0 * 1e-4 * t;
        assert!((h - expected).abs() < 1e-10, "{t}: {h} vs {expected}");
    }

    let coupled = lipschitz_divergence_probe(&s0, 1e-4, 0.01, 0.2, 0.1, 5, 1).unwrap();
    assert!(coupled.bound_holds && coupled.rate.is_finite());
}

#[test]
fn rhs_matches_module_assembly() {
    let s = space();
    let s0 = perturbed(&s, pair(1.5, 0.02), 0.2);
    let d = coupled_rhs(&s0, 0.3);
    let direct = bdf_rhs(&s0.q, &s0.nuclei, 0.3);
    assert!(d.dq.sub(&direct).unwrap().hs_norm() < 1e-14 * direct.hs_norm());
}
