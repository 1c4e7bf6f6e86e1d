// SPDX-License-Identifier: Apache-2.0

//! Independent solvers agreeing on the same physics.

use quenchctl::control::ProtocolFamily;
use quenchctl::disorder::{
    defect_density_disordered, evolve_bdg, ground_energy, initial_bdg, sample_disorder, BdGSystem,
};
use quenchctl::exact_diag::{dense_ground_state, SpinOperator};
use quenchctl::ode::Tolerance;
use quenchctl::quench::{
    protocol_for, quench_all_modes, quench_two_level, NoiseSpec, SweepSettings,
};
use quenchctl::spectral::ModelSpec;

fn invariant(n: usize, ratio: f64) -> (ModelSpec, quenchctl::control::ControlProtocol) {
    let spec = ModelSpec::tfim(n, 1.0);
    let settings = SweepSettings::new(ProtocolFamily::Invariant, 10.0, 0.0, 3);
    let protocol = protocol_for(&spec, &settings, ratio).unwrap();
    (spec, protocol)
}

#[test]
fn disordered_bdg_ground_state_matches_dense_diagonalization() {
    let n = 8;
    let lambdas = sample_disorder(n, 0.3, 7).unwrap().lambdas;
    let system = BdGSystem::new(1.0, lambdas.clone()).unwrap();
    let op = SpinOperator::periodic_tfim(1.0, &lambdas).unwrap();
    for g in [0.4, 1.0, 2.5] {
        let (state, spectrum) = initial_bdg(&system, g).unwrap();
        let dense = dense_ground_state(&op, g).unwrap();
        assert!(
            (ground_energy(&spectrum) - dense.energy).abs() < 1e-9,
            "g = {g}: BdG {} vs dense {}",
            ground_energy(&spectrum),
            dense.energy
        );
        let dense_kinks =
            quenchctl::exact_diag::DenseState::from_real(&dense.vector).kink_density(n);
        let bdg_kinks = defect_density_disordered(&state).unwrap();
        assert!(
            (bdg_kinks - dense_kinks).abs() < 1e-9,
            "g = {g}: {bdg_kinks} vs {dense_kinks}"
        );
    }
}

#[test]
fn clean_bdg_quench_matches_momentum_space() {
    for n in [8, 50] {
        let (spec, protocol) = invariant(n, 2.0);
        let momentum = quench_all_modes(&spec, &protocol, None, Tolerance::default()).unwrap();
        let system = BdGSystem::uniform(n, 1.0).unwrap();
        let (start, _) = initial_bdg(&system, protocol.g0).unwrap();
        let end = evolve_bdg(&start, &system, &protocol, Tolerance::default()).unwrap();
        let nd = defect_density_disordered(&end).unwrap();
        assert!(
            (nd - momentum.n).abs() < 1e-8,
            "N = {n}: {nd} vs {}",
            momentum.n
        );
    }
}

#[test]
fn halving_the_tolerance_leaves_results_unchanged() {
    let (spec, protocol) = invariant(50, 2.0);
    let tol = Tolerance::default();
    let a = quench_all_modes(&spec, &protocol, None, tol).unwrap();
    let b = quench_all_modes(&spec, &protocol, None, tol.halved()).unwrap();
    assert!(
        (a.n - b.n).abs() < 1e-10 * a.n.max(1e-6),
        "{} vs {}",
        a.n,
        b.n
    );
    assert!((a.fidelity - b.fidelity).abs() < 1e-10);
}

#[test]
fn dephasing_raises_defects_monotonically_at_several_durations() {
    for ratio in [1.5, 2.0, 5.0] {
        let (spec, protocol) = invariant(50, ratio);
        let ns: Vec<f64> = [0.0, 0.002, 0.01, 0.02]
            .iter()
            .map(|&w| {
                let noise = NoiseSpec::new(w, 1.0).unwrap();
                quench_all_modes(&spec, &protocol, Some(&noise), Tolerance::default())
                    .unwrap()
                    .n
            })
            .collect();
        assert!(ns.windows(2).all(|p| p[0] < p[1]), "ratio {ratio}: {ns:?}");
    }
}

#[test]
fn long_invariant_passage_beats_linear_in_landau_zener() {
    let h_x = 0.1;
    let mode = quenchctl::spectral::MomentumMode::two_level(h_x);
    let tau = 100.0;
    let inv =
        quenchctl::control::ControlProtocol::invariant(&mode, 10.0, -1.0, tau, 3, 1.0).unwrap();
    let lin = quenchctl::control::ControlProtocol::linear(10.0, -1.0, tau).unwrap();
    let p_inv = quench_two_level(h_x, &inv, Tolerance::default()).unwrap().n;
    let p_lin = quench_two_level(h_x, &lin, Tolerance::default()).unwrap().n;
    assert!(p_inv < 1e-8, "invariant leaves p = {p_inv}");
    assert!(p_lin > 1e-3, "linear leaves p = {p_lin}");
}
