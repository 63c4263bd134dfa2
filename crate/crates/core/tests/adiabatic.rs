//! The hybrid model reduces to the cavity-only equation as the ancilla
//! decay grows with `4g²/γ_b` held fixed.

use aqec_core::dense::hybrid::evolve_reduced;
use aqec_core::dense::{hybrid_model, IntegratorOptions};
use aqec_core::linalg::trace_distance;
use aqec_core::{named_code, AnalyticSolver, CodeName, SystemParams};

fn distance_at(gamma_b: f64, lambda: f64, tau: f64) -> f64 {
    let grl = named_code(CodeName::Grl);
    let params = SystemParams::new(gamma_b, 0.012, 1.0)
        .unwrap()
        .matching_generator(lambda)
        .unwrap();
    let rho = grl.code.bloch_state(1.1, 0.4);
    let solver = AnalyticSolver::new(8, &params.channels(), grl.ladder.as_ref(), lambda).unwrap();
    let a = solver.evolve(&rho, tau).unwrap();
    let model = hybrid_model(8, grl.recovery.as_ref(), &params).unwrap().build();
    let d = evolve_reduced(&model, &rho, 2, &[tau], &IntegratorOptions::default()).unwrap();
    trace_distance(a.matrix(), &d[0])
}

#[test]
fn reduction_error_shrinks_with_ancilla_decay() {
    let lambda = 200.0;
    let d: Vec<f64> = [800.0, 3200.0, 12800.0]
        .iter()
        .map(|&gb| distance_at(gb, lambda, 0.06))
        .collect();
    assert!(d[1] < 0.6 * d[0] && d[2] < 0.6 * d[1], "{d:?}");
    assert!(d[2] < 5e-3, "{d:?}");
}
