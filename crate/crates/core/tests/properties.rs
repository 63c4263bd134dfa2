use aqec_core::codes::{codeword_from_action, ladder_from_action};
use aqec_core::fock::{assemble_matrix, extract_all};
use aqec_core::linalg::{hermiticity_defect, trace, CMatrix, C64};
use aqec_core::rl::{AqecEnv, CurriculumSchedule, RewardConfig};
use aqec_core::{breakeven_reference, gain, AnalyticSolver, FockDensityMatrix, LossChannelSet, ProjectorLadder};
use proptest::prelude::*;

fn density(entries: &[(f64, f64)], dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |i, j| {
        let (re, im) = entries[i * dim + j];
        C64::new(re, im)
    });
    let p = &g * g.adjoint();
    let tr = p.trace();
    p / tr
}

fn action() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.95..0.95f64, 15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_keeps_trace_and_hermiticity(
        entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
        d in prop::collection::vec(0.05..1.0f64, 7),
        eta in 0.0..0.08f64,
        lambda in 0.0..2000.0f64,
        tau in 0.0..3.0f64,
    ) {
        let rho = FockDensityMatrix::new(density(&entries, 8)).unwrap();
        let ladder = ProjectorLadder::new(d).unwrap();
        let s = AnalyticSolver::new(8, &LossChannelSet::with_double_photon(eta), Some(&ladder), lambda).unwrap();
        let out = s.evolve(&rho, tau).unwrap();
        prop_assert!((trace(out.matrix()).re - 1.0).abs() < 1e-9);
        prop_assert!(trace(out.matrix()).im.abs() < 1e-9);
        prop_assert!(hermiticity_defect(out.matrix()) < 1e-9);
        prop_assert!(s.max_eigen_real() <= 1e-9);
    }

    #[test]
    fn diagonal_round_trip(entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 36)) {
        let rho = density(&entries, 6);
        let back = assemble_matrix(&extract_all(&rho), 6).unwrap();
        prop_assert!((back - &rho).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn breakeven_bounds(tau in 0.0..50.0f64, dt in 1e-3..5.0f64) {
        let f = breakeven_reference(tau);
        prop_assert!((0.5..=1.0).contains(&f));
        prop_assert!(breakeven_reference(tau + dt) < f);
        prop_assert!((gain(f.min(0.999), f.min(0.999)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn actions_give_normalized_orthogonal_codewords(a in action()) {
        let c = &a[..8];
        prop_assume!(c.iter().any(|&x| x > 1e-3) && c.iter().any(|&x| x < -1e-3));
        let code = codeword_from_action(c).unwrap();
        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        prop_assert!((norm(code.zero_logical()) - 1.0).abs() < 1e-12);
        prop_assert!((norm(code.one_logical()) - 1.0).abs() < 1e-12);
        let inner: C64 = code.zero_logical().iter().zip(code.one_logical()).map(|(x, y)| x.conj() * y).sum();
        prop_assert!(inner.norm() < 1e-12);
    }

    #[test]
    fn ladder_action_is_sign_blind(d in prop::collection::vec(-0.95..0.95f64, 7)) {
        prop_assume!(d.iter().any(|x| x.abs() > 1e-3));
        let flipped: Vec<f64> = d.iter().map(|x| -x).collect();
        let a = ladder_from_action(&d).unwrap();
        let b = ladder_from_action(&flipped).unwrap();
        prop_assert_eq!(a.coeffs(), b.coeffs());
    }

    #[test]
    fn environment_is_deterministic(seed in any::<u64>(), a in action(), b in action()) {
        let schedule = CurriculumSchedule::default();
        let run = || {
            let mut env = AqecEnv::reset(&schedule, 2, RewardConfig::default(), seed).unwrap();
            let mut out = Vec::new();
            for act in [&a, &b] {
                if env.is_done() {
                    break;
                }
                let (obs, r, done, _) = env.step(act).unwrap();
                out.push((obs.to_vec(), r, done));
            }
            out
        };
        let (x, y) = (run(), run());
        prop_assert_eq!(x.len(), y.len());
        for (p, q) in x.iter().zip(&y) {
            prop_assert_eq!(p.2, q.2);
            prop_assert_eq!(p.1.to_bits(), q.1.to_bits());
            prop_assert!(p.0.iter().zip(&q.0).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }

    #[test]
    fn episodes_respect_horizon(seed in any::<u64>(), k in 1usize..5, a in action()) {
        let schedule = CurriculumSchedule::default();
        let mut env = AqecEnv::reset(&schedule, k, RewardConfig::default(), seed).unwrap();
        let mut steps = 0;
        while !env.is_done() {
            env.step(&a).unwrap();
            steps += 1;
        }
        prop_assert!(steps <= k);
    }
}
