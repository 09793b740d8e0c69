use nalgebra::DVector;
use piezo_lab_core::spectral::{self, ResolventEvaluator};
use piezo_lab_core::timestepper::{run, RunConfig};
use piezo_lab_core::verification::{multiplier_check, AffineMultiplier};
use piezo_lab_core::{assemble, generator, BeamParameters, Mesh, SemiDiscreteSystem};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = BeamParameters> {
    (
        (0.3f64..3.0, 0.3f64..3.0, 0.3f64..3.0, 0.3f64..3.0),
        (0.0f64..2.0, 0.0f64..3.0, 0.0f64..3.0),
        (0.0f64..2.0, 0.0f64..2.0, 0.5f64..2.0),
    )
        .prop_map(
            |((rho, mu, alpha1, beta), (gamma, xi1, xi2), (m1, m2, length))| BeamParameters {
                rho,
                mu,
                alpha1,
                beta,
                gamma,
                xi1,
                xi2,
                m1,
                m2,
                length,
            },
        )
}

fn system(n: usize, p: &BeamParameters) -> SemiDiscreteSystem {
    assemble(&Mesh::new(n, p.length).unwrap(), p).unwrap()
}

fn state(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_is_dissipative_with_boundary_loss(p in params(), x in state(48)) {
        let gen = generator(&system(12, &p)).unwrap();
        let x = DVector::from_vec(x);
        let (lhs, rhs) = gen.dissipativity_pair(&x);
        let scale = gen.w_norm(&x) * gen.w_norm(&gen.apply(&x));
        prop_assert!(rhs <= 0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} {} {}", lhs, rhs, scale);
    }

    #[test]
    fn energy_is_half_the_weight_form(p in params(), x in state(40)) {
        let sys = system(10, &p);
        let gen = generator(&sys).unwrap();
        let x = DVector::from_vec(x);
        let e = sys.energy(x.as_slice()).unwrap();
        let w = gen.w_norm(&x);
        prop_assert!(e.total >= 0.0);
        prop_assert!((2.0 * e.total - w * w).abs() <= 1e-12 * w * w);
        let parts = e.kinetic_v + e.kinetic_p + e.elastic + e.magnetic_coupling + e.tip_v + e.tip_p;
        prop_assert!((parts - e.total).abs() <= 1e-14 * e.total.max(1.0));
    }

    #[test]
    fn midpoint_balance_holds_for_any_step(p in params(), x in state(32), dt in 1e-3f64..0.5) {
        let sys = system(8, &p);
        let x0 = DVector::from_vec(x);
        let traj = run(&sys, &x0, &RunConfig::new(dt, 40.0 * dt)).unwrap();
        let e0 = traj.initial_energy();
        prop_assert!(traj.max_step_residual <= 1e-12 * e0.max(1e-300));
        prop_assert!(traj.balance_residual() <= 1e-11 * e0.max(1e-300));
        for w in traj.energies.windows(2) {
            prop_assert!(w[1].total <= w[0].total * (1.0 + 1e-12));
        }
    }

    #[test]
    fn spectrum_is_stable_and_conjugate_closed(p in params()) {
        let gen = generator(&system(8, &p)).unwrap();
        let rep = spectral::spectrum(&gen).unwrap();
        prop_assert_eq!(rep.eigenvalues.len(), 32);
        prop_assert!(rep.spectral_abscissa <= 1e-10, "{}", rep.spectral_abscissa);
        prop_assert!(rep.conjugation_defect() <= 1e-10 * rep.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max));
    }

    #[test]
    fn conservative_spectrum_on_axis(p in params()) {
        let gen = generator(&system(8, &p.without_damping())).unwrap();
        let rep = spectral::spectrum(&gen).unwrap();
        for z in &rep.eigenvalues {
            prop_assert!(z.re.abs() <= 1e-10 * z.norm().max(1.0), "{}", z);
        }
    }

    #[test]
    fn resolvent_norm_dominates_inverse_distance(p in params(), lambda in 0.0f64..30.0) {
        let mut p = p;
        p.xi1 = p.xi1.max(0.1);
        p.m1 = p.m1.max(0.1);
        let gen = generator(&system(10, &p)).unwrap();
        let rep = spectral::spectrum(&gen).unwrap();
        let dist = rep
            .eigenvalues
            .iter()
            .map(|z| (z - piezo_lab_core::Complex64::new(0.0, lambda)).norm())
            .fold(f64::INFINITY, f64::min);
        if let Ok(norm) = ResolventEvaluator::new(&gen).norm(lambda) {
            prop_assert!(norm >= (1.0 - 1e-8) / dist, "{} {}", norm, 1.0 / dist);
        }
    }

    #[test]
    fn multiplier_inequality_for_random_affine_q(
        p in params(),
        x in state(40),
        m in -2.0f64..2.0,
        n in -1.0f64..1.0,
        damped in any::<bool>(),
    ) {
        let p = if damped { p } else { p.without_damping() };
        let sys = system(10, &p);
        let dt = 0.5 * sys.mesh().h() / p.nominal_max_speed();
        let cfg = RunConfig { keep_states: true, ..RunConfig::new(dt, 60.0 * dt) };
        let traj = run(&sys, &DVector::from_vec(x), &cfg).unwrap();
        let rep = multiplier_check(&traj, &sys, AffineMultiplier { m, n }, [0.0, p.length]).unwrap();
        prop_assert!(rep.satisfied, "{:?}", rep);
    }
}
