use std::f64::consts::PI;

use piezo_lab_core::discretization::{assemble_scalar, Preset};
use piezo_lab_core::timestepper::{default_dt, run, RunConfig};
use piezo_lab_core::verification::{
    multiplier_check, multiplier_constant, resolvent_identity_check, shifted_solve, static_solve,
    AffineMultiplier,
};
use piezo_lab_core::{
    assemble, generator, project_initial_data, BeamParameters, Complex64, Error, Field, Forcing,
    Mesh, SemiDiscreteSystem,
};

fn system(n: usize, p: &BeamParameters) -> SemiDiscreteSystem {
    assemble(&Mesh::new(n, p.length).unwrap(), p).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn smooth_complex(mesh: &Mesh) -> Forcing<Complex64> {
    let nodes = mesh.nodes();
    let map = |f: &dyn Fn(f64) -> Complex64| nodes.iter().map(|&x| f(x)).collect::<Vec<_>>();
    Forcing {
        f1: map(&|x| c((PI * x / 2.0).sin(), 0.3 * x * x)),
        f2: map(&|x| c(1.0 + x, -(2.0 * x).cos())),
        f3: map(&|x| c(x * (1.0 - x), 0.5 * (3.0 * x).sin())),
        f4: map(&|x| c((x).exp(), 0.2)),
        f5: c(0.4, -0.1),
        f6: c(-0.2, 0.7),
    }
}

#[test]
fn static_zero_forcing_gives_zero_state() {
    let sys = system(20, &BeamParameters::default());
    let sol = static_solve(&sys, &Forcing::zeros(sys.mesh())).unwrap();
    assert!(sol.state.iter().all(|&v| v == 0.0));
    assert_eq!(sol.residual, 0.0);
}

/// `alpha V'' = rho c` on `(0, L)`, `V(0) = 0`, `alpha V'(L) = -m1 f5`.
fn poisson_closed_form(p: &BeamParameters, c: f64, f5: f64, x: f64) -> f64 {
    let a = p.alpha1;
    p.rho * c / a * (0.5 * x * x - p.length * x) - p.m1 * f5 / a * x
}

#[test]
fn static_constant_load_matches_quadratic_at_nodes() {
    let p = BeamParameters {
        gamma: 0.0,
        rho: 1.7,
        alpha1: 2.3,
        m1: 0.8,
        length: 1.5,
        ..Default::default()
    };
    for (cst, f5) in [(0.9, 0.0), (0.9, 0.9), (-1.2, 0.4)] {
        let sys = system(30, &p);
        let mut f = Forcing::zeros(sys.mesh());
        f.f2 = vec![cst; 31];
        f.f5 = f5;
        let sol = static_solve(&sys, &f).unwrap();
        let nodes = sys.mesh().nodes();
        for j in 1..=30 {
            let exact = poisson_closed_form(&p, cst, f5, nodes[j]);
            assert!(
                (sol.state[j - 1] - exact).abs() < 1e-10,
                "node {j}: {} vs {exact}",
                sol.state[j - 1]
            );
        }
        // P stays at rest and the velocities equal f_q = 0.
        assert!(sol.state[30..].iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn static_velocity_block_is_displacement_forcing() {
    let p = BeamParameters::default();
    let sys = system(10, &p);
    let fns: [&dyn Fn(f64) -> f64; 4] = [&|x| x, &|_| 0.0, &|x| -2.0 * x, &|_| 0.0];
    let f = Forcing::from_fns(sys.mesh(), fns, 0.0, 0.0);
    let sol = static_solve(&sys, &f).unwrap();
    let nodes = sys.mesh().nodes();
    for j in 1..=10 {
        assert_eq!(sol.state[20 + j - 1], nodes[j]);
        assert_eq!(sol.state[30 + j - 1], -2.0 * nodes[j]);
    }
    assert!(sol.residual < 1e-12);
}

#[test]
fn static_forcing_must_be_clamped() {
    let sys = system(6, &BeamParameters::default());
    let mut f = Forcing::zeros(sys.mesh());
    f.f1[0] = 1.0;
    assert!(matches!(
        static_solve(&sys, &f),
        Err(Error::ClampViolation(_))
    ));
}

#[test]
fn shifted_solve_inverts_the_generator() {
    let gen = generator(&system(16, &BeamParameters::default())).unwrap();
    let f = smooth_complex(gen.system().mesh());
    let target = gen.forcing_vector(&f).unwrap();
    for lambda in [0.0, 0.7, 5.0, 23.0] {
        let x = shifted_solve(&gen, lambda, &f).unwrap();
        let r = x.map(|z| z * c(0.0, lambda)) - gen.apply(&x) - &target;
        assert!(
            gen.w_norm(&r) < 1e-10 * gen.w_norm(&target),
            "lambda {lambda}"
        );
    }
}

#[test]
fn conservative_eigenfrequency_is_singular_shift() {
    // gamma = 0, xi = 0, m = 0: eigenvalues of the discrete generator are
    // on the imaginary axis; solving exactly there must be refused.
    let p = BeamParameters {
        gamma: 0.0,
        m1: 0.0,
        m2: 0.0,
        ..Default::default()
    }
    .without_damping();
    let gen = generator(&system(8, &p)).unwrap();
    let w = piezo_lab_core::spectral::spectrum(&gen)
        .unwrap()
        .upper_half()
        .next()
        .unwrap()
        .im;
    let f = smooth_complex(gen.system().mesh());
    assert!(matches!(
        shifted_solve(&gen, w, &f),
        Err(Error::SingularShift { .. })
    ));
}

#[test]
fn identity_with_zero_forcing_is_trivial() {
    let gen = generator(&system(12, &BeamParameters::default())).unwrap();
    let f = Forcing::zeros(gen.system().mesh());
    let rep = resolvent_identity_check(&gen, 3.0, &f).unwrap();
    for v in [rep.i_v, rep.i_p, rep.n2, rep.r1, rep.r2, rep.residual] {
        assert_eq!(v, 0.0);
    }
    assert!(rep.estimate_holds && rep.dissipation_bound_holds);
}

#[test]
fn identity_residual_decreases_at_lambda_five() {
    let p = BeamParameters::default();
    let mut res = Vec::new();
    for n in [50, 100, 200] {
        let gen = generator(&system(n, &p)).unwrap();
        let rep =
            resolvent_identity_check(&gen, 5.0, &smooth_complex(gen.system().mesh())).unwrap();
        assert!(rep.estimate_holds);
        assert!(rep.dissipation_bound_holds);
        res.push(rep.residual);
    }
    assert!(res[1] < res[0] && res[2] < res[1], "{res:?}");
    // First order or better.
    assert!(res[2] < 0.6 * res[1] && res[1] < 0.6 * res[0], "{res:?}");
}

#[test]
fn identity_terms_are_consistent_with_dissipation() {
    let gen = generator(&system(
        40,
        &BeamParameters {
            xi1: 2.0,
            xi2: 0.5,
            ..Default::default()
        },
    ))
    .unwrap();
    let rep = resolvent_identity_check(&gen, 2.0, &smooth_complex(gen.system().mesh())).unwrap();
    assert!(rep.boundary_dissipation > 0.0);
    assert!(rep.boundary_dissipation <= rep.state_norm_w * rep.forcing_norm_w);
    assert!(rep.i_v >= 0.0 && rep.i_p >= 0.0 && rep.n2 >= 0.0);
    assert!(rep.estimate_constant >= 2.0);
}

#[test]
fn identity_needs_coupled_model() {
    let p = BeamParameters::default();
    let mesh = Mesh::new(8, 1.0).unwrap();
    let gen = generator(&assemble_scalar(&mesh, &p.scalar_field(Field::V)).unwrap()).unwrap();
    let f = Forcing::zeros(&mesh);
    assert!(resolvent_identity_check(&gen, 1.0, &f).is_err());
}

#[test]
fn multiplier_constant_by_hand() {
    let p = BeamParameters {
        rho: 0.5,
        mu: 0.7,
        alpha1: 2.0,
        beta: 4.0,
        gamma: 1.0,
        ..Default::default()
    };
    // max{0.5, 3/2, 0.7, 1/2} = 1.5; ||q|| on [0, 1] with q = x is 1.
    let q = AffineMultiplier { m: 1.0, n: 0.0 };
    assert!((multiplier_constant(&p, &q, [0.0, 1.0]) - 3.0).abs() < 1e-15);
    // q = -2x + 0.5 on [0.25, 1]: max(|0|, |-1.5|) = 1.5.
    let q = AffineMultiplier { m: -2.0, n: 0.5 };
    assert!((multiplier_constant(&p, &q, [0.25, 1.0]) - 4.5).abs() < 1e-15);
}

fn recorded(
    sys: &SemiDiscreteSystem,
    preset: Preset,
    steps: usize,
) -> piezo_lab_core::timestepper::Trajectory {
    let x0 = project_initial_data(&preset.into(), sys).unwrap();
    let dt = default_dt(sys);
    let cfg = RunConfig {
        keep_states: true,
        ..RunConfig::new(dt, steps as f64 * dt)
    };
    run(sys, &x0, &cfg).unwrap()
}

#[test]
fn multiplier_holds_and_tracks_time_boundary_term() {
    let p = BeamParameters::default();
    let mut gaps = Vec::new();
    for n in [20, 40, 80] {
        let sys = system(n, &p);
        let traj = recorded(&sys, Preset::StaticDisplacement, 40 * n / 20);
        let rep =
            multiplier_check(&traj, &sys, AffineMultiplier::normalized(1.0), [0.0, 1.0]).unwrap();
        assert!(rep.satisfied, "{rep:?}");
        gaps.push((rep.lhs - rep.time_boundary_term).abs() / rep.bound);
    }
    assert!(gaps[2] < gaps[0], "{gaps:?}");
}

#[test]
fn multiplier_on_subinterval() {
    let p = BeamParameters {
        xi1: 0.0,
        xi2: 0.0,
        ..Default::default()
    };
    let sys = system(40, &p);
    let traj = recorded(&sys, Preset::GaussianVelocity, 120);
    let q = AffineMultiplier { m: 1.0, n: -0.25 };
    let rep = multiplier_check(&traj, &sys, q, [0.25, 0.75]).unwrap();
    assert!(rep.satisfied);
    assert_eq!(rep.interval, [0.25, 0.75]);
}

#[test]
fn multiplier_input_validation() {
    let p = BeamParameters::default();
    let sys = system(10, &p);
    let q = AffineMultiplier::normalized(1.0);
    let traj = recorded(&sys, Preset::ModeMix, 10);
    assert!(multiplier_check(&traj, &sys, q, [0.0, 0.55]).is_err());
    assert!(multiplier_check(&traj, &sys, q, [0.5, 0.5]).is_err());

    let x0 = project_initial_data(&Preset::ModeMix.into(), &sys).unwrap();
    let dt = default_dt(&sys);
    let coarse = RunConfig {
        keep_states: true,
        record_every: 2,
        ..RunConfig::new(dt, 10.0 * dt)
    };
    let traj2 = run(&sys, &x0, &coarse).unwrap();
    assert!(matches!(
        multiplier_check(&traj2, &sys, q, [0.0, 1.0]),
        Err(Error::TooCoarse(2))
    ));

    let stateless = run(&sys, &x0, &RunConfig::new(dt, 10.0 * dt)).unwrap();
    assert!(multiplier_check(&stateless, &sys, q, [0.0, 1.0]).is_err());
}
