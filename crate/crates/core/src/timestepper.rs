//! Implicit midpoint integration of `M q'' + D q' + K q = 0`.
//!
//! With `x = (q, v)` the update solves
//! `(M + dt/2 D + dt^2/4 K) v+ = (M - dt/2 D - dt^2/4 K) v - dt K q`
//! and sets `q+ = q + dt/2 (v + v+)`. The energy then satisfies
//! `E+ - E = -dt v_m^T D v_m` with `v_m = (v + v+)/2`, exactly.
//!
//! All three matrices are block tridiagonal. Interleaving the two fields
//! node by node turns them into band matrices, so a step costs `O(n)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discretization::{BoundaryTraces, SemiDiscreteSystem};
use crate::error::{Error, Result};
use crate::linalg::{BandCholesky, BandMatrix};
use crate::model::EnergyBreakdown;

/// `h / (2 c_max)` with `c_max = sqrt(max(alpha/rho, beta/mu))`.
pub fn default_dt(system: &SemiDiscreteSystem) -> f64 {
    let c = match system.model() {
        crate::discretization::Model::Coupled(p) => p.nominal_max_speed(),
        crate::discretization::Model::Scalar(w) => w.speed(),
    };
    system.mesh().h() / (2.0 * c)
}

/// Factored midpoint map for one `(system, dt)` pair.
#[derive(Debug, Clone)]
pub struct MidpointStepper {
    dt: f64,
    dofs: usize,
    /// Band position of each block-ordered unknown.
    perm: Vec<usize>,
    lhs: BandCholesky,
    rhs: BandMatrix,
    stiffness: BandMatrix,
    system: SemiDiscreteSystem,
}

fn interleaving(system: &SemiDiscreteSystem) -> Vec<usize> {
    let n = system.mesh().elements();
    let fields = system.fields();
    (0..system.dofs())
        .map(|i| (i % n) * fields + i / n)
        .collect()
}

impl MidpointStepper {
    pub fn new(system: &SemiDiscreteSystem, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        Self::build(system, dt)
    }

    fn build(system: &SemiDiscreteSystem, dt: f64) -> Result<Self> {
        let perm = interleaving(system);
        let (m, d, k) = (system.mass(), system.damping(), system.stiffness());
        let b = [m, d, k]
            .iter()
            .map(|a| BandMatrix::bandwidth_of(a, &perm))
            .max()
            .unwrap_or(0);
        let plus: DMatrix<f64> = m + d * (dt / 2.0) + k * (dt * dt / 4.0);
        let minus: DMatrix<f64> = m - d * (dt / 2.0) - k * (dt * dt / 4.0);
        let lhs = BandCholesky::new(&BandMatrix::from_dense(&plus, &perm, b)?)?;
        Ok(Self {
            dt,
            dofs: system.dofs(),
            rhs: BandMatrix::from_dense(&minus, &perm, b)?,
            stiffness: BandMatrix::from_dense(k, &perm, b)?,
            lhs,
            perm,
            system: system.clone(),
        })
    }

    /// The same scheme run backwards in time (step `-dt`).
    pub fn reversed(&self) -> Result<Self> {
        Self::build(&self.system, -self.dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn system(&self) -> &SemiDiscreteSystem {
        &self.system
    }

    fn to_band(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dofs];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }

    /// Advances `x = (q, v)` by one step in place.
    pub fn step_in_place(&self, x: &mut [f64]) {
        let d = self.dofs;
        let q = self.to_band(&x[..d]);
        let v = self.to_band(&x[d..]);
        let mut r = vec![0.0; d];
        let mut kq = vec![0.0; d];
        self.rhs.mul_vec(&v, &mut r);
        self.stiffness.mul_vec(&q, &mut kq);
        for (ri, ki) in r.iter_mut().zip(&kq) {
            *ri -= self.dt * ki;
        }
        self.lhs.solve_in_place(&mut r);
        let half = 0.5 * self.dt;
        for (i, &p) in self.perm.iter().enumerate() {
            x[i] = q[p] + half * (v[p] + r[p]);
            x[d + i] = r[p];
        }
    }

    pub fn step(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        self.step_in_place(y.as_mut_slice());
        y
    }
}

/// One midpoint step. Factorizes on every call; use [`MidpointStepper`] for
/// repeated steps.
pub fn step(system: &SemiDiscreteSystem, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    system.check_state_len(x.len())?;
    Ok(MidpointStepper::new(system, dt)?.step(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record every k-th step (the initial state is always recorded).
    pub record_every: usize,
    /// Keep full state vectors of recorded steps.
    pub keep_states: bool,
}

impl RunConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            record_every: 1,
            keep_states: false,
        }
    }

    /// Number of steps, `ceil(t_end / dt)` up to roundoff.
    pub fn steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let k = r.round();
        if (r - k).abs() <= 1e-9 * r.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }

    fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push("dt must be > 0".to_string());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            bad.push("t_end must be > 0".to_string());
        }
        if self.record_every == 0 {
            bad.push("record_every must be ≥ 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameters(bad))
        }
    }
}

/// Recorded time series of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub record_every: usize,
    /// Step index of each record.
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// Empty unless the run kept states.
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<EnergyBreakdown>,
    pub traces: Vec<BoundaryTraces<f64>>,
    /// `∫_0^t (xi1 u^2 + xi2 eta^2)` accumulated with midpoint tip velocities.
    pub cumulative_dissipation: Vec<f64>,
    /// Largest `|E+ - E + dt (xi1 u_m^2 + xi2 eta_m^2)|` over all steps.
    pub max_step_residual: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_energy(&self) -> f64 {
        self.energies.first().map_or(0.0, |e| e.total)
    }

    /// Largest `|E(0) - E(t_k) - cumulative_dissipation[k]|` over records.
    pub fn balance_residual(&self) -> f64 {
        let e0 = self.initial_energy();
        self.energies
            .iter()
            .zip(&self.cumulative_dissipation)
            .map(|(e, c)| (e0 - e.total - c).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates from `x0` and records energies, tip traces and the
/// dissipation ledger.
pub fn run(system: &SemiDiscreteSystem, x0: &DVector<f64>, cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    system.check_state_len(x0.len())?;
    let stepper = MidpointStepper::new(system, cfg.dt)?;
    run_with(&stepper, x0, cfg)
}

/// As [`run`] with a prepared stepper; `cfg.dt` is ignored.
pub fn run_with(
    stepper: &MidpointStepper,
    x0: &DVector<f64>,
    cfg: &RunConfig,
) -> Result<Trajectory> {
    let system = stepper.system();
    system.check_state_len(x0.len())?;
    let dt = stepper.dt();
    let steps = RunConfig { dt, ..*cfg }.steps();
    let (xi1, xi2) = system.gains();

    let mut traj = Trajectory {
        dt,
        record_every: cfg.record_every,
        steps: Vec::new(),
        times: Vec::new(),
        states: Vec::new(),
        energies: Vec::new(),
        traces: Vec::new(),
        cumulative_dissipation: Vec::new(),
        max_step_residual: 0.0,
    };
    let mut x = x0.as_slice().to_vec();
    let mut e = system.energy(&x)?;
    let mut tr = system.traces(&x);
    let mut cum = 0.0;
    let mut record =
        |k: usize, x: &[f64], e: EnergyBreakdown, tr: BoundaryTraces<f64>, cum: f64| {
            traj.steps.push(k);
            traj.times.push(k as f64 * dt);
            if cfg.keep_states {
                traj.states.push(x.to_vec());
            }
            traj.energies.push(e);
            traj.traces.push(tr);
            traj.cumulative_dissipation.push(cum);
        };
    record(0, &x, e, tr, cum);
    let mut max_residual = 0.0f64;
    for k in 1..=steps {
        stepper.step_in_place(&mut x);
        let e_next = system.energy(&x)?;
        let tr_next = system.traces(&x);
        let um = 0.5 * (tr.u + tr_next.u);
        let em = 0.5 * (tr.eta + tr_next.eta);
        let loss = dt * (xi1 * um * um + xi2 * em * em);
        max_residual = max_residual.max((e_next.total - e.total + loss).abs());
        cum += loss;
        e = e_next;
        tr = tr_next;
        if k % cfg.record_every == 0 || k == steps {
            record(k, &x, e, tr, cum);
        }
    }
    traj.max_step_residual = max_residual;
    Ok(traj)
}

/// Runs the same system with both feedback gains set to zero.
pub fn run_conservative(
    system: &SemiDiscreteSystem,
    x0: &DVector<f64>,
    cfg: &RunConfig,
) -> Result<Trajectory> {
    run(&system.conservative(), x0, cfg)
}
