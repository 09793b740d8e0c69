use serde::{Deserialize, Serialize};

use crate::discretization::{Model, SemiDiscreteSystem};
use crate::error::{Error, Result};
use crate::model::{element_h1, element_l2, BeamParameters};
use crate::timestepper::Trajectory;

/// `q(x) = m x + n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMultiplier {
    pub m: f64,
    pub n: f64,
}

impl AffineMultiplier {
    /// `q(x) = x / L`.
    pub fn normalized(length: f64) -> Self {
        Self {
            m: 1.0 / length,
            n: 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.m * x + self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    /// `|∫(q(b) I(b,t) - q(a) I(a,t)) dt - m ∫ E1 dt|`.
    pub lhs: f64,
    /// `M (E1(T) + E1(0))`.
    pub bound: f64,
    pub constant: f64,
    /// `2 |[∫ q (rho V_t V_x + mu P_t P_x) dx]_0^T|`, which `lhs` equals for
    /// exact solutions.
    pub time_boundary_term: f64,
    pub q_spec: AffineMultiplier,
    pub interval: [f64; 2],
    pub satisfied: bool,
}

/// `M = 2 ||q||_inf max{rho, (1 + 2 gamma^2)/alpha1, mu, 2/beta}` on `[a, b]`.
pub fn multiplier_constant(p: &BeamParameters, q: &AffineMultiplier, interval: [f64; 2]) -> f64 {
    let qmax = q.eval(interval[0]).abs().max(q.eval(interval[1]).abs());
    let g2 = p.gamma * p.gamma;
    2.0 * qmax
        * p.rho
            .max((1.0 + 2.0 * g2) / p.alpha1)
            .max(p.mu)
            .max(2.0 / p.beta)
}

fn node_index(x: f64, h: f64, n: usize) -> Result<usize> {
    let k = (x / h).round();
    if k < 0.0 || k > n as f64 || (x - k * h).abs() > 1e-9 * h.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "interval endpoint {x} is not a mesh node"
        )));
    }
    Ok(k as usize)
}

/// Evaluates both sides of the multiplier inequality on a recorded
/// trajectory. Time integrals use the trapezoidal rule over every step, so
/// the trajectory must record every step and keep its states.
pub fn multiplier_check(
    traj: &Trajectory,
    system: &SemiDiscreteSystem,
    q: AffineMultiplier,
    interval: [f64; 2],
) -> Result<MultiplierReport> {
    let Model::Coupled(p) = *system.model() else {
        return Err(Error::InvalidArgument(
            "multiplier check needs the coupled model".into(),
        ));
    };
    if traj.record_every != 1 {
        return Err(Error::TooCoarse(traj.record_every));
    }
    if traj.states.len() != traj.times.len() || traj.states.is_empty() {
        return Err(Error::InvalidArgument(
            "multiplier check needs the trajectory states".into(),
        ));
    }
    let mesh = system.mesh();
    let (h, ne) = (mesh.h(), mesh.elements());
    let [a, b] = interval;
    if !(a < b) {
        return Err(Error::InvalidArgument("interval must satisfy a < b".into()));
    }
    let (ia, ib) = (node_index(a, h, ne)?, node_index(b, h, ne)?);

    let mut boundary = Vec::with_capacity(traj.len());
    let mut e1 = Vec::with_capacity(traj.len());
    let mut moment = Vec::with_capacity(traj.len());
    for x in &traj.states {
        let s = system.continuous_state(x.as_slice())?;
        let g = p.gamma;
        let slope = |f: &[f64], e: usize| (f[e + 1] - f[e]) / h;
        let density = |j: usize, e: usize| {
            let vx = slope(&s.v, e);
            let px = slope(&s.p, e);
            p.rho * s.phi[j].powi(2)
                + p.alpha1 * vx * vx
                + p.mu * s.theta[j].powi(2)
                + p.beta * (g * vx - px).powi(2)
        };
        // One-sided derivatives from the elements inside [a, b].
        let ib_val = density(ib, ib - 1);
        let ia_val = density(ia, ia);
        boundary.push(q.eval(b) * ib_val - q.eval(a) * ia_val);
        let mut en = 0.0;
        let mut mo = 0.0;
        for e in ia..ib {
            let gw0 = g * s.v[e] - s.p[e];
            let gw1 = g * s.v[e + 1] - s.p[e + 1];
            en += p.rho * element_l2(s.phi[e], s.phi[e + 1], h)
                + p.alpha1 * element_h1(s.v[e], s.v[e + 1], h)
                + p.mu * element_l2(s.theta[e], s.theta[e + 1], h)
                + p.beta * element_h1(gw0, gw1, h);
            // q * (rho Phi V_x + mu Theta P_x): q and the velocities are
            // linear, the slopes constant.
            let (vx, px) = (slope(&s.v, e), slope(&s.p, e));
            let f = |t: f64| {
                let x = (e as f64 + t) * h;
                let phi = s.phi[e] + t * (s.phi[e + 1] - s.phi[e]);
                let th = s.theta[e] + t * (s.theta[e + 1] - s.theta[e]);
                q.eval(x) * (p.rho * phi * vx + p.mu * th * px)
            };
            mo += super::simpson(f(0.0), f(0.5), f(1.0), h);
        }
        e1.push(en);
        moment.push(mo);
    }
    let trap = |y: &[f64]| -> f64 {
        y.windows(2)
            .zip(traj.times.windows(2))
            .map(|(v, t)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
            .sum()
    };
    let lhs = (trap(&boundary) - q.m * trap(&e1)).abs();
    let constant = multiplier_constant(&p, &q, interval);
    let bound = constant * (e1[0] + e1[e1.len() - 1]);
    Ok(MultiplierReport {
        lhs,
        bound,
        constant,
        time_boundary_term: 2.0 * (moment[moment.len() - 1] - moment[0]).abs(),
        q_spec: q,
        interval,
        satisfied: lhs <= bound,
    })
}
