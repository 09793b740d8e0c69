use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::discretization::{Forcing, SemiDiscreteSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSolution {
    /// `U = (q, v)` with `A U = F`.
    pub state: Vec<f64>,
    /// `||A U - F||_W / ||F||_W` (zero when `F = 0`).
    pub residual: f64,
    /// `||U||_W / ||F||_W` (zero when `F = 0`).
    pub norm_ratio: f64,
}

/// Solves the discrete static problem `A U = F`: `v = f_q` and
/// `K q = -load - D f_q`.
pub fn static_solve(system: &SemiDiscreteSystem, forcing: &Forcing<f64>) -> Result<StaticSolution> {
    let d = system.dofs();
    let (fq, load) = forcing.discretize(system)?;
    let chol_k = system
        .stiffness()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let chol_m = system
        .mass()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let rhs = -(&load + system.damping() * &fq);
    let mut q = chol_k.solve(&rhs);
    // Iterative refinement against the difference-form stiffness action.
    for _ in 0..2 {
        let r = &rhs - system.stiffness_apply(&q);
        q += chol_k.solve(&r);
    }
    let v = fq.clone();

    // W-norm of the velocity-block residual M^{-1}(-K q - D v - load).
    let s = &rhs - system.stiffness_apply(&q);
    let lm = chol_m.l();
    let res_v = lm
        .solve_lower_triangular(&s)
        .ok_or(Error::NotPositiveDefinite)?;
    let res_q = &v - &fq;
    let residual = (res_q.dot(&(system.stiffness() * &res_q)) + res_v.norm_squared()).sqrt();

    let f_load = lm
        .solve_lower_triangular(&load)
        .ok_or(Error::NotPositiveDefinite)?;
    let f_norm = (fq.dot(&(system.stiffness() * &fq)) + f_load.norm_squared()).sqrt();
    let u_norm = (q.dot(&(system.stiffness() * &q)) + v.dot(&(system.mass() * &v))).sqrt();

    let mut state = DVector::zeros(2 * d);
    state.rows_mut(0, d).copy_from(&q);
    state.rows_mut(d, d).copy_from(&v);
    let (residual, norm_ratio) = if f_norm > 0.0 {
        (residual / f_norm, u_norm / f_norm)
    } else {
        (0.0, 0.0)
    };
    Ok(StaticSolution {
        state: state.as_slice().to_vec(),
        residual,
        norm_ratio,
    })
}
