use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discretization::{Forcing, GeneratorMatrix, Model};
use crate::error::{Error, Result};
use crate::linalg::{Complex64, Lu};
use crate::model::{element_h1, element_l2};

use super::simpson;

/// Functionals of the resolvent solution `(i lambda - A) U = F` with the
/// multiplier `q(x) = x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventIdentityReport {
    pub lambda: f64,
    /// `rho L |Phi(L)|^2 + alpha1 L |V_x(L)|^2`.
    pub i_v: f64,
    /// `mu L |Theta(L)|^2 + beta L |(gamma V_x - P_x)(L)|^2`.
    pub i_p: f64,
    /// `∫ rho|Phi|^2 + alpha1|V_x|^2 + mu|Theta|^2 + beta|gamma V_x - P_x|^2`.
    pub n2: f64,
    /// `2 Re ∫ mu q (f4 conj(P_x) + Theta conj(f3_x))`.
    pub r1: f64,
    /// `2 Re ∫ rho q (f2 conj(V_x) + Phi conj(f1_x))`.
    pub r2: f64,
    /// `|I_V + I_P - N^2 + R1 + R2|`.
    pub residual: f64,
    /// `||F||^2` in the continuous energy norm of the nodal interpolant.
    pub forcing_norm2: f64,
    /// Constant `C` of `N^2 <= C (I_V + I_P + ||F||^2)`.
    pub estimate_constant: f64,
    pub estimate_holds: bool,
    /// `xi1 |u|^2 + xi2 |eta|^2`, equal to `Re <F, U>_W`.
    pub boundary_dissipation: f64,
    pub state_norm_w: f64,
    pub forcing_norm_w: f64,
    /// `boundary_dissipation <= ||U||_W ||F||_W`.
    pub dissipation_bound_holds: bool,
}

/// Solves `(i lambda - A) x = f` through the second-order form
/// `(s^2 M + s D + K) q = load + (s M + D) f_q`, `v = s q - f_q`, `s = i lambda`.
pub fn shifted_solve(
    gen: &GeneratorMatrix,
    lambda: f64,
    forcing: &Forcing<Complex64>,
) -> Result<DVector<Complex64>> {
    let system = gen.system();
    let d = system.dofs();
    let s = Complex64::new(0.0, lambda);
    let c = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
    let (m, dm, k) = (c(system.mass()), c(system.damping()), c(system.stiffness()));
    let (fq, load) = forcing.discretize(system)?;
    let op = &m * (s * s) + &dm * s + &k;
    let rhs = load + (&m * s + &dm) * &fq;
    let lu = Lu::new(&op).map_err(|_| Error::SingularShift { lambda })?;
    lu.check_conditioning()
        .map_err(|_| Error::SingularShift { lambda })?;
    let q = lu.solve(&rhs);
    let v = &q * s - &fq;
    let mut x = DVector::zeros(2 * d);
    x.rows_mut(0, d).copy_from(&q);
    x.rows_mut(d, d).copy_from(&v);
    Ok(x)
}

/// Evaluates the multiplier identity `I_V + I_P - N^2 = -R1 - R2` and the
/// estimate `N^2 <= C (I_V + I_P + ||F||^2)` on the discrete resolvent
/// solution. All spatial integrals are exact for the piecewise-linear
/// fields.
pub fn resolvent_identity_check(
    gen: &GeneratorMatrix,
    lambda: f64,
    forcing: &Forcing<Complex64>,
) -> Result<ResolventIdentityReport> {
    let system = gen.system();
    let Model::Coupled(p) = *system.model() else {
        return Err(Error::InvalidArgument(
            "resolvent identity needs the coupled model".into(),
        ));
    };
    let x = shifted_solve(gen, lambda, forcing)?;
    let s = system.continuous_state(x.as_slice())?;
    let mesh = system.mesh();
    let (h, ne, l) = (mesh.h(), mesh.elements(), mesh.length());
    let g = Complex64::new(p.gamma, 0.0);
    let slope = |f: &[Complex64], e: usize| (f[e + 1] - f[e]) / h;

    let (vx_l, px_l) = (slope(&s.v, ne - 1), slope(&s.p, ne - 1));
    let i_v = l * (p.rho * s.phi[ne].norm_sqr() + p.alpha1 * vx_l.norm_sqr());
    let i_p = l * (p.mu * s.theta[ne].norm_sqr() + p.beta * (g * vx_l - px_l).norm_sqr());

    let (mut n2, mut r1, mut r2, mut f2n) = (0.0, 0.0, 0.0, 0.0);
    let f = forcing;
    for e in 0..ne {
        let gw = |v: &[Complex64], pp: &[Complex64], i: usize| g * v[i] - pp[i];
        n2 += p.rho * element_l2(s.phi[e], s.phi[e + 1], h)
            + p.alpha1 * element_h1(s.v[e], s.v[e + 1], h)
            + p.mu * element_l2(s.theta[e], s.theta[e + 1], h)
            + p.beta * element_h1(gw(&s.v, &s.p, e), gw(&s.v, &s.p, e + 1), h);
        f2n += p.rho * element_l2(f.f2[e], f.f2[e + 1], h)
            + p.alpha1 * element_h1(f.f1[e], f.f1[e + 1], h)
            + p.mu * element_l2(f.f4[e], f.f4[e + 1], h)
            + p.beta * element_h1(gw(&f.f1, &f.f3, e), gw(&f.f1, &f.f3, e + 1), h);
        let (vx, px) = (slope(&s.v, e), slope(&s.p, e));
        let (f1x, f3x) = (slope(&f.f1, e), slope(&f.f3, e));
        let lin = |a: &[Complex64], t: f64| a[e] + (a[e + 1] - a[e]) * t;
        let term1 = |t: f64| {
            let x = (e as f64 + t) * h;
            x * p.mu * (lin(&f.f4, t) * px.conj() + lin(&s.theta, t) * f3x.conj()).re
        };
        let term2 = |t: f64| {
            let x = (e as f64 + t) * h;
            x * p.rho * (lin(&f.f2, t) * vx.conj() + lin(&s.phi, t) * f1x.conj()).re
        };
        r1 += 2.0 * simpson(term1(0.0), term1(0.5), term1(1.0), h);
        r2 += 2.0 * simpson(term2(0.0), term2(0.5), term2(1.0), h);
    }
    f2n += p.m1 * f.f5.norm_sqr() + p.m2 * f.f6.norm_sqr();

    let c_p = p.gamma / p.alpha1.sqrt() + 1.0 / p.beta.sqrt();
    let c_r = 4.0 * l * ((p.rho / p.alpha1).sqrt() + p.mu.sqrt() * c_p);
    let estimate_constant = 2f64.max(c_r * c_r);

    let fw = gen.forcing_vector(forcing)?;
    let state_norm_w = gen.w_norm(&x);
    let forcing_norm_w = gen.w_norm(&fw);
    let boundary_dissipation = -system.dissipation_rate(x.as_slice());
    let tol = 1e-10 * (state_norm_w * forcing_norm_w).max(f64::MIN_POSITIVE);

    Ok(ResolventIdentityReport {
        lambda,
        i_v,
        i_p,
        n2,
        r1,
        r2,
        residual: (i_v + i_p - n2 + r1 + r2).abs(),
        forcing_norm2: f2n,
        estimate_constant,
        estimate_holds: n2 <= estimate_constant * (i_v + i_p + f2n),
        boundary_dissipation,
        state_norm_w,
        forcing_norm_w,
        dissipation_bound_holds: boundary_dissipation <= state_norm_w * forcing_norm_w + tol,
    })
}
