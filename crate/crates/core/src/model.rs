//! Physical constants of the beam, the energy functional and the boundary
//! dissipation law.
//!
//! The beam carries two longitudinal wave fields: the mechanical displacement
//! `V` of the upper plate and the charge-related displacement `P` of the lower
//! plate. Both are clamped at `x = 0`; at `x = L` each carries a point mass and
//! a velocity feedback force.

use nalgebra::ComplexField;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Material, feedback and tip-body constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParameters {
    /// Mass density.
    pub rho: f64,
    /// Magnetic permeability.
    pub mu: f64,
    /// Elastic stiffness (without the piezoelectric contribution).
    pub alpha1: f64,
    /// Impermeability coefficient.
    pub beta: f64,
    /// Piezoelectric coupling coefficient.
    pub gamma: f64,
    /// Feedback gain acting on the tip velocity of `V`.
    pub xi1: f64,
    /// Feedback gain acting on the tip velocity of `P`.
    pub xi2: f64,
    /// Tip mass attached to `V`.
    pub m1: f64,
    /// Tip mass attached to `P`.
    pub m2: f64,
    /// Beam length.
    #[serde(rename = "L", alias = "length")]
    pub length: f64,
}

impl Default for BeamParameters {
    /// Unit configuration: every constant equal to one. This is a
    /// convenient default, not a calibrated material.
    fn default() -> Self {
        Self {
            rho: 1.0,
            mu: 1.0,
            alpha1: 1.0,
            beta: 1.0,
            gamma: 1.0,
            xi1: 1.0,
            xi2: 1.0,
            m1: 1.0,
            m2: 1.0,
            length: 1.0,
        }
    }
}

/// Which of the two wave fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    V,
    P,
}

/// A single clamped wave field `density * w_tt = stiffness * w_xx` with tip
/// mass and velocity feedback at `x = L`. The coupled beam splits into two of
/// these when `gamma = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarWave {
    pub density: f64,
    pub stiffness: f64,
    pub gain: f64,
    pub tip_mass: f64,
    pub length: f64,
}

impl ScalarWave {
    pub fn speed(&self) -> f64 {
        (self.stiffness / self.density).sqrt()
    }

    /// Acoustic impedance `sqrt(density * stiffness)`.
    pub fn impedance(&self) -> f64 {
        (self.density * self.stiffness).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, value, strict) in [
            ("density", self.density, true),
            ("stiffness", self.stiffness, true),
            ("gain", self.gain, false),
            ("tip_mass", self.tip_mass, false),
            ("length", self.length, true),
        ] {
            push_violation(&mut bad, name, value, strict);
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameters(bad))
        }
    }
}

fn push_violation(out: &mut Vec<String>, name: &str, value: f64, strict: bool) {
    if !value.is_finite() {
        out.push(format!("{name} must be finite"));
    } else if strict && value <= 0.0 {
        out.push(format!("{name} must be > 0"));
    } else if !strict && value < 0.0 {
        out.push(format!("{name} must be ≥ 0"));
    }
}

impl BeamParameters {
    /// `alpha = alpha1 + gamma^2 * beta`.
    pub fn alpha(&self) -> f64 {
        effective_stiffness(self)
    }

    /// Checks every constraint and reports all violations at once. On
    /// success returns warnings for constants that are allowed but
    /// degenerate (zero coupling, zero feedback, zero tip mass).
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (name, value) in [
            ("rho", self.rho),
            ("mu", self.mu),
            ("alpha1", self.alpha1),
            ("beta", self.beta),
            ("L", self.length),
        ] {
            push_violation(&mut bad, name, value, true);
        }
        for (name, value) in [
            ("gamma", self.gamma),
            ("xi1", self.xi1),
            ("xi2", self.xi2),
            ("m1", self.m1),
            ("m2", self.m2),
        ] {
            push_violation(&mut bad, name, value, false);
        }
        if !bad.is_empty() {
            return Err(Error::InvalidParameters(bad));
        }
        let mut warnings = Vec::new();
        if self.gamma == 0.0 {
            warnings.push("gamma = 0: the two fields decouple".to_string());
        }
        for (name, value) in [("xi1", self.xi1), ("xi2", self.xi2)] {
            if value == 0.0 {
                warnings.push(format!("{name} = 0: no feedback on this field"));
            }
        }
        for (name, value) in [("m1", self.m1), ("m2", self.m2)] {
            if value == 0.0 {
                warnings.push(format!("{name} = 0: no tip body on this field"));
            }
        }
        Ok(warnings)
    }

    /// Symmetric 2x2 material matrix `[[alpha, -gamma*beta], [-gamma*beta, beta]]`.
    pub fn material_matrix(&self) -> [[f64; 2]; 2] {
        let c = -self.gamma * self.beta;
        [[self.alpha(), c], [c, self.beta]]
    }

    /// Phase speeds of the two characteristic waves, slowest first.
    pub fn wave_speeds(&self) -> [f64; 2] {
        let a = self.alpha() / self.rho;
        let d = self.beta / self.mu;
        let trace = a + d;
        let det = self.alpha1 * self.beta / (self.rho * self.mu);
        let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
        [
            (0.5 * (trace - disc)).max(0.0).sqrt(),
            (0.5 * (trace + disc)).sqrt(),
        ]
    }

    /// Speed used by the default time-step rule: `sqrt(max(alpha/rho, beta/mu))`.
    pub fn nominal_max_speed(&self) -> f64 {
        (self.alpha() / self.rho).max(self.beta / self.mu).sqrt()
    }

    /// The same parameters with both feedback gains removed.
    pub fn without_damping(&self) -> Self {
        Self {
            xi1: 0.0,
            xi2: 0.0,
            ..*self
        }
    }

    /// One field viewed as an independent wave. Exact only when `gamma = 0`.
    pub fn scalar_field(&self, field: Field) -> ScalarWave {
        match field {
            Field::V => ScalarWave {
                density: self.rho,
                stiffness: self.alpha(),
                gain: self.xi1,
                tip_mass: self.m1,
                length: self.length,
            },
            Field::P => ScalarWave {
                density: self.mu,
                stiffness: self.beta,
                gain: self.xi2,
                tip_mass: self.m2,
                length: self.length,
            },
        }
    }
}

/// `alpha1 + gamma^2 * beta`.
pub fn effective_stiffness(params: &BeamParameters) -> f64 {
    params.alpha1 + params.gamma * params.gamma * params.beta
}

/// Instantaneous energy rate `-xi1 |u|^2 - xi2 |eta|^2`.
pub fn dissipation_rate<T: ComplexField<RealField = f64>>(
    u: T,
    eta: T,
    params: &BeamParameters,
) -> f64 {
    -params.xi1 * u.modulus_squared() - params.xi2 * eta.modulus_squared()
}

/// Energy split into its six non-negative parts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic_v: f64,
    pub kinetic_p: f64,
    pub elastic: f64,
    pub magnetic_coupling: f64,
    pub tip_v: f64,
    pub tip_p: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_parts(
        kinetic_v: f64,
        kinetic_p: f64,
        elastic: f64,
        magnetic_coupling: f64,
        tip_v: f64,
        tip_p: f64,
    ) -> Self {
        Self {
            kinetic_v,
            kinetic_p,
            elastic,
            magnetic_coupling,
            tip_v,
            tip_p,
            total: kinetic_v + kinetic_p + elastic + magnetic_coupling + tip_v + tip_p,
        }
    }
}

/// Nodal samples of `(V, Phi, P, Theta)` on all `n + 1` mesh nodes plus the
/// tip velocities `u`, `eta`. `Phi` and `Theta` are the velocity fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState<T> {
    pub v: Vec<T>,
    pub phi: Vec<T>,
    pub p: Vec<T>,
    pub theta: Vec<T>,
    pub u: T,
    pub eta: T,
}

impl<T: ComplexField<RealField = f64> + Copy> ContinuousState<T> {
    pub fn zeros(mesh: &Mesh) -> Self {
        let z = vec![T::zero(); mesh.elements() + 1];
        Self {
            v: z.clone(),
            phi: z.clone(),
            p: z.clone(),
            theta: z,
            u: T::zero(),
            eta: T::zero(),
        }
    }

    /// Checks lengths, the clamped end and the tip identification
    /// `u = Phi(L)`, `eta = Theta(L)`.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let expected = mesh.elements() + 1;
        for len in [self.v.len(), self.phi.len(), self.p.len(), self.theta.len()] {
            if len != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: len,
                });
            }
        }
        if self.v[0] != T::zero() || self.p[0] != T::zero() {
            return Err(Error::ClampViolation("V(0) and P(0) must vanish".into()));
        }
        let tol = |a: T, b: T| (a - b).modulus() <= 1e-12 * (1.0 + a.modulus().max(b.modulus()));
        let n = mesh.elements();
        if !tol(self.u, self.phi[n]) {
            return Err(Error::TipMismatch("u != Phi(L)".into()));
        }
        if !tol(self.eta, self.theta[n]) {
            return Err(Error::TipMismatch("eta != Theta(L)".into()));
        }
        Ok(())
    }
}

/// `∫ |f|^2` over one element for the linear interpolant between `a` and `b`.
pub(crate) fn element_l2<T: ComplexField<RealField = f64> + Copy>(a: T, b: T, h: f64) -> f64 {
    h / 3.0 * (a.modulus_squared() + (a * b.conjugate()).real() + b.modulus_squared())
}

/// `∫ |f'|^2` over one element for the linear interpolant between `a` and `b`.
pub(crate) fn element_h1<T: ComplexField<RealField = f64> + Copy>(a: T, b: T, h: f64) -> f64 {
    (b - a).modulus_squared() / h
}

/// Energy of a sampled state. Fields are the piecewise-linear interpolants of
/// the nodal samples, integrated exactly; this is the same quadratic form as
/// the discrete energy weight of the finite-element model.
pub fn energy<T: ComplexField<RealField = f64> + Copy>(
    state: &ContinuousState<T>,
    mesh: &Mesh,
    params: &BeamParameters,
) -> Result<EnergyBreakdown> {
    state.check(mesh)?;
    let h = mesh.h();
    let g = T::from_real(params.gamma);
    let (mut kv, mut kp, mut el, mut mag) = (0.0, 0.0, 0.0, 0.0);
    for e in 0..mesh.elements() {
        kv += element_l2(state.phi[e], state.phi[e + 1], h);
        kp += element_l2(state.theta[e], state.theta[e + 1], h);
        el += element_h1(state.v[e], state.v[e + 1], h);
        let w0 = g * state.v[e] - state.p[e];
        let w1 = g * state.v[e + 1] - state.p[e + 1];
        mag += element_h1(w0, w1, h);
    }
    Ok(EnergyBreakdown::from_parts(
        0.5 * params.rho * kv,
        0.5 * params.mu * kp,
        0.5 * params.alpha1 * el,
        0.5 * params.beta * mag,
        0.5 * params.m1 * state.u.modulus_squared(),
        0.5 * params.m2 * state.eta.modulus_squared(),
    ))
}

/// Energy of a single wave field, reported in the `V` slots.
pub fn scalar_energy<T: ComplexField<RealField = f64> + Copy>(
    displacement: &[T],
    velocity: &[T],
    mesh: &Mesh,
    wave: &ScalarWave,
) -> Result<EnergyBreakdown> {
    let expected = mesh.elements() + 1;
    for len in [displacement.len(), velocity.len()] {
        if len != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: len,
            });
        }
    }
    let h = mesh.h();
    let (mut kin, mut el) = (0.0, 0.0);
    for e in 0..mesh.elements() {
        kin += element_l2(velocity[e], velocity[e + 1], h);
        el += element_h1(displacement[e], displacement[e + 1], h);
    }
    let tip = velocity[mesh.elements()];
    Ok(EnergyBreakdown::from_parts(
        0.5 * wave.density * kin,
        0.0,
        0.5 * wave.stiffness * el,
        0.0,
        0.5 * wave.tip_mass * tip.modulus_squared(),
        0.0,
    ))
}
