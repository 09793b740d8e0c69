use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::system::SemiDiscreteSystem;
use crate::error::{Error, Result};
use crate::model::ContinuousState;

/// Number of clamped-free modes superposed by [`Preset::ModeMix`] on a mesh
/// of `elements` elements: every wavenumber up to `pi / (2 h)`, so the mix
/// refines with the mesh while staying resolved.
pub fn mode_mix_terms(elements: usize) -> usize {
    (elements / 2).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `V = x / L`, everything else at rest.
    StaticDisplacement,
    /// `Phi = exp(-50 (x - L/2)^2)`, everything else zero.
    GaussianVelocity,
    /// Superposition of clamped-free modes `sin(w_k x / L)`, `w_k = (k - 1/2) pi`,
    /// with displacement coefficients `w_k^-3` (energy amplitudes `w_k^-2`),
    /// so the generator-domain norm stays bounded as the mesh is refined.
    /// `P` carries the same modes with alternating signs at half amplitude.
    ModeMix,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::StaticDisplacement,
        Preset::GaussianVelocity,
        Preset::ModeMix,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::StaticDisplacement => "static_displacement",
            Preset::GaussianVelocity => "gaussian_velocity",
            Preset::ModeMix => "mode_mix",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("unknown initial-condition preset {s:?}"))
            })
    }
}

/// Initial data: a named preset or explicit nodal samples.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Preset(Preset),
    Nodal(ContinuousState<f64>),
}

impl From<Preset> for InitialData {
    fn from(p: Preset) -> Self {
        InitialData::Preset(p)
    }
}

fn preset_state(preset: Preset, system: &SemiDiscreteSystem) -> ContinuousState<f64> {
    let mesh = system.mesh();
    let l = mesh.length();
    let n = mesh.elements();
    let mut s = ContinuousState::zeros(mesh);
    let x = mesh.nodes();
    match preset {
        Preset::StaticDisplacement => {
            s.v = x.iter().map(|&x| x / l).collect();
        }
        Preset::GaussianVelocity => {
            s.phi = x
                .iter()
                .map(|&x| (-50.0 * (x - l / 2.0).powi(2)).exp())
                .collect();
            // Keep the clamped node at rest.
            s.phi[0] = 0.0;
        }
        Preset::ModeMix => {
            for k in 1..=mode_mix_terms(n) {
                let w = (k as f64 - 0.5) * PI;
                let c = w.powi(-3);
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                for (i, &xi) in x.iter().enumerate() {
                    let m = (w * xi / l).sin();
                    s.v[i] += c * m;
                    s.p[i] += 0.5 * sign * c * m;
                }
            }
            s.v[0] = 0.0;
            s.p[0] = 0.0;
        }
    }
    s.u = s.phi[n];
    s.eta = s.theta[n];
    s
}

/// State vector `(q, v)` for the given initial data, clamped node removed and
/// tip velocities taken from the velocity fields at `x = L`.
pub fn project_initial_data(
    data: &InitialData,
    system: &SemiDiscreteSystem,
) -> Result<DVector<f64>> {
    match data {
        InitialData::Preset(p) => system.state_from_continuous(&preset_state(*p, system)),
        InitialData::Nodal(s) => system.state_from_continuous(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::assemble;
    use crate::mesh::Mesh;
    use crate::model::BeamParameters;

    fn sys(n: usize) -> SemiDiscreteSystem {
        assemble(&Mesh::new(n, 1.0).unwrap(), &BeamParameters::default()).unwrap()
    }

    #[test]
    fn static_displacement_lives_in_v_block() {
        let s = sys(10);
        let x = project_initial_data(&Preset::StaticDisplacement.into(), &s).unwrap();
        assert!(x.rows(0, 10).iter().all(|&v| v > 0.0));
        assert!(x.rows(10, 30).iter().all(|&v| v == 0.0));
        assert_eq!(x[9], 1.0);
    }

    #[test]
    fn gaussian_tip_velocity() {
        let s = sys(20);
        let x = project_initial_data(&Preset::GaussianVelocity.into(), &s).unwrap();
        let t = s.traces(x.as_slice());
        assert_eq!(t.u, (-50.0f64 * 0.25).exp());
        assert_eq!(x[40 + 9], 1.0);
    }

    #[test]
    fn mode_mix_is_displacement_only() {
        let s = sys(50);
        let x = project_initial_data(&Preset::ModeMix.into(), &s).unwrap();
        assert!(x.rows(100, 100).iter().all(|&v| v == 0.0));
        assert!(x.rows(0, 100).amax() > 0.0);
    }

    #[test]
    fn nodal_data_must_be_clamped() {
        let s = sys(4);
        let mut c = ContinuousState::zeros(s.mesh());
        c.v = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        assert!(matches!(
            project_initial_data(&InitialData::Nodal(c.clone()), &s),
            Err(Error::ClampViolation(_))
        ));
        c.v[0] = 0.0;
        let x = project_initial_data(&InitialData::Nodal(c), &s).unwrap();
        assert_eq!(x[3], 0.5);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("nope".parse::<Preset>().is_err());
    }
}
