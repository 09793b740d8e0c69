use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{self, BeamParameters, ContinuousState, EnergyBreakdown, Field, ScalarWave};

/// What was discretized: the coupled beam or one isolated wave field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Coupled(BeamParameters),
    Scalar(ScalarWave),
}

/// Tip quantities read off a state vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryTraces<T> {
    /// `V_x(L)`, exact derivative of the last linear element.
    pub vx_l: T,
    /// `P_x(L)`, likewise.
    pub px_l: T,
    pub u: T,
    pub eta: T,
}

/// Mass, damping and stiffness of the piecewise-linear element model.
///
/// Unknowns are the free nodal values `1..=n` of each field, `V` block first.
/// A state vector is `(q, v)` with `q` the displacements and `v` the
/// velocities, so the tip velocity of a field is its last velocity entry.
#[derive(Debug, Clone)]
pub struct SemiDiscreteSystem {
    mesh: Mesh,
    model: Model,
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
}

/// Scalar element matrices on the free nodes: `(M1, K1)`.
pub fn scalar_matrices(mesh: &Mesh) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = mesh.elements();
    let h = mesh.h();
    let mut m1 = DMatrix::zeros(n, n);
    let mut k1 = DMatrix::zeros(n, n);
    // Element e joins nodes e and e+1; free index is node - 1.
    for e in 0..n {
        let local = [e.checked_sub(1), Some(e)];
        for (a, ia) in local.iter().enumerate() {
            let Some(i) = ia else { continue };
            for (b, ib) in local.iter().enumerate() {
                let Some(j) = ib else { continue };
                m1[(*i, *j)] += h / 6.0 * if a == b { 2.0 } else { 1.0 };
                k1[(*i, *j)] += if a == b { 1.0 } else { -1.0 } / h;
            }
        }
    }
    (m1, k1)
}

/// Assembles the coupled beam.
pub fn assemble(mesh: &Mesh, params: &BeamParameters) -> Result<SemiDiscreteSystem> {
    params.validate()?;
    if (mesh.length() - params.length).abs() > 1e-12 * params.length {
        return Err(Error::InvalidArgument(format!(
            "mesh length {} differs from beam length {}",
            mesh.length(),
            params.length
        )));
    }
    let n = mesh.elements();
    let (m1, k1) = scalar_matrices(mesh);
    let mut mass = DMatrix::zeros(2 * n, 2 * n);
    let mut stiffness = DMatrix::zeros(2 * n, 2 * n);
    let mut damping = DMatrix::zeros(2 * n, 2 * n);
    let gb = params.gamma * params.beta;
    mass.view_mut((0, 0), (n, n)).copy_from(&(&m1 * params.rho));
    mass.view_mut((n, n), (n, n)).copy_from(&(&m1 * params.mu));
    mass[(n - 1, n - 1)] += params.m1;
    mass[(2 * n - 1, 2 * n - 1)] += params.m2;
    stiffness
        .view_mut((0, 0), (n, n))
        .copy_from(&(&k1 * params.alpha()));
    stiffness
        .view_mut((n, n), (n, n))
        .copy_from(&(&k1 * params.beta));
    if gb != 0.0 {
        let off = &k1 * (-gb);
        stiffness.view_mut((0, n), (n, n)).copy_from(&off);
        stiffness.view_mut((n, 0), (n, n)).copy_from(&off);
    }
    damping[(n - 1, n - 1)] = params.xi1;
    damping[(2 * n - 1, 2 * n - 1)] = params.xi2;
    Ok(SemiDiscreteSystem {
        mesh: mesh.clone(),
        model: Model::Coupled(*params),
        mass,
        damping,
        stiffness,
    })
}

/// Assembles a single wave field in isolation.
pub fn assemble_scalar(mesh: &Mesh, wave: &ScalarWave) -> Result<SemiDiscreteSystem> {
    wave.validate()?;
    let n = mesh.elements();
    let (m1, k1) = scalar_matrices(mesh);
    let mut mass = m1 * wave.density;
    mass[(n - 1, n - 1)] += wave.tip_mass;
    let stiffness = k1 * wave.stiffness;
    let mut damping = DMatrix::zeros(n, n);
    damping[(n - 1, n - 1)] = wave.gain;
    Ok(SemiDiscreteSystem {
        mesh: mesh.clone(),
        model: Model::Scalar(*wave),
        mass,
        damping,
        stiffness,
    })
}

impl SemiDiscreteSystem {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Beam constants, `None` for a scalar system.
    pub fn params(&self) -> Option<&BeamParameters> {
        match &self.model {
            Model::Coupled(p) => Some(p),
            Model::Scalar(_) => None,
        }
    }

    pub fn fields(&self) -> usize {
        match self.model {
            Model::Coupled(_) => 2,
            Model::Scalar(_) => 1,
        }
    }

    /// Displacement unknowns (= velocity unknowns).
    pub fn dofs(&self) -> usize {
        self.fields() * self.mesh.elements()
    }

    /// Length of a state vector `(q, v)`.
    pub fn state_dim(&self) -> usize {
        2 * self.dofs()
    }

    /// Index of the tip node of `field` within one block.
    pub fn tip_dof(&self, field: Field) -> Option<usize> {
        let n = self.mesh.elements();
        match (field, self.fields()) {
            (Field::V, _) => Some(n - 1),
            (Field::P, 2) => Some(2 * n - 1),
            _ => None,
        }
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// `K q` evaluated element by element from nodal differences. Agrees with
    /// `stiffness() * q` but avoids the cancellation of the assembled `±1/h`
    /// entries on fine meshes.
    pub fn stiffness_apply(&self, q: &DVector<f64>) -> DVector<f64> {
        let n = self.mesh.elements();
        let h = self.mesh.h();
        let k1 = |block: usize| {
            let node = |j: usize| if j == 0 { 0.0 } else { q[block * n + j - 1] };
            // Slope on element e, then free node i gathers slope(i) - slope(i+1).
            let slope: Vec<f64> = (0..n).map(|e| (node(e + 1) - node(e)) / h).collect();
            (0..n)
                .map(|i| slope[i] - slope.get(i + 1).copied().unwrap_or(0.0))
                .collect::<Vec<_>>()
        };
        match &self.model {
            Model::Coupled(p) => {
                let (kv, kp) = (k1(0), k1(1));
                let gb = p.gamma * p.beta;
                let a = p.alpha();
                DVector::from_iterator(
                    2 * n,
                    (0..n)
                        .map(|i| a * kv[i] - gb * kp[i])
                        .chain((0..n).map(|i| p.beta * kp[i] - gb * kv[i])),
                )
            }
            Model::Scalar(w) => {
                DVector::from_iterator(n, k1(0).into_iter().map(|x| w.stiffness * x))
            }
        }
    }

    /// `(xi1, xi2)`; the second is zero for a scalar system.
    pub fn gains(&self) -> (f64, f64) {
        match &self.model {
            Model::Coupled(p) => (p.xi1, p.xi2),
            Model::Scalar(w) => (w.gain, 0.0),
        }
    }

    /// Same system with the feedback removed.
    pub fn conservative(&self) -> Self {
        let model = match self.model {
            Model::Coupled(p) => Model::Coupled(p.without_damping()),
            Model::Scalar(w) => Model::Scalar(ScalarWave { gain: 0.0, ..w }),
        };
        Self {
            mesh: self.mesh.clone(),
            model,
            mass: self.mass.clone(),
            damping: DMatrix::zeros(self.dofs(), self.dofs()),
            stiffness: self.stiffness.clone(),
        }
    }

    pub(crate) fn check_state_len(&self, len: usize) -> Result<()> {
        if len != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// Nodal fields on all `n + 1` nodes, the clamped node included. A scalar
    /// system fills the `V`/`Phi` slots and leaves `P`/`Theta` at zero.
    pub fn continuous_state<T: ComplexField<RealField = f64> + Copy>(
        &self,
        x: &[T],
    ) -> Result<ContinuousState<T>> {
        self.check_state_len(x.len())?;
        let n = self.mesh.elements();
        let d = self.dofs();
        let field = |offset: usize| {
            std::iter::once(T::zero())
                .chain(x[offset..offset + n].iter().copied())
                .collect::<Vec<_>>()
        };
        let mut s = ContinuousState::zeros(&self.mesh);
        s.v = field(0);
        s.phi = field(d);
        if self.fields() == 2 {
            s.p = field(n);
            s.theta = field(d + n);
        }
        s.u = s.phi[n];
        s.eta = s.theta[n];
        Ok(s)
    }

    /// Packs nodal fields into a state vector, checking the clamped end and
    /// the tip identification.
    pub fn state_from_continuous<T: ComplexField<RealField = f64> + Copy>(
        &self,
        s: &ContinuousState<T>,
    ) -> Result<DVector<T>> {
        s.check(&self.mesh)?;
        if s.phi[0] != T::zero() || s.theta[0] != T::zero() {
            return Err(Error::ClampViolation(
                "velocities must vanish at x = 0".into(),
            ));
        }
        let n = self.mesh.elements();
        let d = self.dofs();
        let mut x = DVector::zeros(self.state_dim());
        for i in 0..n {
            x[i] = s.v[i + 1];
            x[d + i] = s.phi[i + 1];
            if self.fields() == 2 {
                x[n + i] = s.p[i + 1];
                x[d + n + i] = s.theta[i + 1];
            }
        }
        Ok(x)
    }

    /// Energy of a state vector, split into its physical parts. Equals
    /// `(q^H K q + v^H M v) / 2`.
    pub fn energy<T: ComplexField<RealField = f64> + Copy>(
        &self,
        x: &[T],
    ) -> Result<EnergyBreakdown> {
        let s = self.continuous_state(x)?;
        match &self.model {
            Model::Coupled(p) => model::energy(&s, &self.mesh, p),
            Model::Scalar(w) => model::scalar_energy(&s.v, &s.phi, &self.mesh, w),
        }
    }

    /// Tip derivatives and tip velocities of a state vector.
    pub fn traces<T: ComplexField<RealField = f64> + Copy>(&self, x: &[T]) -> BoundaryTraces<T> {
        let n = self.mesh.elements();
        let d = self.dofs();
        let h = self.mesh.h();
        let slope = |o: usize| (x[o + n - 1] - x[o + n - 2]) * T::from_real(1.0 / h);
        if self.fields() == 2 {
            BoundaryTraces {
                vx_l: slope(0),
                px_l: slope(n),
                u: x[d + n - 1],
                eta: x[d + 2 * n - 1],
            }
        } else {
            BoundaryTraces {
                vx_l: slope(0),
                px_l: T::zero(),
                u: x[d + n - 1],
                eta: T::zero(),
            }
        }
    }

    /// `-xi1 |u|^2 - xi2 |eta|^2` at the tip velocities of `x`.
    pub fn dissipation_rate<T: ComplexField<RealField = f64> + Copy>(&self, x: &[T]) -> f64 {
        let t = self.traces(x);
        let (xi1, xi2) = self.gains();
        -xi1 * t.u.modulus_squared() - xi2 * t.eta.modulus_squared()
    }
}
