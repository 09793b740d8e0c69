use nalgebra::{ComplexField, DVector};

use super::system::{Model, SemiDiscreteSystem};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Right-hand side `F = (f1, f2, f3, f4, f5, f6)` of a resolvent or static
/// problem, ordered like the state `(V, Phi, P, Theta, u, eta)`. The four
/// fields are sampled on all `n + 1` nodes; `f5`, `f6` are the tip entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing<T> {
    pub f1: Vec<T>,
    pub f2: Vec<T>,
    pub f3: Vec<T>,
    pub f4: Vec<T>,
    pub f5: T,
    pub f6: T,
}

impl<T: ComplexField<RealField = f64> + Copy> Forcing<T> {
    pub fn zeros(mesh: &Mesh) -> Self {
        let z = vec![T::zero(); mesh.elements() + 1];
        Self {
            f1: z.clone(),
            f2: z.clone(),
            f3: z.clone(),
            f4: z,
            f5: T::zero(),
            f6: T::zero(),
        }
    }

    /// Samples four field functions at the nodes.
    pub fn from_fns(mesh: &Mesh, fields: [&dyn Fn(f64) -> T; 4], f5: T, f6: T) -> Self {
        let sample = |f: &dyn Fn(f64) -> T| mesh.nodes().iter().map(|&x| f(x)).collect();
        Self {
            f1: sample(fields[0]),
            f2: sample(fields[1]),
            f3: sample(fields[2]),
            f4: sample(fields[3]),
            f5,
            f6,
        }
    }

    pub fn is_zero(&self) -> bool {
        let z = T::zero();
        [&self.f1, &self.f2, &self.f3, &self.f4]
            .iter()
            .all(|v| v.iter().all(|&x| x == z))
            && self.f5 == z
            && self.f6 == z
    }

    /// `(f_q, load)`: interpolated displacement components and the
    /// consistent load `rho M1 f2 + m1 f5 e_tip` (and its `P` analog).
    pub(crate) fn discretize(
        &self,
        system: &SemiDiscreteSystem,
    ) -> Result<(DVector<T>, DVector<T>)> {
        let mesh = system.mesh();
        let n = mesh.elements();
        for v in [&self.f1, &self.f2, &self.f3, &self.f4] {
            if v.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    found: v.len(),
                });
            }
        }
        if self.f1[0] != T::zero() || self.f3[0] != T::zero() {
            return Err(Error::ClampViolation(
                "displacement components of the forcing must vanish at x = 0".into(),
            ));
        }
        let d = system.dofs();
        let mut fq = DVector::zeros(d);
        let mut load = DVector::zeros(d);
        let h = mesh.h();
        let (blocks, tips): (Vec<(&Vec<T>, &Vec<T>, f64)>, Vec<(T, f64)>) = match system.model() {
            Model::Coupled(p) => (
                vec![(&self.f1, &self.f2, p.rho), (&self.f3, &self.f4, p.mu)],
                vec![(self.f5, p.m1), (self.f6, p.m2)],
            ),
            Model::Scalar(w) => (
                vec![(&self.f1, &self.f2, w.density)],
                vec![(self.f5, w.tip_mass)],
            ),
        };
        for (b, ((disp, vel, density), (tip, tip_mass))) in blocks.iter().zip(tips).enumerate() {
            let o = b * n;
            for i in 0..n {
                fq[o + i] = disp[i + 1];
                // Row i of M1 (free node i + 1) against the full nodal vector.
                let left = vel[i];
                let mid = vel[i + 1];
                let diag = if i + 1 == n { h / 3.0 } else { 2.0 * h / 3.0 };
                let mut s = left * T::from_real(h / 6.0) + mid * T::from_real(diag);
                if i + 1 < n {
                    s += vel[i + 2] * T::from_real(h / 6.0);
                }
                load[o + i] = s * T::from_real(*density);
            }
            load[o + n - 1] += tip * T::from_real(tip_mass);
        }
        Ok((fq, load))
    }
}
