use nalgebra::{Cholesky, ComplexField, DMatrix, DVector, Dyn};

use super::forcing::Forcing;
use super::system::SemiDiscreteSystem;
use crate::error::{Error, Result};

/// First-order form `x' = A x` of the element model, `x = (q, v)`,
/// together with the energy weight `W = blockdiag(K, M)`.
///
/// `factor` is the upper triangular `R` with `W = R^T R`; `energy_form` is
/// `B = R A R^{-1}`, the generator written in coordinates where the energy
/// inner product is Euclidean. `B` is skew up to the damping block.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    system: SemiDiscreteSystem,
    a: DMatrix<f64>,
    w: DMatrix<f64>,
    factor: DMatrix<f64>,
    energy_form: DMatrix<f64>,
    chol_m: Cholesky<f64, Dyn>,
    chol_k: Cholesky<f64, Dyn>,
}

pub fn generator(system: &SemiDiscreteSystem) -> Result<GeneratorMatrix> {
    let d = system.dofs();
    let chol_m = system
        .mass()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let chol_k = system
        .stiffness()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;

    let minv_k = chol_m.solve(system.stiffness());
    let minv_d = chol_m.solve(system.damping());
    let mut a = DMatrix::zeros(2 * d, 2 * d);
    a.view_mut((0, d), (d, d)).fill_with_identity();
    a.view_mut((d, 0), (d, d)).copy_from(&(-minv_k));
    a.view_mut((d, d), (d, d)).copy_from(&(-minv_d));

    let mut w = DMatrix::zeros(2 * d, 2 * d);
    w.view_mut((0, 0), (d, d)).copy_from(system.stiffness());
    w.view_mut((d, d), (d, d)).copy_from(system.mass());

    let lk = chol_k.l();
    let lm = chol_m.l();
    let mut factor = DMatrix::zeros(2 * d, 2 * d);
    factor.view_mut((0, 0), (d, d)).copy_from(&lk.transpose());
    factor.view_mut((d, d), (d, d)).copy_from(&lm.transpose());

    // X = L_M^{-1} L_K, C = X^T, G = L_M^{-1} D L_M^{-T}.
    let x = lm
        .solve_lower_triangular(&lk)
        .ok_or(Error::NotPositiveDefinite)?;
    let y = lm
        .solve_lower_triangular(system.damping())
        .ok_or(Error::NotPositiveDefinite)?;
    let g = lm
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let mut energy_form = DMatrix::zeros(2 * d, 2 * d);
    energy_form
        .view_mut((0, d), (d, d))
        .copy_from(&x.transpose());
    energy_form.view_mut((d, 0), (d, d)).copy_from(&(-&x));
    // G is symmetric in exact arithmetic.
    let g = (&g + g.transpose()) * 0.5;
    energy_form.view_mut((d, d), (d, d)).copy_from(&(-g));

    Ok(GeneratorMatrix {
        system: system.clone(),
        a,
        w,
        factor,
        energy_form,
        chol_m,
        chol_k,
    })
}

impl GeneratorMatrix {
    pub fn system(&self) -> &SemiDiscreteSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn energy_form(&self) -> &DMatrix<f64> {
        &self.energy_form
    }

    pub fn mass_cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol_m
    }

    pub fn stiffness_cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol_k
    }

    /// `<x, y>_W = y^H W x`.
    pub fn w_inner<T: ComplexField<RealField = f64> + Copy>(
        &self,
        x: &DVector<T>,
        y: &DVector<T>,
    ) -> T {
        let wx = self.w.map(T::from_real) * x;
        y.iter()
            .zip(wx.iter())
            .fold(T::zero(), |acc, (yi, wi)| acc + yi.conjugate() * *wi)
    }

    pub fn w_norm<T: ComplexField<RealField = f64> + Copy>(&self, x: &DVector<T>) -> f64 {
        let d = self.system.dofs();
        let quad = |m: &DMatrix<f64>, z: &[T]| {
            let mut s = 0.0;
            for j in 0..d {
                for i in 0..d {
                    let mij = m[(i, j)];
                    if mij != 0.0 {
                        s += (z[i].conjugate() * z[j]).real() * mij;
                    }
                }
            }
            s
        };
        let s = x.as_slice();
        (quad(self.system.stiffness(), &s[..d]) + quad(self.system.mass(), &s[d..]))
            .max(0.0)
            .sqrt()
    }

    /// `A x` evaluated through mass solves rather than the stored product.
    pub fn apply<T: ComplexField<RealField = f64> + Copy>(&self, x: &DVector<T>) -> DVector<T> {
        let d = self.system.dofs();
        let q = x.rows(0, d);
        let v = x.rows(d, d);
        let k = self.system.stiffness().map(T::from_real);
        let dm = self.system.damping().map(T::from_real);
        let rhs = -(&k * q + &dm * v);
        let acc = self.mass_solve(&rhs);
        let mut out = DVector::zeros(2 * d);
        out.rows_mut(0, d).copy_from(&v);
        out.rows_mut(d, d).copy_from(&acc);
        out
    }

    /// `M^{-1} b` for real or complex `b`.
    pub fn mass_solve<T: ComplexField<RealField = f64> + Copy>(
        &self,
        b: &DVector<T>,
    ) -> DVector<T> {
        let l = self.chol_m.l_dirty();
        let n = b.len();
        let mut x = b.clone();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= x[j] * T::from_real(l[(i, j)]);
            }
            x[i] = s * T::from_real(1.0 / l[(i, i)]);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= x[j] * T::from_real(l[(j, i)]);
            }
            x[i] = s * T::from_real(1.0 / l[(i, i)]);
        }
        x
    }

    /// Energy coordinates `R x`.
    pub fn to_energy_coords<T: ComplexField<RealField = f64> + Copy>(
        &self,
        x: &DVector<T>,
    ) -> DVector<T> {
        self.factor.map(T::from_real) * x
    }

    /// Discrete forcing vector `(f_q, M^{-1} load)` for a nodal forcing.
    pub fn forcing_vector<T: ComplexField<RealField = f64> + Copy>(
        &self,
        f: &Forcing<T>,
    ) -> Result<DVector<T>> {
        let (fq, load) = f.discretize(&self.system)?;
        let d = self.system.dofs();
        let mut out = DVector::zeros(2 * d);
        out.rows_mut(0, d).copy_from(&fq);
        out.rows_mut(d, d).copy_from(&self.mass_solve(&load));
        Ok(out)
    }

    /// `(Re <A x, x>_W, -xi1 |u|^2 - xi2 |eta|^2)`.
    pub fn dissipativity_pair<T: ComplexField<RealField = f64> + Copy>(
        &self,
        x: &DVector<T>,
    ) -> (f64, f64) {
        let ax = self.apply(x);
        let lhs = self.w_inner(&ax, x).real();
        (lhs, self.system.dissipation_rate(x.as_slice()))
    }
}
