//! Dense linear-algebra kernel: pivoted LU for real and complex systems,
//! eigenvalues of general real matrices, shifted Hessenberg solves and
//! extreme singular values by inverse iteration.
//!
//! Storage and Hessenberg reduction come from `nalgebra`; the factorizations
//! that need adjoint solves and the eigenvalue iteration live here.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Hessenberg};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// LU factorization with partial pivoting, `P A = L U`, stored in place.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    /// Row-major packed `L` (unit diagonal, strictly lower) and `U`.
    lu: Vec<T>,
    perm: Vec<usize>,
    min_pivot: f64,
    min_pivot_column: usize,
    max_entry: f64,
}

impl<T: ComplexField<RealField = f64> + Copy> Lu<T> {
    /// Factors `a`. Fails only on an exactly zero pivot.
    pub fn new(a: &DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        let mut lu = vec![T::zero(); n * n];
        let mut max_entry = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let x = a[(i, j)];
                max_entry = max_entry.max(x.modulus());
                lu[i * n + j] = x;
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        let mut min_pivot_column = 0;
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[k * n + k].modulus();
            for i in k + 1..n {
                let m = lu[i * n + k].modulus();
                if m > best {
                    best = m;
                    piv = i;
                }
            }
            if best < min_pivot {
                min_pivot = best;
                min_pivot_column = k;
            }
            if best == 0.0 {
                return Err(Error::Singular {
                    pivot: 0.0,
                    column: k,
                });
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..];
            for i in k + 1..n {
                let row_i = &mut tail[(i - k - 1) * n..(i - k) * n];
                let l = row_i[k] / pivot;
                row_i[k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        row_i[j] -= l * row_k[j];
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            min_pivot,
            min_pivot_column,
            max_entry,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Fails when the smallest pivot is below `n * eps * max|a_ij|`.
    pub fn check_conditioning(&self) -> Result<()> {
        let threshold = self.n as f64 * f64::EPSILON * self.max_entry;
        if self.min_pivot <= threshold {
            Err(Error::Singular {
                pivot: self.min_pivot,
                column: self.min_pivot_column,
            })
        } else {
            Ok(())
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let mut s = x[i];
            for (j, &l) in row.iter().enumerate() {
                s -= l * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint_in_place(&self, b: &mut [T]) {
        let n = self.n;
        // U^H z = b, column-oriented so rows of U are read contiguously.
        let mut z = b.to_vec();
        for j in 0..n {
            let row = &self.lu[j * n..(j + 1) * n];
            z[j] /= row[j].conjugate();
            let zj = z[j];
            for i in j + 1..n {
                z[i] -= row[i].conjugate() * zj;
            }
        }
        // L^H w = z
        for j in (0..n).rev() {
            let row = &self.lu[j * n..j * n + j];
            let wj = z[j];
            for (i, &l) in row.iter().enumerate() {
                z[i] -= l.conjugate() * wj;
            }
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = z[k];
        }
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }
}

/// Solves `a x = b` with partial pivoting. Reports a near-singular matrix
/// together with its smallest pivot.
pub fn solve<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
    b: &DVector<T>,
) -> Result<DVector<T>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let lu = Lu::new(a)?;
    lu.check_conditioning()?;
    Ok(lu.solve(b))
}

/// An operator whose inverse and inverse adjoint can be applied.
pub trait InverseOperator {
    fn dim(&self) -> usize;
    fn apply_inverse(&self, x: &mut [Complex64]);
    fn apply_inverse_adjoint(&self, x: &mut [Complex64]);
}

impl InverseOperator for Lu<Complex64> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply_inverse(&self, x: &mut [Complex64]) {
        self.solve_in_place(x)
    }
    fn apply_inverse_adjoint(&self, x: &mut [Complex64]) {
        self.solve_adjoint_in_place(x)
    }
}

fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `sigma_min(T)` from the largest eigenvalue of `(T^H T)^{-1}`, found by
/// Lanczos with full reorthogonalization and explicit restarts. Each Lanczos
/// step costs one solve and one adjoint solve, like an inverse-iteration
/// step, but converges far faster when the top singular values cluster.
pub fn smallest_singular_value_of(op: &impl InverseOperator, max_iter: usize) -> f64 {
    const TOL: f64 = 1e-12;
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let krylov = n.min(40);
    // Fixed start vector keeps results reproducible.
    let mut start: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(1.0 + 0.5 * (1.3 * t).sin(), 0.25 * (0.7 * t + 0.3).cos())
        })
        .collect();
    let mut theta = 0.0f64;
    let mut used = 0;
    while used < max_iter {
        let s = norm2(&start);
        start.iter_mut().for_each(|z| *z /= s);
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = vec![1.0];
        for j in 0..krylov {
            let mut w = basis[j].clone();
            op.apply_inverse(&mut w);
            op.apply_inverse_adjoint(&mut w);
            used += 1;
            if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return 0.0;
            }
            alpha.push(dot(&basis[j], &w).re);
            for _ in 0..2 {
                for u in &basis {
                    let c = dot(u, &w);
                    w.iter_mut().zip(u).for_each(|(wi, ui)| *wi -= c * ui);
                }
            }
            let b = norm2(&w);
            let m = alpha.len();
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = t.symmetric_eigen();
            let (k, &top) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            theta = top;
            ritz = eig.eigenvectors.column(k).iter().copied().collect();
            let residual = b * ritz[m - 1].abs();
            if residual <= TOL * theta || b <= f64::EPSILON * theta {
                return if theta > 0.0 {
                    1.0 / theta.sqrt()
                } else {
                    f64::INFINITY
                };
            }
            if used >= max_iter {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        start = vec![Complex64::new(0.0, 0.0); n];
        for (c, v) in ritz.iter().zip(&basis) {
            start.iter_mut().zip(v).for_each(|(s, vi)| *s += vi * *c);
        }
    }
    if theta > 0.0 {
        1.0 / theta.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Smallest singular value of a square matrix, zero when exactly singular.
pub fn smallest_singular_value<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let c = a.map(|x| Complex64::new(x.real(), x.imaginary()));
    match Lu::new(&c) {
        Ok(lu) => Ok(smallest_singular_value_of(&lu, 20_000)),
        Err(Error::Singular { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `sqrt(x^H W x)` given an upper factor `R` with `W = R^T R`.
pub fn weighted_norm<T: ComplexField<RealField = f64> + Copy>(
    x: &DVector<T>,
    factor: &DMatrix<f64>,
) -> Result<f64> {
    if factor.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: factor.ncols(),
            found: x.len(),
        });
    }
    let mut sum = 0.0;
    for i in 0..factor.nrows() {
        let mut acc = T::zero();
        for j in 0..x.len() {
            let f = factor[(i, j)];
            if f != 0.0 {
                acc += x[j] * T::from_real(f);
            }
        }
        sum += acc.modulus_squared();
    }
    Ok(sum.sqrt())
}

/// Upper triangular `R` with `W = R^T R`.
pub fn upper_cholesky(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = w.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.l().transpose())
}

/// All eigenvalues of a real square matrix (Hessenberg reduction followed by
/// the Francis double-shift QR iteration). Unordered.
pub fn eig(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex64::new(a[(0, 0)], 0.0)]),
        _ => {}
    }
    let h = Hessenberg::new(a.clone()).unpack_h();
    hessenberg_eigenvalues(&h)
}

/// All eigenvalues of a complex square matrix.
pub fn eig_complex(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let iterations = 60 * n.max(1);
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, iterations)
        .ok_or(Error::NoConvergence { iterations })?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues of a real upper Hessenberg matrix, eigenvalue-only variant of
/// the classical double-shift QR iteration with exceptional shifts.
pub fn hessenberg_eigenvalues(hess: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    const MAX_ITER_PER_ROOT: usize = 60;
    let nn = hess.nrows();
    let mut h = vec![0.0; nn * nn];
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            h[i * nn + j] = hess[(i, j)];
        }
    }
    let at = |i: usize, j: usize| i * nn + j;
    let eps = f64::EPSILON;
    let mut wr = vec![0.0; nn];
    let mut wi = vec![0.0; nn];
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[at(i, j)].abs();
        }
    }

    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0;
    let mut total_iter = 0;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[at(l - 1, l - 1)].abs() + h[at(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[at(l, l - 1)].abs() < eps * s {
                h[at(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }

        if l == nu {
            wr[nu] = h[at(nu, nu)] + exshift;
            wi[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[at(nu, nu - 1)] * h[at(nu - 1, nu)];
            p = (h[at(nu - 1, nu - 1)] - h[at(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[at(nu, nu)] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[nu - 1] = x + z;
                wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                wi[nu - 1] = 0.0;
                wi[nu] = 0.0;
            } else {
                wr[nu - 1] = x + p;
                wr[nu] = x + p;
                wi[nu - 1] = z;
                wi[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[at(nu, nu)];
            y = h[at(nu - 1, nu - 1)];
            w = h[at(nu, nu - 1)] * h[at(nu - 1, nu)];

            if iter == 10 || iter == 20 {
                exshift += x;
                for i in 0..=nu {
                    h[at(i, i)] -= x;
                }
                s = h[at(nu, nu - 1)].abs() + h[at(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[at(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if iter > MAX_ITER_PER_ROOT {
                return Err(Error::NoConvergence {
                    iterations: total_iter,
                });
            }

            let mut m = nu - 2;
            loop {
                z = h[at(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[at(m + 1, m)] + h[at(m, m + 1)];
                q = h[at(m + 1, m + 1)] - z - r - s;
                r = h[at(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[at(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (h[at(m - 1, m - 1)].abs() + z.abs() + h[at(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[at(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[at(i, i - 3)] = 0.0;
                }
            }

            let mut k = m;
            while k < nu {
                let notlast = k + 1 != nu;
                if k != m {
                    p = h[at(k, k - 1)];
                    q = h[at(k + 1, k - 1)];
                    r = if notlast { h[at(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k != m {
                        h[at(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[at(k, k - 1)] = -h[at(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = h[at(k, j)] + q * h[at(k + 1, j)];
                        if notlast {
                            pp += r * h[at(k + 2, j)];
                            h[at(k + 2, j)] -= pp * z;
                        }
                        h[at(k, j)] -= pp * x;
                        h[at(k + 1, j)] -= pp * y;
                    }
                    let top = nu.min(k + 3);
                    for i in l..=top {
                        let mut pp = x * h[at(i, k)] + y * h[at(i, k + 1)];
                        if notlast {
                            pp += z * h[at(i, k + 2)];
                            h[at(i, k + 2)] -= pp * r;
                        }
                        h[at(i, k)] -= pp;
                        h[at(i, k + 1)] -= pp * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// LU of the shifted Hessenberg matrix `s I - H` for a real upper Hessenberg
/// `H`. Pivoting only ever swaps neighbouring rows, so factoring and solving
/// both cost `O(n^2)`.
#[derive(Debug, Clone)]
pub struct ShiftedHessenbergLu {
    n: usize,
    /// Row-major upper triangle (full rows stored for simple indexing).
    u: Vec<Complex64>,
    multipliers: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl ShiftedHessenbergLu {
    pub fn new(h: &DMatrix<f64>, shift: Complex64) -> Result<Self> {
        let n = h.nrows();
        let mut u = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                u[i * n + j] = Complex64::new(-h[(i, j)], 0.0);
            }
            u[i * n + i] += shift;
        }
        let mut multipliers = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            let a = u[k * n + k];
            let b = u[(k + 1) * n + k];
            if b.norm_sqr() > a.norm_sqr() {
                for j in k..n {
                    u.swap(k * n + j, (k + 1) * n + j);
                }
                swapped[k] = true;
            }
            let pivot = u[k * n + k];
            if pivot.norm_sqr() == 0.0 {
                return Err(Error::Singular {
                    pivot: 0.0,
                    column: k,
                });
            }
            let l = u[(k + 1) * n + k] / pivot;
            multipliers[k] = l;
            u[(k + 1) * n + k] = Complex64::new(0.0, 0.0);
            let (top, bottom) = u.split_at_mut((k + 1) * n);
            let row_k = &top[k * n..];
            let row_k1 = &mut bottom[..n];
            for j in k + 1..n {
                row_k1[j] -= l * row_k[j];
            }
        }
        if n > 0 && u[n * n - 1].norm_sqr() == 0.0 {
            return Err(Error::Singular {
                pivot: 0.0,
                column: n - 1,
            });
        }
        Ok(Self {
            n,
            u,
            multipliers,
            swapped,
        })
    }
}

impl InverseOperator for ShiftedHessenbergLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_inverse(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            let bk = b[k];
            b[k + 1] -= self.multipliers[k] * bk;
        }
        for i in (0..n).rev() {
            let row = &self.u[i * n..(i + 1) * n];
            let mut s = b[i];
            for j in i + 1..n {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
    }

    fn apply_inverse_adjoint(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            let row = &self.u[j * n..(j + 1) * n];
            b[j] /= row[j].conj();
            let bj = b[j];
            for i in j + 1..n {
                b[i] -= row[i].conj() * bj;
            }
        }
        for k in (0..n.saturating_sub(1)).rev() {
            let next = b[k + 1];
            b[k] -= self.multipliers[k].conj() * next;
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
        }
    }
}

/// Square matrix with half-bandwidth `b`, stored by rows: entry `(i, j)`
/// lives at `data[i * (2b + 1) + j + b - i]` for `|i - j| <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// Half-bandwidth of `a` after relabelling row/column `i` as `perm[i]`.
    pub fn bandwidth_of(a: &DMatrix<f64>, perm: &[usize]) -> usize {
        let mut b = 0;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                if a[(i, j)] != 0.0 {
                    b = b.max(perm[i].abs_diff(perm[j]));
                }
            }
        }
        b
    }

    /// Copies the band of the permuted matrix; entries outside the band must
    /// be zero and are checked.
    pub fn from_dense(a: &DMatrix<f64>, perm: &[usize], b: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len().min(a.ncols()),
            });
        }
        let w = 2 * b + 1;
        let mut data = vec![0.0; n * w];
        for j in 0..n {
            for i in 0..n {
                let x = a[(i, j)];
                if x == 0.0 {
                    continue;
                }
                let (pi, pj) = (perm[i], perm[j]);
                if pi.abs_diff(pj) > b {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) lies outside half-bandwidth {b}"
                    )));
                }
                data[pi * w + pj + b - pi] = x;
            }
        }
        Ok(Self { n, b, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.b {
            0.0
        } else {
            self.data[i * (2 * self.b + 1) + j + self.b - i]
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        let w = 2 * b + 1;
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let lo = i.saturating_sub(b);
            let hi = (i + b).min(n - 1);
            let row = &self.data[i * w..(i + 1) * w];
            let mut s = 0.0;
            for j in lo..=hi {
                s += row[j + b - i] * x[j];
            }
            *yi = s;
        }
    }
}

/// Cholesky factor `A = L L^T` of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    b: usize,
    /// Row `i` holds `L[i, i-b..=i]`.
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn new(a: &BandMatrix) -> Result<Self> {
        let (n, b) = (a.n, a.b);
        let w = b + 1;
        let mut l = vec![0.0; n * w];
        let at = |i: usize, j: usize| i * w + j + b - i;
        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..=i {
                let mut s = a.get(i, j);
                let klo = lo.max(j.saturating_sub(b));
                for k in klo..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l[at(i, i)] = s.sqrt();
                } else {
                    l[at(i, j)] = s / l[at(j, j)];
                }
            }
        }
        Ok(Self { n, b, l })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let at = |i: usize, j: usize| i * w + j + b - i;
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.l[at(i, k)] * x[k];
            }
            x[i] = s / self.l[at(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + b + 1).min(n) {
                s -= self.l[at(k, i)] * x[k];
            }
            x[i] = s / self.l[at(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    /// Greedy multiset match; returns the largest pairing distance.
    fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        let mut worst = 0.0f64;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let x = solve(&DMatrix::<f64>::identity(3, 3), &b).unwrap();
        assert_eq!(x, b);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let x = solve(&a, &DVector::from_vec(vec![2.0, 8.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn solve_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 50);
        let b = DVector::from_fn(50, |_, _| rng.gen_range(-1.0..1.0));
        let x = solve(&a, &b).unwrap();
        let r = (&a * &x - &b).norm();
        assert!(r <= 1e-10 * a.norm() * x.norm(), "residual {r}");
    }

    #[test]
    fn solve_reports_singular_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        match solve(&a, &DVector::from_vec(vec![1.0, 1.0])) {
            Err(Error::Singular { pivot, .. }) => assert!(pivot < 1e-14),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complex_solve_and_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let a = DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let b = DVector::from_fn(n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let lu = Lu::new(&a).unwrap();
        let x = lu.solve(&b);
        assert!((&a * &x - &b).norm() < 1e-12);
        let mut y = b.clone();
        lu.solve_adjoint_in_place(y.as_mut_slice());
        assert!((a.adjoint() * &y - &b).norm() < 1e-12);
    }

    #[test]
    fn eig_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let ev = sorted(eig(&a).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn eig_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let ev = sorted(eig(&a).unwrap());
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn eig_companion_quadratic() {
        // z^2 + z + 1
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, -1.0]);
        let ev = sorted(eig(&a).unwrap());
        let r = 3f64.sqrt() / 2.0;
        assert!((ev[0] - c(-0.5, -r)).norm() < 1e-12);
        assert!((ev[1] - c(-0.5, r)).norm() < 1e-12);
    }

    #[test]
    fn eig_matches_nalgebra_schur_on_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3, 10, 40, 90] {
            let a = random_matrix(&mut rng, n);
            let ours = eig(&a).unwrap();
            let reference: Vec<_> = a.complex_eigenvalues().iter().copied().collect();
            assert!(multiset_distance(&ours, &reference) < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn eig_invariant_under_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let a = random_matrix(&mut rng, n);
        let s = DMatrix::<f64>::identity(n, n) + random_matrix(&mut rng, n) * 0.1;
        let s_inv = s.clone().try_inverse().unwrap();
        let b = &s_inv * &a * &s;
        let d = multiset_distance(&eig(&a).unwrap(), &eig(&b).unwrap());
        assert!(d < 1e-8, "distance {d}");
    }

    #[test]
    fn eig_spd_is_real_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_matrix(&mut rng, 25);
        let a = &g * g.transpose() + DMatrix::<f64>::identity(25, 25);
        for e in eig(&a).unwrap() {
            assert!(e.im.abs() < 1e-10 && e.re > 0.0);
        }
    }

    #[test]
    fn eig_complex_matrix() {
        let a =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(0.0, 0.0), c(2.0, 0.0), c(0.0, -3.0)]);
        let ev = eig_complex(&a).unwrap();
        assert!(ev.iter().any(|e| (e - c(1.0, 1.0)).norm() < 1e-13));
        assert!(ev.iter().any(|e| (e - c(0.0, -3.0)).norm() < 1e-13));
    }

    fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        random_matrix(rng, n).qr().q()
    }

    #[test]
    fn sigma_min_examples() {
        assert!(
            (smallest_singular_value(&DMatrix::<f64>::identity(4, 4)).unwrap() - 1.0).abs() < 1e-12
        );
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1e-3]));
        let s = smallest_singular_value(&d).unwrap();
        assert!((s - 1e-3).abs() < 1e-3 * 1e-8);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(smallest_singular_value(&z).unwrap(), 0.0);
    }

    #[test]
    fn sigma_min_planted() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 30;
        let u = random_orthogonal(&mut rng, n);
        let v = random_orthogonal(&mut rng, n);
        let mut sig: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        sig[17] = 0.0123;
        let a = &u * DMatrix::from_diagonal(&DVector::from_vec(sig)) * v.transpose();
        let s = smallest_singular_value(&a).unwrap();
        assert!((s - 0.0123).abs() <= 1e-8 * 0.0123, "got {s}");
    }

    #[test]
    fn sigma_min_times_inverse_norm_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [5, 17, 40] {
            let a = random_matrix(&mut rng, n) + DMatrix::<f64>::identity(n, n) * 0.5;
            let s = smallest_singular_value(&a).unwrap();
            let inv_norm = a.clone().try_inverse().unwrap().singular_values().max();
            assert!((s * inv_norm - 1.0).abs() < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn shifted_hessenberg_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 20;
        let h = Hessenberg::new(random_matrix(&mut rng, n)).unpack_h();
        let shift = c(0.3, 1.7);
        let lu = ShiftedHessenbergLu::new(&h, shift).unwrap();
        let t = DMatrix::<Complex64>::identity(n, n) * shift - h.map(|x| c(x, 0.0));
        let b = DVector::from_fn(n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let mut x = b.clone();
        lu.apply_inverse(x.as_mut_slice());
        assert!((&t * &x - &b).norm() < 1e-12);
        let mut y = b.clone();
        lu.apply_inverse_adjoint(y.as_mut_slice());
        assert!((t.adjoint() * &y - &b).norm() < 1e-12);
        let dense = smallest_singular_value(&t).unwrap();
        let fast = smallest_singular_value_of(&lu, 20_000);
        assert!((dense - fast).abs() < 1e-10 * dense);
    }

    #[test]
    fn weighted_norm_examples() {
        let x = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(weighted_norm(&x, &DMatrix::identity(2, 2)).unwrap(), 5.0);
        assert_eq!(
            weighted_norm(&DVector::<f64>::zeros(2), &DMatrix::identity(2, 2)).unwrap(),
            0.0
        );
        let r = upper_cholesky(&DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!(
            weighted_norm(&DVector::from_element(1, 3.0), &r).unwrap(),
            6.0
        );
        assert!(weighted_norm(&x, &DMatrix::identity(3, 3)).is_err());
    }
    #[test]
    fn band_cholesky_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 14;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) <= 2 {
                    a[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let a = &a + a.transpose() + DMatrix::<f64>::identity(n, n) * 8.0;
        let perm: Vec<usize> = (0..n).collect();
        assert_eq!(BandMatrix::bandwidth_of(&a, &perm), 2);
        let band = BandMatrix::from_dense(&a, &perm, 2).unwrap();
        let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let mut y = vec![0.0; n];
        band.mul_vec(b.as_slice(), &mut y);
        assert!(((&a * &b) - DVector::from_vec(y)).amax() < 1e-13);
        let chol = BandCholesky::new(&band).unwrap();
        let mut x = b.clone();
        chol.solve_in_place(x.as_mut_slice());
        assert!((&a * &x - &b).amax() < 1e-13);
        assert!(BandMatrix::from_dense(&a, &perm, 1).is_err());
    }
}
