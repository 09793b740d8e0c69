//! Spectrum of the discrete generator, high-frequency branch asymptotics and
//! resolvent norms along the imaginary axis.
//!
//! Everything is computed on the energy form `B = R A R^{-1}`, so Euclidean
//! norms of `B` are energy norms of `A`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Hessenberg};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{assemble, generator, GeneratorMatrix, Model, SemiDiscreteSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, smallest_singular_value_of, Complex64, ShiftedHessenbergLu};
use crate::mesh::Mesh;
use crate::model::BeamParameters;

/// Least-squares line `log y = slope * log x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub band: [f64; 2],
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

/// Fits `log y` against `log x`. Needs at least two distinct abscissae.
pub fn fit_power_law(points: &[(f64, f64)], band: [f64; 2]) -> Option<PowerFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let (slope, intercept, residual) = fit_line(&logs)?;
    Some(PowerFit {
        slope,
        intercept,
        band,
        residual,
        points: logs.len(),
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, rms residual)`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    fit_line_weighted(points, &vec![1.0; points.len()])
}

/// Weighted least squares `y = a x + b`; returns `(a, b, weighted rms residual)`.
pub fn fit_line_weighted(points: &[(f64, f64)], weights: &[f64]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 || weights.len() != points.len() {
        return None;
    }
    let sw: f64 = weights.iter().sum();
    if !(sw > 0.0) {
        return None;
    }
    let wsum = |f: &dyn Fn(&(f64, f64)) -> f64| -> f64 {
        points
            .iter()
            .zip(weights)
            .map(|(p, w)| w * f(p))
            .sum::<f64>()
    };
    let mx = wsum(&|p| p.0) / sw;
    let my = wsum(&|p| p.1) / sw;
    let sxx = wsum(&|p| (p.0 - mx).powi(2));
    if sxx == 0.0 {
        return None;
    }
    let sxy = wsum(&|p| (p.0 - mx) * (p.1 - my));
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss = wsum(&|p| (p.1 - a * p.0 - b).powi(2));
    Some((a, b, (rss / sw).sqrt()))
}

/// Frequencies above `0.5 (pi / h) c_min` are dominated by dispersion error
/// of the linear elements; fits stay below this cutoff.
pub fn frequency_cutoff(system: &SemiDiscreteSystem) -> f64 {
    let c_min = match system.model() {
        Model::Coupled(p) => p.wave_speeds()[0],
        Model::Scalar(w) => w.speed(),
    };
    0.5 * PI / system.mesh().h() * c_min
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by `|Im|`, then by `Im`.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
    /// Largest real part among eigenvalues below the cutoff.
    pub resolved_abscissa: f64,
    pub cutoff: f64,
    pub branch_fit: Option<PowerFit>,
}

impl SpectrumReport {
    /// Eigenvalues with `Im > 0`, one per conjugate pair, ascending.
    pub fn upper_half(&self) -> impl Iterator<Item = &Complex64> {
        self.eigenvalues.iter().filter(|z| z.im > 0.0)
    }

    /// Largest distance from an eigenvalue to the nearest conjugate of
    /// another (zero for an exactly conjugate-closed list).
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| {
                self.eigenvalues
                    .iter()
                    .map(|w| (z.conj() - w).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

fn sort_by_frequency(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| {
        a.im.abs()
            .total_cmp(&b.im.abs())
            .then(a.im.total_cmp(&b.im))
            .then(a.re.total_cmp(&b.re))
    });
}

/// Report for an explicit eigenvalue list, fitting the branch over
/// `[cutoff / 10, cutoff]`.
pub fn report_from_eigenvalues(mut eigenvalues: Vec<Complex64>, cutoff: f64) -> SpectrumReport {
    sort_by_frequency(&mut eigenvalues);
    let spectral_abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let resolved_abscissa = eigenvalues
        .iter()
        .filter(|z| z.im.abs() <= cutoff)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut report = SpectrumReport {
        eigenvalues,
        spectral_abscissa,
        resolved_abscissa,
        cutoff,
        branch_fit: None,
    };
    report.branch_fit = branch_asymptote(&report, [0.1 * cutoff, cutoff]).ok();
    report
}

/// All eigenvalues of the discrete generator.
pub fn spectrum(gen: &GeneratorMatrix) -> Result<SpectrumReport> {
    let ev = linalg::eig(gen.energy_form())?;
    Ok(report_from_eigenvalues(ev, frequency_cutoff(gen.system())))
}

/// Slope of `log(-Re z)` against `log(Im z)` for eigenvalues with
/// `Im z` in `band`. Eigenvalues on or right of the axis carry no decay
/// information and are skipped.
pub fn branch_asymptote(report: &SpectrumReport, band: [f64; 2]) -> Result<PowerFit> {
    const REQUIRED: usize = 5;
    let pts: Vec<(f64, f64)> = report
        .upper_half()
        .filter(|z| z.im >= band[0] && z.im <= band[1] && z.re < 0.0)
        .map(|z| (z.im, -z.re))
        .collect();
    if pts.len() < REQUIRED {
        return Err(Error::InsufficientData {
            required: REQUIRED,
            found: pts.len(),
            lo: band[0],
            hi: band[1],
        });
    }
    fit_power_law(&pts, band).ok_or(Error::InsufficientData {
        required: REQUIRED,
        found: 0,
        lo: band[0],
        hi: band[1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSweep {
    pub lambdas: Vec<f64>,
    /// `||(i lambda - A)^{-1}||` in the energy norm.
    pub norms: Vec<f64>,
    /// Refined local maxima `(lambda, norm)`.
    pub peaks: Vec<(f64, f64)>,
    pub growth_fit: Option<PowerFit>,
}

impl ResolventSweep {
    /// Re-fits the peak envelope over `band`.
    pub fn growth_fit(&self, band: [f64; 2]) -> Result<PowerFit> {
        envelope_fit(&self.peaks, band)
    }
}

/// Power-law fit through the refined peaks in `band`.
pub fn envelope_fit(peaks: &[(f64, f64)], band: [f64; 2]) -> Result<PowerFit> {
    const REQUIRED: usize = 3;
    let pts: Vec<(f64, f64)> = peaks
        .iter()
        .copied()
        .filter(|(l, _)| *l >= band[0] && *l <= band[1])
        .collect();
    if pts.len() < REQUIRED {
        return Err(Error::InsufficientData {
            required: REQUIRED,
            found: pts.len(),
            lo: band[0],
            hi: band[1],
        });
    }
    fit_power_law(&pts, band).ok_or(Error::InsufficientData {
        required: REQUIRED,
        found: 0,
        lo: band[0],
        hi: band[1],
    })
}

/// Evaluates resolvent norms at `i lambda` using one Hessenberg reduction of
/// the energy form.
pub struct ResolventEvaluator {
    h: DMatrix<f64>,
}

impl ResolventEvaluator {
    pub fn new(gen: &GeneratorMatrix) -> Self {
        Self {
            h: Hessenberg::new(gen.energy_form().clone()).unpack_h(),
        }
    }

    /// `sigma_min(i lambda - A)` in the energy norm.
    pub fn sigma_min(&self, lambda: f64) -> Result<f64> {
        match ShiftedHessenbergLu::new(&self.h, Complex64::new(0.0, lambda)) {
            Ok(lu) => Ok(smallest_singular_value_of(&lu, 4000)),
            Err(Error::Singular { .. }) => Err(Error::SingularShift { lambda }),
            Err(e) => Err(e),
        }
    }

    pub fn norm(&self, lambda: f64) -> Result<f64> {
        let s = self.sigma_min(lambda)?;
        if s == 0.0 {
            Err(Error::SingularShift { lambda })
        } else {
            Ok(1.0 / s)
        }
    }
}

/// Golden-section maximization of `f` on `[a, b]`.
fn golden_max(
    f: impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Resolvent norms on a grid of `lambda`, with every interior local maximum
/// refined by golden-section search and a power-law fit through the refined
/// peaks over the grid's range. Grid points are evaluated in parallel; the
/// result is ordered by the grid.
pub fn resolvent_sweep(gen: &GeneratorMatrix, lambdas: &[f64]) -> Result<ResolventSweep> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) || lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(
            "lambda grid must be finite and strictly increasing".into(),
        ));
    }
    let eval = ResolventEvaluator::new(gen);
    let norms: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| eval.norm(l))
        .collect::<Result<_>>()?;
    let brackets: Vec<(f64, f64)> = (1..lambdas.len().saturating_sub(1))
        .filter(|&i| norms[i] >= norms[i - 1] && norms[i] >= norms[i + 1])
        .map(|i| (lambdas[i - 1], lambdas[i + 1]))
        .collect();
    let peaks: Vec<(f64, f64)> = brackets
        .par_iter()
        .map(|&(a, b)| golden_max(|l| eval.norm(l), a, b, 60))
        .collect::<Result<_>>()?;
    let band = [lambdas[0], lambdas[lambdas.len() - 1]];
    let growth_fit = envelope_fit(&peaks, band).ok();
    Ok(ResolventSweep {
        lambdas: lambdas.to_vec(),
        norms,
        peaks,
        growth_fit,
    })
}

/// `count` evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Spectral abscissa of the discrete generator for each mesh size.
pub fn abscissa_trend(params: &BeamParameters, ns: &[usize]) -> Result<Vec<(usize, f64)>> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("n list must be increasing".into()));
    }
    ns.par_iter()
        .map(|&n| {
            let mesh = Mesh::new(n, params.length)?;
            let gen = generator(&assemble(&mesh, params)?)?;
            Ok((n, spectrum(&gen)?.spectral_abscissa))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn build(n: usize, p: BeamParameters) -> GeneratorMatrix {
        generator(&assemble(&Mesh::new(n, p.length).unwrap(), &p).unwrap()).unwrap()
    }

    #[test]
    fn exact_power_law_branch() {
        let ev: Vec<Complex64> = (1..40)
            .flat_map(|k| {
                let w = k as f64 * 1.7;
                [c(-w.powi(-2), w), c(-w.powi(-2), -w)]
            })
            .collect();
        let report = report_from_eigenvalues(ev, 100.0);
        let fit = branch_asymptote(&report, [2.0, 60.0]).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn constant_real_parts_give_flat_fit() {
        let ev: Vec<Complex64> = (1..30).map(|k| c(-0.5, k as f64)).collect();
        let fit = branch_asymptote(&report_from_eigenvalues(ev, 100.0), [1.0, 30.0]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn too_few_points_rejected() {
        let ev = vec![c(-1.0, 1.0), c(-1.0, 2.0)];
        assert!(matches!(
            branch_asymptote(&report_from_eigenvalues(ev, 10.0), [0.0, 10.0]),
            Err(Error::InsufficientData { found: 2, .. })
        ));
    }

    #[test]
    fn damped_spectrum_in_left_half_plane_and_conjugate_closed() {
        let report = spectrum(&build(30, BeamParameters::default())).unwrap();
        assert_eq!(report.eigenvalues.len(), 120);
        assert!(report.spectral_abscissa <= 1e-10);
        assert!(report.conjugation_defect() <= 1e-10);
    }

    #[test]
    fn conservative_spectrum_on_axis() {
        let report = spectrum(&build(25, BeamParameters::default().without_damping())).unwrap();
        for z in &report.eigenvalues {
            assert!(z.re.abs() <= 1e-10, "{z}");
        }
    }

    #[test]
    fn clamped_free_wave_lowest_frequency() {
        let p = BeamParameters {
            gamma: 0.0,
            xi1: 0.0,
            xi2: 0.0,
            m1: 0.0,
            m2: 0.0,
            ..Default::default()
        };
        let report = spectrum(&build(100, p)).unwrap();
        assert!((report.eigenvalues[0].im.abs() - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn resolvent_is_finite_at_zero_and_bounded_by_distance() {
        let gen = build(20, BeamParameters::default());
        let eval = ResolventEvaluator::new(&gen);
        let r0 = eval.norm(0.0).unwrap();
        assert!(r0.is_finite() && r0 > 0.0);
        let report = spectrum(&gen).unwrap();
        for l in [0.0, 0.7, 3.3, 10.0, 25.0] {
            let dist = report
                .eigenvalues
                .iter()
                .map(|z| (z - c(0.0, l)).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(eval.norm(l).unwrap() >= (1.0 - 1e-9) / dist);
        }
    }

    #[test]
    fn resolvent_matches_dense_svd() {
        let gen = build(
            10,
            BeamParameters {
                gamma: 0.5,
                ..Default::default()
            },
        );
        let eval = ResolventEvaluator::new(&gen);
        let b = gen.energy_form().map(|x| c(x, 0.0));
        for l in [0.0, 1.3, 4.0, 9.5] {
            let t = DMatrix::<Complex64>::identity(40, 40) * c(0.0, l) - &b;
            let s = t.singular_values().min();
            let ours = eval.sigma_min(l).unwrap();
            assert!((ours - s).abs() <= 1e-8 * s, "lambda {l}: {ours} vs {s}");
        }
    }

    #[test]
    fn conservative_resolvent_blows_up_at_eigenfrequency() {
        let gen = build(20, BeamParameters::default().without_damping());
        let report = spectrum(&gen).unwrap();
        let w = report.upper_half().next().unwrap().im;
        let eval = ResolventEvaluator::new(&gen);
        match eval.sigma_min(w) {
            Ok(s) => assert!(s <= 1e-8, "{s}"),
            Err(Error::SingularShift { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn sweep_refines_peaks_near_eigenfrequencies() {
        let gen = build(20, BeamParameters::default());
        let sweep = resolvent_sweep(&gen, &linear_grid(0.5, 12.0, 120)).unwrap();
        assert_eq!(sweep.norms.len(), 120);
        assert!(!sweep.peaks.is_empty());
        for (l, r) in &sweep.peaks {
            let i = sweep
                .lambdas
                .iter()
                .position(|x| x >= l)
                .unwrap_or(sweep.lambdas.len() - 1);
            assert!(*r >= sweep.norms[i.saturating_sub(1)].max(sweep.norms[i]) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn grid_must_increase() {
        let gen = build(5, BeamParameters::default());
        assert!(resolvent_sweep(&gen, &[1.0, 1.0]).is_err());
        assert!(resolvent_sweep(&gen, &[]).is_err());
    }
}
