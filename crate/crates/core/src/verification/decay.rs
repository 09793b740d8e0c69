use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::fit_line_weighted;
use crate::timestepper::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: [f64; 2],
    /// Slope of `log E` against `log t`.
    pub exponent: f64,
    pub intercept: f64,
    pub residual: f64,
    /// `max t E(t) / E(0)` over the window.
    pub sup_t_e: f64,
    /// `min t E(t) / E(0)` over the window.
    pub inf_t_e: f64,
    /// `1 / (2 |abscissa|)` when an abscissa was supplied.
    pub tail_guard: Option<f64>,
}

impl DecayFit {
    /// `sup / inf` of `t E(t)` over the window.
    pub fn envelope_ratio(&self) -> f64 {
        self.sup_t_e / self.inf_t_e
    }
}

/// Fits `log E` against `log t` over the samples inside `window`, each
/// weighted by the stretch of `log t` it covers so every decade weighs the
/// same.
/// With `abscissa` given, windows reaching past `1 / (2 |abscissa|)`, where
/// the finite model's exponential tail takes over, are rejected.
pub fn decay_fit_series(
    times: &[f64],
    energies: &[f64],
    window: [f64; 2],
    abscissa: Option<f64>,
) -> Result<DecayFit> {
    let [t0, t1] = window;
    if times.len() != energies.len() || times.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: energies.len(),
        });
    }
    if !(t0 > 0.0 && t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "window must satisfy 0 < t0 < t1, got [{t0}, {t1}]"
        )));
    }
    let (first, last) = (times[0], times[times.len() - 1]);
    if t0 < first || t1 > last * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "window [{t0}, {t1}] outside the simulated horizon [{first}, {last}]"
        )));
    }
    let tail_guard = match abscissa {
        Some(a) => Some(check_tail_guard(window, a)?),
        None => None,
    };
    let e0 = energies[0];
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= t0 && times[i] <= t1)
        .collect();
    if idx.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fewer than two samples in window [{t0}, {t1}]"
        )));
    }
    let mut pts = Vec::with_capacity(idx.len());
    let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
    for &i in &idx {
        let (t, e) = (times[i], energies[i]);
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "energy vanished at t = {t}; log fit impossible"
            )));
        }
        pts.push((t.ln(), e.ln()));
        let r = t * e / e0;
        sup = sup.max(r);
        inf = inf.min(r);
    }
    let k = pts.len();
    let weights: Vec<f64> = (0..k)
        .map(|j| 0.5 * (pts[(j + 1).min(k - 1)].0 - pts[j.saturating_sub(1)].0))
        .collect();
    let (exponent, intercept, residual) = fit_line_weighted(&pts, &weights)
        .ok_or(Error::InvalidArgument("degenerate window".into()))?;
    Ok(DecayFit {
        window,
        exponent,
        intercept,
        residual,
        sup_t_e: sup,
        inf_t_e: inf,
        tail_guard,
    })
}

/// Returns the guard `1 / (2 |abscissa|)` or rejects a window ending past it.
pub fn check_tail_guard(window: [f64; 2], abscissa: f64) -> Result<f64> {
    let guard = 1.0 / (2.0 * abscissa.abs());
    if window[1] > guard {
        return Err(Error::TailGuard {
            t1: window[1],
            guard,
        });
    }
    Ok(guard)
}

/// [`decay_fit_series`] on the total energy of a trajectory.
pub fn decay_fit(traj: &Trajectory, window: [f64; 2], abscissa: Option<f64>) -> Result<DecayFit> {
    let e: Vec<f64> = traj.energies.iter().map(|e| e.total).collect();
    decay_fit_series(&traj.times, &e, window, abscissa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(f: impl Fn(f64) -> f64, t_end: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
        let n = (t_end / dt).round() as usize;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let e = t.iter().map(|&t| f(t)).collect();
        (t, e)
    }

    #[test]
    fn exact_inverse_power() {
        let (t, mut e) = samples(|t| 1.0 / t.max(1e-300), 200.0, 0.01);
        e[0] = 1.0;
        let fit = decay_fit_series(&t, &e, [10.0, 200.0], None).unwrap();
        assert!((fit.exponent + 1.0).abs() < 1e-12, "{}", fit.exponent);
        assert!((fit.sup_t_e - 1.0).abs() < 1e-12 && (fit.inf_t_e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_is_steeper_and_guarded() {
        let (t, e) = samples(|t| (-t).exp(), 30.0, 0.01);
        let fit = decay_fit_series(&t, &e, [10.0, 30.0], None).unwrap();
        assert!(fit.exponent < -5.0);
        assert!(matches!(
            decay_fit_series(&t, &e, [10.0, 30.0], Some(-0.5)),
            Err(Error::TailGuard { .. })
        ));
    }

    #[test]
    fn window_must_lie_in_horizon() {
        let (t, e) = samples(|t| 1.0 / (1.0 + t), 10.0, 0.1);
        assert!(decay_fit_series(&t, &e, [1.0, 20.0], None).is_err());
        assert!(decay_fit_series(&t, &e, [0.0, 5.0], None).is_err());
    }

    #[test]
    fn envelope_of_inverse_time() {
        let (t, e) = samples(|t| 1.0 / (1.0 + t), 200.0, 0.05);
        let fit = decay_fit_series(&t, &e, [10.0, 200.0], None).unwrap();
        assert!(fit.envelope_ratio() < 1.1);
    }
}
