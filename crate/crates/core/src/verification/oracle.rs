use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Complex64;
use crate::model::{BeamParameters, Field, ScalarWave};

const MAX_NEWTON: usize = 100;

/// Roots of `a cosh z + (xi + b z) sinh z` with `a = sqrt(density * stiffness)`,
/// `b = tip_mass * c / L`. The eigenvalue is `lambda = z c / L`.
fn characteristic(z: Complex64, a: f64, b: f64, xi: f64) -> (Complex64, Complex64) {
    let (sh, ch) = (z.sinh(), z.cosh());
    let lin = z * b + xi;
    let f = ch * a + lin * sh;
    let df = sh * (a + b) + lin * ch;
    (f, df)
}

fn newton(mut z: Complex64, a: f64, b: f64, xi: f64, index: usize) -> Result<Complex64> {
    for _ in 0..MAX_NEWTON {
        let (f, df) = characteristic(z, a, b, xi);
        if df.norm() == 0.0 {
            break;
        }
        let dz = f / df;
        z -= dz;
        if dz.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    Err(Error::RootNotConverged {
        index,
        iterations: MAX_NEWTON,
    })
}

/// Lowest `count` eigenvalues with `Im >= 0` of one boundary-damped wave
/// with tip mass, found by complex Newton from asymptotic seeds and sorted by
/// `|Im|`. Conjugates are roots as well.
pub fn characteristic_roots_scalar(wave: &ScalarWave, count: usize) -> Result<Vec<Complex64>> {
    wave.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be ≥ 1".into()));
    }
    let a = wave.impedance();
    let c = wave.speed();
    let scale = c / wave.length;
    let b = wave.tip_mass * scale;
    let xi = wave.gain;

    let mut seeds: Vec<Complex64> = Vec::new();
    let extra = count + 3;
    if b > 0.0 {
        // Low root: a + (xi + b z) z = 0 for moderate z.
        let disc = Complex64::new(xi * xi - 4.0 * a * b, 0.0).sqrt();
        for s in [(-xi + disc) / (2.0 * b), (-xi - disc) / (2.0 * b)] {
            if s.im >= 0.0 {
                seeds.push(s);
            }
        }
        for k in 1..=extra {
            let z0 = Complex64::new(0.0, k as f64 * PI);
            seeds.push(z0 - a / (z0 * b + xi));
        }
    } else {
        // No tip mass: tanh z = -a / xi has closed-form roots.
        let r = xi / a;
        if (r - 1.0).abs() < 1e-15 {
            return Err(Error::InvalidArgument(
                "impedance-matched boundary has no finite eigenvalues".into(),
            ));
        }
        let re = 0.5 * ((1.0 - r) / (1.0 + r)).abs().ln();
        for k in 0..extra {
            let im = if r < 1.0 {
                (k as f64 + 0.5) * PI
            } else {
                k as f64 * PI
            };
            seeds.push(Complex64::new(re, im));
        }
    }

    let mut roots: Vec<Complex64> = Vec::new();
    for (i, s) in seeds.into_iter().enumerate() {
        let z = newton(s, a, b, xi, i)?;
        let z = if z.im < 0.0 { z.conj() } else { z };
        let z = if z.im.abs() < 1e-13 {
            Complex64::new(z.re, 0.0)
        } else {
            z
        };
        if !roots
            .iter()
            .any(|r| (r - z).norm() <= 1e-9 * (1.0 + z.norm()))
        {
            roots.push(z);
        }
    }
    roots.sort_by(|p, q| p.im.total_cmp(&q.im).then(p.re.total_cmp(&q.re)));
    if roots.len() < count {
        return Err(Error::RootNotConverged {
            index: roots.len(),
            iterations: MAX_NEWTON,
        });
    }
    Ok(roots.into_iter().take(count).map(|z| z * scale).collect())
}

/// Oracle for one field of the decoupled beam (`gamma = 0`).
pub fn characteristic_roots_oracle(
    params: &BeamParameters,
    field: Field,
    count: usize,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    if params.gamma != 0.0 {
        return Err(Error::InvalidArgument(
            "the characteristic-root oracle needs gamma = 0".into(),
        ));
    }
    characteristic_roots_scalar(&params.scalar_field(field), count)
}
