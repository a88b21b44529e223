//! Principal branch of Lambert's W on the nonnegative half-line.

use crate::error::{Error, Result};

const MAX_ITER: usize = 50;
const STEP_TOL: f64 = 1e-15;

/// Principal branch `W0(x)` for `x >= 0`, the solution `w >= 0` of `w * exp(w) = x`.
///
/// Halley iteration from an asymptotic starting point. Below `e` the iteration runs on
/// `w e^w - x`; from `e` upwards it runs on `w + ln w - ln x`, which has the same root and
/// cannot overflow. `W0(+inf) = +inf`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("lambert_w0 needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x < std::f64::consts::E {
        let mut w = if x < 1.0 { x } else { x.ln_1p() };
        for _ in 0..MAX_ITER {
            let ew = w.exp();
            let f = w * ew - x;
            let fp = ew * (w + 1.0);
            let step = f / (fp - (w + 2.0) * f / (2.0 * w + 2.0));
            w -= step;
            if step.abs() <= STEP_TOL * w.abs() {
                break;
            }
        }
        Ok(w)
    } else {
        let lx = x.ln();
        let mut w = lx - lx.ln();
        if w <= 0.0 {
            w = 1.0;
        }
        for _ in 0..MAX_ITER {
            let f = w + w.ln() - lx;
            let fp = 1.0 + 1.0 / w;
            let fpp = -1.0 / (w * w);
            let step = f / (fp - f * fpp / (2.0 * fp));
            w -= step;
            if step.abs() <= STEP_TOL * w {
                break;
            }
        }
        Ok(w)
    }
}
