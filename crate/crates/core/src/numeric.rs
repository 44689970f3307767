//! Small numerical helpers shared across modules.

use crate::C64;

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn expm1c(z: C64) -> C64 {
    let half_sin = (0.5 * z.im).sin();
    C64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin, z.re.exp() * z.im.sin())
}

/// `cos(z) - 1` without cancellation for small `|z|`.
pub fn cosm1c(z: C64) -> C64 {
    let s = (0.5 * z).sin();
    -2.0 * s * s
}

/// `ln(cosh(x))`, accurate for small and large `|x|`.
pub fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1.0 {
        let s = (0.5 * ax).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
    }
}

pub fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Least-squares slope of `log10(y)` against `log10(x)`.
///
/// Returns `None` with fewer than two points or when any coordinate is not
/// strictly positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| v.is_nan() || *v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
