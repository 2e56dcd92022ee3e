//! Reduced rescaling-chart quantities: the first integral H, its level sets
//! and the linearised return map near the canard point.

use crate::error::{Error, Result};

/// H(x2, y2) = ½·exp(-2y2)·(y2 - x2² + ½), constant along the reduced
/// exterior flow x2' = x2² - y2, y2' = x2.
#[allow(non_snake_case)]
pub fn H_value(x2: f64, y2: f64) -> f64 {
    0.5 * (-2.0 * y2).exp() * (y2 - x2 * x2 + 0.5)
}

/// Height c(h) = -½·ln(4h) at which the level set H = h meets the parabola.
pub fn c_of_h(h: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 0.25) {
        return Err(Error::Domain(format!("c(h) needs h in (0, 1/4], got {h}")));
    }
    Ok(-0.5 * (4.0 * h).ln())
}

/// The parabola y2 = x2² - ½ on which H vanishes, parametrised by t2.
pub fn gamma_c2(t2: f64) -> (f64, f64) {
    (0.5 * t2, 0.25 * t2 * t2 - 0.5)
}

/// Linearisation of the K2 exterior flow around the weak focus. Returns
/// the re-entry abscissa λ2 + c and the half-turn time π/k with
/// k = ½·√|(2λ2 - r2·a2)² - 4|.
pub fn return_map_linearized(r2: f64, lambda2: f64, a2: f64, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::Domain("c must be positive".into()));
    }
    let d = (2.0 * lambda2 - r2 * a2).powi(2);
    if !(d < 4.0) {
        return Err(Error::Domain(format!("(2l2 - r2 a2)^2 = {d} is not below 4")));
    }
    let k = 0.5 * (d - 4.0).abs().sqrt();
    Ok((lambda2 + c, std::f64::consts::PI / k))
}
