//! Exit-height scaling of the fold transition map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastslow_core::SystemSpec;
use crate::integrate::{transition_map_fold_with, Tolerances};
use crate::par::{self, Execution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldFit {
    pub slope: f64,
    pub intercept: f64,
    pub eps: Vec<f64>,
    pub y_out: Vec<f64>,
}

const TOL: Tolerances = Tolerances { rtol: 1e-11, atol: 1e-14, h_max: 0.05 };

/// Least-squares slope of log|y_out| against log ε, with y_out the height at
/// which the orbit from (x_in, ρ²) crosses x = ρ. |y_out| is used because the
/// crossing lies below the axis.
pub fn fold_scaling_fit(spec: &SystemSpec, eps_list: &[f64], x_in: f64, exec: Execution) -> Result<FoldFit> {
    if !spec.kind.is_fold() {
        return Err(Error::Precondition("fold scaling needs a fold system".into()));
    }
    let lo = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if eps_list.len() < 2 || !(lo > 0.0) || (hi / lo).log10() < 1.5 {
        return Err(Error::Precondition("eps list must span at least 1.5 decades".into()));
    }
    let ys = par::map(eps_list, exec, |&e| transition_map_fold_with(&spec.with_eps(e), x_in, TOL));
    let y_out = ys.into_iter().collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let zs: Vec<f64> = y_out.iter().map(|y| y.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mz = zs.iter().sum::<f64>() / n;
    let sxz: f64 = xs.iter().zip(&zs).map(|(x, z)| (x - mx) * (z - mz)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxz / sxx;
    Ok(FoldFit { slope, intercept: mz - slope * mx, eps: eps_list.to_vec(), y_out })
}

/// Exit heights for several entry abscissae at the system's ε.
pub fn fold_exit_heights(spec: &SystemSpec, x_ins: &[f64], exec: Execution) -> Result<Vec<f64>> {
    par::map(x_ins, exec, |&x| transition_map_fold_with(spec, x, TOL)).into_iter().collect()
}
