//! Slow-manifold expansions and the curve of equilibria inside C0.

use serde::{Deserialize, Serialize};

use crate::blowup::VSet;
use crate::error::{Error, Result};
use crate::fastslow_core::{switching_value, Params, PlanePoint, SystemKind, SystemSpec};
use crate::integrate::{integrate, Crossing, EventKind, Section, StopPolicy, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Attracting,
    Repelling,
}

/// First-order expansion x = ∓√y + ε/(4y)·(∓√y + (a1+a2)y - λ).
pub fn slow_manifold_x(y: f64, branch: Branch, prm: &Params) -> Result<f64> {
    if !(y > prm.eps) {
        return Err(Error::Domain(format!("expansion needs y > eps, got y = {y}")));
    }
    Ok(expansion(y, branch, prm))
}

pub(crate) fn expansion(y: f64, branch: Branch, prm: &Params) -> f64 {
    let s = match branch {
        Branch::Attracting => -y.sqrt(),
        Branch::Repelling => y.sqrt(),
    };
    s + prm.eps / (4.0 * y) * (s + (prm.a1 + prm.a2) * y - prm.lambda)
}

/// Solves g(x, u, λ) = 0 for u by Newton iteration from `guess`.
pub fn nullcline_u(spec: &SystemSpec, x: f64, guess: f64) -> Result<f64> {
    let lam = spec.params.lambda;
    let mut u = guess;
    for _ in 0..60 {
        let r = spec.g.g(x, u, lam);
        let (_, gy) = spec.g.grad(x, u, lam);
        if gy == 0.0 || !gy.is_finite() {
            return Err(Error::RootLost(x));
        }
        let du = r / gy;
        u -= du;
        if du.abs() <= 1e-15 * (1.0 + u.abs()) {
            return Ok(u);
        }
    }
    if spec.g.g(x, u, lam).abs() < 1e-12 {
        Ok(u)
    } else {
        Err(Error::RootLost(x))
    }
}

/// Nodes (x, u_e(x)) of the equilibrium curve that lie in C0 and in V.
pub fn gamma_e(spec: &SystemSpec, x_grid: &[f64]) -> Result<Vec<PlanePoint>> {
    let v = VSet::new(&spec.params);
    let mut guess = 0.0;
    let mut out = Vec::new();
    for &x in x_grid {
        let u = nullcline_u(spec, x, guess)?;
        guess = u;
        let p = PlanePoint::new(x, u);
        if switching_value(p) >= 0.0 && v.contains(p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Largest |x_numeric(y) - x_expansion(y)| over the heights `ys`, following
/// the classical orbit started on the expansion at `y_start`.
pub fn attracting_manifold_deviation(spec: &SystemSpec, y_start: f64, ys: &[f64]) -> Result<f64> {
    let cs = spec.with_kind(SystemKind::ClassicalCanard);
    let prm = &cs.params;
    let p0 = PlanePoint::new(expansion(y_start, Branch::Attracting, prm), y_start);
    let mut stop = StopPolicy::new(1e3 / prm.eps).sparse();
    stop.tol = Tolerances { rtol: 1e-12, atol: 1e-13, h_max: 0.5 };
    for (i, &y) in ys.iter().enumerate() {
        let mut s = Section::y(&format!("y{i}"), y, Crossing::Decreasing);
        s.terminal = false;
        stop.sections.push(s);
    }
    let lowest = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    stop.sections.push(Section::y("end", 0.5 * lowest, Crossing::Decreasing));
    let traj = integrate(&cs, p0, &stop)?;
    let mut worst: f64 = 0.0;
    let mut seen = 0;
    for e in &traj.events {
        if let EventKind::ReachSection(name) = &e.kind {
            if name != "end" {
                seen += 1;
                worst = worst.max((e.point.x - expansion(e.point.y, Branch::Attracting, prm)).abs());
            }
        }
    }
    if seen != ys.len() {
        return Err(Error::SectionNotReached("slow manifold window".into()));
    }
    Ok(worst)
}
