//! Attracting half cycles of the classical system and their vertical
//! extensions P₋, P₊.

use serde::{Deserialize, Serialize};

use crate::blowup::VSet;
use crate::error::{Error, Result};
use crate::fastslow_core::{equilibrium_point, PlanePoint, SystemKind, SystemSpec};
use crate::integrate::{integrate, Domain, EventKind, StopPolicy, Tolerances};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfCycle {
    pub lambda: f64,
    /// Exterior arc from p_minus to p_plus.
    pub arc: Vec<PlanePoint>,
    pub p_minus: PlanePoint,
    pub p_plus: PlanePoint,
    /// Re-entry abscissa of the piecewise orbit started at p_minus.
    pub piecewise_reentry: f64,
}

impl HalfCycle {
    #[allow(non_snake_case)]
    pub fn P_minus(&self) -> f64 {
        self.p_minus.x
    }

    #[allow(non_snake_case)]
    pub fn P_plus(&self) -> f64 {
        self.p_plus.x
    }
}

const TOL: Tolerances = Tolerances { rtol: 1e-11, atol: 1e-13, h_max: 0.5 };

fn stop_policy(spec: &SystemSpec) -> StopPolicy {
    StopPolicy::new(400.0 / spec.params.eps)
        .with_domain(Domain::V(VSet::new(&spec.params)))
        .with_tol(TOL)
}

struct Turn {
    next: f64,
    p_plus: PlanePoint,
    arc: Vec<PlanePoint>,
}

/// One revolution of the classical orbit from (x, x²): below the parabola,
/// back into C0 and out again on the left. `None` when it leaves V first.
fn revolution(cs: &SystemSpec, x: f64, record: bool) -> Result<Option<Turn>> {
    let mut stop = stop_policy(cs).stop_on_exit();
    stop.record = record;
    let traj = integrate(cs, PlanePoint::new(x, x * x), &stop)?;
    let enter = traj.first(&EventKind::EnterC0).map(|e| e.point);
    match (traj.final_event().map(|e| &e.kind), enter) {
        (Some(EventKind::ExitC0), Some(p_plus)) => {
            let arc = traj.arcs.first().map(|a| a.samples.iter().map(|s| s.1).collect()).unwrap_or_default();
            Ok(Some(Turn { next: traj.final_point().x, p_plus, arc }))
        }
        _ => Ok(None),
    }
}

fn defect(cs: &SystemSpec, x: f64) -> Result<f64> {
    Ok(match revolution(cs, x, false)? {
        Some(t) => t.next - x,
        None => f64::NEG_INFINITY,
    })
}

/// Locates the attracting closed orbit as the root of R(x) - x, R being the
/// return map on left crossings of the parabola. Starts are scanned outward
/// from p_e to find the bracket.
pub fn half_cycle(spec: &SystemSpec, lambda: f64) -> Result<HalfCycle> {
    let cs = spec.with_kind(SystemKind::ClassicalCanard).with_lambda(lambda);
    let xe = equilibrium_point(&cs)?.x;
    let rho = cs.params.rho;
    let mut inner = None;
    let mut outer = None;
    let mut delta = 1e-7;
    while xe - delta > -rho {
        let x = xe - delta;
        let f = defect(&cs, x)?;
        if f < 0.0 {
            inner = Some((x, f));
        } else if inner.is_none() {
            return Err(Error::NoCycle(lambda));
        } else {
            outer = Some((x, f));
            break;
        }
        delta *= 2.0;
    }
    let (Some((mut a, mut fa)), Some((mut b, mut fb))) = (inner, outer) else {
        return Err(Error::NoCycle(lambda));
    };
    // regula falsi with the Illinois modification; a is inner (f < 0), b outer
    let mut side = 0;
    while (a - b).abs() > 1e-11 {
        let x = if fa.is_finite() {
            let t = b - fb * (b - a) / (fb - fa);
            if t > b && t < a { t } else { 0.5 * (a + b) }
        } else {
            0.5 * (a + b)
        };
        let f = defect(&cs, x)?;
        if f == 0.0 {
            a = x;
            b = x;
            break;
        }
        if f < 0.0 {
            a = x;
            fa = f;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = f;
            if side == 1 && fa.is_finite() {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    let x = 0.5 * (a + b);
    let turn = revolution(&cs, x, true)?.ok_or(Error::NoCycle(lambda))?;
    if (turn.next - x).abs() > 1e-8 {
        return Err(Error::NoCycle(lambda));
    }
    let p_minus = PlanePoint::new(x, x * x);
    let pw = spec.with_kind(SystemKind::PiecewiseCanard).with_lambda(lambda);
    let traj = integrate(&pw, p_minus, &stop_policy(&pw).stop_on_enter().sparse())?;
    let piecewise_reentry = match traj.final_event() {
        Some(e) if e.kind == EventKind::EnterC0 => e.point.x,
        _ => return Err(Error::RootLost(x)),
    };
    Ok(HalfCycle { lambda, arc: turn.arc, p_minus, p_plus: turn.p_plus, piecewise_reentry })
}

/// Relaxation towards the attracting cycle from just outside p_e. True when
/// successive left crossings agree to 1e-8, false when the orbit leaves V or
/// p_e attracts.
pub fn cycle_exists(spec: &SystemSpec, lambda: f64) -> Result<bool> {
    let cs = spec.with_kind(SystemKind::ClassicalCanard).with_lambda(lambda);
    let xe = equilibrium_point(&cs)?.x;
    let mut x = xe - 1e-6;
    for _ in 0..400 {
        let Some(t) = revolution(&cs, x, false)? else {
            return Ok(false);
        };
        if (t.next - x).abs() < 1e-8 {
            return Ok(true);
        }
        if t.next > xe {
            return Ok(false);
        }
        x = t.next;
    }
    Ok(x < xe)
}
