//! Critical parameter values: Hopf, maximal canard, end of the small-cycle
//! branch and the collar threshold λ*.

#![allow(non_snake_case)]

use serde::{Deserialize, Serialize};

use super::cycle::{cycle_exists, half_cycle};
use super::manifold::{expansion, Branch};
use crate::blowup::{in_horizontal_collar, USetConfig};
use crate::error::{Error, Result};
use crate::fastslow_core::{equilibrium_point, Params, PlanePoint, SystemKind, SystemSpec};
use crate::integrate::{integrate, Crossing, EventKind, Section, StopPolicy, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    LeadingOrder,
    Numerical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Critical {
    pub value: f64,
    pub method: Method,
}

impl Critical {
    fn leading(value: f64) -> Self {
        Self { value, method: Method::LeadingOrder }
    }
    fn numerical(value: f64) -> Self {
        Self { value, method: Method::Numerical }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub lambda_H: Critical,
    pub lambda_c: Critical,
    pub lambda_sc: Option<Critical>,
    pub lambda_star: Option<Critical>,
}

pub fn lambda_H_leading(prm: &Params) -> f64 {
    -0.5 * prm.a2 * prm.eps
}

pub fn lambda_c_leading(prm: &Params) -> f64 {
    0.25 * (prm.a1 - prm.a2) * prm.eps
}

fn trace_at(spec: &SystemSpec, lambda: f64) -> Result<f64> {
    let s = spec.with_lambda(lambda);
    let pe = equilibrium_point(&s)?;
    let (_, gy) = s.g.grad(pe.x, pe.y, lambda);
    Ok(2.0 * pe.x + s.params.eps * gy)
}

/// λ where the trace of the classical linearisation at p_e vanishes.
pub fn lambda_H_numeric(spec: &SystemSpec) -> Result<f64> {
    let l0 = spec.params.lambda0;
    let (mut lo, mut hi) = (-l0, l0);
    let (flo, fhi) = (trace_at(spec, lo)?, trace_at(spec, hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::BracketFailure(format!("trace does not change sign on [-{l0}, {l0}]")));
    }
    while hi - lo > 1e-16 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if trace_at(spec, m)? < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Passage {
    Escape,
    Turn,
}

fn passage(cs: &SystemSpec, lambda: f64) -> Result<Passage> {
    let s = cs.with_lambda(lambda);
    let prm = &s.params;
    let y0 = 0.999 * prm.rho * prm.rho;
    let p0 = PlanePoint::new(expansion(y0, Branch::Attracting, prm), y0);
    let stop = StopPolicy::new(200.0 / prm.eps)
        .with_section(Section::x("right", prm.rho, Crossing::Increasing))
        .with_tol(Tolerances { rtol: 1e-12, atol: 1e-14, h_max: 0.5 })
        .stop_on_enter()
        .sparse();
    let traj = integrate(&s, p0, &stop)?;
    match traj.final_event().map(|e| (&e.kind, e.point)) {
        Some((EventKind::ReachSection(_), _)) => Ok(Passage::Escape),
        Some((EventKind::EnterC0, p)) if p.x > 0.0 => Ok(Passage::Turn),
        other => Err(Error::BracketFailure(format!("passage at lambda = {lambda} ended with {other:?}"))),
    }
}

/// λ of the maximal canard, located by bisection between orbits that jump
/// back from the repelling branch and orbits that escape to the right.
pub fn lambda_c_numeric(spec: &SystemSpec) -> Result<f64> {
    let prm = &spec.params;
    let lo = lambda_H_leading(prm);
    let hi = 2.0 * lambda_c_leading(prm) + prm.eps.powf(1.5);
    lambda_c_in(spec, lo, hi)
}

pub fn lambda_c_in(spec: &SystemSpec, mut lo: f64, mut hi: f64) -> Result<f64> {
    let l0 = spec.params.lambda0;
    if !(lo < hi) || lo.abs() > l0 || hi.abs() > l0 {
        return Err(Error::BracketFailure(format!("[{lo}, {hi}] is not a bracket inside |lambda| <= {l0}")));
    }
    let cs = spec.with_kind(SystemKind::ClassicalCanard);
    if passage(&cs, lo)? != Passage::Turn || passage(&cs, hi)? != Passage::Escape {
        return Err(Error::BracketFailure(format!("no canard transition on [{lo}, {hi}]")));
    }
    while hi - lo > 1e-13 {
        let m = 0.5 * (lo + hi);
        match passage(&cs, m)? {
            Passage::Turn => lo = m,
            Passage::Escape => hi = m,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper end of the attracting small-cycle branch, by bisection on cycle
/// existence between the midpoint of the leading λ_H, λ_c and `lambda_c`.
pub fn lambda_sc_numeric(spec: &SystemSpec, lambda_c: f64) -> Result<f64> {
    let prm = &spec.params;
    let lo = 0.5 * (lambda_H_leading(prm) + lambda_c_leading(prm));
    lambda_sc_in(spec, lo, lambda_c)
}

pub fn lambda_sc_in(spec: &SystemSpec, mut lo: f64, mut hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::BracketFailure(format!("inverted bracket [{lo}, {hi}]")));
    }
    if !cycle_exists(spec, lo)? {
        return Err(Error::BracketFailure(format!("no cycle at lambda = {lo}")));
    }
    if cycle_exists(spec, hi)? {
        return Err(Error::BracketFailure(format!("cycle persists up to lambda = {hi}")));
    }
    while hi - lo > 1e-15 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if cycle_exists(spec, m)? {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(lo)
}

/// Largest λ in (`lo`, `hi`) for which p₊ of the half cycle still lies in
/// the narrow K2 collar around the nullcline.
pub fn lambda_star_in(spec: &SystemSpec, cfg: &USetConfig, mut lo: f64, mut hi: f64) -> Result<f64> {
    let in_collar = |lam: f64| -> Result<bool> {
        let hc = half_cycle(spec, lam)?;
        let s = spec.with_lambda(lam);
        let (wl, wr) = cfg.k2_narrow_widths(&s.params);
        Ok(in_horizontal_collar(&s, hc.p_plus, wl, wr))
    };
    if !(lo < hi) {
        return Err(Error::BracketFailure(format!("inverted bracket [{lo}, {hi}]")));
    }
    if !in_collar(lo)? || in_collar(hi)? {
        return Err(Error::BracketFailure(format!("collar membership of p+ does not switch on [{lo}, {hi}]")));
    }
    while hi - lo > 1e-10 {
        let m = 0.5 * (lo + hi);
        if in_collar(m)? {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn lambda_star_numeric(spec: &SystemSpec, cfg: &USetConfig, lambda_h: f64, lambda_sc: f64) -> Result<f64> {
    // the collar is O(√ε·ε) wide, so λ* sits very close to λ_H
    let lo = lambda_h + 1e-5 * (lambda_sc - lambda_h);
    let hi = lambda_h + 0.05 * (lambda_sc - lambda_h);
    lambda_star_in(spec, cfg, lo, hi)
}

/// Leading-order values, with numerical refinements when `numeric` is set.
/// λ_sc and λ* are omitted when their brackets cannot be resolved.
pub fn critical_values(spec: &SystemSpec, cfg: &USetConfig, numeric: bool) -> Result<CriticalValues> {
    let prm = &spec.params;
    if !numeric {
        return Ok(CriticalValues {
            lambda_H: Critical::leading(lambda_H_leading(prm)),
            lambda_c: Critical::leading(lambda_c_leading(prm)),
            lambda_sc: None,
            lambda_star: None,
        });
    }
    let lh = lambda_H_numeric(spec)?;
    let lc = lambda_c_numeric(spec)?;
    let lsc = lambda_sc_numeric(spec, lc).ok();
    let lstar = lsc.and_then(|s| lambda_star_numeric(spec, cfg, lh, s).ok());
    Ok(CriticalValues {
        lambda_H: Critical::numerical(lh),
        lambda_c: Critical::numerical(lc),
        lambda_sc: lsc.map(Critical::numerical),
        lambda_star: lstar.map(Critical::numerical),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_examples() {
        let p = Params::new(0.01, 0.0);
        assert!((lambda_H_leading(&p) + 4.5e-3).abs() < 1e-18);
        assert!((lambda_c_leading(&p) - 2.5e-4).abs() < 1e-18);
        let mut q = Params::new(0.0, 0.0);
        q.a2 = 1.0;
        assert_eq!(lambda_H_leading(&q), 0.0);
        q.a2 = 2.0;
        q.eps = 0.1;
        assert!((lambda_H_leading(&q) + 0.1).abs() < 1e-16);
        q.a1 = 2.0;
        assert_eq!(lambda_c_leading(&q), 0.0);
        q.a1 = 3.0;
        q.a2 = 1.0;
        q.eps = 0.02;
        assert!((lambda_c_leading(&q) - 0.01).abs() < 1e-16);
    }

    #[test]
    fn hopf_near_leading() {
        let spec = SystemSpec::fig_preset(0.01, 0.0).unwrap();
        let lh = lambda_H_numeric(&spec).unwrap();
        assert!(trace_at(&spec, lh).unwrap().abs() < 1e-12);
        assert!((lh - lambda_H_leading(&spec.params)).abs() < 1e-3);
    }

    #[test]
    fn lambda_c_near_leading() {
        let spec = SystemSpec::fig_preset(0.01, 0.0).unwrap();
        let lc = lambda_c_numeric(&spec).unwrap();
        assert!((lc - 2.5e-4).abs() < 1e-3 * 0.1, "{lc}");
    }

    #[test]
    fn tiny_lambda0_fails() {
        let mut spec = SystemSpec::fig_preset(0.01, 0.0).unwrap();
        spec.params.lambda0 = 1e-4;
        assert!(matches!(lambda_c_numeric(&spec), Err(Error::BracketFailure(_))));
    }
}
