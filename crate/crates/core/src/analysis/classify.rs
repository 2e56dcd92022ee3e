//! The separating line P_c and the orbit classifier.

use serde::{Deserialize, Serialize};

use super::criticals::{lambda_H_numeric, lambda_c_numeric};
use super::cycle::{half_cycle, HalfCycle};
use super::manifold::{expansion, Branch};
use crate::blowup::{classify_U, region_label, RegionLabel, USetConfig, VSet};
use crate::error::{Error, Result};
use crate::fastslow_core::{equilibrium_point, PlanePoint, Regime, SystemKind, SystemSpec};
use crate::integrate::{integrate, Event, EventKind, HybridTrajectory, StopPolicy};

/// Margin used when comparing abscissae against a vertical line.
pub const LINE_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "x", rename_all = "kebab-case")]
pub enum PcLocation {
    Finite(f64),
    /// Every start on the window re-enters C0.
    MinusInfinity,
    /// Every start on the window leaves V below C0.
    RightOfWindow,
}

fn t_max(spec: &SystemSpec) -> f64 {
    400.0 / spec.params.eps
}

fn leaves_below(pw: &SystemSpec, x: f64) -> Result<bool> {
    let stop = StopPolicy::in_v(pw, t_max(pw)).stop_on_enter().sparse();
    let traj = integrate(pw, PlanePoint::new(x, x * x), &stop)?;
    match traj.final_event().map(|e| &e.kind) {
        Some(EventKind::ExitV(_)) => Ok(true),
        Some(EventKind::EnterC0) => Ok(false),
        other => Err(Error::Unclassifiable(format!("start x = {x} ended with {other:?}"))),
    }
}

/// Abscissa range of C_∂ ∩ U₀⁻ scanned for P_c.
pub fn pc_window(spec: &SystemSpec, cfg: &USetConfig) -> Result<(f64, f64)> {
    let xe = equilibrium_point(spec)?.x;
    let rho = spec.params.rho;
    let lo = -rho * (1.0 - 1e-9);
    let step = 1e-3 * rho;
    let mut x = xe - step;
    while x > lo {
        if classify_U(PlanePoint::new(x, x * x), spec, cfg)? == RegionLabel::U0minus {
            return Ok((lo, x));
        }
        x -= step;
    }
    Err(Error::Domain("C_∂ ∩ U0- is empty".into()))
}

/// Bisection over starts on C_∂ ∩ U₀⁻ between orbits that leave V below
/// C0 and orbits that re-enter. Requires λ above `lambda_c`.
#[allow(non_snake_case)]
pub fn find_Pc_with(spec: &SystemSpec, cfg: &USetConfig, lambda_c: f64) -> Result<PcLocation> {
    let prm = &spec.params;
    if !(prm.lambda > lambda_c && prm.lambda <= prm.lambda0) {
        return Err(Error::Precondition(format!(
            "P_c needs lambda in ({lambda_c}, {}], got {}",
            prm.lambda0, prm.lambda
        )));
    }
    let pw = spec.with_kind(SystemKind::PiecewiseCanard);
    let (mut lo, mut hi) = pc_window(&pw, cfg)?;
    if !leaves_below(&pw, lo)? {
        return Ok(PcLocation::MinusInfinity);
    }
    if leaves_below(&pw, hi)? {
        return Ok(PcLocation::RightOfWindow);
    }
    while hi - lo > 1e-8 {
        let m = 0.5 * (lo + hi);
        if leaves_below(&pw, m)? {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(PcLocation::Finite(0.5 * (lo + hi)))
}

#[allow(non_snake_case)]
pub fn find_Pc(spec: &SystemSpec, cfg: &USetConfig) -> Result<PcLocation> {
    let lc = lambda_c_numeric(spec)?;
    find_Pc_with(spec, cfg, lc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    ExitsInU0plus,
    ExitsBelowC0,
    ConvergesToEquilibriumSide,
    MaximalCanardShadow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    On,
    Right,
}

impl Side {
    pub fn of(x: f64, line: f64) -> Side {
        if x < line - LINE_MARGIN {
            Side::Left
        } else if x > line + LINE_MARGIN {
            Side::Right
        } else {
            Side::On
        }
    }
}

/// Where a start sits relative to the half cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleSide {
    /// Left of P₋.
    Exterior,
    /// Between P₋ and P₊.
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub outcome: Outcome,
    pub exit: Event,
    pub crossed: Vec<RegionLabel>,
    pub cycle_side: Option<CycleSide>,
    pub exit_vs_p_plus: Option<Side>,
    pub start_vs_p_c: Option<Side>,
}

/// Classifier for one (spec, λ), with the half cycle and P_c precomputed.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub spec: SystemSpec,
    pub cfg: USetConfig,
    pub cycle: Option<HalfCycle>,
    pub pc: Option<PcLocation>,
}

impl Classifier {
    pub fn new(spec: &SystemSpec, cfg: &USetConfig) -> Result<Self> {
        let spec = spec.with_kind(SystemKind::PiecewiseCanard);
        cfg.validate(&spec.params)?;
        let lam = spec.params.lambda;
        let lh = lambda_H_numeric(&spec)?;
        let mut cycle = None;
        let mut pc = None;
        if lam > lh {
            let lc = lambda_c_numeric(&spec)?;
            if lam < lc {
                cycle = match half_cycle(&spec, lam) {
                    Ok(c) => Some(c),
                    Err(Error::NoCycle(_)) => None,
                    Err(e) => return Err(e),
                };
            } else if lam > lc {
                pc = Some(find_Pc_with(&spec, cfg, lc)?);
            }
        }
        Ok(Self { spec, cfg: *cfg, cycle, pc })
    }

    pub fn with_parts(spec: &SystemSpec, cfg: &USetConfig, cycle: Option<HalfCycle>, pc: Option<PcLocation>) -> Self {
        Self { spec: spec.with_kind(SystemKind::PiecewiseCanard), cfg: *cfg, cycle, pc }
    }

    pub fn run(&self, p0: PlanePoint) -> Result<HybridTrajectory> {
        integrate(&self.spec, p0, &StopPolicy::in_v(&self.spec, t_max(&self.spec)))
    }

    pub fn classify(&self, p0: PlanePoint) -> Result<OrbitClass> {
        let start = classify_U(p0, &self.spec, &self.cfg)?;
        if start.is_collar() {
            return Err(Error::Precondition(format!("start ({}, {}) lies in the U0 collar", p0.x, p0.y)));
        }
        let traj = self.run(p0)?;
        self.classify_trajectory(p0, &traj)
    }

    /// Outcome derived from a finished trajectory alone.
    pub fn classify_trajectory(&self, p0: PlanePoint, traj: &HybridTrajectory) -> Result<OrbitClass> {
        let v = VSet::new(&self.spec.params);
        let mut crossed: Vec<RegionLabel> = Vec::new();
        for (_, _, p) in traj.samples() {
            if !v.contains(p) {
                continue;
            }
            let l = region_label(p, &self.spec, &self.cfg);
            if crossed.last() != Some(&l) {
                crossed.push(l);
            }
        }
        let exit = traj.final_event().cloned().ok_or_else(|| Error::Unclassifiable("no terminal event".into()))?;
        let q = exit.point;
        let outcome = match &exit.kind {
            EventKind::ExitV(_) => {
                let label = region_label(q, &self.spec, &self.cfg);
                if label.is_collar() {
                    return Err(Error::Unclassifiable(format!("exit ({}, {}) lies in the U0 collar", q.x, q.y)));
                }
                if self.shadows_repelling_branch(traj) {
                    Outcome::MaximalCanardShadow
                } else if traj.final_regime() == Regime::Exterior {
                    Outcome::ExitsBelowC0
                } else if label == RegionLabel::U0plus {
                    Outcome::ExitsInU0plus
                } else {
                    return Err(Error::Unclassifiable(format!("exit ({}, {}) in {label:?}", q.x, q.y)));
                }
            }
            EventKind::Equilibrium => Outcome::ConvergesToEquilibriumSide,
            other => return Err(Error::Unclassifiable(format!("trajectory ended with {}", other.label()))),
        };
        let (cycle_side, exit_vs_p_plus) = match &self.cycle {
            Some(c) => {
                let side = match (Side::of(p0.x, c.P_minus()), Side::of(p0.x, c.P_plus())) {
                    (Side::Left, _) => Some(CycleSide::Exterior),
                    (Side::Right, Side::Left) => Some(CycleSide::Interior),
                    _ => None,
                };
                (side, Some(Side::of(q.x, c.P_plus())))
            }
            None => (None, None),
        };
        let start_vs_p_c = match self.pc {
            Some(PcLocation::Finite(x)) => Some(Side::of(p0.x, x)),
            Some(PcLocation::MinusInfinity) => Some(Side::Right),
            Some(PcLocation::RightOfWindow) => Some(Side::Left),
            None => None,
        };
        Ok(OrbitClass { outcome, exit, crossed, cycle_side, exit_vs_p_plus, start_vs_p_c })
    }

    /// Longest stretch of the last exterior arc within ε of the repelling
    /// expansion spans more than ρ/2 in x.
    fn shadows_repelling_branch(&self, traj: &HybridTrajectory) -> bool {
        let prm = &self.spec.params;
        let Some(arc) = traj.arcs.iter().rev().find(|a| a.regime == Regime::Exterior) else {
            return false;
        };
        let mut best: f64 = 0.0;
        let mut run_start: Option<f64> = None;
        for &(_, p) in &arc.samples {
            let near = p.x > 0.0 && p.y > prm.eps && (p.x - expansion(p.y, Branch::Repelling, prm)).abs() < prm.eps;
            match (near, run_start) {
                (true, None) => run_start = Some(p.x),
                (true, Some(x0)) => best = best.max((p.x - x0).abs()),
                (false, _) => run_start = None,
            }
        }
        best > 0.5 * prm.rho
    }
}

pub fn classify_orbit(spec: &SystemSpec, p0: PlanePoint) -> Result<OrbitClass> {
    Classifier::new(spec, &USetConfig::default())?.classify(p0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_around_small_cycle() {
        let lam = 0.5 * -4.5e-3;
        let spec = SystemSpec::fig_preset(0.01, lam).unwrap();
        let c = Classifier::new(&spec, &USetConfig::default()).unwrap();
        assert!(c.cycle.is_some());
        let b = c.classify(PlanePoint::new(-0.2, 0.09)).unwrap();
        assert_eq!(b.outcome, Outcome::ExitsInU0plus);
        assert_eq!(b.cycle_side, Some(CycleSide::Exterior));
        assert_eq!(b.exit_vs_p_plus, Some(Side::Right));
        // at this λ the cycle is narrower than 0.15, so this start is still exterior
        let cc = c.classify(PlanePoint::new(-0.15, 0.09)).unwrap();
        assert_eq!(cc.cycle_side, Some(CycleSide::Exterior));
        assert_eq!(cc.exit_vs_p_plus, Some(Side::Right));
        let inner = c.classify(PlanePoint::new(-0.07, 0.02)).unwrap();
        assert_eq!(inner.outcome, Outcome::ExitsInU0plus);
        assert_eq!(inner.cycle_side, Some(CycleSide::Interior));
        assert_eq!(inner.exit_vs_p_plus, Some(Side::Left));
        assert!(inner.exit.point.x > c.cycle.as_ref().unwrap().P_minus());
    }

    #[test]
    fn pc_precondition() {
        let spec = SystemSpec::fig_preset(0.01, 1e-4).unwrap();
        let r = find_Pc_with(&spec, &USetConfig::default(), 2.5e-4);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
