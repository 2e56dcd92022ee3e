//! Hybrid event-driven integration across the switching parabola.
//!
//! Each arc is integrated with the Dormand-Prince 5(4) pair using the field
//! of a single branch. Sign changes of the switching function, of the
//! neighbourhood residual and of section functions are bracketed on the
//! dense output, bisected in time and polished with one Newton step.

use serde::{Deserialize, Serialize};

use crate::blowup::{ExitSide, K2System, VSet};
use crate::error::{Error, Result};
use crate::fastslow_core::{switching_value, PlanePoint, Regime, SystemKind, SystemSpec};

/// A planar field with one branch below the parabola and one inside C0.
pub trait PlanarSystem: Sync {
    fn exterior(&self, p: PlanePoint) -> [f64; 2];
    fn interior(&self, p: PlanePoint) -> [f64; 2];
}

impl PlanarSystem for SystemSpec {
    #[inline]
    fn exterior(&self, p: PlanePoint) -> [f64; 2] {
        let v = self.exterior_field(p);
        [v.dx, v.dy]
    }

    #[inline]
    fn interior(&self, p: PlanePoint) -> [f64; 2] {
        let v = self.interior_field(p);
        [v.dx, v.dy]
    }
}

impl PlanarSystem for K2System {
    fn exterior(&self, p: PlanePoint) -> [f64; 2] {
        [p.x * p.x - p.y, self.slow(p.x, p.y)]
    }

    fn interior(&self, p: PlanePoint) -> [f64; 2] {
        [0.0, self.slow(p.x, p.y)]
    }
}

#[inline]
fn field<S: PlanarSystem + ?Sized>(sys: &S, regime: Regime, p: PlanePoint) -> [f64; 2] {
    match regime {
        Regime::Exterior => sys.exterior(p),
        Regime::Interior => sys.interior(p),
    }
}

/// Branch to follow from a point on the parabola. The interior branch wins
/// whenever it does not point out of C0, including exact tangency.
pub fn boundary_regime<S: PlanarSystem + ?Sized>(sys: &S, p: PlanePoint) -> Regime {
    let vi = sys.interior(p);
    let ve = sys.exterior(p);
    let si = vi[1] - 2.0 * p.x * vi[0];
    let se = ve[1] - 2.0 * p.x * ve[0];
    if si >= 0.0 || se >= 0.0 {
        Regime::Interior
    } else {
        Regime::Exterior
    }
}

fn initial_regime<S: PlanarSystem + ?Sized>(sys: &S, p: PlanePoint) -> Regime {
    let s = switching_value(p);
    if s > 0.0 {
        Regime::Interior
    } else if s < 0.0 {
        Regime::Exterior
    } else {
        boundary_regime(sys, p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    EnterC0,
    ExitC0,
    ExitV(ExitSide),
    ReachSection(String),
    Equilibrium,
    MaxTime,
}

impl EventKind {
    pub fn label(&self) -> String {
        match self {
            EventKind::EnterC0 => "EnterC0".into(),
            EventKind::ExitC0 => "ExitC0".into(),
            EventKind::ExitV(side) => format!("ExitV:{}", side_name(*side)),
            EventKind::ReachSection(n) => format!("ReachSection:{n}"),
            EventKind::Equilibrium => "Equilibrium".into(),
            EventKind::MaxTime => "MaxTime".into(),
        }
    }
}

pub fn side_name(side: ExitSide) -> &'static str {
    match side {
        ExitSide::Top => "top",
        ExitSide::EllipseArc => "ellipse",
        ExitSide::Left => "left",
        ExitSide::Right => "right",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub point: PlanePoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub regime: Regime,
    pub samples: Vec<(f64, PlanePoint)>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct HybridTrajectory {
    pub arcs: Vec<Arc>,
    pub events: Vec<Event>,
    pub steps: usize,
}

impl HybridTrajectory {
    pub fn final_event(&self) -> Option<&Event> {
        self.events.last()
    }

    pub fn final_point(&self) -> PlanePoint {
        self.arcs.last().and_then(|a| a.samples.last()).map(|s| s.1).expect("empty trajectory")
    }

    pub fn final_regime(&self) -> Regime {
        self.arcs.last().expect("empty trajectory").regime
    }

    pub fn samples(&self) -> impl Iterator<Item = (Regime, f64, PlanePoint)> + '_ {
        self.arcs.iter().flat_map(|a| a.samples.iter().map(move |&(t, p)| (a.regime, t, p)))
    }

    pub fn first(&self, kind: &EventKind) -> Option<&Event> {
        self.events.iter().find(|e| &e.kind == kind)
    }

    pub fn count(&self, kind: &EventKind) -> usize {
        self.events.iter().filter(|e| &e.kind == kind).count()
    }

    pub fn exit_v(&self) -> Option<(&Event, ExitSide)> {
        self.events.iter().find_map(|e| match e.kind {
            EventKind::ExitV(side) => Some((e, side)),
            _ => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    V(VSet),
    Disc { radius: f64 },
}

impl Domain {
    pub fn residual(&self, p: PlanePoint) -> f64 {
        match self {
            Domain::V(v) => v.residual(p),
            Domain::Disc { radius } => 1.0 - (p.x * p.x + p.y * p.y) / (radius * radius),
        }
    }

    fn side(&self, p: PlanePoint) -> ExitSide {
        match self {
            Domain::V(v) => v.exit_side(p),
            Domain::Disc { .. } => ExitSide::EllipseArc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Crossing {
    Increasing,
    Decreasing,
    Either,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub axis: Axis,
    pub value: f64,
    pub crossing: Crossing,
    pub terminal: bool,
}

impl Section {
    pub fn x(name: &str, value: f64, crossing: Crossing) -> Self {
        Self { name: name.into(), axis: Axis::X, value, crossing, terminal: true }
    }

    pub fn y(name: &str, value: f64, crossing: Crossing) -> Self {
        Self { name: name.into(), axis: Axis::Y, value, crossing, terminal: true }
    }

    fn eval(&self, p: PlanePoint) -> f64 {
        match self.axis {
            Axis::X => p.x - self.value,
            Axis::Y => p.y - self.value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_max: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StopPolicy {
    pub t_max: f64,
    pub domain: Option<Domain>,
    pub sections: Vec<Section>,
    pub stop_on_enter: bool,
    pub stop_on_exit: bool,
    pub tol: Tolerances,
    pub max_steps: usize,
    /// Keep every accepted step; otherwise only arc endpoints are stored.
    pub record: bool,
}

impl StopPolicy {
    pub fn new(t_max: f64) -> Self {
        Self {
            t_max,
            domain: None,
            sections: Vec::new(),
            stop_on_enter: false,
            stop_on_exit: false,
            tol: Tolerances::default(),
            max_steps: 2_000_000,
            record: true,
        }
    }

    /// Stop when the orbit leaves V_eps of `spec`.
    pub fn in_v(spec: &SystemSpec, t_max: f64) -> Self {
        Self::new(t_max).with_domain(Domain::V(VSet::new(&spec.params)))
    }

    pub fn with_domain(mut self, d: Domain) -> Self {
        self.domain = Some(d);
        self
    }

    pub fn with_section(mut self, s: Section) -> Self {
        self.sections.push(s);
        self
    }

    pub fn with_tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn stop_on_enter(mut self) -> Self {
        self.stop_on_enter = true;
        self
    }

    pub fn stop_on_exit(mut self) -> Self {
        self.stop_on_exit = true;
        self
    }

    pub fn sparse(mut self) -> Self {
        self.record = false;
        self
    }
}

// Dormand-Prince 5(4) tableau with Hairer's dense output coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type V2 = [f64; 2];

#[inline]
fn comb(y: V2, h: f64, terms: &[(f64, V2)]) -> PlanePoint {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    PlanePoint::new(out[0], out[1])
}

struct Step {
    y1: V2,
    k7: V2,
    err: f64,
    dense: [V2; 5],
}

impl Step {
    fn at(&self, theta: f64) -> PlanePoint {
        let [r1, r2, r3, r4, r5] = self.dense;
        let t1 = 1.0 - theta;
        let c = |i: usize| r1[i] + theta * (r2[i] + t1 * (r3[i] + theta * (r4[i] + t1 * r5[i])));
        PlanePoint::new(c(0), c(1))
    }
}

fn dopri_step<S: PlanarSystem + ?Sized>(
    sys: &S,
    regime: Regime,
    y: V2,
    k1: V2,
    h: f64,
    tol: &Tolerances,
) -> Step {
    let f = |p: PlanePoint| field(sys, regime, p);
    let k2 = f(comb(y, h, &[(A21, k1)]));
    let k3 = f(comb(y, h, &[(A31, k1), (A32, k2)]));
    let k4 = f(comb(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
    let k5 = f(comb(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
    let k6 = f(comb(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
    let p1 = comb(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    let y1 = [p1.x, p1.y];
    let k7 = f(p1);
    let mut err = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
        err += (e / sc) * (e / sc);
    }
    let err = (err / 2.0).sqrt();
    let mut dense = [[0.0; 2]; 5];
    for i in 0..2 {
        let dy = y1[i] - y[i];
        let bspl = h * k1[i] - dy;
        dense[0][i] = y[i];
        dense[1][i] = dy;
        dense[2][i] = bspl;
        dense[3][i] = dy - h * k7[i] - bspl;
        dense[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Step { y1, k7, err, dense }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Watch {
    Switch,
    Boundary,
    Section(usize),
}

/// Sign pattern that constitutes an event for a watched function.
fn fires(w: Watch, regime: Regime, stop: &StopPolicy, before: f64, after: f64) -> bool {
    match w {
        Watch::Switch => match regime {
            Regime::Exterior => before <= 0.0 && after > 0.0,
            Regime::Interior => before >= 0.0 && after < 0.0,
        },
        Watch::Boundary => before >= 0.0 && after < 0.0,
        Watch::Section(i) => match stop.sections[i].crossing {
            Crossing::Increasing => before < 0.0 && after >= 0.0,
            Crossing::Decreasing => before > 0.0 && after <= 0.0,
            Crossing::Either => (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0),
        },
    }
}

fn watch_value(w: Watch, stop: &StopPolicy, p: PlanePoint) -> f64 {
    match w {
        Watch::Switch => switching_value(p),
        Watch::Boundary => stop.domain.as_ref().map_or(1.0, |d| d.residual(p)),
        Watch::Section(i) => stop.sections[i].eval(p),
    }
}

const DENSE_PROBES: usize = 8;

/// Integrates `sys` from `p0` under `stop`.
pub fn integrate_system<S: PlanarSystem + ?Sized>(
    sys: &S,
    p0: PlanePoint,
    stop: &StopPolicy,
) -> Result<HybridTrajectory> {
    if !p0.is_finite() {
        return Err(Error::NonFinite("initial point"));
    }
    let tol = stop.tol;
    let mut regime = initial_regime(sys, p0);
    let mut traj = HybridTrajectory {
        arcs: vec![Arc { regime, samples: vec![(0.0, p0)] }],
        events: Vec::new(),
        steps: 0,
    };
    if let Some(d) = &stop.domain {
        if d.residual(p0) < 0.0 {
            traj.events.push(Event { kind: EventKind::ExitV(d.side(p0)), time: 0.0, point: p0 });
            return Ok(traj);
        }
    }
    let mut watches = vec![Watch::Switch];
    if stop.domain.is_some() {
        watches.push(Watch::Boundary);
    }
    watches.extend((0..stop.sections.len()).map(Watch::Section));

    let mut t = 0.0;
    let mut y: V2 = [p0.x, p0.y];
    let mut k1 = field(sys, regime, p0);
    let mut h = (1e-3f64).min(tol.h_max);
    let mut stalled = 0usize;
    let mut rejected_in_row = 0usize;

    loop {
        if traj.steps >= stop.max_steps {
            return Err(Error::TooManySteps { t });
        }
        if k1[0].abs() < 1e-15 && k1[1].abs() < 1e-15 {
            let p = PlanePoint::new(y[0], y[1]);
            traj.events.push(Event { kind: EventKind::Equilibrium, time: t, point: p });
            return Ok(traj);
        }
        let remaining = stop.t_max - t;
        if remaining <= 1e-12 * (1.0 + t.abs()) {
            let p = PlanePoint::new(y[0], y[1]);
            traj.events.push(Event { kind: EventKind::MaxTime, time: t, point: p });
            return Ok(traj);
        }
        h = h.min(tol.h_max).min(remaining);
        let step = dopri_step(sys, regime, y, k1, h, &tol);
        let finite = step.y1.iter().chain(step.k7.iter()).all(|v| v.is_finite()) && step.err.is_finite();
        if !finite || step.err > 1.0 {
            let fac = if finite { (0.9 * step.err.powf(-0.2)).clamp(0.2, 0.9) } else { 0.25 };
            h *= fac;
            rejected_in_row += 1;
            if h < 1e-14 * (1.0 + t.abs()) || rejected_in_row > 200 {
                return Err(if finite { Error::StepSizeUnderflow { t } } else { Error::NonFinite("state") });
            }
            continue;
        }
        rejected_in_row = 0;
        traj.steps += 1;

        // earliest watched sign change on the dense output
        let mut hit: Option<(f64, Watch)> = None;
        for &w in &watches {
            let mut before = watch_value(w, stop, PlanePoint::new(y[0], y[1]));
            let mut th0 = 0.0;
            for k in 1..=DENSE_PROBES {
                let th1 = k as f64 / DENSE_PROBES as f64;
                let p1 = if k == DENSE_PROBES { PlanePoint::new(step.y1[0], step.y1[1]) } else { step.at(th1) };
                let after = watch_value(w, stop, p1);
                if fires(w, regime, stop, before, after) {
                    let th = refine(&step, w, regime, stop, th0, th1, h);
                    if hit.is_none_or(|(best, _)| th < best) {
                        hit = Some((th, w));
                    }
                    break;
                }
                if hit.is_some_and(|(best, _)| th1 >= best) {
                    break;
                }
                before = after;
                th0 = th1;
            }
        }

        if let Some((th, w)) = hit {
            let hs = th * h;
            let mut p = if hs > 0.0 {
                let sub = dopri_step(sys, regime, y, k1, hs, &tol);
                PlanePoint::new(sub.y1[0], sub.y1[1])
            } else {
                PlanePoint::new(y[0], y[1])
            };
            let mut te = t + hs;
            let v = field(sys, regime, p);
            let fval = watch_value(w, stop, p);
            let dt = 1e-7;
            let fwd = PlanePoint::new(p.x + dt * v[0], p.y + dt * v[1]);
            let bwd = PlanePoint::new(p.x - dt * v[0], p.y - dt * v[1]);
            let slope = (watch_value(w, stop, fwd) - watch_value(w, stop, bwd)) / (2.0 * dt);
            if slope != 0.0 && slope.is_finite() {
                let corr = (-fval / slope).clamp(-1e-6, 1e-6);
                p = PlanePoint::new(p.x + corr * v[0], p.y + corr * v[1]);
                te += corr;
            }
            if te <= t {
                stalled += 1;
                if stalled > 4 {
                    return Err(Error::StepSizeUnderflow { t });
                }
            } else {
                stalled = 0;
            }
            let arc = traj.arcs.last_mut().unwrap();
            match w {
                Watch::Switch => {
                    p.y = p.x * p.x;
                    arc.samples.push((te, p));
                    let kind = match regime {
                        Regime::Exterior => EventKind::EnterC0,
                        Regime::Interior => EventKind::ExitC0,
                    };
                    let terminal = match kind {
                        EventKind::EnterC0 => stop.stop_on_enter,
                        _ => stop.stop_on_exit,
                    };
                    traj.events.push(Event { kind, time: te, point: p });
                    if terminal {
                        return Ok(traj);
                    }
                    regime = match regime {
                        Regime::Exterior => Regime::Interior,
                        Regime::Interior => Regime::Exterior,
                    };
                    traj.arcs.push(Arc { regime, samples: vec![(te, p)] });
                }
                Watch::Boundary => {
                    arc.samples.push((te, p));
                    let side = stop.domain.as_ref().unwrap().side(p);
                    traj.events.push(Event { kind: EventKind::ExitV(side), time: te, point: p });
                    return Ok(traj);
                }
                Watch::Section(i) => {
                    let sec = &stop.sections[i];
                    match sec.axis {
                        Axis::X => p.x = sec.value,
                        Axis::Y => p.y = sec.value,
                    }
                    arc.samples.push((te, p));
                    traj.events.push(Event {
                        kind: EventKind::ReachSection(sec.name.clone()),
                        time: te,
                        point: p,
                    });
                    if sec.terminal {
                        return Ok(traj);
                    }
                }
            }
            t = te;
            y = [p.x, p.y];
            k1 = field(sys, regime, p);
            continue;
        }

        t += h;
        y = step.y1;
        k1 = step.k7;
        let p = PlanePoint::new(y[0], y[1]);
        let arc = traj.arcs.last_mut().unwrap();
        if stop.record || arc.samples.len() < 2 {
            arc.samples.push((t, p));
        } else {
            *arc.samples.last_mut().unwrap() = (t, p);
        }
        let fac = if step.err == 0.0 { 5.0 } else { (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
}

/// Bisection in the step fraction down to 1e-12 in time.
fn refine(step: &Step, w: Watch, regime: Regime, stop: &StopPolicy, mut a: f64, mut b: f64, h: f64) -> f64 {
    let fa = watch_value(w, stop, step.at(a));
    for _ in 0..200 {
        if (b - a) * h <= 1e-12 {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = watch_value(w, stop, step.at(m));
        if fires(w, regime, stop, fa, fm) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

/// Integrates a `SystemSpec` trajectory.
pub fn integrate(spec: &SystemSpec, p0: PlanePoint, stop: &StopPolicy) -> Result<HybridTrajectory> {
    integrate_system(spec, p0, stop)
}

/// Height at which the fold orbit from (x_in, rho²) meets the section x = rho.
pub fn transition_map_fold(spec: &SystemSpec, x_in: f64) -> Result<f64> {
    transition_map_fold_with(spec, x_in, Tolerances::default())
}

pub fn transition_map_fold_with(spec: &SystemSpec, x_in: f64, tol: Tolerances) -> Result<f64> {
    if !matches!(spec.kind, SystemKind::PiecewiseFold | SystemKind::ClassicalFold) {
        return Err(Error::Precondition("transition map needs a fold system".into()));
    }
    let prm = &spec.params;
    if !(x_in < -prm.rho) {
        return Err(Error::Precondition(format!("x_in = {x_in} must lie left of -rho = {}", -prm.rho)));
    }
    let t_max = 20.0 * prm.rho * prm.rho / prm.eps + 200.0;
    let stop = StopPolicy::new(t_max)
        .with_section(Section::x("out", prm.rho, Crossing::Increasing))
        .with_tol(tol)
        .sparse();
    let traj = integrate(spec, PlanePoint::new(x_in, prm.rho * prm.rho), &stop)?;
    match traj.final_event() {
        Some(Event { kind: EventKind::ReachSection(_), point, .. }) => Ok(point.y),
        _ => Err(Error::SectionNotReached(format!("x = {}", prm.rho))),
    }
}

/// The orbit ends inside C0 by leaving V there.
pub fn detect_trapping(traj: &HybridTrajectory) -> bool {
    matches!(traj.final_event(), Some(Event { kind: EventKind::ExitV(_), .. }))
        && traj.final_regime() == Regime::Interior
}
