#![allow(dead_code)]

use ducktrap::analysis::{H_value, c_of_h};
use ducktrap::blowup::{
    k1_canard_field_unchecked, phi1_push, phi2_pull, ChartPointK1, ChartPointK2, Extended, K2System,
};
use ducktrap::fastslow_core::{Monomial, Poly};
use ducktrap::integrate::{integrate, integrate_system, Domain, EventKind, StopPolicy, Tolerances};
use ducktrap::{GFamily, HField, Params, PlanePoint, SystemSpec};
use rand::Rng;

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// (f, εg, 0, 0) of the piecewise canard system at an extended point.
pub fn plane_field(g: &GFamily, p: Extended) -> [f64; 4] {
    let f = if p.y < p.x * p.x { p.x * p.x - p.y } else { 0.0 };
    [f, p.eps * g.g(p.x, p.y, p.lambda), 0.0, 0.0]
}

/// DΦ1 · (K1 field) · r1.
pub fn k1_in_plane(g: &GFamily, q: ChartPointK1) -> [f64; 4] {
    let [dx1, dr1, de1, dl1] = k1_canard_field_unchecked(g, q);
    let r = q.r1;
    [
        r * (q.x1 * dr1 + r * dx1),
        r * (2.0 * r * dr1),
        r * (2.0 * r * q.eps1 * dr1 + r * r * de1),
        r * (q.lambda1 * dr1 + r * dl1),
    ]
}

/// DΦ2 · (K2 field) · r2; r2 and λ2 are constants of motion.
pub fn k2_in_plane(g: &GFamily, q: ChartPointK2) -> [f64; 4] {
    let [dx2, dy2] = K2System::new(g.clone(), q.r2, q.lambda2).field(q.x2, q.y2);
    let r = q.r2;
    [r * r * dx2, r * r * r * dy2, 0.0, 0.0]
}

/// Random K1 point whose image also lies in the default V2, away from the
/// parabola so both charts use the same branch.
pub fn overlap_point<R: Rng>(rng: &mut R, prm: &Params) -> (ChartPointK1, ChartPointK2) {
    loop {
        let q1 = ChartPointK1 {
            x1: rng.random_range(-2.9..2.9),
            r1: rng.random_range(0.01..prm.rho),
            eps1: rng.random_range(0.05..0.99),
            lambda1: rng.random_range(-0.29..0.29),
        };
        if (q1.x1.abs() - 1.0).abs() < 1e-3 {
            continue;
        }
        let p = phi1_push(q1);
        let q2 = phi2_pull(p).unwrap();
        if q2.x2 * q2.x2 + q2.y2 * q2.y2 < 16.0 && q2.r2 <= prm.rho && q2.lambda2.abs() < prm.mu {
            return (q1, q2);
        }
    }
}

pub fn random_h<R: Rng>(rng: &mut R) -> HField {
    match rng.random_range(0..3) {
        0 => HField::Zero,
        _ => HField::Smooth {
            poly: Poly(vec![
                Monomial(rng.random_range(-1.0..1.0), 0, 0, 0),
                Monomial(rng.random_range(-1.0..1.0), 1, 0, 0),
                Monomial(rng.random_range(-1.0..1.0), 0, 1, 0),
                Monomial(rng.random_range(-1.0..1.0), 2, 0, 0),
            ]),
            amp: rng.random_range(0.0..0.5),
            kx: rng.random_range(-5.0..5.0),
            ky: rng.random_range(-5.0..5.0),
            phase: rng.random_range(0.0..6.0),
        },
    }
}

/// Fold run from below C0; returns the largest y - x² seen and whether the
/// orbit ever entered C0.
pub fn fold_run(eps: f64, h: HField, p0: PlanePoint) -> (f64, bool) {
    let spec = SystemSpec::piecewise_fold(Params::new(eps, 0.0), h).unwrap();
    let stop = StopPolicy::new(40.0).with_domain(Domain::Disc { radius: 1.0 });
    let traj = integrate(&spec, p0, &stop).unwrap();
    let worst = traj.samples().map(|(_, _, p)| p.y - p.x * p.x).fold(f64::NEG_INFINITY, f64::max);
    (worst, traj.count(&EventKind::EnterC0) > 0)
}

pub struct LevelArc {
    pub reentry_error: f64,
    pub drift_rate: f64,
}

/// Exterior arc of the reduced K2 system from (-√c(h), c(h)) back to C0.
pub fn k2_level_arc(h: f64, rtol: f64) -> LevelArc {
    let c = c_of_h(h).unwrap();
    let p0 = PlanePoint::new(-c.sqrt(), c);
    let stop = StopPolicy::new(100.0).stop_on_enter().with_tol(Tolerances { rtol, atol: rtol, h_max: 0.1 });
    let traj = integrate_system(&K2System::reduced(), p0, &stop).unwrap();
    let end = traj.final_event().unwrap();
    assert_eq!(end.kind, EventKind::EnterC0);
    let h0 = H_value(p0.x, p0.y);
    let drift = traj
        .samples()
        .filter(|(_, t, _)| *t > 0.0)
        .map(|(_, t, p)| (H_value(p.x, p.y) - h0).abs() / t.max(1.0))
        .fold(0.0, f64::max);
    LevelArc { reentry_error: (end.point.x - c.sqrt()).abs(), drift_rate: drift }
}

/// Re-entry abscissa error of the full K2 flow from (λ2 - c, (λ2 - c)²) and
/// the bound 5·(r2² + r2|λ2| + λ2²).
pub fn k2_reentry(r2: f64, lambda2: f64, c: f64) -> (f64, f64) {
    let sys = K2System::new(GFamily::fig_preset(), r2, lambda2);
    let x0 = lambda2 - c;
    let stop = StopPolicy::new(200.0).stop_on_enter().with_tol(Tolerances { rtol: 1e-11, atol: 1e-12, h_max: 0.1 });
    let traj = integrate_system(&sys, PlanePoint::new(x0, x0 * x0), &stop).unwrap();
    let end = traj.final_event().unwrap();
    assert_eq!(end.kind, EventKind::EnterC0);
    let err = (end.point.x - (lambda2 + c)).abs();
    (err, 5.0 * (r2 * r2 + r2 * lambda2.abs() + lambda2 * lambda2))
}

pub fn extended(x: f64, y: f64, eps: f64, lambda: f64) -> Extended {
    Extended { x, y, eps, lambda }
}
