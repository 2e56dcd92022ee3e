//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use ducktrap::analysis::{
    attracting_manifold_deviation, fold_exit_heights, fold_scaling_fit, half_cycle, lambda_H_leading,
    lambda_c_leading, lambda_c_numeric, pc_window, find_Pc_with, slow_manifold_x, Branch,
    Classifier, CycleSide, Outcome, PcLocation, Side,
};
use ducktrap::blowup::{classify_U, phi1_pull, phi1_push, phi2_pull, phi2_push, ChartPointK1, ChartPointK2, USetConfig, RegionLabel};
use ducktrap::blowup::k1_canard_field_unchecked;
use ducktrap::fastslow_core::switching_value;
use ducktrap::integrate::{integrate, EventKind, StopPolicy};
use ducktrap::par::{self, Execution};
use ducktrap::{HField, Params, PlanePoint, SystemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn fig_params() -> Params {
    Params::new(0.01, 0.0)
}

fn reentry(lambda: f64, start: PlanePoint) -> (f64, Option<EventKind>, f64) {
    let spec = SystemSpec::fig_preset(0.01, lambda).unwrap();
    let traj = integrate(&spec, start, &StopPolicy::in_v(&spec, 4e4)).unwrap();
    let enter = traj.first(&EventKind::EnterC0).map(|e| e.point.x).unwrap_or(f64::NAN);
    let last = traj.final_event().unwrap();
    (enter, Some(last.kind.clone()), last.point.x)
}

fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let (x_in, last, x_out) = reentry(-6.75e-3, PlanePoint::new(-0.2, 0.09));
    let elapsed = t0.elapsed();
    let upward = last == Some(EventKind::ExitV(ducktrap::blowup::ExitSide::Top));
    let pass = (x_in - 0.1564).abs() <= 0.01 && upward && (x_out - x_in).abs() < 1e-9 && elapsed < Duration::from_secs(5);
    // for comparison: λ at which the orbit re-enters near 0.156
    let (x_ref, _, _) = reentry(5e-5, PlanePoint::new(-0.2, 0.09));
    verdict(
        pass,
        format!(
            "lambda=-6.75e-3: re-entry x={x_in:.5} (want 0.1564 +- 0.01), exit {last:?} at x={x_out:.5}, {:.2?}; lambda=5e-5 re-entry x={x_ref:.5}",
            elapsed
        ),
    )
}

fn criterion_2() -> Verdict {
    let p = fig_params();
    let (lh, lc) = (lambda_H_leading(&p), lambda_c_leading(&p));
    let exact = (lh + 4.5e-3).abs() <= 4.0 * f64::EPSILON * 4.5e-3 && (lc - 2.5e-4).abs() <= 4.0 * f64::EPSILON * 2.5e-4;
    let eps = [0.02, 0.01, 0.005];
    let gaps = par::map(&eps, Execution::Parallel, |&e| {
        let spec = SystemSpec::fig_preset(e, 0.0).unwrap();
        let num = lambda_c_numeric(&spec).unwrap();
        (num, (num - lambda_c_leading(&spec.params)).abs())
    });
    let near = gaps[1].1 < 1e-3;
    let linear = gaps[0].1 >= 2.0 * gaps[1].1 && gaps[1].1 >= 2.0 * gaps[2].1;
    verdict(
        exact && near && linear,
        format!(
            "leading lambda_H={lh:e} lambda_c={lc:e}; numeric lambda_c={:e}, gaps {:.3e} {:.3e} {:.3e}",
            gaps[1].0, gaps[0].1, gaps[1].1, gaps[2].1
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut prm = Params::new(1e-3, 0.0);
    prm.rho = 0.3;
    let spec = SystemSpec::piecewise_fold(prm, HField::Zero).unwrap();
    let fit = fold_scaling_fit(&spec, &[1e-4, 3e-4, 1e-3, 3e-3, 1e-2], -0.4, Execution::Parallel).unwrap();
    let ys = fold_exit_heights(&spec, &[-0.4, -0.35], Execution::Parallel).unwrap();
    let diff = (ys[0] - ys[1]).abs();
    verdict(
        (fit.slope - 2.0 / 3.0).abs() <= 0.05 && diff < 1e-8,
        format!("slope={:.4}; exit heights from x_in=-0.4,-0.35 differ by {diff:.2e}", fit.slope),
    )
}

fn criterion_4() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let runs: Vec<(f64, HField, PlanePoint)> = (0..200)
        .map(|_| {
            let x: f64 = rng.random_range(-0.6..0.6);
            let y = x * x - rng.random_range(1e-6..0.2);
            (rng.random_range(1e-3..2e-2), random_h(&mut rng), PlanePoint::new(x, y))
        })
        .collect();
    let smooth = runs.iter().filter(|r| !r.1.is_zero()).count();
    let out = par::map(&runs, Execution::Parallel, |(e, h, p)| fold_run(*e, h.clone(), *p));
    let worst = out.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    let entered = out.iter().filter(|o| o.1).count();
    let elapsed = t0.elapsed();
    verdict(
        worst <= 1e-8 && entered == 0 && elapsed < Duration::from_secs(60),
        format!("200 runs ({smooth} with smooth h): max y-x^2 = {worst:.3e}, entries {entered}, {elapsed:.2?}"),
    )
}

fn criterion_5() -> Verdict {
    let arcs: Vec<_> = [0.05, 0.1, 0.2].iter().map(|&h| k2_level_arc(h, 1e-10)).collect();
    let drift = arcs.iter().map(|a| a.drift_rate).fold(0.0, f64::max);
    let err = arcs.iter().map(|a| a.reentry_error).fold(0.0, f64::max);
    verdict(drift < 1e-8 && err < 1e-6, format!("max |dH|/t = {drift:.2e}, max re-entry error = {err:.2e}"))
}

fn criterion_6() -> Verdict {
    let mut worst_ratio: f64 = 0.0;
    let mut all = true;
    for r2 in [0.05, 0.1] {
        for l2 in [0.05, 0.1] {
            for c in [0.05, 0.1] {
                let (err, bound) = k2_reentry(r2, l2, c);
                all &= err < bound;
                worst_ratio = worst_ratio.max(err / bound);
            }
        }
    }
    verdict(all, format!("8 grid points, worst error/bound = {worst_ratio:.3}"))
}

fn c0_grid(spec: &SystemSpec, cfg: &USetConfig, want: impl Fn(RegionLabel) -> bool) -> Vec<PlanePoint> {
    let mut pts = Vec::new();
    for j in 0..8 {
        for i in 0..25 {
            let p = PlanePoint::new(-0.29 + 0.58 * i as f64 / 24.0, 0.012 + 0.077 * j as f64 / 7.0);
            if switching_value(p) < 0.0 {
                continue;
            }
            if let Ok(l) = classify_U(p, spec, cfg) {
                if want(l) {
                    pts.push(p);
                }
            }
        }
    }
    pts
}

fn spread(pts: Vec<PlanePoint>, n: usize) -> Vec<PlanePoint> {
    if pts.len() <= n {
        return pts;
    }
    (0..n).map(|k| pts[k * pts.len() / n]).collect()
}

fn criterion_7() -> Verdict {
    let cfg = USetConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;

    // below Hopf: random starts in U0- all leave in U0+
    let spec = SystemSpec::fig_preset(0.01, 1.5 * -4.5e-3).unwrap();
    let cl = Classifier::new(&spec, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut starts = Vec::new();
    while starts.len() < 50 {
        let p = PlanePoint::new(rng.random_range(-0.29..0.29), rng.random_range(0.011..0.09));
        if classify_U(p, &spec, &cfg) == Ok(RegionLabel::U0minus) {
            starts.push(p);
        }
    }
    let res = par::map(&starts, Execution::Parallel, |&p| cl.classify(p).map(|c| c.outcome));
    let ok = res.iter().filter(|r| **r == Ok(Outcome::ExitsInU0plus)).count();
    pass &= ok == 50;
    notes.push(format!("below Hopf {ok}/50 exit in U0+"));

    // small and large cycles: exterior starts exit right of P+, interior starts left
    for lam in [0.5 * -4.5e-3, 0.2 * 2.5e-4] {
        let spec = SystemSpec::fig_preset(0.01, lam).unwrap();
        let hc = half_cycle(&spec, lam).unwrap();
        let cl = Classifier::with_parts(&spec, &cfg, Some(hc), None);
        let starts = spread(c0_grid(&spec, &cfg, |l| !l.is_collar()), 50);
        let res = par::map(&starts, Execution::Parallel, |&p| cl.classify(p));
        let (mut good, mut checked) = (0, 0);
        for r in res.iter().flatten() {
            let want = match r.cycle_side {
                Some(CycleSide::Exterior) => Side::Right,
                Some(CycleSide::Interior) => Side::Left,
                None => continue,
            };
            checked += 1;
            if r.outcome == Outcome::ExitsInU0plus && r.exit_vs_p_plus == Some(want) {
                good += 1;
            }
        }
        let errors = res.iter().filter(|r| r.is_err()).count();
        pass &= good == checked && checked > 0 && errors == 0;
        notes.push(format!("lambda={lam:e}: {good}/{checked} cycle relations hold ({} starts)", starts.len()));
    }

    // above the maximal canard: P_c separates the two behaviours
    let lam = 1e-3;
    let spec = SystemSpec::fig_preset(0.01, lam).unwrap();
    let lc = lambda_c_numeric(&spec).unwrap();
    match find_Pc_with(&spec, &cfg, lc).unwrap() {
        PcLocation::Finite(pc) => {
            let cl = Classifier::with_parts(&spec, &cfg, None, Some(PcLocation::Finite(pc)));
            let l = cl.classify(PlanePoint::new(pc - 0.01, (pc - 0.01).powi(2))).unwrap();
            let r = cl.classify(PlanePoint::new(pc + 0.01, (pc + 0.01).powi(2))).unwrap();
            let enter_ok = r.crossed.contains(&RegionLabel::U0plus);
            let (lo, _) = pc_window(&spec, &cfg).unwrap();
            let left_starts = spread(
                c0_grid(&spec, &cfg, |l| l == RegionLabel::U0minus).into_iter().filter(|p| p.x < pc && p.x > lo).collect(),
                50,
            );
            let below = par::map(&left_starts, Execution::Parallel, |&p| cl.classify(p).map(|c| c.outcome))
                .iter()
                .filter(|o| **o == Ok(Outcome::ExitsBelowC0))
                .count();
            pass &= l.outcome == Outcome::ExitsBelowC0
                && r.outcome == Outcome::ExitsInU0plus
                && enter_ok
                && below == left_starts.len();
            notes.push(format!(
                "lambda=1e-3: p_c={pc:.6}, left start {:?}, right start {:?}, {below}/{} starts left of P_c exit below C0",
                l.outcome,
                r.outcome,
                left_starts.len()
            ));
        }
        other => {
            pass = false;
            notes.push(format!("lambda=1e-3: P_c not finite ({other:?})"));
        }
    }
    verdict(pass, notes.join("; "))
}

fn criterion_8() -> Verdict {
    let prm = fig_params();
    let g = SystemSpec::fig_preset(0.01, 0.0).unwrap().g;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut trip: f64 = 0.0;
    for _ in 0..1000 {
        let q1 = ChartPointK1 {
            x1: rng.random_range(-3.0..3.0),
            r1: rng.random_range(1e-3..0.3),
            eps1: rng.random_range(0.0..1.0),
            lambda1: rng.random_range(-0.3..0.3),
        };
        let b = phi1_pull(phi1_push(q1)).unwrap();
        for (u, v) in [(q1.x1, b.x1), (q1.r1, b.r1), (q1.eps1, b.eps1), (q1.lambda1, b.lambda1)] {
            trip = trip.max((u - v).abs() / u.abs().max(f64::MIN_POSITIVE));
        }
        let q2 = ChartPointK2 {
            x2: rng.random_range(-4.0..4.0),
            y2: rng.random_range(-4.0..4.0),
            r2: rng.random_range(1e-3..0.3),
            lambda2: rng.random_range(-0.3..0.3),
        };
        let b = phi2_pull(phi2_push(q2)).unwrap();
        for (u, v) in [(q2.x2, b.x2), (q2.y2, b.y2), (q2.r2, b.r2), (q2.lambda2, b.lambda2)] {
            trip = trip.max((u - v).abs() / u.abs().max(f64::MIN_POSITIVE));
        }
    }
    let mut overlap: f64 = 0.0;
    for _ in 0..100 {
        let (q1, q2) = overlap_point(&mut rng, &prm);
        let a = k1_in_plane(&g, q1);
        let b = k2_in_plane(&g, q2);
        let c = plane_field(&g, phi1_push(q1));
        for i in 0..4 {
            overlap = overlap.max((a[i] - b[i]).abs()).max((a[i] - c[i]).abs());
        }
    }
    let mut invariant = true;
    for _ in 0..200 {
        let q = ChartPointK1 {
            x1: rng.random_range(-3.0..3.0),
            r1: rng.random_range(0.0..0.3),
            eps1: rng.random_range(0.0..1.0),
            lambda1: rng.random_range(-0.3..0.3),
        };
        invariant &= k1_canard_field_unchecked(&g, ChartPointK1 { r1: 0.0, ..q })[1] == 0.0;
        invariant &= k1_canard_field_unchecked(&g, ChartPointK1 { eps1: 0.0, ..q })[2] == 0.0;
        invariant &= k1_canard_field_unchecked(&g, ChartPointK1 { lambda1: 0.0, ..q })[3] == 0.0;
    }
    verdict(
        trip <= 1e-14 && overlap <= 1e-8 && invariant,
        format!("round-trip rel err {trip:.2e}, overlap mismatch {overlap:.2e}, hyperplanes invariant: {invariant}"),
    )
}

fn criterion_9() -> Verdict {
    let mut sep = true;
    let l0 = fig_params().lambda0;
    for i in 0..=20 {
        let mut prm = fig_params();
        prm.lambda = -l0 + (l0 + lambda_c_leading(&prm)) * i as f64 / 20.0;
        for j in 1..200 {
            let y = prm.eps + (prm.rho * prm.rho - prm.eps) * j as f64 / 200.0;
            for b in [Branch::Attracting, Branch::Repelling] {
                let x = slow_manifold_x(y, b, &prm).unwrap();
                sep &= x * x - y > 0.0;
            }
        }
    }
    let eps = [0.01, 0.005, 0.0025];
    let ys: Vec<f64> = (0..=12).map(|k| 0.02 + 0.06 * k as f64 / 12.0).collect();
    let cs = par::map(&eps, Execution::Parallel, |&e| {
        let spec = SystemSpec::fig_preset(e, 0.0).unwrap();
        attracting_manifold_deviation(&spec, 0.25, &ys).unwrap() / (e * e)
    });
    let c = cs.iter().cloned().fold(0.0, f64::max);
    let stable = cs.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.25);
    verdict(
        sep && stable,
        format!("separation holds: {sep}; deviation/eps^2 = {:.2} {:.2} {:.2}, C = {c:.2}", cs[0], cs[1], cs[2]),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: Vec<Criterion> = vec![
        (1, "canard re-entry", criterion_1),
        (2, "critical values", criterion_2),
        (3, "fold scaling", criterion_3),
        (4, "fold invariance", criterion_4),
        (5, "conserved quantity", criterion_5),
        (6, "linearised return map", criterion_6),
        (7, "exit classification", criterion_7),
        (8, "chart machinery", criterion_8),
        (9, "slow manifold", criterion_9),
    ];
    let selected: Vec<_> = criteria
        .into_iter()
        .filter(|(n, name, _)| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()) || *f == n.to_string()))
        .collect();
    let results = par::map(&selected, Execution::Parallel, |(_, _, f)| {
        let t = Instant::now();
        let v = f();
        (v, t.elapsed())
    });
    let mut failed = 0;
    for ((n, name, _), (v, t)) in selected.iter().zip(results) {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!("{tag} criterion {n} ({name}, {t:.2?}): {}", v.detail);
    }
    println!("{} of {} criteria passed", selected.len() - failed, selected.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
