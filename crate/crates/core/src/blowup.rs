//! Directional charts of the weighted blow-up at the origin, their
//! desingularised fields, the neighbourhood V_eps and the U-set partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastslow_core::{switching_value, GFamily, HField, Params, PlanePoint, SystemSpec};

/// Point of the extended phase space (x, y, eps, lambda).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extended {
    pub x: f64,
    pub y: f64,
    pub eps: f64,
    pub lambda: f64,
}

impl Extended {
    pub const fn new(x: f64, y: f64, eps: f64, lambda: f64) -> Self {
        Self { x, y, eps, lambda }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.eps, self.lambda]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPointK1 {
    pub x1: f64,
    pub r1: f64,
    pub eps1: f64,
    pub lambda1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPointK2 {
    pub x2: f64,
    pub y2: f64,
    pub r2: f64,
    pub lambda2: f64,
}

pub fn phi1_push(q: ChartPointK1) -> Extended {
    Extended::new(q.r1 * q.x1, q.r1 * q.r1, q.r1 * q.r1 * q.eps1, q.r1 * q.lambda1)
}

pub fn phi1_pull(p: Extended) -> Result<ChartPointK1> {
    if !(p.y > 0.0) {
        return Err(Error::Domain(format!("chart K1 needs y > 0, got {}", p.y)));
    }
    let r1 = p.y.sqrt();
    Ok(ChartPointK1 { x1: p.x / r1, r1, eps1: p.eps / p.y, lambda1: p.lambda / r1 })
}

pub fn phi2_push(q: ChartPointK2) -> Extended {
    let r = q.r2;
    Extended::new(r * q.x2, r * r * q.y2, r * r, r * q.lambda2)
}

pub fn phi2_pull(p: Extended) -> Result<ChartPointK2> {
    if !(p.eps > 0.0) {
        return Err(Error::Domain(format!("chart K2 needs eps > 0, got {}", p.eps)));
    }
    let r2 = p.eps.sqrt();
    Ok(ChartPointK2 { x2: p.x / r2, y2: p.y / p.eps, r2, lambda2: p.lambda / r2 })
}

pub fn in_v1(q: &ChartPointK1, prm: &Params) -> bool {
    q.x1.abs() < prm.x10
        && q.r1.abs() <= prm.rho
        && (0.0..1.0).contains(&q.eps1)
        && q.lambda1.abs() < prm.mu
}

pub fn in_v2(q: &ChartPointK2, prm: &Params) -> bool {
    q.x2 * q.x2 + q.y2 * q.y2 < prm.disc_radius * prm.disc_radius
        && (0.0..=prm.rho).contains(&q.r2)
        && q.lambda2.abs() < prm.mu
}

/// g(r1·x1, r1², r1·λ1) / r1, written so that r1 = 0 needs no limit.
pub fn k1_f(g: &GFamily, q: &ChartPointK1) -> f64 {
    let (x, y, l) = (q.r1 * q.x1, q.r1 * q.r1, q.r1 * q.lambda1);
    q.x1 * g.g1(x, y, l) - q.lambda1 * g.g2(x, y, l) + q.r1 * g.g3(x, y, l)
}

/// Desingularised canard field in K1, ordered (x1', r1', eps1', lambda1').
pub fn k1_canard_field(spec: &SystemSpec, q: ChartPointK1) -> Result<[f64; 4]> {
    if !in_v1(&q, &spec.params) {
        return Err(Error::Domain(format!("{q:?} is outside V1")));
    }
    Ok(k1_canard_field_unchecked(&spec.g, q))
}

pub fn k1_canard_field_unchecked(g: &GFamily, q: ChartPointK1) -> [f64; 4] {
    let f = k1_f(g, &q);
    let drift = 0.5 * q.eps1 * q.x1 * f;
    let x1 = if q.x1.abs() > 1.0 { -1.0 + q.x1 * q.x1 - drift } else { -drift };
    [x1, 0.5 * q.r1 * q.eps1 * f, -q.eps1 * q.eps1 * f, -0.5 * q.lambda1 * q.eps1 * f]
}

/// Right-hand side of y2' in K2: g(r2·x2, r2²·y2, r2·λ2) / r2.
pub fn rhs_y2(g: &GFamily, x2: f64, y2: f64, r2: f64, lambda2: f64) -> f64 {
    let (x, y, l) = (r2 * x2, r2 * r2 * y2, r2 * lambda2);
    x2 * g.g1(x, y, l) - lambda2 * g.g2(x, y, l) + r2 * y2 * g.g3(x, y, l)
}

/// Desingularised canard field in K2, ordered (x2', y2').
pub fn k2_canard_field(spec: &SystemSpec, q: ChartPointK2) -> Result<[f64; 2]> {
    if !in_v2(&q, &spec.params) {
        return Err(Error::Domain(format!("{q:?} is outside V2")));
    }
    Ok(K2System::new(spec.g.clone(), q.r2, q.lambda2).field(q.x2, q.y2))
}

/// The canard system in chart K2 for frozen (r2, λ2), viewed as a planar
/// piecewise system in (x2, y2). With r2 = λ2 = 0 this is the reduced system.
#[derive(Clone, Debug, PartialEq)]
pub struct K2System {
    pub g: GFamily,
    pub r2: f64,
    pub lambda2: f64,
}

impl K2System {
    pub fn new(g: GFamily, r2: f64, lambda2: f64) -> Self {
        Self { g, r2, lambda2 }
    }

    pub fn reduced() -> Self {
        Self::new(GFamily::fig_preset(), 0.0, 0.0)
    }

    pub fn slow(&self, x2: f64, y2: f64) -> f64 {
        rhs_y2(&self.g, x2, y2, self.r2, self.lambda2)
    }

    pub fn field(&self, x2: f64, y2: f64) -> [f64; 2] {
        let p = PlanePoint::new(x2, y2);
        let dx = if switching_value(p) < 0.0 { x2 * x2 - y2 } else { 0.0 };
        [dx, self.slow(x2, y2)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FoldChart {
    K1f,
    K2f,
    K3f,
}

/// Coordinates ordered as (x1, r1, eps1), (x2, y2, r2) or (r3, y3, eps3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldChartPoint {
    pub chart: FoldChart,
    pub coords: [f64; 3],
}

/// Fold charts use weights (1, 2, 3) for (x, y, eps). Returns (x, y, eps).
pub fn fold_push(q: FoldChartPoint) -> [f64; 3] {
    let [a, b, c] = q.coords;
    match q.chart {
        FoldChart::K1f => [b * a, b * b, b * b * b * c],
        FoldChart::K2f => [c * a, c * c * b, c * c * c],
        FoldChart::K3f => [a, a * a * b, a * a * a * c],
    }
}

pub fn fold_pull(chart: FoldChart, x: f64, y: f64, eps: f64) -> Result<FoldChartPoint> {
    let coords = match chart {
        FoldChart::K1f => {
            if !(y > 0.0) {
                return Err(Error::Domain("fold chart K1 needs y > 0".into()));
            }
            let r = y.sqrt();
            [x / r, r, eps / (y * r)]
        }
        FoldChart::K2f => {
            if !(eps > 0.0) {
                return Err(Error::Domain("fold chart K2 needs eps > 0".into()));
            }
            let r = eps.cbrt();
            [x / r, y / (r * r), r]
        }
        FoldChart::K3f => {
            if x == 0.0 || !x.is_finite() {
                return Err(Error::Domain("fold chart K3 needs x != 0".into()));
            }
            [x, y / (x * x), eps / (x * x * x)]
        }
    };
    Ok(FoldChartPoint { chart, coords })
}

/// Desingularised (divided by r) fold fields. Interior branches carry
/// h/r² (K1, K2) and h/r, h/r² (K3), which blow up as r -> 0 unless h = 0.
pub fn fold_chart_fields(chart: FoldChart, coords: [f64; 3], h: &HField) -> Result<[f64; 3]> {
    let [a, b, c] = coords;
    let guard = |r: f64| {
        if r.abs() < 1e-10 && !h.is_zero() {
            Err(Error::UnboundedInteriorTerm(r))
        } else {
            Ok(())
        }
    };
    Ok(match chart {
        FoldChart::K1f => {
            let (x1, r1, e1) = (a, b, c);
            let dx1 = if x1.abs() > 1.0 {
                -1.0 + x1 * x1 + 0.5 * e1 * x1
            } else {
                guard(r1)?;
                let hr = if h.is_zero() { 0.0 } else { h.eval(r1 * x1, r1 * r1) / (r1 * r1) };
                hr + 0.5 * e1 * x1
            };
            [dx1, -0.5 * r1 * e1, 1.5 * e1 * e1]
        }
        FoldChart::K2f => {
            let (x2, y2, r2) = (a, b, c);
            let dx2 = if y2 < x2 * x2 {
                -y2 + x2 * x2
            } else {
                guard(r2)?;
                if h.is_zero() { 0.0 } else { h.eval(r2 * x2, r2 * r2 * y2) / (r2 * r2) }
            };
            [dx2, -1.0, 0.0]
        }
        FoldChart::K3f => {
            let (r3, y3, e3) = (a, b, c);
            if y3 < 1.0 {
                [r3 * (1.0 - y3), -e3 - 2.0 * y3 * (1.0 - y3), -3.0 * e3 * (1.0 - y3)]
            } else {
                guard(r3)?;
                let hv = if h.is_zero() { 0.0 } else { h.eval(r3, r3 * r3 * y3) };
                let q = hv / (r3 * r3);
                [hv / r3, -e3 - 2.0 * y3 * q, -3.0 * e3 * q]
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitSide {
    Top,
    EllipseArc,
    Left,
    Right,
}

/// The neighbourhood V_eps: the K1 strip {eps < y <= rho², |x| < x10·√y}
/// together with the image of the K2 disc, an ellipse of half-axes
/// R·√eps by R·eps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VSet {
    pub eps: f64,
    pub rho: f64,
    pub x10: f64,
    pub disc_radius: f64,
}

impl VSet {
    pub fn new(prm: &Params) -> Self {
        Self::with_eps(prm, prm.eps)
    }

    pub fn with_eps(prm: &Params, eps: f64) -> Self {
        Self { eps, rho: prm.rho, x10: prm.x10, disc_radius: prm.disc_radius }
    }

    pub fn in_strip(&self, p: PlanePoint) -> bool {
        p.y > self.eps && p.y <= self.rho * self.rho && p.x.abs() < self.x10 * p.y.sqrt()
    }

    pub fn in_disc(&self, p: PlanePoint) -> bool {
        let x2 = p.x / self.eps.sqrt();
        let y2 = p.y / self.eps;
        x2 * x2 + y2 * y2 < self.disc_radius * self.disc_radius
    }

    pub fn contains(&self, p: PlanePoint) -> bool {
        self.in_strip(p) || self.in_disc(p)
    }

    fn strip_pieces(&self, p: PlanePoint) -> [f64; 3] {
        let r2 = self.rho * self.rho;
        let side = (self.x10 * self.x10 * p.y - p.x * p.x) / (self.x10 * self.x10 * r2);
        [(r2 - p.y) / r2, (p.y - self.eps) / self.eps, side]
    }

    fn disc_residual(&self, p: PlanePoint) -> f64 {
        let x2 = p.x / self.eps.sqrt();
        let y2 = p.y / self.eps;
        1.0 - (x2 * x2 + y2 * y2) / (self.disc_radius * self.disc_radius)
    }

    /// Continuous, positive inside, negative outside.
    pub fn residual(&self, p: PlanePoint) -> f64 {
        let s = self.strip_pieces(p);
        s[0].min(s[1]).min(s[2]).max(self.disc_residual(p))
    }

    pub fn exit_side(&self, p: PlanePoint) -> ExitSide {
        let s = self.strip_pieces(p);
        let strip = s[0].min(s[1]).min(s[2]);
        if self.disc_residual(p) >= strip || s[1] <= s[0].min(s[2]) {
            ExitSide::EllipseArc
        } else if s[0] <= s[2] {
            ExitSide::Top
        } else if p.x < 0.0 {
            ExitSide::Left
        } else {
            ExitSide::Right
        }
    }
}

/// Membership in V_eps for the given eps.
#[allow(non_snake_case)]
pub fn in_V(p: PlanePoint, eps: f64, prm: &Params) -> bool {
    VSet::with_eps(prm, eps).contains(p)
}

/// Collar constants. `lambda_star` switches the K2 collar from the widened
/// left side to the symmetric one; `None` means the leading Hopf value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct USetConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
}

impl Default for USetConfig {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, c3: 0.5, c4: 1.0, c5: 2.0, c6: 1.0, c7: 3.0, lambda_star: None }
    }
}

impl USetConfig {
    /// C6·(r2 + r2|λ2|) > C5·(r2² + r2|λ2|) over r2 in (0, rho], |λ2| < mu.
    /// Dividing by r2 the condition is affine in (r2, |λ2|), so the corner
    /// (rho, mu) is the worst case.
    pub fn validate(&self, prm: &Params) -> Result<()> {
        let cs = [self.c1, self.c2, self.c3, self.c4, self.c5, self.c6, self.c7];
        if cs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidParams("collar constants must be positive".into()));
        }
        let (r, m) = (prm.rho, prm.mu);
        let ok = |l: f64| self.c6 * (1.0 + l) > self.c5 * (r + l);
        if !(ok(0.0) && ok(m)) {
            return Err(Error::InvalidParams(format!(
                "C6(1+|l2|) > C5(r2+|l2|) fails at r2 = {r}, |l2| <= {m}"
            )));
        }
        Ok(())
    }

    pub fn lambda_star_for(&self, prm: &Params) -> f64 {
        self.lambda_star.unwrap_or(-0.5 * prm.a2 * prm.eps)
    }

    /// Half-widths (left, right) in x of the K2 collar around the nullcline.
    pub fn k2_widths(&self, prm: &Params) -> (f64, f64) {
        let (e, l) = (prm.eps, prm.lambda.abs());
        let right = self.c5 * e.sqrt() * (e + l);
        let left = if prm.lambda < self.lambda_star_for(prm) {
            self.c6 * (e + e.sqrt() * l)
        } else {
            right
        };
        (left, right)
    }

    /// Symmetric K2 collar, used to locate λ*.
    pub fn k2_narrow_widths(&self, prm: &Params) -> (f64, f64) {
        let w = self.c5 * prm.eps.sqrt() * (prm.eps + prm.lambda.abs());
        (w, w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    Uminus,
    Uzero,
    Uplus,
    U0minus,
    U0zero,
    U0plus,
}

impl RegionLabel {
    pub fn in_c0(self) -> bool {
        matches!(self, RegionLabel::U0minus | RegionLabel::U0zero | RegionLabel::U0plus)
    }

    pub fn is_collar(self) -> bool {
        matches!(self, RegionLabel::Uzero | RegionLabel::U0zero)
    }

    /// Label with the C0 restriction dropped.
    pub fn base(self) -> RegionLabel {
        match self {
            RegionLabel::U0minus => RegionLabel::Uminus,
            RegionLabel::U0zero => RegionLabel::Uzero,
            RegionLabel::U0plus => RegionLabel::Uplus,
            other => other,
        }
    }
}

/// Nullcline lies in (x - w_right, x + w_left) on the horizontal through p.
/// Uses that g increases in x near the origin.
pub(crate) fn in_horizontal_collar(spec: &SystemSpec, p: PlanePoint, left: f64, right: f64) -> bool {
    let lo = spec.g_at(p.x - right, p.y);
    let hi = spec.g_at(p.x + left, p.y);
    lo <= 0.0 && hi >= 0.0
}

/// Along the K1 ray x1 = const, the nullcline radius lies within C1·r1² of r1.
fn in_k1_collar(spec: &SystemSpec, p: PlanePoint, c1: f64) -> bool {
    let r = p.y.sqrt();
    let x1 = p.x / r;
    let lam = spec.params.lambda;
    let phi = |s: f64| spec.g.g(s * x1, s * s, lam);
    let w = c1 * r * r;
    phi(r - w) * phi(r + w) <= 0.0
}

#[allow(non_snake_case)]
pub fn classify_U(p: PlanePoint, spec: &SystemSpec, cfg: &USetConfig) -> Result<RegionLabel> {
    if !spec.kind.is_canard() {
        return Err(Error::Precondition("U-sets are defined for canard systems".into()));
    }
    if !VSet::new(&spec.params).contains(p) {
        return Err(Error::Domain(format!("({}, {}) is outside V", p.x, p.y)));
    }
    Ok(region_label(p, spec, cfg))
}

/// Label without the membership check, for points on the boundary of V.
pub(crate) fn region_label(p: PlanePoint, spec: &SystemSpec, cfg: &USetConfig) -> RegionLabel {
    let prm = &spec.params;
    let v = VSet::new(prm);
    let (wl, wr) = cfg.k2_widths(prm);
    let collar = (v.in_strip(p) && in_k1_collar(spec, p, cfg.c1))
        || (v.in_disc(p) && in_horizontal_collar(spec, p, wl, wr));
    let g = spec.g_at(p.x, p.y);
    let inside = switching_value(p) >= 0.0;
    match (collar || g == 0.0, g < 0.0, inside) {
        (true, _, false) => RegionLabel::Uzero,
        (true, _, true) => RegionLabel::U0zero,
        (false, true, false) => RegionLabel::Uminus,
        (false, true, true) => RegionLabel::U0minus,
        (false, false, false) => RegionLabel::Uplus,
        (false, false, true) => RegionLabel::U0plus,
    }
}
