//! Piecewise-smooth planar fast-slow fields around the parabola y = x².
//!
//! The critical set C0 = {y >= x²} is two-dimensional. Below it the fast
//! field is the classical -y + x²; inside it the fast field is replaced by
//! zero (canard family) or by a user field h (fold family).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Velocity {
    pub dx: f64,
    pub dy: f64,
}

/// Signed vertical distance to the parabola, s = y - x².
#[inline]
pub fn switching_value(p: PlanePoint) -> f64 {
    p.y - p.x * p.x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Interior,
    Exterior,
}

impl Regime {
    /// Branch used by `eval_rhs`. The parabola itself belongs to C0.
    #[inline]
    pub fn of(p: PlanePoint) -> Regime {
        if switching_value(p) < 0.0 {
            Regime::Exterior
        } else {
            Regime::Interior
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Regime::Interior => "int",
            Regime::Exterior => "ext",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub lambda: f64,
    pub a1: f64,
    pub a2: f64,
    pub lambda0: f64,
    pub rho: f64,
    pub mu: f64,
    pub x10: f64,
    /// Radius of the disc D in the rescaling chart.
    pub disc_radius: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            eps: 0.01,
            lambda: 0.0,
            a1: 1.0,
            a2: 0.9,
            lambda0: 0.05,
            rho: 0.3,
            mu: 0.3,
            x10: 3.0,
            disc_radius: 4.0,
        }
    }
}

impl Params {
    pub fn new(eps: f64, lambda: f64) -> Self {
        Self { eps, lambda, ..Self::default() }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Upper end of the admissible eps range, rho².
    pub fn eps0(&self) -> f64 {
        self.rho * self.rho
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.eps,
            self.lambda,
            self.a1,
            self.a2,
            self.lambda0,
            self.rho,
            self.mu,
            self.x10,
            self.disc_radius,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("params"));
        }
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.eps > 0.0 && self.eps <= self.eps0()) {
            return bad(&format!("need 0 < eps <= rho^2, got eps = {}", self.eps));
        }
        if self.lambda.abs() > self.lambda0 {
            return bad(&format!("|lambda| = {} exceeds lambda0 = {}", self.lambda.abs(), self.lambda0));
        }
        if self.a1 <= 0.0 || self.a2 <= 0.0 {
            return bad("a1 and a2 must be positive");
        }
        if self.rho <= 0.0 || self.mu <= 0.0 || self.lambda0 <= 0.0 || self.x10 <= 0.0 {
            return bad("rho, mu, lambda0 and x10 must be positive");
        }
        if self.disc_radius <= 1.0 {
            return bad("disc radius must exceed 1");
        }
        Ok(())
    }
}

/// Monomial c·x^i·y^j·λ^k, stored as `[c, i, j, k]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial(pub f64, pub u32, pub u32, pub u32);

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<Monomial>);

fn powu(v: f64, n: u32) -> f64 {
    v.powi(n as i32)
}

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![Monomial(c, 0, 0, 0)])
    }

    pub fn eval(&self, x: f64, y: f64, l: f64) -> f64 {
        self.0
            .iter()
            .map(|m| m.0 * powu(x, m.1) * powu(y, m.2) * powu(l, m.3))
            .sum()
    }

    pub fn d_dx(&self, x: f64, y: f64, l: f64) -> f64 {
        self.0
            .iter()
            .filter(|m| m.1 > 0)
            .map(|m| m.0 * m.1 as f64 * powu(x, m.1 - 1) * powu(y, m.2) * powu(l, m.3))
            .sum()
    }

    pub fn d_dy(&self, x: f64, y: f64, l: f64) -> f64 {
        self.0
            .iter()
            .filter(|m| m.2 > 0)
            .map(|m| m.0 * m.2 as f64 * powu(x, m.1) * powu(y, m.2 - 1) * powu(l, m.3))
            .sum()
    }
}

/// Slow right-hand side g = x·g1 - λ·g2 + y·g3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GFamily {
    /// g1 = (1 + x)^a1, g2 and g3 constant.
    Power { a1: f64, g2: f64, g3: f64 },
    Polynomial { g1: Poly, g2: Poly, g3: Poly },
}

impl GFamily {
    /// a1 = 1, g2 = 1, g3 = 0.9.
    pub fn fig_preset() -> Self {
        GFamily::Power { a1: 1.0, g2: 1.0, g3: 0.9 }
    }

    /// a1 = a2 = 1: the leading canard value vanishes.
    pub fn symmetric() -> Self {
        GFamily::Power { a1: 1.0, g2: 1.0, g3: 1.0 }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper-fig" => Some(Self::fig_preset()),
            "symmetric" => Some(Self::symmetric()),
            _ => None,
        }
    }

    pub fn g1(&self, x: f64, y: f64, l: f64) -> f64 {
        match self {
            GFamily::Power { a1, .. } => (1.0 + x).powf(*a1),
            GFamily::Polynomial { g1, .. } => g1.eval(x, y, l),
        }
    }

    pub fn g2(&self, x: f64, y: f64, l: f64) -> f64 {
        match self {
            GFamily::Power { g2, .. } => *g2,
            GFamily::Polynomial { g2, .. } => g2.eval(x, y, l),
        }
    }

    pub fn g3(&self, x: f64, y: f64, l: f64) -> f64 {
        match self {
            GFamily::Power { g3, .. } => *g3,
            GFamily::Polynomial { g3, .. } => g3.eval(x, y, l),
        }
    }

    #[inline]
    pub fn g(&self, x: f64, y: f64, l: f64) -> f64 {
        x * self.g1(x, y, l) - l * self.g2(x, y, l) + y * self.g3(x, y, l)
    }

    /// (∂g/∂x, ∂g/∂y).
    pub fn grad(&self, x: f64, y: f64, l: f64) -> (f64, f64) {
        match self {
            GFamily::Power { a1, g3, .. } => {
                let gx = (1.0 + x).powf(*a1) + x * a1 * (1.0 + x).powf(a1 - 1.0);
                (gx, *g3)
            }
            GFamily::Polynomial { g1, g2, g3 } => {
                let gx = g1.eval(x, y, l) + x * g1.d_dx(x, y, l) - l * g2.d_dx(x, y, l)
                    + y * g3.d_dx(x, y, l);
                let gy = x * g1.d_dy(x, y, l) - l * g2.d_dy(x, y, l)
                    + g3.eval(x, y, l)
                    + y * g3.d_dy(x, y, l);
                (gx, gy)
            }
        }
    }

    /// ∂ₓg1 at the origin.
    pub fn a1_at_origin(&self) -> f64 {
        match self {
            GFamily::Power { a1, .. } => *a1,
            GFamily::Polynomial { g1, .. } => g1.d_dx(0.0, 0.0, 0.0),
        }
    }

    pub fn a2_at_origin(&self) -> f64 {
        self.g3(0.0, 0.0, 0.0)
    }

    /// Checks the normalisation g1 = g2 = 1 at the origin and agreement with
    /// the coefficients stored in `params`.
    pub fn check_against(&self, params: &Params) -> Result<()> {
        let g1 = self.g1(0.0, 0.0, 0.0);
        let g2 = self.g2(0.0, 0.0, 0.0);
        if (g1 - 1.0).abs() > 1e-12 || (g2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "g1(0) = {g1}, g2(0) = {g2}; both must equal 1"
            )));
        }
        // central difference, as a cross-check of the analytic value
        let h = 1e-6;
        let fd = (self.g1(h, 0.0, 0.0) - self.g1(-h, 0.0, 0.0)) / (2.0 * h);
        if (fd - params.a1).abs() > 1e-6 {
            return Err(Error::InvalidParams(format!("dg1/dx(0) = {fd} but a1 = {}", params.a1)));
        }
        if (self.a2_at_origin() - params.a2).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "g3(0) = {} but a2 = {}",
                self.a2_at_origin(),
                params.a2
            )));
        }
        Ok(())
    }
}

/// Interior fast field of the fold family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum HField {
    Zero,
    /// -y + x², i.e. the classical field continued into C0.
    Classical,
    /// poly(x, y) + amp·sin(kx·x + ky·y + phase); λ exponents in `poly` are ignored.
    Smooth { poly: Poly, amp: f64, kx: f64, ky: f64, phase: f64 },
}

impl HField {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            HField::Zero => 0.0,
            HField::Classical => -y + x * x,
            HField::Smooth { poly, amp, kx, ky, phase } => {
                poly.eval(x, y, 1.0) + amp * (kx * x + ky * y + phase).sin()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            HField::Zero => true,
            HField::Classical => false,
            HField::Smooth { poly, amp, .. } => *amp == 0.0 && poly.0.iter().all(|m| m.0 == 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    ClassicalFold,
    PiecewiseFold,
    ClassicalCanard,
    PiecewiseCanard,
}

impl SystemKind {
    pub fn is_canard(self) -> bool {
        matches!(self, SystemKind::ClassicalCanard | SystemKind::PiecewiseCanard)
    }

    pub fn is_fold(self) -> bool {
        !self.is_canard()
    }

    pub fn is_piecewise(self) -> bool {
        matches!(self, SystemKind::PiecewiseFold | SystemKind::PiecewiseCanard)
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::ClassicalFold => "classical-fold",
            SystemKind::PiecewiseFold => "piecewise-fold",
            SystemKind::ClassicalCanard => "classical-canard",
            SystemKind::PiecewiseCanard => "piecewise-canard",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub params: Params,
    pub g: GFamily,
    pub h: HField,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, params: Params, g: GFamily, h: HField) -> Result<Self> {
        let spec = Self { kind, params, g, h };
        spec.validate()?;
        Ok(spec)
    }

    pub fn piecewise_canard(params: Params, g: GFamily) -> Result<Self> {
        Self::new(SystemKind::PiecewiseCanard, params, g, HField::Zero)
    }

    pub fn classical_canard(params: Params, g: GFamily) -> Result<Self> {
        Self::new(SystemKind::ClassicalCanard, params, g, HField::Zero)
    }

    pub fn piecewise_fold(params: Params, h: HField) -> Result<Self> {
        Self::new(SystemKind::PiecewiseFold, params, GFamily::fig_preset(), h)
    }

    pub fn classical_fold(params: Params) -> Result<Self> {
        Self::new(SystemKind::ClassicalFold, params, GFamily::fig_preset(), HField::Zero)
    }

    /// Piecewise canard system with the default g family.
    pub fn fig_preset(eps: f64, lambda: f64) -> Result<Self> {
        Self::piecewise_canard(Params::new(eps, lambda), GFamily::fig_preset())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.kind.is_canard() {
            self.g.check_against(&self.params)?;
        }
        Ok(())
    }

    pub fn with_kind(&self, kind: SystemKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut s = self.clone();
        s.params.lambda = lambda;
        s
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        let mut s = self.clone();
        s.params.eps = eps;
        s
    }

    #[inline]
    pub fn g_at(&self, x: f64, y: f64) -> f64 {
        self.g.g(x, y, self.params.lambda)
    }

    #[inline]
    fn slow(&self, x: f64, y: f64) -> f64 {
        if self.kind.is_canard() {
            self.params.eps * self.g_at(x, y)
        } else {
            -self.params.eps
        }
    }

    /// Field of the branch below the parabola, analytically continued.
    #[inline]
    pub fn exterior_field(&self, p: PlanePoint) -> Velocity {
        Velocity { dx: p.x * p.x - p.y, dy: self.slow(p.x, p.y) }
    }

    /// Field of the branch inside C0, analytically continued.
    #[inline]
    pub fn interior_field(&self, p: PlanePoint) -> Velocity {
        let dx = match self.kind {
            SystemKind::ClassicalFold | SystemKind::ClassicalCanard => p.x * p.x - p.y,
            SystemKind::PiecewiseCanard => 0.0,
            SystemKind::PiecewiseFold => self.h.eval(p.x, p.y),
        };
        Velocity { dx, dy: self.slow(p.x, p.y) }
    }
}

/// Velocity on the fast time scale, branch chosen by `Regime::of`.
pub fn eval_rhs(spec: &SystemSpec, p: PlanePoint) -> Result<Velocity> {
    if !p.is_finite() {
        return Err(Error::NonFinite("point"));
    }
    Ok(match Regime::of(p) {
        Regime::Exterior => spec.exterior_field(p),
        Regime::Interior => spec.interior_field(p),
    })
}

/// The unique equilibrium on the parabola near the origin.
pub fn equilibrium_point(spec: &SystemSpec) -> Result<PlanePoint> {
    if !spec.kind.is_canard() {
        return Err(Error::Precondition("equilibrium_point needs a canard system".into()));
    }
    let prm = &spec.params;
    if prm.lambda.abs() > prm.lambda0 {
        return Err(Error::InvalidParams("|lambda| exceeds lambda0".into()));
    }
    let phi = |x: f64| spec.g_at(x, x * x);
    let (lo, hi) = (-prm.rho, prm.rho);
    let x = bisect_newton(phi, |x| {
        let (gx, gy) = spec.g.grad(x, x * x, prm.lambda);
        gx + 2.0 * x * gy
    }, lo, hi, 1e-12)
    .ok_or(Error::NoRootInWindow { lo, hi })?;
    Ok(PlanePoint::new(x, x * x))
}

/// Bracketing bisection followed by a few Newton steps kept inside the
/// final bracket. Returns `None` if `f` has no sign change on [lo, hi].
pub(crate) fn bisect_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..80 {
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let mut next = x - fx / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < 1e-6 * tol * (1.0 + x.abs()) || hi - lo < 1e-17 {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Left,
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Local,
    Total,
}

/// Whether polyline sample `a` lies to the left of (or below) `b`.
///
/// Local: on every horizontal line meeting both samples, every abscissa of
/// `a` is at most every abscissa of `b`. Total: a separating vertical line
/// exists. "Below" is the same statement with the axes swapped.
pub fn relative_position(a: &[PlanePoint], b: &[PlanePoint], mode: Direction, scope: Scope) -> bool {
    let swap = |s: &[PlanePoint]| -> Vec<PlanePoint> {
        s.iter().map(|p| PlanePoint::new(p.y, p.x)).collect()
    };
    let (a, b): (Vec<PlanePoint>, Vec<PlanePoint>) = match mode {
        Direction::Left => (a.to_vec(), b.to_vec()),
        Direction::Below => (swap(a), swap(b)),
    };
    if a.is_empty() || b.is_empty() {
        return true;
    }
    match scope {
        Scope::Total => {
            let amax = a.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let bmin = b.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            amax <= bmin
        }
        Scope::Local => local_left(&a, &b),
    }
}

fn crossings(s: &[PlanePoint], h: f64, out: &mut Vec<f64>) {
    out.clear();
    if s.len() == 1 {
        if s[0].y == h {
            out.push(s[0].x);
        }
        return;
    }
    for w in s.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p.y == h && q.y == h {
            out.push(p.x);
            out.push(q.x);
        } else if (p.y - h) * (q.y - h) <= 0.0 {
            let t = (h - p.y) / (q.y - p.y);
            out.push(p.x + t * (q.x - p.x));
        }
    }
}

/// Abscissae at `h0` and `h1` of every segment spanning the open band (h0, h1).
fn spanning(s: &[PlanePoint], h0: f64, h1: f64, out: &mut Vec<(f64, f64)>) {
    out.clear();
    for w in s.windows(2) {
        let (p, q) = (w[0], w[1]);
        let (lo, hi) = (p.y.min(q.y), p.y.max(q.y));
        if lo <= h0 && hi >= h1 && hi > lo {
            let at = |h: f64| p.x + (h - p.y) / (q.y - p.y) * (q.x - p.x);
            out.push((at(h0), at(h1)));
        }
    }
}

fn local_left(a: &[PlanePoint], b: &[PlanePoint]) -> bool {
    let scale = a.iter().chain(b).map(|p| p.x.abs()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut hs: Vec<f64> = a.iter().chain(b).map(|p| p.y).collect();
    hs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    hs.dedup();
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for &h in &hs {
        crossings(a, h, &mut xa);
        crossings(b, h, &mut xb);
        if xa.is_empty() || xb.is_empty() {
            continue;
        }
        let amax = xa.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bmin = xb.iter().cloned().fold(f64::INFINITY, f64::min);
        if amax > bmin + tol {
            return false;
        }
    }
    // between consecutive vertex heights every crossing is affine in h, so
    // checking the two band edges settles the whole band
    let (mut sa, mut sb) = (Vec::new(), Vec::new());
    for w in hs.windows(2) {
        spanning(a, w[0], w[1], &mut sa);
        spanning(b, w[0], w[1], &mut sb);
        for &(a0, a1) in &sa {
            for &(b0, b1) in &sb {
                if a0 > b0 + tol || a1 > b1 + tol {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig(eps: f64, lambda: f64) -> SystemSpec {
        SystemSpec::fig_preset(eps, lambda).unwrap()
    }

    #[test]
    fn switching_value_examples() {
        assert_eq!(switching_value(PlanePoint::new(0.0, 0.0)), 0.0);
        assert_eq!(switching_value(PlanePoint::new(0.5, 0.25)), 0.0);
        assert!((switching_value(PlanePoint::new(-0.2, 0.09)) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rhs_examples() {
        let s = fig(0.01, 0.0);
        let v = eval_rhs(&s, PlanePoint::new(0.1, 0.0)).unwrap();
        assert!((v.dx - 0.01).abs() < 1e-15);
        assert!((v.dy - 0.0011).abs() < 1e-15);
        let v = eval_rhs(&s, PlanePoint::new(0.1, 0.05)).unwrap();
        assert_eq!(v.dx, 0.0);
        let f = SystemSpec::piecewise_fold(Params::new(0.01, 0.0), HField::Zero).unwrap();
        let v = eval_rhs(&f, PlanePoint::new(-0.3, 0.05)).unwrap();
        assert!((v.dx - 0.04).abs() < 1e-15);
        assert_eq!(v.dy, -0.01);
        assert!(eval_rhs(&s, PlanePoint::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn parabola_point_takes_interior_branch() {
        let f = SystemSpec::piecewise_fold(Params::new(0.01, 0.0), HField::Classical).unwrap();
        let p = PlanePoint::new(0.3, 0.09);
        assert_eq!(Regime::of(p), Regime::Interior);
        let v = eval_rhs(&f, p).unwrap();
        assert_eq!(v.dx, f.h.eval(0.3, 0.09));
    }

    #[test]
    fn equilibrium_examples() {
        let p = equilibrium_point(&fig(0.01, 0.0)).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
        // scalar oracle: x(1+x) - λ + 0.9x² = 0  <=>  1.9x² + x - λ = 0
        for (lam, want) in [(2.5e-4, 2.4988136267871e-4), (-4.5e-3, -4.53914733113818e-3)] {
            let p = equilibrium_point(&fig(0.01, lam)).unwrap();
            let exact = (-1.0 + (1.0 + 4.0 * 1.9 * lam).sqrt()) / (2.0 * 1.9);
            assert!((p.x - exact).abs() < 1e-14, "{} vs {}", p.x, exact);
            assert!((p.x - want).abs() < 1e-12);
            assert!(fig(0.01, lam).g_at(p.x, p.y).abs() < 1e-12);
            assert_eq!(switching_value(p), 0.0);
        }
    }

    #[test]
    fn equilibrium_needs_sign_change() {
        let g = GFamily::Polynomial {
            g1: Poly(vec![Monomial(1.0, 0, 0, 0), Monomial(1.0, 1, 0, 0)]),
            g2: Poly::constant(1.0),
            g3: Poly::constant(0.9),
        };
        // a large λ pushes the root out of [-rho, rho]
        let mut prm = Params::new(0.01, 0.5);
        prm.lambda0 = 1.0;
        let s = SystemSpec::piecewise_canard(prm, g).unwrap();
        assert!(matches!(equilibrium_point(&s), Err(Error::NoRootInWindow { .. })));
    }

    #[test]
    fn params_invariants() {
        assert!(Params::new(0.01, 0.0).validate().is_ok());
        assert!(Params::new(0.1, 0.0).validate().is_err());
        assert!(Params::new(0.0, 0.0).validate().is_err());
        assert!(Params::new(0.01, 0.06).validate().is_err());
        let mut p = Params::new(0.01, 0.0);
        p.a2 = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn g_family_checks() {
        let prm = Params::new(0.01, 0.0);
        assert!(GFamily::fig_preset().check_against(&prm).is_ok());
        let mut wrong = prm;
        wrong.a2 = 1.0;
        assert!(GFamily::fig_preset().check_against(&wrong).is_err());
        let bad = GFamily::Power { a1: 1.0, g2: 2.0, g3: 0.9 };
        assert!(bad.check_against(&prm).is_err());
        let poly = GFamily::Polynomial {
            g1: Poly(vec![Monomial(1.0, 0, 0, 0), Monomial(1.0, 1, 0, 0)]),
            g2: Poly::constant(1.0),
            g3: Poly::constant(0.9),
        };
        for &(x, y) in &[(0.1, 0.02), (-0.2, 0.07), (0.0, 0.0)] {
            let l = 0.003;
            assert!((poly.g(x, y, l) - GFamily::fig_preset().g(x, y, l)).abs() < 1e-15);
            let (a, b) = poly.grad(x, y, l);
            let (c, d) = GFamily::fig_preset().grad(x, y, l);
            assert!((a - c).abs() < 1e-14 && (b - d).abs() < 1e-14);
        }
    }

    #[test]
    fn relative_position_examples() {
        let a = [PlanePoint::new(0.0, 0.0)];
        let b = [PlanePoint::new(1.0, 0.0)];
        assert!(relative_position(&a, &b, Direction::Left, Scope::Local));
        assert!(!relative_position(&b, &a, Direction::Left, Scope::Local));
        // no common horizontal line: vacuously true
        let c = [PlanePoint::new(-5.0, 3.0)];
        assert!(relative_position(&b, &c, Direction::Left, Scope::Local));
        assert!(!relative_position(&b, &c, Direction::Left, Scope::Total));
    }

    #[test]
    fn crossing_segments_are_caught_between_vertices() {
        let a = [PlanePoint::new(0.0, 0.0), PlanePoint::new(2.0, 1.0)];
        let b = [PlanePoint::new(1.0, 0.0), PlanePoint::new(1.0, 1.0)];
        assert!(!relative_position(&a, &b, Direction::Left, Scope::Local));
    }
}
