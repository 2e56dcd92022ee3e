//! Scenario files: one TOML document describing a system, its parameters,
//! starting points, stopping rules and output paths.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blowup::{USetConfig, VSet};
use crate::error::{Error, Result};
use crate::fastslow_core::{GFamily, HField, Params, PlanePoint, SystemKind, SystemSpec};
use crate::integrate::{Domain, StopPolicy, Tolerances};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub kind: SystemKind,
    /// Named g family; ignored when `g` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<GFamily>,
    #[serde(default = "default_h")]
    pub h: HField,
}

fn default_h() -> HField {
    HField::Zero
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { kind: SystemKind::PiecewiseCanard, preset: Some("paper-fig".into()), g: None, h: HField::Zero }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamSection {
    pub eps: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambda_grid: Vec<f64>,
    pub a1: f64,
    pub a2: f64,
    pub rho: f64,
    pub mu: f64,
    pub x10: f64,
    pub lambda0: f64,
    pub disc_radius: f64,
}

impl Default for ParamSection {
    fn default() -> Self {
        let p = Params::default();
        Self {
            eps: p.eps,
            lambda: p.lambda,
            lambda_grid: Vec::new(),
            a1: p.a1,
            a2: p.a2,
            rho: p.rho,
            mu: p.mu,
            x10: p.x10,
            lambda0: p.lambda0,
            disc_radius: p.disc_radius,
        }
    }
}

impl ParamSection {
    pub fn params(&self, lambda: f64) -> Params {
        Params {
            eps: self.eps,
            lambda,
            a1: self.a1,
            a2: self.a2,
            lambda0: self.lambda0,
            rho: self.rho,
            mu: self.mu,
            x10: self.x10,
            disc_radius: self.disc_radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

/// Uniform random starts inside V, drawn from a seeded ChaCha8 stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStarts {
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StartSection {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomStarts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopSection {
    /// Zero picks 400/ε.
    pub t_max: f64,
    /// Stop on leaving V.
    pub in_v: bool,
    pub stop_on_enter: bool,
    pub stop_on_exit: bool,
    pub max_steps: usize,
}

impl Default for StopSection {
    fn default() -> Self {
        Self { t_max: 0.0, in_v: true, stop_on_enter: false, stop_on_exit: false, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub params: ParamSection,
    #[serde(default)]
    pub starts: StartSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub uset: USetConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    /// Parses and validates.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for &l in self.lambdas().iter() {
            self.system_spec(l)?;
        }
        if self.system.kind.is_canard() {
            self.uset.validate(&self.params.params(self.params.lambda))?;
        }
        if let Some(g) = &self.starts.grid {
            if g.nx == 0 || g.ny == 0 {
                return Err(Error::Config("start grid needs nx, ny >= 1".into()));
            }
        }
        let t = &self.tolerances;
        if !(t.rtol > 0.0 && t.atol > 0.0 && t.h_max > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.stop.t_max >= 0.0) || self.stop.max_steps == 0 {
            return Err(Error::Config("stop.t_max must be >= 0 and max_steps >= 1".into()));
        }
        if self.starts.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("start points must be finite".into()));
        }
        Ok(())
    }

    /// The λ grid, or the single λ when no grid is set.
    pub fn lambdas(&self) -> Vec<f64> {
        if self.params.lambda_grid.is_empty() {
            vec![self.params.lambda]
        } else {
            self.params.lambda_grid.clone()
        }
    }

    pub fn g_family(&self) -> Result<GFamily> {
        if let Some(g) = &self.system.g {
            return Ok(g.clone());
        }
        let name = self.system.preset.as_deref().unwrap_or("paper-fig");
        GFamily::preset(name).ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))
    }

    pub fn system_spec(&self, lambda: f64) -> Result<SystemSpec> {
        let prm = self.params.params(lambda);
        let kind = self.system.kind;
        if kind.is_canard() {
            SystemSpec::new(kind, prm, self.g_family()?, HField::Zero)
        } else {
            let h = if kind == SystemKind::ClassicalFold { HField::Classical } else { self.system.h.clone() };
            SystemSpec::new(kind, prm, GFamily::fig_preset(), h)
        }
    }

    /// Explicit points, then the grid row by row, then the random draws.
    pub fn start_points(&self) -> Vec<PlanePoint> {
        let mut out: Vec<PlanePoint> = self.starts.points.iter().map(|p| PlanePoint::new(p[0], p[1])).collect();
        if let Some(g) = &self.starts.grid {
            let lin = |r: [f64; 2], n: usize, i: usize| {
                if n == 1 { r[0] } else { r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64 }
            };
            for j in 0..g.ny {
                for i in 0..g.nx {
                    out.push(PlanePoint::new(lin(g.x, g.nx, i), lin(g.y, g.ny, j)));
                }
            }
        }
        if let Some(r) = &self.starts.random {
            let prm = self.params.params(self.params.lambda);
            let v = VSet::new(&prm);
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            let xr = prm.x10 * prm.rho;
            let ymax = prm.rho * prm.rho;
            let want = out.len() + r.n;
            while out.len() < want {
                let p = PlanePoint::new(rng.random_range(-xr..xr), rng.random_range(-ymax..ymax));
                if v.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    pub fn stop_policy(&self, spec: &SystemSpec) -> StopPolicy {
        let t_max = if self.stop.t_max > 0.0 { self.stop.t_max } else { 400.0 / spec.params.eps };
        let mut s = StopPolicy::new(t_max).with_tol(self.tolerances);
        if self.stop.in_v {
            s = s.with_domain(Domain::V(VSet::new(&spec.params)));
        }
        s.stop_on_enter = self.stop.stop_on_enter;
        s.stop_on_exit = self.stop.stop_on_exit;
        s.max_steps = self.stop.max_steps;
        s
    }
}
