//! Command-line front end. Exit codes: 0 success, 2 usage or config error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    critical_values, fold_exit_heights, fold_scaling_fit, lambda_c_numeric, find_Pc_with, Classifier,
};
use crate::blowup::{fold_pull, fold_push, phi1_pull, phi1_push, phi2_pull, phi2_push};
use crate::blowup::{ChartPointK1, ChartPointK2, Extended, FoldChart, FoldChartPoint};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::export::{report_json, sweep_row, trajectory_json, write_csv, SWEEP_HEADER};
use crate::fastslow_core::{HField, PlanePoint, SystemKind};
use crate::integrate::integrate;
use crate::par::{self, Execution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ducktrap", version, about = "Canard and fold simulations for systems with a two-dimensional critical set")]
pub struct Cli {
    /// Worker cap for parallel runs; overrides DUCKTRAP_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate trajectories and write them as CSV or JSON.
    Simulate(SimulateArgs),
    /// Classify starts over a λ grid; one CSV row per (λ, start).
    Sweep(SweepArgs),
    /// Critical parameter values, leading order and numerical.
    Criticals(CriticalsArgs),
    /// Exit-height exponent of the fold transition.
    FoldScaling(FoldArgs),
    /// Push or pull points through the blow-up charts.
    Charts(ChartsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SystemArg {
    Canard,
    ClassicalCanard,
    Fold,
    ClassicalFold,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum HArg {
    Zero,
    Classical,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ScenarioArgs {
    /// TOML scenario file; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub system: Option<SystemArg>,
    #[arg(long, value_enum)]
    pub h: Option<HArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    /// Start point `x,y`; repeatable.
    #[arg(long = "start", value_parser = parse_point, allow_hyphen_values = true)]
    pub starts: Vec<PlanePoint>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    /// CSV output; several starts get an index suffix.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda_grid: Option<Vec<f64>>,
    /// CSV output instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CriticalsArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Skip the bisections.
    #[arg(long)]
    pub leading_only: bool,
}

#[derive(Args, Debug)]
pub struct FoldArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',', default_value = "1e-4,3e-4,1e-3,3e-3,1e-2")]
    pub eps_list: Vec<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -0.4)]
    pub x_in: f64,
    /// Also report exit heights from x_in and x_in + 0.05 at the scenario ε.
    #[arg(long)]
    pub contraction: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Way {
    Push,
    Pull,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ChartArg {
    K1,
    K2,
    F1,
    F2,
    F3,
}

#[derive(Args, Debug)]
pub struct ChartsArgs {
    #[arg(value_enum)]
    pub way: Way,
    #[arg(long, value_enum)]
    pub chart: ChartArg,
    /// Comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub point: Vec<f64>,
}

fn parse_point(s: &str) -> std::result::Result<PlanePoint, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y but got {s:?}"));
    }
    let x: f64 = parts[0].trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let y: f64 = parts[1].trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("{s:?} is not finite"));
    }
    Ok(PlanePoint::new(x, y))
}

fn scenario(a: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut c = match &a.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = a.system {
        c.system.kind = match s {
            SystemArg::Canard => SystemKind::PiecewiseCanard,
            SystemArg::ClassicalCanard => SystemKind::ClassicalCanard,
            SystemArg::Fold => SystemKind::PiecewiseFold,
            SystemArg::ClassicalFold => SystemKind::ClassicalFold,
        };
    }
    if let Some(p) = &a.preset {
        c.system.preset = Some(p.clone());
        c.system.g = None;
        // a1, a2 follow the family unless given explicitly
        let g = c.g_family()?;
        c.params.a1 = g.a1_at_origin();
        c.params.a2 = g.a2_at_origin();
    }
    if let Some(h) = a.h {
        c.system.h = match h {
            HArg::Zero => HField::Zero,
            HArg::Classical => HField::Classical,
        };
    }
    let p = &mut c.params;
    for (dst, src) in [
        (&mut p.eps, a.eps),
        (&mut p.lambda, a.lambda),
        (&mut p.a1, a.a1),
        (&mut p.a2, a.a2),
        (&mut p.rho, a.rho),
        (&mut p.lambda0, a.lambda0),
    ] {
        if let Some(v) = src {
            *dst = v;
        }
    }
    if !a.starts.is_empty() {
        c.starts.points = a.starts.iter().map(|p| [p.x, p.y]).collect();
        c.starts.grid = None;
        c.starts.random = None;
    }
    c.validate()?;
    Ok(c)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("write failed: {e}"))
}

fn indexed(path: &Path, i: usize, n: usize) -> PathBuf {
    if n == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{i}.{ext}"))
}

fn simulate(a: &SimulateArgs, exec: Execution, out: &mut dyn Write) -> Result<()> {
    let mut c = scenario(&a.scenario)?;
    if let Some(t) = a.t_max {
        c.stop.t_max = t;
    }
    c.validate()?;
    let spec = c.system_spec(c.params.lambda)?;
    let starts = c.start_points();
    if starts.is_empty() {
        return Err(Error::Config("no start points".into()));
    }
    let stop = c.stop_policy(&spec);
    let runs = par::map(&starts, exec, |&p| integrate(&spec, p, &stop));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let csv = a.csv.clone().or(c.output.csv.as_ref().map(PathBuf::from));
    if let Some(path) = csv {
        for (i, traj) in runs.iter().enumerate() {
            let mut w = create(&indexed(&path, i, runs.len()))?;
            write_csv(&mut w, traj).and_then(|_| w.flush()).map_err(io_err)?;
        }
    }
    let json_path = a.json.clone().or(c.output.json.as_ref().map(PathBuf::from));
    if let Some(path) = json_path {
        let doc = json!({ "schema": 1, "system": spec.kind.name(), "params": spec.params,
            "runs": runs.iter().map(trajectory_json).collect::<Vec<_>>() });
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::Config(e.to_string()))?;
        w.flush().map_err(io_err)?;
    }
    let summary: Vec<_> = starts
        .iter()
        .zip(&runs)
        .map(|(p, t)| {
            let f = t.final_point();
            json!({
                "start": [p.x, p.y],
                "final": { "x": f.x, "y": f.y, "regime": t.final_regime().tag() },
                "events": t.events.iter().map(|e| json!({ "kind": e.kind.label(), "t": e.time, "x": e.point.x, "y": e.point.y })).collect::<Vec<_>>(),
            })
        })
        .collect();
    writeln!(out, "{}", json!({ "schema": 1, "system": spec.kind.name(), "runs": summary })).map_err(io_err)
}

fn sweep(a: &SweepArgs, exec: Execution, out: &mut dyn Write) -> Result<()> {
    let mut c = scenario(&a.scenario)?;
    if let Some(g) = &a.lambda_grid {
        c.params.lambda_grid = g.clone();
    }
    if c.params.lambda_grid.is_empty() {
        return Err(Error::Config("sweep needs a non-empty lambda grid".into()));
    }
    c.validate()?;
    if !c.system.kind.is_canard() {
        return Err(Error::Config("sweep classifies canard systems only".into()));
    }
    let mut starts = c.start_points();
    if starts.is_empty() {
        starts = vec![PlanePoint::new(-0.2, 0.09), PlanePoint::new(-0.15, 0.09)];
    }
    let lambdas = c.lambdas();
    let classifiers = par::map(&lambdas, exec, |&l| {
        c.system_spec(l).and_then(|s| Classifier::new(&s, &c.uset)).map_err(|e| e.to_string())
    });
    let jobs: Vec<(usize, PlanePoint)> =
        (0..lambdas.len()).flat_map(|i| starts.iter().map(move |&p| (i, p))).collect();
    let rows = par::map(&jobs, exec, |&(i, p)| {
        let r = match &classifiers[i] {
            Ok(cl) => cl.classify(p).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        sweep_row(lambdas[i], p.x, p.y, &r)
    });
    let mut w: Box<dyn Write + '_> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(out),
    };
    writeln!(w, "{SWEEP_HEADER}").map_err(io_err)?;
    for r in rows {
        writeln!(w, "{r}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn criticals(a: &CriticalsArgs, out: &mut dyn Write) -> Result<()> {
    let c = scenario(&a.scenario)?;
    if !c.system.kind.is_canard() {
        return Err(Error::Config("critical values need a canard system".into()));
    }
    let spec = c.system_spec(c.params.lambda)?;
    let leading = critical_values(&spec, &c.uset, false)?;
    let mut doc = json!({ "schema": 1, "lambda": spec.params.lambda, "leading": leading });
    if !a.leading_only {
        let numeric = critical_values(&spec, &c.uset, true)?;
        doc["numeric"] = serde_json::to_value(numeric).unwrap_or_default();
        let lc = lambda_c_numeric(&spec)?;
        if spec.params.lambda > lc {
            doc["p_c"] = serde_json::to_value(find_Pc_with(&spec, &c.uset, lc)?).unwrap_or_default();
        }
    }
    writeln!(out, "{doc}").map_err(io_err)
}

fn fold_scaling(a: &FoldArgs, exec: Execution, out: &mut dyn Write) -> Result<()> {
    let mut sa = a.scenario.clone();
    if sa.system.is_none() {
        sa.system = Some(SystemArg::Fold);
    }
    let c = scenario(&sa)?;
    let spec = c.system_spec(c.params.lambda)?;
    let fit = fold_scaling_fit(&spec, &a.eps_list, a.x_in, exec)?;
    let mut doc = report_json("fit", &fit);
    doc["x_in"] = json!(a.x_in);
    if a.contraction {
        let xs = [a.x_in, a.x_in + 0.05];
        let ys = fold_exit_heights(&spec, &xs, exec)?;
        doc["contraction"] = json!({ "eps": spec.params.eps, "x_in": xs, "y_out": ys, "diff": (ys[0] - ys[1]).abs() });
    }
    writeln!(out, "{doc}").map_err(io_err)
}

fn charts(a: &ChartsArgs, out: &mut dyn Write) -> Result<()> {
    let p = &a.point;
    let need = match (a.chart, a.way) {
        (ChartArg::K1 | ChartArg::K2, _) => 4,
        (_, _) => 3,
    };
    if p.len() != need {
        return Err(Error::Config(format!("chart point needs {need} coordinates, got {}", p.len())));
    }
    let fold = |c: ChartArg| match c {
        ChartArg::F1 => FoldChart::K1f,
        ChartArg::F2 => FoldChart::K2f,
        _ => FoldChart::K3f,
    };
    let coords: Vec<f64> = match (a.chart, a.way) {
        (ChartArg::K1, Way::Push) => {
            phi1_push(ChartPointK1 { x1: p[0], r1: p[1], eps1: p[2], lambda1: p[3] }).as_array().to_vec()
        }
        (ChartArg::K2, Way::Push) => {
            phi2_push(ChartPointK2 { x2: p[0], y2: p[1], r2: p[2], lambda2: p[3] }).as_array().to_vec()
        }
        (ChartArg::K1, Way::Pull) => {
            let q = phi1_pull(Extended { x: p[0], y: p[1], eps: p[2], lambda: p[3] })?;
            vec![q.x1, q.r1, q.eps1, q.lambda1]
        }
        (ChartArg::K2, Way::Pull) => {
            let q = phi2_pull(Extended { x: p[0], y: p[1], eps: p[2], lambda: p[3] })?;
            vec![q.x2, q.y2, q.r2, q.lambda2]
        }
        (c, Way::Push) => fold_push(FoldChartPoint { chart: fold(c), coords: [p[0], p[1], p[2]] }).to_vec(),
        (c, Way::Pull) => fold_pull(fold(c), p[0], p[1], p[2])?.coords.to_vec(),
    };
    let way = match a.way {
        Way::Push => "push",
        Way::Pull => "pull",
    };
    writeln!(out, "{}", json!({ "schema": 1, "way": way, "chart": format!("{:?}", a.chart).to_lowercase(), "coords": coords }))
        .map_err(io_err)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let threads = cli.threads.or_else(par::env_threads);
    // the output handle is not Send, so only the numerical work runs in the pool
    match &cli.cmd {
        Command::Simulate(a) => {
            let mut buf = Vec::new();
            par::with_threads(threads, || simulate(a, exec, &mut buf))?;
            out.write_all(&buf).map_err(io_err)
        }
        Command::Sweep(a) => {
            let mut buf = Vec::new();
            par::with_threads(threads, || sweep(a, exec, &mut buf))?;
            out.write_all(&buf).map_err(io_err)
        }
        Command::Criticals(a) => criticals(a, out),
        Command::FoldScaling(a) => {
            let mut buf = Vec::new();
            par::with_threads(threads, || fold_scaling(a, exec, &mut buf))?;
            out.write_all(&buf).map_err(io_err)
        }
        Command::Charts(a) => charts(a, out),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("ducktrap").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn point_parser() {
        assert_eq!(parse_point("-0.2,0.09").unwrap(), PlanePoint::new(-0.2, 0.09));
        assert!(parse_point("0.1").is_err());
        assert!(parse_point("a,b").is_err());
    }

    #[test]
    fn malformed_start_exits_2() {
        let (code, _, _) = run_str(&["simulate", "--start", "oops"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn charts_round_trip() {
        let (code, out, _) = run_str(&["charts", "push", "--chart", "k2", "--point", "0.5,-0.25,0.1,0.2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema"], 1);
        let c: Vec<f64> = serde_json::from_value(v["coords"].clone()).unwrap();
        assert!((c[0] - 0.05).abs() < 1e-15 && (c[2] - 0.01).abs() < 1e-15);
        let (code, _, _) = run_str(&["charts", "pull", "--chart", "k1", "--point", "0.1,-0.01,0.01,0"]);
        assert_eq!(code, 2);
    }
}
