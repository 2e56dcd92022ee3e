//! CSV and JSON writers. CSV rows are `t,x,y,regime`; every JSON document
//! carries `schema: 1`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::OrbitClass;
use crate::integrate::HybridTrajectory;

pub const SCHEMA: u32 = 1;

pub fn write_csv<W: Write>(w: &mut W, traj: &HybridTrajectory) -> io::Result<()> {
    writeln!(w, "t,x,y,regime")?;
    for (regime, t, p) in traj.samples() {
        writeln!(w, "{t},{},{},{}", p.x, p.y, regime.tag())?;
    }
    Ok(())
}

pub fn trajectory_json(traj: &HybridTrajectory) -> Value {
    let samples: Vec<Value> = traj.samples().map(|(r, t, p)| json!([t, p.x, p.y, r.tag()])).collect();
    let events: Vec<Value> = traj
        .events
        .iter()
        .map(|e| json!({ "kind": e.kind.label(), "t": e.time, "x": e.point.x, "y": e.point.y }))
        .collect();
    let last = traj.final_point();
    json!({
        "schema": SCHEMA,
        "steps": traj.steps,
        "final": { "x": last.x, "y": last.y, "regime": traj.final_regime().tag() },
        "events": events,
        "samples": samples,
    })
}

/// Wraps a serialisable payload as `{"schema": 1, "<kind>": payload}`.
pub fn report_json<T: Serialize>(kind: &str, payload: &T) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert(kind.into(), serde_json::to_value(payload).unwrap_or(Value::Null));
    Value::Object(m)
}

pub const SWEEP_HEADER: &str =
    "lambda,x0,y0,outcome,exit_kind,exit_x,exit_y,cycle_side,exit_vs_p_plus,start_vs_p_c,error";

fn opt<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

/// One sweep row. Errors go into the last column and leave the rest empty.
pub fn sweep_row(lambda: f64, x0: f64, y0: f64, r: &Result<OrbitClass, String>) -> String {
    match r {
        Ok(c) => format!(
            "{lambda},{x0},{y0},{:?},{},{},{},{},{},{},",
            c.outcome,
            c.exit.kind.label(),
            c.exit.point.x,
            c.exit.point.y,
            opt(c.cycle_side),
            opt(c.exit_vs_p_plus),
            opt(c.start_vs_p_c)
        ),
        Err(e) => format!("{lambda},{x0},{y0},,,,,,,,{}", e.replace([',', '\n'], ";")),
    }
}
