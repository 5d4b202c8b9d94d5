use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

use super::grid::DiscreteState;

/// A float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory CSV `t,x,field,value`: time-major, then space (all `nx`
/// columns, the periodic seam written twice), then `q1..qn, v1..vn`. Rows
/// with index divisible by `every` are written.
pub fn write_trajectory<W: Write>(mut w: W, state: &DiscreteState, every: usize) -> Result<()> {
    if every == 0 {
        return Err(Error::Config("output.every must be at least 1".into()));
    }
    let g = state.grid;
    let n = state.n;
    let rows = match &state.v {
        Some(_) => state.q_rows().min(state.v_rows()),
        None => state.q_rows(),
    };
    writeln!(w, "t,x,field,value")?;
    for a in (0..rows).step_by(every) {
        let t = fmt17(g.t(a));
        for bx in 0..g.nx {
            let b = state.col(bx as isize);
            let x = fmt17(g.x(bx));
            for i in 0..n {
                writeln!(w, "{t},{x},q{},{}", i + 1, fmt17(state.q_at(a, b, i)))?;
            }
            if state.v.is_some() {
                for i in 0..n {
                    writeln!(w, "{t},{x},v{},{}", i + 1, fmt17(state.v_at(a, b, i)))?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub energy_series: Vec<f64>,
    pub newton_iters: Vec<usize>,
    pub observed_cfl: f64,
}

/// Renders any serializable value as JSON with every float printed to 17
/// significant digits. Non-finite floats become `null`.
pub fn to_json17<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    render(&v, 0, &mut out);
    Ok(out)
}

fn render(v: &serde_json::Value, indent: usize, out: &mut String) {
    use serde_json::Value;
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Number(num) => {
            if num.is_f64() {
                let x = num.as_f64().expect("f64");
                out.push_str(&if x.is_finite() { fmt17(x) } else { "null".into() });
            } else {
                out.push_str(&num.to_string());
            }
        }
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|v| !v.is_array() && !v.is_object()) => {
            out.push('[');
            for (j, it) in items.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                render(it, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (j, it) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                render(it, indent + 1, out);
                out.push_str(if j + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (j, (k, it)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("string key"));
                out.push_str(": ");
                render(it, indent + 1, out);
                out.push_str(if j + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn write_diagnostics<W: Write>(mut w: W, d: &Diagnostics) -> Result<()> {
    writeln!(w, "{}", to_json17(d)?)?;
    Ok(())
}
