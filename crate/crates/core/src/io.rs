//! Text formats: field dumps as CSV (`x1,…,xD,u`), flat JSON reports, and
//! JSON-lines solver diagnostics. Every float is printed with 17
//! significant digits so that values survive a round trip bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::functionals::{normalize, GridField};
use crate::minimizer::MinimizeResult;

/// `{:.16e}`, or `null` for values JSON cannot carry.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

/// Quoted, escaped JSON string.
pub fn json_string(key: &str) -> String {
    let mut s = String::with_capacity(key.len() + 2);
    s.push('"');
    for c in key.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(s, "\\u{:04x}", c as u32);
            }
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

/// Flat `{"key": number, …}` object, keys sorted, one entry per line.
pub fn flat_json(map: &BTreeMap<String, f64>) -> String {
    let mut s = String::from("{\n");
    let n = map.len();
    for (i, (k, v)) in map.iter().enumerate() {
        let _ = write!(s, "  {}: {}", json_string(k), format_float(*v));
        s.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    s.push_str("}\n");
    s
}

/// Scalars plus the iteration trace.
pub fn minimize_json(result: &MinimizeResult) -> String {
    let mut s = String::from("{\n");
    let _ = writeln!(s, "  \"beta\": {},", format_float(result.beta));
    let _ = writeln!(s, "  \"variance\": {},", format_float(result.variance));
    let _ = writeln!(s, "  \"fisher\": {},", format_float(result.fisher));
    let _ = writeln!(
        s,
        "  \"cr_product\": {},",
        format_float(result.fisher * result.variance)
    );
    if let Some(e) = result.energy {
        let _ = writeln!(s, "  \"energy\": {},", format_float(e));
    }
    s.push_str("  \"trace\": [");
    for (i, t) in result.trace.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(
            s,
            "\n    {{\"iteration\": {}, \"fisher\": {}, \"violation\": {}}}",
            t.iteration,
            format_float(t.fisher),
            format_float(t.violation)
        );
    }
    s.push_str(if result.trace.is_empty() {
        "]\n}\n"
    } else {
        "\n  ]\n}\n"
    });
    s
}

/// One `{"iteration": k, "residual": r}` object per line.
pub fn residual_jsonl(history: &[f64]) -> String {
    let mut s = String::new();
    for (k, r) in history.iter().enumerate() {
        let _ = writeln!(
            s,
            "{{\"iteration\": {}, \"residual\": {}}}",
            k + 1,
            format_float(*r)
        );
    }
    s
}

/// CSV dump with header `x1,…,xD,u`, one row per node, last axis fastest.
pub fn write_field_csv<W: Write>(field: &GridField, mut out: W) -> Result<()> {
    let grid = field.grid();
    let d = grid.dimension();
    let header: Vec<String> = (1..=d)
        .map(|a| format!("x{a}"))
        .chain(std::iter::once("u".into()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    let mut x = vec![0.0; d];
    let mut line = String::new();
    for (idx, u) in field.values().iter().enumerate() {
        grid.node_coords(idx, &mut x);
        line.clear();
        for c in &x {
            line.push_str(&format_float(*c));
            line.push(',');
        }
        line.push_str(&format_float(*u));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn field_csv_string(field: &GridField) -> String {
    let mut buf = Vec::new();
    write_field_csv(field, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Reads a `x1,…,xD,u` CSV covering a complete tensor grid and returns the
/// normalized field on the bounding box of its coordinates.
///
/// Values on the outer faces are zeroed (Dirichlet mask).
pub fn read_field_csv<R: BufRead>(input: R) -> Result<GridField> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Csv("empty file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let d = cols.len().saturating_sub(1);
    let expected: Vec<String> = (1..=d)
        .map(|a| format!("x{a}"))
        .chain(std::iter::once("u".into()))
        .collect();
    if d == 0 || cols != expected {
        return Err(Error::Csv(format!(
            "header must be {}, got {}",
            expected.join(","),
            header.trim()
        )));
    }

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Csv(format!("line {}: {e}", lineno + 2)))?;
        if vals.len() != d + 1 {
            return Err(Error::Csv(format!(
                "line {}: expected {} columns, got {}",
                lineno + 2,
                d + 1,
                vals.len()
            )));
        }
        let u = vals[d];
        rows.push((vals[..d].to_vec(), u));
    }

    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); d];
    for (x, _) in &rows {
        for (a, &c) in x.iter().enumerate() {
            axes[a].push(c);
        }
    }
    for (a, axis) in axes.iter_mut().enumerate() {
        axis.sort_by(f64::total_cmp);
        axis.dedup();
        if axis.len() >= 2 {
            let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
            let deviation = axis
                .windows(2)
                .map(|p| ((p[1] - p[0]) - h).abs() / h)
                .fold(0.0, f64::max);
            if deviation > 1e-9 {
                return Err(Error::NonUniformSpacing { axis: a, deviation });
            }
        }
    }
    let expected_nodes: usize = axes.iter().map(Vec::len).product();

    let lookup: Vec<HashMap<u64, usize>> = axes
        .iter()
        .map(|axis| {
            axis.iter()
                .enumerate()
                .map(|(i, c)| (c.to_bits(), i))
                .collect()
        })
        .collect();
    let grid = Grid::from_axis_coords(axes)?;
    let mut values = vec![0.0; expected_nodes];
    let mut seen = vec![false; expected_nodes];
    for (x, u) in &rows {
        let mut idx = 0;
        for (a, c) in x.iter().enumerate() {
            idx += lookup[a][&c.to_bits()] * grid.strides()[a];
        }
        if seen[idx] {
            return Err(Error::Csv(format!("duplicate node at {x:?}")));
        }
        seen[idx] = true;
        values[idx] = *u;
    }
    let missing = seen.iter().filter(|&&s| !s).count();
    if missing > 0 {
        return Err(Error::IncompleteGrid {
            missing,
            expected: expected_nodes,
        });
    }
    normalize(&GridField::new(Arc::new(grid), values)?)
}

/// `ingest_density` by path.
pub fn ingest_density(path: &std::path::Path) -> Result<GridField> {
    let file = std::fs::File::open(path)?;
    read_field_csv(std::io::BufReader::new(file))
}
