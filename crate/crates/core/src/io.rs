//! File formats: operator documents (JSON), grid exports (CSV) and the
//! line-oriented verification report.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::splitting::OperatorEnvironment;

pub const GRID_HEADER: &str = "s,t,deriv_s,deriv_t,re,im";

/// Parses an operator document with fields `dim`, `matrix` (rows of
/// `[re, im]` pairs), `null_indices` and `complement_indices`.
pub fn parse_operator(text: &str) -> Result<OperatorEnvironment> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(pos) => message[..pos].to_string(),
        None => message.to_string(),
    }
}

pub fn read_operator(path: &Path) -> Result<OperatorEnvironment> {
    parse_operator(&std::fs::read_to_string(path)?)
}

/// JSON with one matrix row per line. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn operator_to_string(env: &OperatorEnvironment) -> String {
    let num = |x: f64| serde_json::to_string(&x).expect("finite");
    let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    let m = env.matrix();
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let entries: Vec<String> = m
                .row(r)
                .iter()
                .map(|z| format!("[{}, {}]", num(z.re), num(z.im)))
                .collect();
            format!("    [{}]", entries.join(", "))
        })
        .collect();
    format!(
        "{{\n  \"dim\": {},\n  \"matrix\": [\n{}\n  ],\n  \"null_indices\": [{}],\n  \"complement_indices\": [{}]\n}}\n",
        env.dim(),
        rows.join(",\n"),
        list(env.null_indices()),
        list(env.complement_indices())
    )
}

/// One sample of a kernel derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRow {
    pub s: f64,
    pub t: f64,
    pub deriv_s: usize,
    pub deriv_t: usize,
    pub value: C64,
}

/// Writes rows sorted by `(s, t)`, then by derivative order.
pub fn write_grid_csv(out: &mut impl Write, rows: &[GridRow]) -> Result<()> {
    let mut order: Vec<&GridRow> = rows.iter().collect();
    order.sort_by(|a, b| {
        a.s.total_cmp(&b.s)
            .then(a.t.total_cmp(&b.t))
            .then(a.deriv_s.cmp(&b.deriv_s))
            .then(a.deriv_t.cmp(&b.deriv_t))
    });
    let mut text = String::with_capacity(rows.len() * 96 + GRID_HEADER.len() + 1);
    text.push_str(GRID_HEADER);
    text.push('\n');
    for r in order {
        // 17 significant digits: one before the point, sixteen after
        writeln!(
            text,
            "{:.16e},{:.16e},{},{},{:.16e},{:.16e}",
            r.s, r.t, r.deriv_s, r.deriv_t, r.value.re, r.value.im
        )
        .expect("writing to a String");
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Parses a grid file written by [`write_grid_csv`].
pub fn read_grid_csv(text: &str) -> Result<Vec<GridRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == GRID_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("expected header `{GRID_HEADER}`"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            let bad = |column: usize, message: String| Error::Parse {
                line: n + 1,
                column,
                message,
            };
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 6 {
                return Err(bad(1, format!("expected 6 fields, found {}", fields.len())));
            }
            let num = |k: usize| -> Result<f64> { fields[k].parse().map_err(|e| bad(k + 1, format!("{e}"))) };
            let order = |k: usize| -> Result<usize> { fields[k].parse().map_err(|e| bad(k + 1, format!("{e}"))) };
            Ok(GridRow {
                s: num(0)?,
                t: num(1)?,
                deriv_s: order(2)?,
                deriv_t: order(3)?,
                value: C64::new(num(4)?, num(5)?),
            })
        })
        .collect()
}

/// `count` evenly spaced points on `[-extent, extent]`.
pub fn grid_points(count: usize, extent: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|k| -extent + 2.0 * extent * k as f64 / (count - 1) as f64)
            .collect(),
    }
}
