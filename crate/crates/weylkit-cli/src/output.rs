//! Row-oriented result tables with a stable schema: complex values split
//! into `.re`/`.im` column pairs, matrices flattened row-major, a meta
//! header carrying tolerances and versions.

use std::io::Write;

use nalgebra::Complex;
use serde::Serialize;

use crate::CliError;

type C64 = Complex<f64>;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub rtol: f64,
    pub atol: f64,
    pub limit_rtol: f64,
    pub max_horizon: f64,
    pub volterra_tol: f64,
    /// Matrix dimension: every row carries `m*m` complex value columns.
    pub m: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Row {
    pub experiment: String,
    /// Computation route that produced the values.
    pub method: String,
    pub x0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Coefficient index for series rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_im: Option<f64>,
    /// Row-major matrix entries (or a single scalar in values[0]),
    /// serialized as `[re, im]` pairs.
    #[serde(serialize_with = "ser_complex_vec")]
    pub values: Vec<C64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl Row {
    pub fn with_z(mut self, z: C64) -> Row {
        self.z_re = Some(z.re);
        self.z_im = Some(z.im);
        self
    }
}

fn ser_complex_vec<S>(v: &[C64], s: S) -> Result<S::Ok, S::Error>
where
    S: serde::Serializer,
{
    s.collect_seq(v.iter().map(|c| [c.re, c.im]))
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

/// Write rows as CSV with `#`-prefixed meta lines before the header.
pub fn write_csv<W: Write>(mut out: W, meta: &Meta, rows: &[Row]) -> Result<(), CliError> {
    writeln!(out, "# tool={} version={}", meta.tool, meta.version)?;
    writeln!(
        out,
        "# experiment={} m={} seed={} rtol={:e} atol={:e} limit_rtol={:e} max_horizon={} volterra_tol={:e}",
        meta.experiment, meta.m, meta.seed, meta.rtol, meta.atol, meta.limit_rtol,
        meta.max_horizon, meta.volterra_tol
    )?;
    let mut w = csv::Writer::from_writer(out);
    let ncols = meta.m * meta.m;
    let mut header: Vec<String> = vec![
        "experiment".into(),
        "method".into(),
        "x0".into(),
        "x".into(),
        "k".into(),
        "z.re".into(),
        "z.im".into(),
    ];
    for i in 0..meta.m {
        for j in 0..meta.m {
            header.push(format!("value_{i}{j}.re"));
            header.push(format!("value_{i}{j}.im"));
        }
    }
    header.extend(
        ["error_estimate", "iterations", "residual", "defect", "note"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;

    for row in rows {
        let mut rec: Vec<String> = vec![
            row.experiment.clone(),
            row.method.clone(),
            format!("{:.17e}", row.x0),
            fmt_opt_f64(row.x),
            row.k.map(|k| k.to_string()).unwrap_or_default(),
            fmt_opt_f64(row.z_re),
            fmt_opt_f64(row.z_im),
        ];
        for i in 0..ncols {
            match row.values.get(i) {
                Some(v) => {
                    rec.push(format!("{:.17e}", v.re));
                    rec.push(format!("{:.17e}", v.im));
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        rec.push(fmt_opt_f64(row.error_estimate));
        rec.push(row.iterations.map(|i| i.to_string()).unwrap_or_default());
        rec.push(fmt_opt_f64(row.residual));
        rec.push(fmt_opt_f64(row.defect));
        rec.push(row.note.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    meta: &'a Meta,
    rows: &'a [Row],
}

/// Write rows as a single JSON document `{ "meta": ..., "rows": [...] }`.
pub fn write_json<W: Write>(out: W, meta: &Meta, rows: &[Row]) -> Result<(), CliError> {
    serde_json::to_writer_pretty(out, &JsonDoc { meta, rows })
        .map_err(|e| CliError::numerical(format!("json encoding failed: {e}")))
}
