// SPDX-License-Identifier: Apache-2.0
//! Waveform CSV, SVG line plots, scientific-notation JSON and run manifests.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::builders::CellConfig;
use crate::sim::{SolverConfig, Waveform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExportError {
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("no signal named '{missing}'; available: {}", .available.join(", "))]
    UnknownSignal {
        missing: String,
        available: Vec<String>,
    },
    #[error("nothing to plot")]
    Empty,
}

/// Waveform as CSV: header `time_s,<names...>`, nine significant digits.
pub fn waveform_to_csv(w: &Waveform) -> String {
    let mut out = String::from("time_s");
    for n in &w.names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (k, t) in w.time.iter().enumerate() {
        let _ = write!(out, "{t:.8e}");
        for series in &w.data {
            let _ = write!(out, ",{:.8e}", series[k]);
        }
        out.push('\n');
    }
    out
}

pub fn waveform_from_csv(text: &str) -> Result<Waveform, ExportError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ExportError::Csv {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"time_s") {
        return Err(ExportError::Csv {
            line: 1,
            message: "first column must be time_s".into(),
        });
    }
    let mut w = Waveform::new(cols[1..].iter().map(|s| s.to_string()).collect());
    let mut row = Vec::with_capacity(cols.len());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        row.clear();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| ExportError::Csv {
                line: i + 1,
                message: format!("'{field}' is not a number"),
            })?;
            row.push(v);
        }
        if row.len() != cols.len() {
            return Err(ExportError::Csv {
                line: i + 1,
                message: format!("expected {} fields, found {}", cols.len(), row.len()),
            });
        }
        w.push(row[0], &row[1..]);
    }
    Ok(w)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// SVG 1.1 line plot of the named signals against time.
pub fn plot_svg(w: &Waveform, signals: &[String], title: &str) -> Result<String, ExportError> {
    if signals.is_empty() || w.is_empty() {
        return Err(ExportError::Empty);
    }
    let series: Vec<&[f64]> = signals
        .iter()
        .map(|s| {
            w.signal(s).ok_or_else(|| ExportError::UnknownSignal {
                missing: s.clone(),
                available: w.names.clone(),
            })
        })
        .collect::<Result<_, _>>()?;

    let (width, height) = (800.0, 420.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 50.0);
    let pw = width - left - right;
    let ph = height - top - bottom;
    let (t0, t1) = (w.time[0], w.end_time());
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let mut lo = series.iter().flat_map(|s| s.iter()).cloned().fold(f64::INFINITY, f64::min);
    let mut hi = series.iter().flat_map(|s| s.iter()).cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let x = |t: f64| left + pw * (t - t0) / t_span;
    let y = |v: f64| top + ph * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (tx, vy) = (left + pw * f, top + ph * (1.0 - f));
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{:.3e}</text>"#,
            top + ph + 16.0,
            t0 + t_span * f
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{:.3e}</text>"#,
            left - 6.0,
            vy + 3.0,
            lo + (hi - lo) * f
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">time (s)</text>"#,
        left + pw / 2.0,
        height - 10.0
    );
    for (i, (name, data)) in signals.iter().zip(&series).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for (t, v) in w.time.iter().zip(data.iter()) {
            let _ = write!(pts, "{:.2},{:.2} ", x(*t), y(*v));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Pretty printer that writes every float in scientific notation.
struct SciFormatter(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident ( $($arg:ident : $ty:ty),* )),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for SciFormatter {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:e}")
        } else {
            w.write_all(b"null")
        }
    }
}

/// Indented JSON with floats in scientific notation and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

/// Sidecar describing how an output file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub solver_config: Option<SolverConfig>,
    pub cell_config: Option<CellConfig>,
    pub outputs: Vec<String>,
    pub config_fingerprint: String,
    pub wall_clock_s: f64,
}

impl RunManifest {
    /// Sidecar path for `output`.
    pub fn sidecar_path(output: &std::path::Path) -> std::path::PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}
