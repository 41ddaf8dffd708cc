use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::runner::{ProbeRow, RateResult};
use crate::error::Result;

pub const CSV_HEADER: &str = "n,metric_mean,metric_stderr,samples_total,oracle_calls";
pub const PROBE_HEADER: &str = "eta,m,bias_sup,variance";

pub fn rates_csv(result: &RateResult) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in &result.rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.n, r.metric_mean, r.metric_stderr, r.samples_total, r.oracle_calls
        )
        .unwrap();
    }
    s
}

pub fn probe_csv(rows: &[ProbeRow]) -> String {
    let mut s = format!("{PROBE_HEADER}\n");
    for r in rows {
        writeln!(s, "{},{},{},{}", r.eta, r.m, r.bias_sup, r.variance).unwrap();
    }
    s
}

/// `{slope, slope_stderr, config_echo}`.
pub fn summary_json(result: &RateResult) -> Value {
    let echo: Map<String, Value> = result
        .config
        .pairs()
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    json!({
        "slope": result.slope,
        "slope_stderr": result.slope_stderr,
        "config_echo": echo,
    })
}

/// `path` with its extension replaced.
pub fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Writes the CSV to `path` and the summary JSON next to it.
pub fn write_results(result: &RateResult, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, rates_csv(result))?;
    let json = serde_json::to_string_pretty(&summary_json(result))?;
    std::fs::write(sibling(path, "json"), json + "\n")?;
    Ok(())
}

pub fn write_probe(rows: &[ProbeRow], path: &Path) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, probe_csv(rows))?;
    Ok(())
}

/// Log-log line chart of mean metric against `N`.
pub fn rates_svg(result: &RateResult) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter(|r| r.metric_mean > 0.0)
        .map(|r| ((r.n as f64).log10(), r.metric_mean.log10()))
        .collect();
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(|p| p.0);
    let (y0, y1) = span(|p| p.1);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>",
        h - pad,
        w - pad,
        h - pad,
        h - pad
    )
    .unwrap();
    let line: Vec<String> = pts
        .iter()
        .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
        .collect();
    writeln!(
        s,
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>",
        line.join(" ")
    )
    .unwrap();
    for (p, r) in pts
        .iter()
        .zip(result.rows.iter().filter(|r| r.metric_mean > 0.0))
    {
        writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>",
            sx(p.0),
            sy(p.1)
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            sx(p.0),
            h - pad + 16.0,
            r.n
        )
        .unwrap();
    }
    let title = match result.slope {
        Some(slope) => format!("{} vs N (log-log), slope {slope:.3}", result.config.metric),
        None => format!("{} vs N (log-log)", result.config.metric),
    };
    writeln!(
        s,
        "<text x=\"{}\" y=\"30\" font-size=\"14\" text-anchor=\"middle\">{title}</text>",
        w / 2.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(result: &RateResult, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, rates_svg(result))?;
    Ok(())
}
