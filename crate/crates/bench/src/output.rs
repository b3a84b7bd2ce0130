//! CSV, JSON and SVG emission. Every file is rendered in memory first and
//! then written through a temporary sibling that is renamed into place.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, SolverKind};
use crate::error::{BenchError, Result};
use crate::experiment::{RunRecord, Summary};

pub const CSV_HEADER: [&str; 8] = [
    "trial",
    "solver",
    "iter",
    "stage",
    "m_active",
    "pred_error",
    "cum_flops",
    "wall_seconds",
];

pub const SCHEMA_VERSION: u32 = 1;

/// Seventeen significant digits: enough to round-trip every `f64`.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| BenchError::Csv(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.solver.to_string(),
            r.iter.to_string(),
            r.stage.to_string(),
            r.m_active.to_string(),
            real(r.pred_error),
            r.cum_flops.to_string(),
            real(r.wall_seconds),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn parse_csv(bytes: &[u8]) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(bytes);
    let header = rd.headers().map_err(|e| BenchError::Csv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Csv(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(|e| BenchError::Csv(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |i: usize| BenchError::Csv(format!("row {}: bad {} '{}'", line + 1, CSV_HEADER[i], field(i)));
        out.push(RunRecord {
            trial: field(0).parse().map_err(|_| bad(0))?,
            solver: field(1).parse().map_err(|_| bad(1))?,
            iter: field(2).parse().map_err(|_| bad(2))?,
            stage: field(3).parse().map_err(|_| bad(3))?,
            m_active: field(4).parse().map_err(|_| bad(4))?,
            pred_error: field(5).parse().map_err(|_| bad(5))?,
            cum_flops: field(6).parse().map_err(|_| bad(6))?,
            wall_seconds: field(7).parse().map_err(|_| bad(7))?,
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    summary: &'a Summary,
}

pub fn render_json(cfg: &ExperimentConfig, summary: &Summary) -> Result<Vec<u8>> {
    let doc = JsonDoc {
        schema_version: SCHEMA_VERSION,
        config: cfg,
        summary,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| BenchError::Precondition(format!("JSON encoding failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

/// Per-solver mean of `log10 Δ_t` and wall time at each iteration, over the trials that reached it.
fn mean_curves(records: &[RunRecord]) -> BTreeMap<SolverKind, Vec<(f64, f64, f64)>> {
    let mut acc: BTreeMap<SolverKind, BTreeMap<usize, (f64, f64, usize)>> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.solver).or_default().entry(r.iter).or_insert((0.0, 0.0, 0));
        e.0 += r.pred_error.max(1e-300).log10();
        e.1 += r.wall_seconds;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(s, pts)| {
            let curve = pts
                .into_iter()
                .map(|(it, (l, w, k))| (it as f64, w / k as f64, l / k as f64))
                .collect();
            (s, curve)
        })
        .collect()
}

fn panel(svg: &mut String, x0: f64, title: &str, xlabel: &str, series: &[(SolverKind, Vec<(f64, f64)>)]) {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !(xmax > xmin) {
        xmax = xmin + 1.0;
    }
    if !(ymax > ymin) {
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| x0 + MARGIN + (x - xmin) / (xmax - xmin) * (PANEL_W - 2.0 * MARGIN);
    let sy = |y: f64| PANEL_H - MARGIN - (y - ymin) / (ymax - ymin) * (PANEL_H - 2.0 * MARGIN);
    let _ = writeln!(svg, r#"<g class="panel">"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#888"/>"##,
        x0 + MARGIN,
        MARGIN,
        PANEL_W - 2.0 * MARGIN,
        PANEL_H - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{:.1}" y="20" font-size="13">{title}</text>"#, x0 + MARGIN);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="11">{xlabel}</text>"#, x0 + PANEL_W / 2.0 - 20.0, PANEL_H - 15.0);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="10">{ymax:.1}</text>"#, x0 + 5.0, MARGIN + 4.0);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="10">{ymin:.1}</text>"#, x0 + 5.0, PANEL_H - MARGIN);
    for (k, (solver, p)) in series.iter().enumerate() {
        let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-solver="{solver}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            coords.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{}">{solver}</text>"#,
            x0 + PANEL_W - MARGIN - 60.0,
            MARGIN + 15.0 + 14.0 * k as f64,
            COLORS[k % COLORS.len()]
        );
    }
    let _ = writeln!(svg, "</g>");
}

/// Two panels, `log10 Δ_t` against iteration and against wall time, one polyline per solver each.
pub fn render_svg(records: &[RunRecord]) -> Result<Vec<u8>> {
    if records.is_empty() {
        return Err(BenchError::Precondition("no records to plot".into()));
    }
    let curves = mean_curves(records);
    let by_iter: Vec<_> = curves.iter().map(|(s, c)| (*s, c.iter().map(|p| (p.0, p.2)).collect())).collect();
    let by_time: Vec<_> = curves.iter().map(|(s, c)| (*s, c.iter().map(|p| (p.1, p.2)).collect())).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        2.0 * PANEL_W,
        PANEL_H,
        2.0 * PANEL_W,
        PANEL_H
    );
    panel(&mut svg, 0.0, "log10 prediction error", "iteration", &by_iter);
    panel(&mut svg, PANEL_W, "log10 prediction error", "wall seconds", &by_time);
    svg.push_str("</svg>\n");
    Ok(svg.into_bytes())
}

/// Write `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| BenchError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| BenchError::io(path, e))?;
    tmp.flush().map_err(|e| BenchError::io(path, e))?;
    tmp.persist(path).map_err(|e| BenchError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// Render all requested outputs, and only then write them.
///
/// An empty record list is a precondition error and writes nothing.
pub fn emit_outputs(records: &[RunRecord], cfg: &ExperimentConfig, summary: &Summary, paths: &OutputPaths) -> Result<()> {
    if records.is_empty() {
        return Err(BenchError::Precondition("refusing to write outputs for an empty record list".into()));
    }
    let mut files = Vec::new();
    if let Some(p) = &paths.csv {
        files.push((p, render_csv(records)?));
    }
    if let Some(p) = &paths.json {
        files.push((p, render_json(cfg, summary)?));
    }
    if let Some(p) = &paths.svg {
        files.push((p, render_svg(records)?));
    }
    for (p, bytes) in files {
        write_atomic(p, &bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunRecord> {
        let mut v = Vec::new();
        for (solver, scale) in [(SolverKind::SlseFrs, 0.1f64), (SolverKind::Pcg, 0.3)] {
            for it in 0..4 {
                v.push(RunRecord {
                    trial: 0,
                    solver,
                    iter: it,
                    stage: if it < 2 { 1 } else { 2 },
                    m_active: 64 << it,
                    pred_error: scale.powi(it as i32) * std::f64::consts::PI + 1e-17,
                    cum_flops: 1000 * it as u64,
                    wall_seconds: 1.0 / 3.0 * it as f64,
                });
            }
        }
        v
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let recs = sample();
        let bytes = render_csv(&recs).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("trial,solver,iter,stage,m_active,pred_error,cum_flops,wall_seconds\n"));
        assert_eq!(parse_csv(&bytes).unwrap(), recs);
    }

    #[test]
    fn csv_rejects_foreign_header() {
        assert!(parse_csv(b"a,b\n1,2\n").is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_solver_per_panel() {
        let svg = String::from_utf8(render_svg(&sample()).unwrap()).unwrap();
        for solver in ["slse-frs", "pcg"] {
            let lines: Vec<&str> = svg.lines().filter(|l| l.contains(&format!(r#"<polyline data-solver="{solver}""#))).collect();
            assert_eq!(lines.len(), 2);
            for l in lines {
                let pts = l.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
                assert!(pts.split(' ').count() >= 2);
            }
        }
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let paths = OutputPaths {
            csv: Some(dir.path().join("a.csv")),
            json: Some(dir.path().join("a.json")),
            svg: Some(dir.path().join("a.svg")),
        };
        let summary = Summary {
            solvers: vec![],
            trials: vec![],
        };
        let err = emit_outputs(&[], &ExperimentConfig::default(), &summary, &paths).unwrap_err();
        assert!(matches!(err, BenchError::Precondition(_)));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn unwritable_path_reports_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("missing").join("out.csv");
        let err = write_atomic(&target, b"x").unwrap_err();
        assert!(err.to_string().contains("out.csv"), "{err}");
    }

    #[test]
    fn json_is_versioned() {
        let summary = Summary {
            solvers: vec![],
            trials: vec![],
        };
        let v: serde_json::Value = serde_json::from_slice(&render_json(&ExperimentConfig::default(), &summary).unwrap()).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["config"]["n"], 16384);
        assert_eq!(v["config"]["orientation"], "growing");
    }
}
