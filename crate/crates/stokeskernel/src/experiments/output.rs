//! Report emission: CSV tables, plain-text and key-value summaries, and
//! static SVG sweep charts. All output is byte-deterministic for a fixed
//! report.

use super::{ExperimentReport, PlotSeries};
use crate::error::Result;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Writes `<name>.csv`, `<name>.summary.txt`, `<name>.summary.kv`, and (with
/// `plot` set and sweep series present) `<name>.svg` into `out_dir`. Returns
/// the paths written.
pub fn emit_outputs(report: &ExperimentReport, out_dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let csv_path = out_dir.join(format!("{}.csv", report.name));
    std::fs::write(&csv_path, render_csv(report))?;
    written.push(csv_path);

    let txt_path = out_dir.join(format!("{}.summary.txt", report.name));
    std::fs::write(&txt_path, render_text(report))?;
    written.push(txt_path);

    let kv_path = out_dir.join(format!("{}.summary.kv", report.name));
    std::fs::write(&kv_path, render_kv(report))?;
    written.push(kv_path);

    if plot && !report.series.is_empty() {
        let svg_path = out_dir.join(format!("{}.svg", report.name));
        std::fs::write(&svg_path, render_svg(&report.name, &report.series))?;
        written.push(svg_path);
    }
    Ok(written)
}

fn render_csv(report: &ExperimentReport) -> String {
    let mut s = String::new();
    s.push_str(&report.columns.join(","));
    s.push('\n');
    for row in &report.rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn render_text(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", report.name);
    let _ = writeln!(s, "pass: {}", report.pass);
    if let Some(fit) = &report.fit {
        let _ = writeln!(
            s,
            "fit: slope = {:.6e}, intercept = {:.6e}, r_squared = {:.8}",
            fit.slope, fit.intercept, fit.r_squared
        );
    }
    for line in &report.summary {
        let _ = writeln!(s, "- {line}");
    }
    let _ = writeln!(s, "rows: {}", report.rows.len());
    let _ = writeln!(s, "\nconfig:");
    for line in report.config_echo.lines() {
        let _ = writeln!(s, "  {line}");
    }
    s
}

fn render_kv(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment = {}", report.name);
    let _ = writeln!(s, "pass = {}", report.pass);
    let _ = writeln!(s, "rows = {}", report.rows.len());
    if let Some(fit) = &report.fit {
        let _ = writeln!(s, "fit_slope = {}", super::fmt_f(fit.slope));
        let _ = writeln!(s, "fit_intercept = {}", super::fmt_f(fit.intercept));
        let _ = writeln!(s, "fit_r_squared = {}", super::fmt_f(fit.r_squared));
    }
    for (k, v) in &report.kv {
        let _ = writeln!(s, "{k} = {v}");
    }
    for line in report.config_echo.lines() {
        let _ = writeln!(s, "config_{line}");
    }
    s
}

const SVG_W: f64 = 760.0;
const SVG_H: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 5] = ["#1f6fb2", "#c23b22", "#2e8540", "#8436a8", "#b58900"];

fn render_svg(title: &str, series: &[PlotSeries]) -> String {
    let log_x = series[0].log_x;
    let tx = |v: f64| if log_x { v.max(1e-300).ln() } else { v };
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for (&x, &y) in s.xs.iter().zip(s.ys.iter()) {
            if !y.is_finite() {
                continue;
            }
            xmin = xmin.min(tx(x));
            xmax = xmax.max(tx(x));
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if xmax <= xmin {
        xmax = xmin + 1.0;
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let ypad = 0.06 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;
    let px = |x: f64| MARGIN_L + (tx(x) - xmin) / (xmax - xmin) * (SVG_W - MARGIN_L - MARGIN_R);
    let py = |y: f64| SVG_H - MARGIN_B - (y - ymin) / (ymax - ymin) * (SVG_H - MARGIN_T - MARGIN_B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="monospace" font-size="15">{}</text>"#,
        MARGIN_L, title
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        MARGIN_L,
        SVG_H - MARGIN_B,
        SVG_W - MARGIN_R,
        SVG_H - MARGIN_B
    );
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        MARGIN_L,
        MARGIN_T,
        MARGIN_L,
        SVG_H - MARGIN_B
    );
    // ticks
    for k in 0..=4 {
        let xv = xmin + (xmax - xmin) * k as f64 / 4.0;
        let raw = if log_x { xv.exp() } else { xv };
        let xp = MARGIN_L + (xv - xmin) / (xmax - xmin) * (SVG_W - MARGIN_L - MARGIN_R);
        let _ = writeln!(
            s,
            r#"<line x1="{xp}" y1="{}" x2="{xp}" y2="{}" stroke="black"/>"#,
            SVG_H - MARGIN_B,
            SVG_H - MARGIN_B + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp}" y="{}" font-family="monospace" font-size="11" text-anchor="middle">{raw:.3e}</text>"#,
            SVG_H - MARGIN_B + 18.0
        );
        let yv = ymin + (ymax - ymin) * k as f64 / 4.0;
        let yp = py(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{yp}" x2="{}" y2="{yp}" stroke="black"/>"#,
            MARGIN_L - 5.0,
            MARGIN_L
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="end">{yv:.3e}</text>"#,
            MARGIN_L - 8.0,
            yp + 4.0
        );
    }
    // axis labels
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="12" text-anchor="middle">{}{}</text>"#,
        (MARGIN_L + SVG_W - MARGIN_R) / 2.0,
        SVG_H - 12.0,
        series[0].x_label,
        if log_x { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="monospace" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        (MARGIN_T + SVG_H - MARGIN_B) / 2.0,
        (MARGIN_T + SVG_H - MARGIN_B) / 2.0,
        series[0].y_label
    );
    // series
    for (idx, ser) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut pts = String::new();
        for (&x, &y) in ser.xs.iter().zip(ser.ys.iter()) {
            if !y.is_finite() {
                continue;
            }
            let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            pts.trim_end()
        );
        let ly = MARGIN_T + 16.0 * idx as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            SVG_W - MARGIN_R + 10.0,
            SVG_W - MARGIN_R + 34.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="11">{}</text>"#,
            SVG_W - MARGIN_R + 40.0,
            ly + 4.0,
            ser.name
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KernelConfig;
    use crate::experiments::{ExperimentReport, PlotSeries};

    fn toy_report() -> ExperimentReport {
        let cfg = KernelConfig::default();
        let mut rep = ExperimentReport::new("toy", &["a", "b"], &cfg, 7);
        rep.push_row(vec!["1".into(), super::super::fmt_f(0.5)]);
        rep.series.push(PlotSeries {
            name: "s".into(),
            xs: vec![1.0, 2.0, 3.0],
            ys: vec![0.1, 0.4, 0.2],
            log_x: false,
            x_label: "x".into(),
            y_label: "y".into(),
        });
        rep
    }

    #[test]
    fn empty_report_is_header_only() {
        let cfg = KernelConfig::default();
        let rep = ExperimentReport::new("empty", &["a", "b"], &cfg, 0);
        assert_eq!(render_csv(&rep), "a,b\n");
    }

    #[test]
    fn outputs_are_deterministic_and_complete() {
        let dir = tempfile::tempdir().unwrap();
        let rep = toy_report();
        let w1 = emit_outputs(&rep, dir.path(), true).unwrap();
        assert_eq!(w1.len(), 4);
        let bytes1: Vec<Vec<u8>> = w1.iter().map(|p| std::fs::read(p).unwrap()).collect();
        let w2 = emit_outputs(&rep, dir.path(), true).unwrap();
        let bytes2: Vec<Vec<u8>> = w2.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(bytes1, bytes2);
        let csv = String::from_utf8(bytes1[0].clone()).unwrap();
        assert!(csv.ends_with('\n'));
        let svg = String::from_utf8(bytes1[3].clone()).unwrap();
        assert!(svg.contains("polyline") && svg.contains("</svg>"));
    }
}
