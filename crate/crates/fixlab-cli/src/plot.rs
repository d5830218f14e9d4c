//! Minimal self-contained SVG rendering of a plan's result table:
//! one point series per (mode, topology) with +-2 standard-error bars and
//! the dashed prediction curve.

use crate::plan::PLAN_HEADER_V1;
use fixlab_core::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

struct Row {
    n: f64,
    series: String,
    scaled_mean: f64,
    scaled_std_error: f64,
    prediction: f64,
    mean: f64,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 25.0;
const MARGIN_T: f64 = 35.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 5] = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#f39c12"];

pub fn emit_plot(table: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(table)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let expected: Vec<&str> = PLAN_HEADER_V1.split(',').collect();
    let got: Vec<&str> = header.split(',').collect();
    if got != expected {
        let unknown: Vec<&str> = got.iter().filter(|c| !expected.contains(c)).copied().collect();
        return Err(Error::Parse(format!(
            "result table schema mismatch: unknown columns [{}]; expected exactly: {}",
            unknown.join(", "),
            PLAN_HEADER_V1
        )));
    }

    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != expected.len() {
            return Err(Error::Parse(format!("malformed row: {line}")));
        }
        if !f[12].is_empty() {
            continue; // failed grid point, recorded but not plottable
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{}' in row: {line}", f[i])))
        };
        rows.push(Row {
            n: num(0)?,
            series: format!("{} ({})", f[2], f[3]),
            mean: num(4)?,
            scaled_mean: num(8)?,
            scaled_std_error: num(9)?,
            prediction: num(10)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse("result table has no plottable rows".into()));
    }

    std::fs::write(out, render(&rows))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn render(rows: &[Row]) -> String {
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        x0 = x0.min(r.n);
        x1 = x1.max(r.n);
        y0 = y0.min(r.scaled_mean - 2.0 * r.scaled_std_error).min(r.prediction);
        y1 = y1.max(r.scaled_mean + 2.0 * r.scaled_std_error).max(r.prediction);
    }
    if x0 == x1 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let pad = 0.05 * (y1 - y0).max(1e-12);
    y0 -= pad;
    y1 += pad;

    let sx = move |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
    let sy = move |y: f64| HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

    // Series in first-appearance order, keyed for stable colors.
    let mut series: BTreeMap<&str, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        series.entry(&r.series).or_default().push(r);
    }

    let y_label = infer_y_label(rows);
    let mut svg = String::new();
    let _ = write!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<g font-family="sans-serif" font-size="13" fill="#222">"##
    );

    // Axes and ticks.
    let _ = write!(
        svg,
        r##"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="#222"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="#222"/>"##,
        l = MARGIN_L,
        r = WIDTH - MARGIN_R,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B,
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = write!(
            svg,
            r##"<line x1="{x}" y1="{b}" x2="{x}" y2="{b2}" stroke="#222"/><text x="{x}" y="{ty}" text-anchor="middle">{fx:.0}</text>"##,
            x = sx(fx),
            b = HEIGHT - MARGIN_B,
            b2 = HEIGHT - MARGIN_B + 5.0,
            ty = HEIGHT - MARGIN_B + 20.0,
        );
        let _ = write!(
            svg,
            r##"<line x1="{l}" y1="{y}" x2="{l2}" y2="{y}" stroke="#222"/><text x="{tx}" y="{ty}" text-anchor="end">{fy:.3}</text>"##,
            l = MARGIN_L,
            l2 = MARGIN_L - 5.0,
            y = sy(fy),
            tx = MARGIN_L - 9.0,
            ty = sy(fy) + 4.0,
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{x}" y="{y}" text-anchor="middle">number of sites N</text>"#,
        x = (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        y = HEIGHT - 12.0,
    );
    let _ = write!(
        svg,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">{y_label}</text>"#,
        y = (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
    );

    // Prediction curve: one dashed polyline over the sorted n grid.
    let mut curve: BTreeMap<u64, f64> = BTreeMap::new();
    for r in rows {
        curve.insert(r.n as u64, r.prediction);
    }
    let pts: Vec<String> =
        curve.iter().map(|(&n, &p)| format!("{:.2},{:.2}", sx(n as f64), sy(p))).collect();
    let _ = write!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#555" stroke-dasharray="6 4"/>"##,
        pts.join(" ")
    );

    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        for r in pts {
            let (x, y) = (sx(r.n), sy(r.scaled_mean));
            let (ylo, yhi) =
                (sy(r.scaled_mean - 2.0 * r.scaled_std_error), sy(r.scaled_mean + 2.0 * r.scaled_std_error));
            let _ = write!(
                svg,
                r##"<line x1="{x}" y1="{ylo}" x2="{x}" y2="{yhi}" stroke="{color}"/><line x1="{xl}" y1="{ylo}" x2="{xr}" y2="{ylo}" stroke="{color}"/><line x1="{xl}" y1="{yhi}" x2="{xr}" y2="{yhi}" stroke="{color}"/><circle cx="{x}" cy="{y}" r="3.2" fill="{color}"/>"##,
                xl = x - 3.0,
                xr = x + 3.0,
            );
        }
        let _ = write!(
            svg,
            r#"<circle cx="{x}" cy="{y}" r="3.2" fill="{color}"/><text x="{tx}" y="{ty}">{name}</text>"#,
            x = WIDTH - MARGIN_R - 150.0,
            y = MARGIN_T + 16.0 * idx as f64,
            tx = WIDTH - MARGIN_R - 140.0,
            ty = MARGIN_T + 16.0 * idx as f64 + 4.0,
        );
    }
    svg.push_str("</g></svg>\n");
    svg
}

/// The scaled column is either N*mean or sqrt(pi N)*mean; recover which
/// from the data so the axis label matches what was emitted.
fn infer_y_label(rows: &[Row]) -> &'static str {
    for r in rows {
        if r.mean != 0.0 {
            let factor = r.scaled_mean / r.mean;
            if (factor - r.n).abs() < 1e-6 * r.n {
                return "N x mean fixation probability";
            }
            return "sqrt(pi N) x mean fixation probability";
        }
    }
    "scaled mean fixation probability"
}
