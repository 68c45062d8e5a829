//! Curve CSV, JSON and SVG writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// `t,sigma2` rows.
pub fn write_curve<W: Write>(out: W, grid: &[f64], values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "sigma2"])?;
    for (t, v) in grid.iter().zip(values) {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_file(path: &Path, grid: &[f64], values: &[f64]) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_curve(std::io::BufWriter::new(f), grid, values)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Serializes rows with a header taken from the struct fields.
pub fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const WIDTH: f64 = 800.0;
const PANEL: f64 = 220.0;
const MARGIN: f64 = 50.0;

fn polyline(svg: &mut String, xs: &[f64], ys: &[f64], top: f64, step: bool) {
    let (lo, hi) = ys
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x_of = |x: f64| MARGIN + x * (WIDTH - 2.0 * MARGIN);
    let y_of = |y: f64| top + PANEL - (y - lo) / span * PANEL;
    let mut pts = String::new();
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if step && i > 0 {
            let _ = write!(pts, "{:.2},{:.2} ", x_of(x), y_of(ys[i - 1]));
        }
        let _ = write!(pts, "{:.2},{:.2} ", x_of(x), y_of(y));
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN}" y="{top}" width="{}" height="{PANEL}" fill="none" stroke="#999"/>"##,
        WIDTH - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#, pts.trim_end());
    let _ = writeln!(
        svg,
        r#"<text x="5" y="{:.0}" font-size="10">{hi:.3e}</text><text x="5" y="{:.0}" font-size="10">{lo:.3e}</text>"#,
        top + 10.0,
        top + PANEL
    );
}

/// Price panel above the volatility panel, both against `[0, 1]`.
pub fn plot_svg(prices: &[f64], grid: &[f64], values: &[f64]) -> String {
    let stride = prices.len().div_ceil(2000).max(1);
    let n = prices.len().max(1) as f64;
    let (px, py): (Vec<f64>, Vec<f64>) = prices
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, p)| ((i + 1) as f64 / n, *p))
        .unzip();
    let height = 2.0 * PANEL + 3.0 * MARGIN;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif">"#
    );
    svg.push('\n');
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{:.0}" font-size="12">price</text>"#, MARGIN - 8.0);
    polyline(&mut svg, &px, &py, MARGIN, false);
    let top = 2.0 * MARGIN + PANEL;
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{:.0}" font-size="12">spot volatility</text>"#, top - 8.0);
    polyline(&mut svg, grid, values, top, true);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_layout() {
        let mut buf = Vec::new();
        write_curve(&mut buf, &[0.0, 0.5], &[1e-5, 2.5e-5]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,sigma2\n0,0.00001\n0.5,0.000025\n");
    }

    #[test]
    fn svg_has_two_panels() {
        let svg = plot_svg(&[110.0, 110.1, 109.9], &[0.0, 0.5], &[1e-5, 2e-5]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
