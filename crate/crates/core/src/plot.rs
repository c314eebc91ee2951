//! Minimal self-contained SVG plots of result tables.
//!
//! Plotting reads a table and writes a separate SVG file; it never touches
//! numeric artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Columns `x`, `mean`.
    Line,
    /// Columns `x`, `mean`, `lo`, `hi`.
    Band,
    /// Columns `x` and `y` (or `mean`).
    Scatter,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    name: String,
    x: Vec<f64>,
    y: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn group(table: &Table, kind: PlotKind) -> Result<Vec<Series>> {
    let x = table.numeric("x")?;
    let y = match kind {
        PlotKind::Scatter => match table.numeric("y") {
            Ok(y) => y,
            Err(_) => table.numeric("mean").map_err(|_| Error::Schema("y".into()))?,
        },
        _ => table.numeric("mean")?,
    };
    let (lo, hi) = if kind == PlotKind::Band {
        (table.numeric("lo")?, table.numeric("hi")?)
    } else {
        (vec![f64::NAN; x.len()], vec![f64::NAN; x.len()])
    };
    let names = table.text("series").unwrap_or_else(|_| vec![String::new(); x.len()]);
    let mut out: Vec<Series> = Vec::new();
    for i in 0..x.len() {
        let s = match out.iter_mut().position(|s| s.name == names[i]) {
            Some(j) => &mut out[j],
            None => {
                out.push(Series {
                    name: names[i].clone(),
                    x: vec![],
                    y: vec![],
                    lo: vec![],
                    hi: vec![],
                });
                out.last_mut().expect("just pushed")
            }
        };
        s.x.push(x[i]);
        s.y.push(y[i]);
        s.lo.push(lo[i]);
        s.hi.push(hi[i]);
    }
    Ok(out)
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn path_data(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    let mut pen_down = false;
    for (px, py) in points {
        if !(px.is_finite() && py.is_finite()) {
            pen_down = false;
            continue;
        }
        let _ = write!(d, "{}{px:.2},{py:.2} ", if pen_down { "L" } else { "M" });
        pen_down = true;
    }
    d.trim_end().to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a table as an SVG document.
pub fn render_svg(table: &Table, kind: PlotKind, title: &str) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::domain("table has no rows to plot"));
    }
    let series = group(table, kind)?;
    let (x0, x1) = range(series.iter().flat_map(|s| s.x.iter().copied()))
        .ok_or_else(|| Error::domain("no finite x values to plot"))?;
    let (y0, y1) = range(series.iter().flat_map(|s| s.y.iter().chain(&s.lo).chain(&s.hi).copied()))
        .ok_or_else(|| Error::domain("no finite y values to plot"))?;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{m},{t} L{m},{b} L{r},{b}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for (v, anchor, px, py) in [
        (x0, "start", MARGIN, HEIGHT - MARGIN + 16.0),
        (x1, "end", WIDTH - MARGIN, HEIGHT - MARGIN + 16.0),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{px}" y="{py}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{v:.4e}</text>"#
        );
    }
    for (v, py) in [(y0, HEIGHT - MARGIN), (y1, MARGIN + 4.0)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{py}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.4e}</text>"#,
            MARGIN - 4.0
        );
    }

    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut order: Vec<usize> = (0..s.x.len()).collect();
        if kind != PlotKind::Scatter {
            order.sort_by(|&a, &b| s.x[a].total_cmp(&s.x[b]));
        }
        if kind == PlotKind::Band {
            let upper = order.iter().map(|&j| (sx(s.x[j]), sy(s.hi[j])));
            let lower = order.iter().rev().map(|&j| (sx(s.x[j]), sy(s.lo[j])));
            let d = path_data(upper.chain(lower));
            let _ = writeln!(svg, r#"<path d="{d} Z" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#);
        }
        match kind {
            PlotKind::Scatter => {
                for &j in &order {
                    if s.x[j].is_finite() && s.y[j].is_finite() {
                        let _ = writeln!(
                            svg,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{colour}"/>"#,
                            sx(s.x[j]),
                            sy(s.y[j])
                        );
                    }
                }
            }
            _ => {
                let d = path_data(order.iter().map(|&j| (sx(s.x[j]), sy(s.y[j]))));
                let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#);
            }
        }
        if !s.name.is_empty() {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" fill="{colour}">{}</text>"#,
                WIDTH - MARGIN + 4.0 - 150.0,
                MARGIN + 12.0 * (i as f64 + 1.0),
                escape(&s.name)
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Plot a CSV table to SVG. Writes next to the table (same stem, `.svg`)
/// unless `out` is given. Nothing is written on error.
pub fn emit_plot(table_path: &Path, kind: PlotKind, out: Option<&Path>) -> Result<PathBuf> {
    let table = Table::read(table_path)?;
    let title = table_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let svg = render_svg(&table, kind, &title)?;
    let target = out.map(Path::to_path_buf).unwrap_or_else(|| table_path.with_extension("svg"));
    fs::write(&target, svg)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{fmt_f64, schema};

    fn band_table() -> Table {
        let mut t = Table::new(schema::FUNCTION_BAND);
        for i in 0..5 {
            let x = i as f64 / 4.0;
            t.push(vec![
                "a".into(),
                fmt_f64(x),
                fmt_f64(x),
                fmt_f64(x * x),
                fmt_f64(x * x - 0.1),
                fmt_f64(x * x + 0.1),
            ]);
        }
        t
    }

    #[test]
    fn band_plot_structure_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("band.csv");
        band_table().write(&p).unwrap();
        let out = emit_plot(&p, PlotKind::Band, None).unwrap();
        assert_eq!(out, dir.path().join("band.svg"));
        let first = fs::read_to_string(&out).unwrap();
        assert!(first.matches("<path").count() >= 3);
        assert!(first.starts_with("<svg"));
        emit_plot(&p, PlotKind::Band, None).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), first);
    }

    #[test]
    fn schema_and_empty_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        Table::new(schema::FUNCTION_BAND).write(&p).unwrap();
        assert!(emit_plot(&p, PlotKind::Line, None).is_err());
        assert!(!dir.path().join("t.svg").exists());

        fs::write(&p, "x,mean\n0,1\n1,2\n").unwrap();
        match emit_plot(&p, PlotKind::Band, None) {
            Err(Error::Schema(c)) => assert_eq!(c, "lo"),
            other => panic!("{other:?}"),
        }
        assert!(!dir.path().join("t.svg").exists());
        fs::write(&p, "x,z\n0,1\n").unwrap();
        assert!(matches!(emit_plot(&p, PlotKind::Scatter, None), Err(Error::Schema(c)) if c == "y"));
        fs::write(&p, "x,y\n0,1\n0.5,0\n").unwrap();
        let svg = fs::read_to_string(emit_plot(&p, PlotKind::Scatter, None).unwrap()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
