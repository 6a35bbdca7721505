use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use plotters::prelude::*;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column '{name}' (have {})", self.header.join(", ")))
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .with_context(|| format!("{} is empty", path.display()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .with_context(|| format!("{} line {}", path.display(), i + 2))?;
        if row.len() != header.len() {
            bail!("{} line {}: expected {} fields", path.display(), i + 2, header.len());
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

/// Line chart of `ys` against `x`; on a log axis non-positive values are
/// skipped.
pub fn line_chart(table: &Table, x: &str, ys: &[String], log_y: bool, title: &str, out: &Path) -> Result<()> {
    let xi = table.column(x)?;
    let yis = ys.iter().map(|y| table.column(y)).collect::<Result<Vec<_>>>()?;
    let keep = |v: f64| v.is_finite() && (!log_y || v > 0.0);
    let series: Vec<Vec<(f64, f64)>> = yis
        .iter()
        .map(|&yi| {
            table
                .rows
                .iter()
                .map(|r| (r[xi], r[yi]))
                .filter(|&(a, b)| a.is_finite() && keep(b))
                .collect()
        })
        .collect();
    let (x0, x1) = bounds(series.iter().flatten().map(|p| p.0)).context("nothing to plot")?;
    let (y0, y1) = bounds(series.iter().flatten().map(|p| p.1)).context("nothing to plot")?;

    let root = SVGBackend::new(out, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(70);
    let colors = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];
    if log_y {
        let mut chart = builder.build_cartesian_2d(x0..x1, (y0..y1).log_scale())?;
        chart.configure_mesh().x_desc(x).draw()?;
        for (k, (pts, name)) in series.into_iter().zip(ys).enumerate() {
            let color = colors[k % colors.len()];
            chart
                .draw_series(LineSeries::new(pts, color))?
                .label(name.as_str())
                .legend(move |(a, b)| PathElement::new(vec![(a, b), (a + 20, b)], color));
        }
        chart.configure_series_labels().border_style(BLACK).draw()?;
    } else {
        let mut chart = builder.build_cartesian_2d(x0..x1, y0..y1)?;
        chart.configure_mesh().x_desc(x).draw()?;
        for (k, (pts, name)) in series.into_iter().zip(ys).enumerate() {
            let color = colors[k % colors.len()];
            chart
                .draw_series(LineSeries::new(pts, color))?
                .label(name.as_str())
                .legend(move |(a, b)| PathElement::new(vec![(a, b), (a + 20, b)], color));
        }
        chart.configure_series_labels().border_style(BLACK).draw()?;
    }
    root.present()?;
    Ok(())
}
