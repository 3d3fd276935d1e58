use std::path::Path;

use plotters::prelude::*;

use super::CliError;
use crate::control::IterationRecord;

fn plot_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("plot: {e}"))
}

fn bounds(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-12 * hi.abs().max(1.0));
    (lo - pad, hi + pad)
}

fn line(
    path: &Path,
    caption: &str,
    x_label: &str,
    y_label: &str,
    points: Vec<(f64, f64)>,
) -> Result<(), CliError> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().map(|p| p.1));
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(points, &BLUE))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// `log10(loss)` against iteration.
pub fn loss_curve(path: &Path, records: &[IterationRecord]) -> Result<(), CliError> {
    let points = records
        .iter()
        .filter(|r| r.loss > 0.0)
        .map(|r| (r.iter as f64, r.loss.log10()))
        .collect();
    line(path, "optimization", "iteration", "log10 loss", points)
}

/// Column `column` of trajectory rows against time.
pub fn time_series(
    path: &Path,
    label: &str,
    rows: &[Vec<f64>],
    column: usize,
) -> Result<(), CliError> {
    let points = rows.iter().map(|r| (r[0], r[column])).collect();
    line(path, label, "t", label, points)
}
