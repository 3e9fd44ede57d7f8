//! Static SVG rendering of figure data. Acceptance never reads these files.

use std::path::Path;

use plotters::prelude::*;

use crate::{Error, Result};

const SIZE: (u32, u32) = (800, 560);
/// Lower clamp for log-scale axes.
const LOG_FLOOR: f64 = 1e-16;

fn draw_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    }
}

/// One named polyline.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series], log_y: bool) -> ((f64, f64), (f64, f64)) {
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        let y = if log_y { y.max(LOG_FLOOR) } else { y };
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let x = padded(x0, x1);
    let y = if log_y {
        if y0.is_finite() && y1 > y0 {
            (y0 / 2.0, y1 * 2.0)
        } else {
            (LOG_FLOOR, 1.0)
        }
    } else {
        padded(y0, y1)
    };
    (x, y)
}

/// Line chart with one legend entry per series.
pub fn line_chart(
    path: &Path,
    title: &str,
    x_desc: &str,
    y_desc: &str,
    series: &[Series],
    log_y: bool,
) -> Result<()> {
    let ((x0, x1), (y0, y1)) = bounds(series, log_y);
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| draw_err(path, e))?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60);
    macro_rules! body {
        ($chart:expr, $map:expr) => {{
            let mut chart = $chart;
            chart
                .configure_mesh()
                .x_desc(x_desc)
                .y_desc(y_desc)
                .draw()
                .map_err(|e| draw_err(path, e))?;
            for (i, s) in series.iter().enumerate() {
                let color = Palette99::pick(i).to_rgba();
                let pts: Vec<(f64, f64)> = s
                    .points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .map(|&(x, y)| (x, $map(y)))
                    .collect();
                chart
                    .draw_series(LineSeries::new(pts, color.stroke_width(2)))
                    .map_err(|e| draw_err(path, e))?
                    .label(s.label.clone())
                    .legend(move |(x, y)| {
                        PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
                    });
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| draw_err(path, e))?;
        }};
    }
    if log_y {
        let chart = builder
            .build_cartesian_2d(x0..x1, (y0..y1).log_scale())
            .map_err(|e| draw_err(path, e))?;
        body!(chart, |y: f64| y.max(LOG_FLOOR));
    } else {
        let chart = builder
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(|e| draw_err(path, e))?;
        body!(chart, |y: f64| y);
    }
    root.present().map_err(|e| draw_err(path, e))
}

/// Grey-scale heat map of `z[row][col]` over column coordinates `xs` and row
/// coordinates `ys`, clamped to `[lo, hi]` (white = `hi`).
#[allow(clippy::too_many_arguments)]
pub fn heatmap(
    path: &Path,
    title: &str,
    x_desc: &str,
    y_desc: &str,
    xs: &[f64],
    ys: &[f64],
    z: &[Vec<f64>],
    lo: f64,
    hi: f64,
) -> Result<()> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidArgument("empty heat map".into()));
    }
    let step = |v: &[f64]| {
        if v.len() > 1 {
            (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
        } else {
            1.0
        }
    };
    let (dx, dy) = (step(xs), step(ys));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| draw_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(
            xs[0] - dx / 2.0..xs[xs.len() - 1] + dx / 2.0,
            ys[0] - dy / 2.0..ys[ys.len() - 1] + dy / 2.0,
        )
        .map_err(|e| draw_err(path, e))?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(|e| draw_err(path, e))?;
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let cells = ys.iter().zip(z).flat_map(|(&y, row)| {
        xs.iter().zip(row).map(move |(&x, &v)| {
            let t = ((v - lo) / span).clamp(0.0, 1.0);
            let g = (255.0 * t).round() as u8;
            Rectangle::new(
                [(x - dx / 2.0, y - dy / 2.0), (x + dx / 2.0, y + dy / 2.0)],
                RGBColor(g, g, g).filled(),
            )
        })
    });
    chart.draw_series(cells).map_err(|e| draw_err(path, e))?;
    root.present().map_err(|e| draw_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_render_to_svg() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.svg");
        let s = vec![Series {
            label: "x".into(),
            points: vec![(0.0, 1e-3), (1.0, 1e-6), (2.0, 0.0)],
        }];
        line_chart(&p, "t", "x", "y", &s, true).unwrap();
        line_chart(&p, "t", "x", "y", &s, false).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("<svg"));
        let h = dir.path().join("h.svg");
        heatmap(
            &h,
            "t",
            "n",
            "m",
            &[0.0, 1.0],
            &[0.0, 1.0, 2.0],
            &[vec![0.0, -10.0], vec![-80.0, -40.0], vec![-5.0, 0.0]],
            -80.0,
            0.0,
        )
        .unwrap();
        assert!(std::fs::read_to_string(&h).unwrap().contains("<rect"));
    }
}
