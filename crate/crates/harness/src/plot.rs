//! Rate–distortion charts as SVG files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use semwire_core::metrics::RdRecord;

use crate::error::{HarnessError, Result};
use crate::stats::mean;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Psnr,
    MsSsim,
    Bytes,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Psnr, Axis::MsSsim, Axis::Bytes];

    fn file_name(self) -> &'static str {
        match self {
            Axis::Psnr => "rd_psnr.svg",
            Axis::MsSsim => "rd_ms_ssim.svg",
            Axis::Bytes => "rd_bytes.svg",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Axis::Psnr => "PSNR (dB)",
            Axis::MsSsim => "MS-SSIM",
            Axis::Bytes => "payload bytes",
        }
    }

    fn value(self, r: &RdRecord) -> Option<f64> {
        let v = match self {
            Axis::Psnr => r.psnr_db,
            Axis::MsSsim => r.ms_ssim,
            Axis::Bytes => Some(r.bytes as f64),
        };
        v.filter(|v| v.is_finite())
    }
}

/// Corpus-mean curve of one series: one point per quality level.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub series: String,
    pub points: Vec<(f64, f64)>,
}

/// Per series, per Q: the BPP and axis values of every image.
type Groups = BTreeMap<String, BTreeMap<Option<u8>, (Vec<f64>, Vec<f64>)>>;

/// Averages records over images per (series, Q) and returns curves sorted by BPP.
/// Records with no value on `axis` or non-positive BPP are left out.
pub fn curves(records: &[RdRecord], axis: Axis) -> Vec<Curve> {
    let mut groups = Groups::new();
    for r in records {
        let Some(v) = axis.value(r) else { continue };
        if r.bpp <= 0.0 {
            continue;
        }
        let entry = groups
            .entry(r.series())
            .or_default()
            .entry(r.q)
            .or_default();
        entry.0.push(r.bpp);
        entry.1.push(v);
    }
    groups
        .into_iter()
        .map(|(series, by_q)| {
            let mut points: Vec<(f64, f64)> = by_q
                .values()
                .filter_map(|(b, v)| Some((mean(b)?, mean(v)?)))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Curve { series, points }
        })
        .filter(|c| !c.points.is_empty())
        .collect()
}

fn padded(lo: f64, hi: f64, log: bool) -> (f64, f64) {
    if log {
        (lo / 1.25, hi * 1.25)
    } else if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let m = (hi - lo) * 0.05;
        (lo - m, hi + m)
    }
}

fn draw(path: &Path, axis: Axis, curves: &[Curve]) -> Result<()> {
    let plot_err =
        |e: &dyn std::fmt::Display| HarnessError::Plot(format!("{}: {e}", path.display()));
    let pts = curves.iter().flat_map(|c| c.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    if curves.is_empty() {
        root.titled(&format!("{}: no data", axis.label()), ("sans-serif", 20))
            .map_err(|e| plot_err(&e))?;
        return root.present().map_err(|e| plot_err(&e));
    }
    let (x0, x1) = padded(x0, x1, true);
    let (y0, y1) = padded(y0, y1, false);
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} vs BPP", axis.label()), ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d((x0..x1).log_scale(), y0..y1)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("bits per pixel (log scale)")
        .y_desc(axis.label())
        .draw()
        .map_err(|e| plot_err(&e))?;
    for (i, curve) in curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(
                curve.points.iter().copied(),
                color.stroke_width(2),
            ))
            .map_err(|e| plot_err(&e))?
            .label(curve.series.clone())
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2))
            });
        chart
            .draw_series(
                curve
                    .points
                    .iter()
                    .map(|&p| Circle::new(p, 3, color.filled())),
            )
            .map_err(|e| plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))
}

/// Writes `rd_psnr.svg`, `rd_ms_ssim.svg` and `rd_bytes.svg` to `out_dir`, one series per
/// mode/config, and returns their paths.
pub fn plot_rd(records: &[RdRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut written = Vec::new();
    for axis in Axis::ALL {
        let path = out_dir.join(axis.file_name());
        draw(&path, axis, &curves(records, axis))?;
        written.push(path);
    }
    Ok(written)
}
