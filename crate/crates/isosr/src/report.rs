//! Evaluation outputs: metrics table, per-slice perceptual audit log, depth adjustments and
//! qualitative montages.

use std::fmt::Write as _;
use std::path::Path;

use isosr_core::eval::{view_name, DepthAdjustment, LpipsReport, MetricsRecord};
use isosr_core::{Image, Volume};

use crate::error::{IoError, Result};

pub const SSIM_NOTE: &str = "# ssim: uniform 7x7x7 window, C1=0.01^2, C2=0.03^2";

/// Per-slice perceptual distances of one evaluated volume.
#[derive(Debug, Clone)]
pub struct LpipsLog {
    pub subject: String,
    pub method: String,
    pub scale: f64,
    pub view: usize,
    pub report: LpipsReport,
}

#[derive(Debug, Clone)]
pub struct DepthLog {
    pub subject: String,
    pub method: String,
    pub adjustment: DepthAdjustment,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

pub fn metrics_table(records: &[MetricsRecord], backbone: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str(SSIM_NOTE);
    s.push('\n');
    match backbone {
        Some(name) => writeln!(s, "# lpips backbone: {name}").unwrap(),
        None => s.push_str("# lpips: no backbone available, reported as NA\n"),
    }
    s.push_str(MetricsRecord::HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.to_row());
        s.push('\n');
    }
    s
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord], backbone: Option<&str>) -> Result<()> {
    write_text(path, &metrics_table(records, backbone))
}

pub const LPIPS_HEADER: &str = "subject\tmethod\tscale\tview\tslice_axis\tslice_index\tlpips";

pub fn lpips_table(logs: &[LpipsLog]) -> String {
    let mut s = String::from(LPIPS_HEADER);
    s.push('\n');
    for log in logs {
        for d in &log.report.per_slice {
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}",
                log.subject,
                log.method,
                log.scale,
                view_name(log.view),
                view_name(d.axis),
                d.index,
                d.value
            )
            .unwrap();
        }
    }
    s
}

pub fn write_lpips(path: &Path, logs: &[LpipsLog]) -> Result<()> {
    write_text(path, &lpips_table(logs))
}

/// One row of the audit log.
#[derive(Debug, Clone, PartialEq)]
pub struct LpipsRow {
    pub subject: String,
    pub method: String,
    pub scale: f64,
    pub view: String,
    pub slice_axis: String,
    pub slice_index: usize,
    pub value: f64,
}

pub fn parse_lpips_table(text: &str) -> Result<Vec<LpipsRow>> {
    let mut rows = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let bad = || IoError::Config(format!("malformed lpips row {line:?}"));
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(bad());
        }
        rows.push(LpipsRow {
            subject: f[0].into(),
            method: f[1].into(),
            scale: f[2].parse().map_err(|_| bad())?,
            view: f[3].into(),
            slice_axis: f[4].into(),
            slice_index: f[5].parse().map_err(|_| bad())?,
            value: f[6].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

pub fn depth_table(logs: &[DepthLog]) -> String {
    let mut s = String::from("subject\tmethod\taxis\tfrom\tto\n");
    for l in logs {
        let a = l.adjustment;
        writeln!(s, "{}\t{}\t{}\t{}\t{}", l.subject, l.method, view_name(a.axis), a.from, a.to).unwrap();
    }
    s
}

pub fn write_depth_log(path: &Path, logs: &[DepthLog]) -> Result<()> {
    write_text(path, &depth_table(logs))
}

/// Central slice of `v` across `axis`, resized to `rows x cols` by nearest neighbour.
fn panel(v: &Volume, axis: usize, rows: usize, cols: usize) -> Result<Image<f32>> {
    let s = v.extract_slice(axis, v.dims()[axis] / 2)?;
    let (h, w) = s.shape();
    Ok(Image::from_fn(rows, cols, |r, c| s.get((r * h / rows).min(h - 1), (c * w / cols).min(w - 1))))
}

/// Side-by-side grayscale montage of the central slice through `axis` of each volume, left to
/// right in the given order, separated by a 2-pixel gap. Panels take the shape of the first
/// volume's slice.
pub fn montage(volumes: &[&Volume], axis: usize) -> Result<Image<f32>> {
    let first = volumes.first().ok_or_else(|| IoError::Config("montage needs at least one volume".into()))?;
    let (rows, cols) = first.extract_slice(axis, first.dims()[axis] / 2)?.shape();
    let panels = volumes.iter().map(|v| panel(v, axis, rows, cols)).collect::<Result<Vec<_>>>()?;
    let gap = 2;
    let width = panels.len() * cols + (panels.len() - 1) * gap;
    Ok(Image::from_fn(rows, width, |r, c| {
        let (p, q) = (c / (cols + gap), c % (cols + gap));
        if q < cols {
            panels[p].get(r, q)
        } else {
            1.0
        }
    }))
}

pub fn write_png(path: &Path, img: &Image<f32>) -> Result<()> {
    let (h, w) = img.shape();
    let bytes: Vec<u8> = img.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let buf = image::GrayImage::from_raw(w as u32, h as u32, bytes).expect("buffer matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::format(path, e.to_string()))
}
