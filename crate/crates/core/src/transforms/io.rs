//! File formats: PGM images, curve panels and coefficient tables.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};

use crate::error::{domain, Error, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Grayscale PGM (P2 or P5, 8 or 16 bit) as row-major reals in [0, 1].
/// Returns (width, height, pixels).
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm).map_err(|e| io_err(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        other => return Err(io_err(path, format!("not a grayscale image ({:?})", other.color()))),
    };
    Ok((w, h, pixels))
}

/// Write row-major values in [0, 1] as an 8-bit binary PGM.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[f64]) -> Result<()> {
    if pixels.len() != width * height {
        return domain(format!("expected {} pixels, got {}", width * height, pixels.len()));
    }
    let raw: Vec<u8> = pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let buf: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(width as u32, height as u32, raw).ok_or_else(|| Error::Io("bad image size".into()))?;
    buf.save_with_format(path, ImageFormat::Pnm).map_err(|e| io_err(path, e))
}

/// A panel of curves on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePanel {
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
}

fn parse_row(rec: &csv::StringRecord, path: &Path, line: usize) -> Result<Vec<f64>> {
    rec.iter().map(|f| f.trim().parse::<f64>().map_err(|e| io_err(path, format!("line {line}: {e}")))).collect()
}

/// CSV with the grid on the first row and one subject per following row.
pub fn read_curve_panel(path: &Path) -> Result<CurvePanel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        rows.push(parse_row(&rec, path, k + 1)?);
    }
    let mut it = rows.into_iter();
    let grid = it.next().ok_or_else(|| io_err(path, "empty file"))?;
    let curves: Vec<Vec<f64>> = it.collect();
    if curves.iter().any(|c| c.len() != grid.len()) {
        return Err(io_err(path, "every row must have as many values as the grid"));
    }
    Ok(CurvePanel { grid, curves })
}

/// Rows of equal-length vectors under a header naming the coordinates
/// (`prefix0`, `prefix1`, ...). Reals use 17 significant digits.
pub fn write_vectors_csv(path: &Path, prefix: &str, rows: &[Vec<f64>]) -> Result<()> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return domain("ragged rows");
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record((0..dim).map(|k| format!("{prefix}{k}"))).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:.16e}"))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
