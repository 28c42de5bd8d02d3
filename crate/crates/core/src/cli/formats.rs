//! On-disk data formats: CSV sample tables and binary PGM/PPM images.
//!
//! PGM (P5) is the frame input format: 8-bit grayscale, parseable anywhere
//! without an image library, ingested with intensities scaled as v/255.
//! PPM (P6) is used only for rendered mode images, which need a second
//! color channel for negative intensities.

use std::fs;
use std::path::Path;

use nalgebra::DVector;

use crate::embedding::OutputSequence;
use crate::error::{Error, Result};

/// Write-temp-then-rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One grayscale frame with row-major pixels in [0, 1].
#[derive(Debug, Clone)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

/// Reads a CSV of samples, one per row with `m` columns. A first row that
/// does not parse as numbers is treated as a header and skipped.
pub fn read_csv(path: &Path) -> Result<OutputSequence> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;

    let mut samples: Vec<DVector<f64>> = Vec::new();
    let mut m = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if row == 0 => continue, // header row
            Err(e) => {
                return Err(Error::Format(format!(
                    "{}: row {} is not numeric: {e}",
                    path.display(),
                    row + 1
                )))
            }
        };
        if samples.is_empty() {
            m = values.len();
        } else if values.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{}: row {} has {} columns, expected {m}",
                path.display(),
                row + 1,
                values.len()
            )));
        }
        samples.push(DVector::from_vec(values));
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: samples.len(),
        });
    }
    OutputSequence::new(samples, None)
}

/// Writes samples as CSV, one row per sample, full round-trip precision.
pub fn write_csv(seq: &OutputSequence, path: &Path) -> Result<()> {
    let mut out = String::new();
    for y in seq.samples() {
        let row: Vec<String> = y.iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Reads every `.pgm` file in a directory in lexicographic filename order
/// and flattens each frame row-major to an m-vector scaled to [0, 1].
pub fn read_frames(dir: &Path) -> Result<(OutputSequence, (usize, usize))> {
    let mut names: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .map(|ext| ext.eq_ignore_ascii_case("pgm"))
                .unwrap_or(false)
        })
        .collect();
    names.sort();
    if names.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: names.len(),
        });
    }
    let mut samples = Vec::with_capacity(names.len());
    let mut dims: Option<(usize, usize)> = None;
    for path in &names {
        let frame = read_pgm(path)?;
        match dims {
            None => dims = Some((frame.width, frame.height)),
            Some((w, h)) if (frame.width, frame.height) != (w, h) => {
                return Err(Error::DimensionMismatch(format!(
                    "{}: frame is {}x{}, expected {}x{}",
                    path.display(),
                    frame.width,
                    frame.height,
                    w,
                    h
                )))
            }
            _ => {}
        }
        samples.push(DVector::from_vec(frame.pixels));
    }
    let dims = dims.expect("at least two frames");
    Ok((OutputSequence::new(samples, None)?, dims))
}

/// Writes samples in [0, 1] as zero-padded numbered 8-bit PGM frames.
pub fn write_frames(seq: &OutputSequence, dir: &Path, width: usize, height: usize) -> Result<()> {
    if width * height != seq.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} frames do not hold {}-dimensional samples",
            width,
            height,
            seq.dim()
        )));
    }
    fs::create_dir_all(dir)?;
    for (k, y) in seq.samples().iter().enumerate() {
        let bytes: Vec<u8> = y
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let path = dir.join(format!("frame_{k:04}.pgm"));
        write_pgm(&path, width, height, &bytes)?;
    }
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<Frame> {
    let data = fs::read(path)?;
    let mut pos = 0usize;

    let magic = header_token(&data, &mut pos, path)?;
    if magic != b"P5" {
        return Err(Error::Format(format!(
            "{}: not a binary PGM (P5) file",
            path.display()
        )));
    }
    let width = header_number(&data, &mut pos, path)?;
    let height = header_number(&data, &mut pos, path)?;
    let maxval = header_number(&data, &mut pos, path)?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "{}: degenerate image dimensions {width}x{height}",
            path.display()
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!(
            "{}: only 8-bit PGM supported, got maxval {maxval}",
            path.display()
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let count = width * height;
    if data.len() < pos + count {
        return Err(Error::Format(format!(
            "{}: truncated raster, expected {count} bytes",
            path.display()
        )));
    }
    let pixels = data[pos..pos + count]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Ok(Frame {
        width,
        height,
        pixels,
    })
}

pub fn write_pgm(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    debug_assert_eq!(bytes.len(), width * height);
    let mut data = format!("P5\n{width} {height}\n255\n").into_bytes();
    data.extend_from_slice(bytes);
    atomic_write(path, &data)
}

/// Writes a binary PPM (P6) image from interleaved RGB bytes.
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    debug_assert_eq!(rgb.len(), 3 * width * height);
    let mut data = format!("P6\n{width} {height}\n255\n").into_bytes();
    data.extend_from_slice(rgb);
    atomic_write(path, &data)
}

fn header_token<'a>(data: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a [u8]> {
    // skip whitespace and '#' comments
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format(format!(
            "{}: truncated image header",
            path.display()
        )));
    }
    Ok(&data[start..*pos])
}

fn header_number(data: &[u8], pos: &mut usize, path: &Path) -> Result<usize> {
    let tok = header_token(data, pos, path)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::Format(format!("{}: malformed image header", path.display())))
}
