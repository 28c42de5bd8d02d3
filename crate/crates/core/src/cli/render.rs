//! Rendering of identified modes: images and temporal-trend tables.

use std::path::Path;

use crate::error::Result;
use crate::sysid::ModeSet;

use super::formats::write_ppm;

/// Writes one image pair per mode (`mode_XX_real.ppm`, `mode_XX_imag.ppm`).
/// Each mode is scaled by its largest absolute entry; positive intensities
/// render white, negative intensities render red.
pub fn render_mode_images(
    modes: &ModeSet,
    width: usize,
    height: usize,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for k in 0..modes.count() {
        let col = modes.spatial.column(k);
        let scale = col
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let re: Vec<f64> = col.iter().map(|z| z.re / scale).collect();
        let im: Vec<f64> = col.iter().map(|z| z.im / scale).collect();
        write_intensity_image(&re, width, height, &dir.join(format!("mode_{:02}_real.ppm", k + 1)))?;
        write_intensity_image(&im, width, height, &dir.join(format!("mode_{:02}_imag.ppm", k + 1)))?;
    }
    Ok(())
}

fn write_intensity_image(values: &[f64], width: usize, height: usize, path: &Path) -> Result<()> {
    let mut rgb = Vec::with_capacity(3 * values.len());
    for &v in values {
        let level = (v.abs().clamp(0.0, 1.0) * 255.0).round() as u8;
        if v >= 0.0 {
            rgb.extend_from_slice(&[level, level, level]);
        } else {
            rgb.extend_from_slice(&[level, 0, 0]);
        }
    }
    write_ppm(path, width, height, &rgb)
}

/// Writes the temporal trends `lambda_k^{t/dt}` sampled at each frame time.
/// Columns: mode index, |lambda|, arg(lambda), t, trend real part, trend
/// imaginary part; one row per (mode, frame).
pub fn write_trends_csv(modes: &ModeSet, frames: usize, path: &Path) -> Result<()> {
    let mut out = String::from("mode,abs_lambda,arg_lambda,t,trend_re,trend_im\n");
    for k in 0..modes.count() {
        let lam = modes.temporal[k];
        let modulus = lam.norm();
        let arg = lam.im.atan2(lam.re);
        let mut trend = nalgebra::Complex::new(1.0, 0.0);
        for j in 0..frames {
            let t = j as f64 * modes.dt;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k + 1,
                modulus,
                arg,
                t,
                trend.re,
                trend.im
            ));
            trend *= lam;
        }
    }
    super::formats::atomic_write(path, out.as_bytes())
}
