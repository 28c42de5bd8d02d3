//! Persistence of identified models as `model.json`.
//!
//! Schema version 1. All numeric fields round-trip bit-exactly: values are
//! serialized in shortest round-trip decimal form, and writes are atomic
//! (temp file then rename).

use std::fs;
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowrank::LowRankMap;
use crate::sysid::{Identification, StateSpaceModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpatialModeEntry {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Serialized model: system matrices, factored map, modes, and residuals.
/// Matrix fields are flat row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub schema_version: u32,
    pub m: usize,
    /// Order of the saved model (the effective rank of the factorization).
    pub n: usize,
    pub s: usize,
    pub dt: f64,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub eigenvalues: Vec<ComplexEntry>,
    pub spatial_modes: Vec<SpatialModeEntry>,
    pub residual_frobenius: f64,
    pub relative_residual: f64,
    /// Temporal mean subtracted from the data before identification, when
    /// centering was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn from_row_major(data: &[f64], rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Format(format!(
            "{what}: expected {rows}x{cols} = {} entries, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

impl ModelFile {
    pub fn from_identification(id: &Identification, center: Option<Vec<f64>>) -> Self {
        let spatial_modes = (0..id.modes.count())
            .map(|k| {
                let col = id.modes.spatial.column(k);
                SpatialModeEntry {
                    re: col.iter().map(|z| z.re).collect(),
                    im: col.iter().map(|z| z.im).collect(),
                }
            })
            .collect();
        ModelFile {
            schema_version: SCHEMA_VERSION,
            m: id.model.m,
            n: id.model.n,
            s: id.model.s,
            dt: id.modes.dt,
            a: row_major(&id.model.a),
            c: row_major(&id.model.c),
            p: row_major(&id.map.p),
            q: row_major(&id.map.q),
            eigenvalues: id
                .modes
                .temporal
                .iter()
                .map(|z| ComplexEntry { re: z.re, im: z.im })
                .collect(),
            spatial_modes,
            residual_frobenius: id.map.residual_frobenius,
            relative_residual: id.relative_residual,
            center,
        }
    }

    /// Atomic write: serialize to a sibling temp file, then rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("serialize model: {e}")))?;
        super::formats::atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: file.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<()> {
        let (m, n, s) = (self.m, self.n, self.s);
        from_row_major(&self.a, n, n, "A")?;
        from_row_major(&self.c, m, n, "C")?;
        from_row_major(&self.p, m * s, n, "P")?;
        from_row_major(&self.q, m * s, n, "Q")?;
        if self.eigenvalues.len() != n {
            return Err(Error::Format(format!(
                "expected {n} eigenvalues, got {}",
                self.eigenvalues.len()
            )));
        }
        if self.spatial_modes.len() != n
            || self
                .spatial_modes
                .iter()
                .any(|mode| mode.re.len() != m || mode.im.len() != m)
        {
            return Err(Error::Format("spatial modes do not match m and n".into()));
        }
        if let Some(center) = &self.center {
            if center.len() != m {
                return Err(Error::Format(format!(
                    "center has {} entries, expected {m}",
                    center.len()
                )));
            }
        }
        Ok(())
    }

    pub fn state_space(&self) -> Result<StateSpaceModel> {
        StateSpaceModel::new(
            from_row_major(&self.a, self.n, self.n, "A")?,
            from_row_major(&self.c, self.m, self.n, "C")?,
            self.s,
        )
    }

    pub fn low_rank_map(&self) -> Result<LowRankMap> {
        Ok(LowRankMap {
            p: from_row_major(&self.p, self.m * self.s, self.n, "P")?,
            q: from_row_major(&self.q, self.m * self.s, self.n, "Q")?,
            rank: self.n,
            requested_n: self.n,
            residual_frobenius: self.residual_frobenius,
            degenerate_truncation: false,
            m: self.m,
            s: self.s,
        })
    }

    pub fn eigenvalues_complex(&self) -> Vec<Complex<f64>> {
        self.eigenvalues
            .iter()
            .map(|z| Complex::new(z.re, z.im))
            .collect()
    }

    pub fn center_vector(&self) -> Option<DVector<f64>> {
        self.center.as_ref().map(|c| DVector::from_vec(c.clone()))
    }
}
