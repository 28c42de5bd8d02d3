//! Data ingestion for the batch front end.

use std::path::Path;

use crate::embedding::OutputSequence;
use crate::error::Result;

use super::formats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One sample per row, m columns, optional header.
    Csv,
    /// Directory of equally-sized 8-bit grayscale PGM frames, lexicographic
    /// order, each flattened row-major and scaled to [0, 1].
    Frames,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub seq: OutputSequence,
    /// (width, height) when the input was image frames.
    pub frame_dims: Option<(usize, usize)>,
}

pub fn ingest(path: &Path, format: InputFormat) -> Result<Ingested> {
    match format {
        InputFormat::Csv => Ok(Ingested {
            seq: formats::read_csv(path)?,
            frame_dims: None,
        }),
        InputFormat::Frames => {
            let (seq, dims) = formats::read_frames(path)?;
            Ok(Ingested {
                seq,
                frame_dims: Some(dims),
            })
        }
    }
}
