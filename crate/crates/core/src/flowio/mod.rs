//! File formats, visualization and training-set mixing.

mod color;
mod flo;
mod kitti;
mod mix;
mod raster;

use std::path::PathBuf;

use thiserror::Error;

use crate::flowcore::{FlowField, PixelMask};

pub use color::{flow_to_color, wheel_color, wheel_position, write_ppm, RgbImage, WHEEL_LEN};
pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};
pub use kitti::{decode_kitti_png, encode_kitti_png, read_kitti_png, write_kitti_png, KITTI_OFFSET, KITTI_SCALE};
pub use mix::{mix_sampler, viper_frame_filter, MixSampler, MixSpec};
pub use raster::{load_luminance, luminance_from_image};

/// Codec and file errors. Each malformed-input case has its own variant.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad .flo magic {found} (expected {expected})", expected = FLO_MAGIC)]
    BadMagic { found: f32 },
    #[error("truncated payload: need {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} unexpected trailing bytes")]
    TrailingBytes { extra: usize },
    #[error("non-positive dimensions {width}x{height}")]
    InvalidDims { width: i64, height: i64 },
    #[error("unsupported PNG profile: {0}")]
    UnsupportedPng(String),
    #[error("PNG codec: {0}")]
    Png(String),
    #[error("image decoding: {0}")]
    Image(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
}

pub type FormatResult<T> = std::result::Result<T, FormatError>;

/// Where a decoded flow came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowFormat {
    Flo,
    KittiPng,
}

/// A decoded flow file with its optional validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowFileRecord {
    pub flow: FlowField,
    pub valid: Option<PixelMask>,
    pub format: FlowFormat,
}

impl FlowFileRecord {
    pub fn new(flow: FlowField, valid: Option<PixelMask>, format: FlowFormat) -> crate::Result<Self> {
        if let Some(m) = &valid {
            crate::error::check_dims("validity mask", flow.dims(), m.dims())?;
        }
        Ok(Self { flow, valid, format })
    }

    /// Validity mask, all-true when the format carries none.
    pub fn mask(&self) -> PixelMask {
        match &self.valid {
            Some(m) => m.clone(),
            None => PixelMask::all(self.flow.height(), self.flow.width()).expect("non-empty flow"),
        }
    }
}

/// Reads a flow by extension: `.png` as KITTI, anything else as `.flo`.
pub fn read_flow_file(path: impl AsRef<std::path::Path>) -> FormatResult<FlowFileRecord> {
    let path = path.as_ref();
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        read_kitti_png(path)
    } else {
        let flow = read_flo(path)?;
        Ok(FlowFileRecord::new(flow, None, FlowFormat::Flo)?)
    }
}

pub(crate) fn read_bytes(path: &std::path::Path) -> FormatResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_bytes(path: &std::path::Path, bytes: &[u8]) -> FormatResult<()> {
    std::fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}
