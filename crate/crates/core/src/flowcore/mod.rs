//! Grid types shared by every other module, plus the sampling, pooling and
//! resizing primitives they are built on.
//!
//! Conventions: `(0, 0)` is the centre of the top-left pixel, `x` runs along
//! the width and `y` along the height. Bilinear reads outside the grid see
//! zeros.

mod grid;
mod ops;

pub use grid::{FeatureMap, FlowField, GridCoords, PixelMask};
pub use ops::{avg_pool2, bilinear_sample, scale_flow, scale_mask};

pub(crate) use ops::{pool_plane, pooled_len, sample_plane, AxisPos};
