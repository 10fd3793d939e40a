use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::ImageEncoder;

pub use image::RgbImage;

use super::{FormatError, FormatResult};
use crate::flowcore::FlowField;

const SEGMENTS: [usize; 6] = [15, 6, 4, 11, 13, 6];

/// Number of hues on the color wheel.
pub const WHEEL_LEN: usize = 55;

/// The Middlebury wheel: red → yellow → green → cyan → blue → magenta.
fn wheel() -> [[f64; 3]; WHEEL_LEN] {
    let mut out = [[0.0; 3]; WHEEL_LEN];
    let mut k = 0;
    // each segment ramps one channel while another stays saturated
    let ramps: [(usize, usize, bool); 6] = [
        (0, 1, true),
        (1, 0, false),
        (1, 2, true),
        (2, 1, false),
        (2, 0, true),
        (0, 2, false),
    ];
    for (&n, &(full, ramp, rising)) in SEGMENTS.iter().zip(&ramps) {
        for i in 0..n {
            let step = (255.0 * i as f64 / n as f64).floor();
            out[k][full] = 255.0;
            out[k][ramp] = if rising { step } else { 255.0 - step };
            k += 1;
        }
    }
    out
}

/// Continuous position of the direction of `(u, v)` on the wheel, in
/// `[0, WHEEL_LEN − 1]`. `(1, 0)` sits at 0 and positions grow
/// counter-clockwise in image coordinates (y down).
pub fn wheel_position(u: f64, v: f64) -> f64 {
    let a = (-v).atan2(-u) / std::f64::consts::PI;
    (a + 1.0) / 2.0 * (WHEEL_LEN - 1) as f64
}

/// Color of one vector, with saturation `‖(u, v)‖ / max_norm`. Vectors
/// longer than `max_norm` are darkened instead.
pub fn wheel_color(u: f64, v: f64, max_norm: f64) -> [u8; 3] {
    let table = wheel();
    let rad = u.hypot(v) / max_norm;
    let fk = wheel_position(u, v);
    let k0 = fk.floor() as usize;
    let k1 = if k0 + 1 == WHEEL_LEN { 0 } else { k0 + 1 };
    let f = fk - k0 as f64;
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let col = (1.0 - f) * table[k0][c] / 255.0 + f * table[k1][c] / 255.0;
        let col = if rad <= 1.0 {
            1.0 - rad * (1.0 - col)
        } else {
            col * 0.75
        };
        *slot = (255.0 * col).floor() as u8;
    }
    out
}

/// Renders a flow field with the standard color coding. Without
/// `max_norm` the largest vector of the field is fully saturated; zero flow
/// is white.
pub fn flow_to_color(flow: &FlowField, max_norm: Option<f64>) -> RgbImage {
    let max = max_norm.unwrap_or_else(|| {
        flow.u()
            .iter()
            .zip(flow.v())
            .map(|(u, v)| u.hypot(*v))
            .fold(0.0, f64::max)
    });
    let max = if max > 0.0 && max.is_finite() { max } else { 1.0 };
    let (h, w) = flow.dims();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (u, v) = flow.get(y as usize, x as usize);
        image::Rgb(wheel_color(u, v, max))
    })
}

/// Writes a binary (P6) portable pixmap.
pub fn write_ppm(path: impl AsRef<Path>, img: &RgbImage) -> FormatResult<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)
        .map_err(|e| FormatError::Image(e.to_string()))
}
