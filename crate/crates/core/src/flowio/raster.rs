use std::path::Path;

use image::{ColorType, DynamicImage};

use super::{FormatError, FormatResult};
use crate::flowcore::FeatureMap;

/// Single-channel intensity map in `[0, 1]` from an 8/16-bit gray or RGB image.
pub fn luminance_from_image(img: &DynamicImage) -> FormatResult<FeatureMap> {
    match img.color() {
        ColorType::L8 | ColorType::L16 | ColorType::Rgb8 | ColorType::Rgb16 => {}
        other => {
            return Err(FormatError::Image(format!(
                "unsupported pixel format {other:?}; expected 8/16-bit gray or RGB"
            )))
        }
    }
    let luma = img.to_luma32f();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    let data = luma.into_raw().into_iter().map(f64::from).collect();
    Ok(FeatureMap::new(1, h, w, data)?)
}

/// Loads an image file (PNG or PNM) as luminance.
pub fn load_luminance(path: impl AsRef<Path>) -> FormatResult<FeatureMap> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(source) => FormatError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => FormatError::Image(format!("{}: {other}", path.display())),
    })?;
    luminance_from_image(&img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Rgb, RgbImage, Rgba, RgbaImage};

    #[test]
    fn gray_values_scale_to_unit_range() {
        let img = GrayImage::from_fn(3, 2, |x, y| image::Luma([(x * 100 + y * 20) as u8]));
        let m = luminance_from_image(&DynamicImage::ImageLuma8(img)).unwrap();
        assert_eq!(m.dims(), (2, 3));
        assert_eq!(m.get(0, 0, 0), 0.0);
        assert!((m.get(0, 1, 2) - 220.0 / 255.0).abs() < 1e-6);
    }

    #[test]
    fn rgb_grey_pixels_keep_their_level() {
        let img = RgbImage::from_pixel(2, 2, Rgb([51, 51, 51]));
        let m = luminance_from_image(&DynamicImage::ImageRgb8(img)).unwrap();
        assert!(m.data().iter().all(|v| (v - 0.2).abs() < 1e-2));
    }

    #[test]
    fn alpha_images_are_rejected() {
        let img = RgbaImage::from_pixel(2, 2, Rgba([1, 2, 3, 4]));
        assert!(luminance_from_image(&DynamicImage::ImageRgba8(img)).is_err());
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.pgm");
        GrayImage::from_pixel(4, 2, image::Luma([255])).save(&p).unwrap();
        let m = load_luminance(&p).unwrap();
        assert_eq!(m.dims(), (2, 4));
        assert!(m.data().iter().all(|&v| v == 1.0));
        assert!(matches!(
            load_luminance(dir.path().join("none.png")),
            Err(FormatError::Io { .. })
        ));
    }
}
