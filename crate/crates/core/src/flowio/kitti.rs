use std::io::Cursor;
use std::path::Path;

use super::{read_bytes, write_bytes, FlowFileRecord, FlowFormat, FormatError, FormatResult};
use crate::flowcore::{FlowField, PixelMask};

/// Stored value of a zero displacement.
pub const KITTI_OFFSET: f64 = 32768.0;
/// Quantization steps per pixel of displacement.
pub const KITTI_SCALE: f64 = 64.0;

fn quantize(x: f64) -> u16 {
    (x * KITTI_SCALE + KITTI_OFFSET).round().clamp(0.0, 65535.0) as u16
}

fn dequantize(q: u16) -> f64 {
    (q as f64 - KITTI_OFFSET) / KITTI_SCALE
}

/// Encodes a flow as a 16-bit RGB PNG: `R, G` carry `u, v`, `B` the
/// validity bit. Invalid pixels are written as `(0, 0, 0)`. Displacements
/// beyond ±512 px saturate.
pub fn encode_kitti_png(flow: &FlowField, valid: Option<&PixelMask>) -> FormatResult<Vec<u8>> {
    if let Some(m) = valid {
        crate::error::check_dims("validity mask", flow.dims(), m.dims())?;
    }
    let (h, w) = flow.dims();
    let mut raw = Vec::with_capacity(h * w * 6);
    for i in 0..flow.len() {
        let ok = valid.is_none_or(|m| m.flags()[i]);
        let px = if ok {
            [quantize(flow.u()[i]), quantize(flow.v()[i]), 1]
        } else {
            [0, 0, 0]
        };
        for c in px {
            raw.extend_from_slice(&c.to_be_bytes());
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc.write_header().map_err(|e| FormatError::Png(e.to_string()))?;
        writer
            .write_image_data(&raw)
            .map_err(|e| FormatError::Png(e.to_string()))?;
        writer.finish().map_err(|e| FormatError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes a KITTI flow PNG. Only non-interlaced 16-bit RGB is accepted.
/// Invalid pixels decode to zero flow.
pub fn decode_kitti_png(bytes: &[u8]) -> FormatResult<FlowFileRecord> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(|e| FormatError::Png(e.to_string()))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Sixteen || info.color_type != png::ColorType::Rgb {
        return Err(FormatError::UnsupportedPng(format!(
            "{:?} at {:?} bits; KITTI flow needs 16-bit RGB",
            info.color_type, info.bit_depth
        )));
    }
    if info.interlaced {
        return Err(FormatError::UnsupportedPng("interlaced image".into()));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| FormatError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    reader
        .next_frame(&mut buf)
        .map_err(|e| FormatError::Png(e.to_string()))?;
    let n = h * w;
    let (mut u, mut v, mut flags) = (vec![0.0; n], vec![0.0; n], vec![false; n]);
    for (i, px) in buf.chunks_exact(6).take(n).enumerate() {
        let r = u16::from_be_bytes([px[0], px[1]]);
        let g = u16::from_be_bytes([px[2], px[3]]);
        let b = u16::from_be_bytes([px[4], px[5]]);
        if b != 0 {
            u[i] = dequantize(r);
            v[i] = dequantize(g);
            flags[i] = true;
        }
    }
    let flow = FlowField::new(h, w, u, v)?;
    let valid = PixelMask::new(h, w, flags)?;
    Ok(FlowFileRecord::new(flow, Some(valid), FlowFormat::KittiPng)?)
}

pub fn read_kitti_png(path: impl AsRef<Path>) -> FormatResult<FlowFileRecord> {
    decode_kitti_png(&read_bytes(path.as_ref())?)
}

pub fn write_kitti_png(path: impl AsRef<Path>, flow: &FlowField, valid: Option<&PixelMask>) -> FormatResult<()> {
    write_bytes(path.as_ref(), &encode_kitti_png(flow, valid)?)
}
