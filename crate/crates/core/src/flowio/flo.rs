use std::path::Path;

use super::{read_bytes, write_bytes, FormatError, FormatResult};
use crate::flowcore::FlowField;

/// Tag at the start of every `.flo` file; its bytes spell "PIEH".
pub const FLO_MAGIC: f32 = 202021.25;

const HEADER: usize = 12;

fn le_i32(b: &[u8]) -> i32 {
    i32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

fn le_f32(b: &[u8]) -> f32 {
    f32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

/// Serializes a field. Values are narrowed to `f32`.
pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * flow.len());
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        out.extend_from_slice(&(*u as f32).to_le_bytes());
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8]) -> FormatResult<FlowField> {
    if bytes.len() < HEADER {
        return Err(FormatError::Truncated {
            expected: HEADER,
            found: bytes.len(),
        });
    }
    let magic = le_f32(&bytes[0..4]);
    if magic != FLO_MAGIC {
        return Err(FormatError::BadMagic { found: magic });
    }
    let (w, h) = (le_i32(&bytes[4..8]), le_i32(&bytes[8..12]));
    if w <= 0 || h <= 0 {
        return Err(FormatError::InvalidDims {
            width: w.into(),
            height: h.into(),
        });
    }
    let (w, h) = (w as usize, h as usize);
    let expected = (h * w)
        .checked_mul(8)
        .and_then(|n| n.checked_add(HEADER))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FormatError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let payload = &bytes[HEADER..];
    let u = payload.chunks_exact(8).map(|c| le_f32(&c[0..4]) as f64).collect();
    let v = payload.chunks_exact(8).map(|c| le_f32(&c[4..8]) as f64).collect();
    Ok(FlowField::new(h, w, u, v)?)
}

pub fn read_flo(path: impl AsRef<Path>) -> FormatResult<FlowField> {
    decode_flo(&read_bytes(path.as_ref())?)
}

pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> FormatResult<()> {
    write_bytes(path.as_ref(), &encode_flo(flow))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_pixel_file_is_twenty_bytes() {
        let bytes = encode_flo(&FlowField::zeros(1, 1).unwrap());
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[0..4], b"PIEH");
    }

    #[test]
    fn layout_is_width_then_height_then_interleaved() {
        let f = FlowField::new(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![-1.0; 6]).unwrap();
        let b = encode_flo(&f);
        assert_eq!(le_i32(&b[4..8]), 3);
        assert_eq!(le_i32(&b[8..12]), 2);
        assert_eq!(le_f32(&b[12 + 8 * 4..]), 4.0);
        assert_eq!(le_f32(&b[12 + 8 * 4 + 4..]), -1.0);
    }

    #[test]
    fn malformed_inputs_get_distinct_errors() {
        let good = encode_flo(&FlowField::constant(2, 2, 1.0, 2.0).unwrap());
        let mut bad = good.clone();
        bad[0] ^= 1;
        assert!(matches!(decode_flo(&bad), Err(FormatError::BadMagic { .. })));
        assert!(decode_flo(&bad).unwrap_err().to_string().contains("magic"));
        assert!(matches!(
            decode_flo(&good[..good.len() - 1]),
            Err(FormatError::Truncated { .. })
        ));
        assert!(matches!(decode_flo(&good[..5]), Err(FormatError::Truncated { .. })));
        let mut zero_w = good.clone();
        zero_w[4..8].copy_from_slice(&0i32.to_le_bytes());
        assert!(matches!(decode_flo(&zero_w), Err(FormatError::InvalidDims { .. })));
        let mut long = good;
        long.push(0);
        assert!(matches!(
            decode_flo(&long),
            Err(FormatError::TrailingBytes { extra: 1 })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.flo");
        let f = FlowField::from_fn(6, 8, |y, x| (x as f64 * 0.25 - 1.0, y as f64 * -1.5)).unwrap();
        write_flo(&p, &f).unwrap();
        assert_eq!(read_flo(&p).unwrap(), f);
        assert!(matches!(
            read_flo(dir.path().join("missing.flo")),
            Err(FormatError::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in proptest::collection::vec((-1e6f32..1e6, -1e6f32..1e6), 48)) {
            let f = FlowField::new(
                8, 6,
                vals.iter().map(|p| p.0 as f64).collect(),
                vals.iter().map(|p| p.1 as f64).collect(),
            ).unwrap();
            let back = decode_flo(&encode_flo(&f)).unwrap();
            for (a, b) in back.u().iter().chain(back.v()).zip(f.u().iter().chain(f.v())) {
                prop_assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
            }
        }
    }
}
