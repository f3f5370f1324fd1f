//! Binary portable pixmap (P6, maxval 255).

use std::path::Path;

use thiserror::Error;
use warehouse_router_core::{Frame, DEFAULT_MM_PER_PX};

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("not a P6 pixmap")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(&'static str),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    Maxval(u32),
    #[error("pixel data has {have} bytes, expected {need}")]
    Truncated { need: usize, have: usize },
    #[error(transparent)]
    Frame(#[from] warehouse_router_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encode_p6(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.pixels());
    out
}

/// Parses a P6 image; comments (`#` to end of line) are allowed in the header.
pub fn decode_p6(data: &[u8]) -> Result<Frame, PnmError> {
    if data.len() < 2 || &data[..2] != b"P6" {
        return Err(PnmError::BadMagic);
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for f in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while data.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(PnmError::Header("unexpected end")),
            }
        }
        let start = pos;
        while data.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(PnmError::Header("expected a number"));
        }
        *f = std::str::from_utf8(&data[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PnmError::Header("number out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !data.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(PnmError::Header("missing separator before raster"));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(PnmError::Maxval(maxval));
    }
    let need = w as usize * h as usize * 3;
    let raster = &data[pos..];
    if raster.len() < need {
        return Err(PnmError::Truncated { need, have: raster.len() });
    }
    Ok(Frame::new(w, h, raster[..need].to_vec(), DEFAULT_MM_PER_PX)?)
}

pub fn read_p6(path: &Path) -> Result<Frame, PnmError> {
    decode_p6(&std::fs::read(path)?)
}

pub fn write_p6(path: &Path, frame: &Frame) -> Result<(), PnmError> {
    std::fs::write(path, encode_p6(frame))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut f = Frame::filled(5, 3, [1, 2, 3]).unwrap();
        f.set_pixel(4, 2, [250, 251, 252]);
        assert_eq!(decode_p6(&encode_p6(&f)).unwrap(), f);
    }

    #[test]
    fn header_with_comments() {
        let mut data = b"P6 # made by hand\n2 1\n# depth\n255\n".to_vec();
        data.extend_from_slice(&[9, 8, 7, 6, 5, 4]);
        let f = decode_p6(&data).unwrap();
        assert_eq!((f.width(), f.height()), (2, 1));
        assert_eq!(f.pixel(1, 0), [6, 5, 4]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decode_p6(b"P5\n1 1\n255\n\0"), Err(PnmError::BadMagic)));
        assert!(matches!(decode_p6(b"P6\n1 1\n65535\n\0\0\0\0\0\0"), Err(PnmError::Maxval(65535))));
        assert!(matches!(decode_p6(b"P6\n2 2\n255\n\0\0\0"), Err(PnmError::Truncated { .. })));
        assert!(matches!(decode_p6(b"P6\n0 2\n255\n"), Err(PnmError::Frame(_))));
    }
}
