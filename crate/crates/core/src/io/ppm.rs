//! Binary 8-bit PPM (P6) for color previews.

use std::path::Path;

use super::{write_file, FormatError};
use crate::image::Image;

#[inline]
fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        (v.clamp(0.0, 1.0) * 255.0).round() as u8
    }
}

/// Encodes a 3-channel (or grayscale, replicated) image in `[0, 1]`.
pub fn encode(image: &Image) -> Vec<u8> {
    let (w, h, c) = image.dims();
    assert!(c == 1 || c == 3, "PPM needs 1 or 3 channels, got {c}");
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let px = image.pixel(x, y);
            for k in 0..3 {
                out.push(quantize(px[if c == 1 { 0 } else { k }]));
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::invalid(start, "unexpected end of PPM header"));
        }
        tokens.push((start, String::from_utf8_lossy(&bytes[start..pos]).into_owned()));
    }
    if tokens[0].1 != "P6" {
        return Err(FormatError::BadMagic {
            expected: "P6".into(),
            found: tokens[0].1.clone(),
        });
    }
    let num = |i: usize| -> Result<usize, FormatError> {
        tokens[i]
            .1
            .parse()
            .map_err(|_| FormatError::invalid(tokens[i].0, format!("bad number '{}'", tokens[i].1)))
    };
    let (w, h, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval != 255 {
        return Err(FormatError::invalid(tokens[3].0, "only 8-bit PPM is supported"));
    }
    pos += 1;
    let need = w * h * 3;
    let available = bytes.len().saturating_sub(pos);
    if available < need {
        return Err(FormatError::Truncated {
            offset: pos,
            needed: need,
            available,
        });
    }
    let data = bytes[pos..pos + need].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Image::from_vec(w, h, 3, data))
}

pub fn write(path: impl AsRef<Path>, image: &Image) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode(image))
}

pub fn read(path: impl AsRef<Path>) -> Result<Image, FormatError> {
    decode(&std::fs::read(path)?)
}
