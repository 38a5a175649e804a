//! Portable float maps. Written little-endian (scale `-1.0`), rows stored
//! bottom-to-top as the format requires; NaN samples pass through unchanged.

use std::path::Path;

use super::{write_file, FormatError};
use crate::image::Image;

/// Encodes a 1- or 3-channel image.
pub fn encode(image: &Image) -> Vec<u8> {
    let (w, h, c) = image.dims();
    let tag = match c {
        1 => "Pf",
        3 => "PF",
        n => panic!("PFM supports 1 or 3 channels, got {n}"),
    };
    let mut out = format!("{tag}\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * c * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            for v in image.pixel(x, y) {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    out
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str, FormatError> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(FormatError::invalid(start, "unexpected end of PFM header"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| FormatError::invalid(start, "non-ASCII PFM header"))
}

pub fn decode(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut pos = 0;
    let channels = match header_token(bytes, &mut pos)? {
        "Pf" => 1,
        "PF" => 3,
        other => {
            return Err(FormatError::BadMagic {
                expected: "Pf|PF".into(),
                found: other.into(),
            })
        }
    };
    let mut field = |what: &str| -> Result<(usize, String), FormatError> {
        let tok = header_token(bytes, &mut pos)?;
        let at = pos - tok.len();
        if tok.is_empty() {
            return Err(FormatError::invalid(at, format!("missing {what}")));
        }
        Ok((at, tok.to_string()))
    };
    let dim = |(at, tok): (usize, String)| -> Result<usize, FormatError> {
        tok.parse()
            .map_err(|_| FormatError::invalid(at, format!("bad dimension '{tok}'")))
    };
    let width = dim(field("width")?)?;
    let height = dim(field("height")?)?;
    let (at, scale_tok) = field("scale")?;
    let scale: f32 = scale_tok
        .parse()
        .map_err(|_| FormatError::invalid(at, format!("bad scale '{scale_tok}'")))?;
    if scale == 0.0 {
        return Err(FormatError::invalid(at, "scale must be non-zero"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let little = scale < 0.0;
    let n = width * height * channels;
    let available = bytes.len().saturating_sub(pos);
    if available != n * 4 {
        return Err(if available < n * 4 {
            FormatError::Truncated {
                offset: pos,
                needed: n * 4,
                available,
            }
        } else {
            FormatError::invalid(pos + n * 4, format!("{} trailing bytes", available - n * 4))
        });
    }
    let mut image = Image::new(width, height, channels);
    let mut chunks = bytes[pos..].chunks_exact(4);
    for y in (0..height).rev() {
        for x in 0..width {
            for c in 0..channels {
                let b: [u8; 4] = chunks.next().unwrap().try_into().unwrap();
                let v = if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                };
                image.set(x, y, c, v as f64);
            }
        }
    }
    Ok(image)
}

pub fn write(path: impl AsRef<Path>, image: &Image) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode(image))
}

pub fn read(path: impl AsRef<Path>) -> Result<Image, FormatError> {
    decode(&std::fs::read(path)?)
}
