//! Minimal binary netpbm codecs: PPM (P6, 8-bit) and PGM (P5, 8- or 16-bit).

use std::path::Path;

use crate::error::{Error, Result};

/// Raw PPM/PGM payload after header parsing.
struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::Parse(format!(
            "expected magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated or malformed header".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::Parse(format!("header value {text} out of range")))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Parse("missing whitespace after header".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Parse("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("maxval {maxval} out of range")));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_offset: pos,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decoded 8-bit RGB raster.
pub struct Rgb8 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

/// Decodes a binary PPM. Only `maxval <= 255` is accepted; samples are rescaled to 0..=255.
pub fn decode_ppm(bytes: &[u8]) -> Result<Rgb8> {
    let h = parse_header(bytes, b"P6")?;
    if h.maxval > 255 {
        return Err(Error::Parse(format!(
            "16-bit PPM (maxval {}) not supported",
            h.maxval
        )));
    }
    let n = h.width * h.height;
    let raster = &bytes[h.data_offset..];
    if raster.len() < 3 * n {
        return Err(Error::Parse(format!(
            "raster truncated: expected {} bytes, found {}",
            3 * n,
            raster.len()
        )));
    }
    let scale = |v: u8| -> u8 {
        if h.maxval == 255 {
            v
        } else {
            ((u32::from(v) * 255 + h.maxval / 2) / h.maxval) as u8
        }
    };
    let data = raster[..3 * n]
        .chunks_exact(3)
        .map(|c| [scale(c[0]), scale(c[1]), scale(c[2])])
        .collect();
    Ok(Rgb8 {
        width: h.width,
        height: h.height,
        data,
    })
}

pub fn encode_ppm(width: usize, height: usize, data: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(data.len() * 3);
    for px in data {
        out.extend_from_slice(px);
    }
    out
}

/// Decoded grayscale raster; values kept at native precision.
pub struct Gray16 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

/// Decodes a binary PGM, 8-bit (`maxval < 256`) or big-endian 16-bit.
pub fn decode_pgm(bytes: &[u8]) -> Result<Gray16> {
    let h = parse_header(bytes, b"P5")?;
    let n = h.width * h.height;
    let raster = &bytes[h.data_offset..];
    let wide = h.maxval > 255;
    let need = if wide { 2 * n } else { n };
    if raster.len() < need {
        return Err(Error::Parse(format!(
            "raster truncated: expected {need} bytes, found {}",
            raster.len()
        )));
    }
    let data: Vec<u16> = if wide {
        raster[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        raster[..need].iter().map(|&v| u16::from(v)).collect()
    };
    if let Some(v) = data.iter().find(|&&v| u32::from(v) > h.maxval) {
        return Err(Error::Parse(format!(
            "sample {v} exceeds maxval {}",
            h.maxval
        )));
    }
    Ok(Gray16 {
        width: h.width,
        height: h.height,
        data,
    })
}

/// Encodes a 16-bit PGM (maxval 65535, big-endian samples).
pub fn encode_pgm16(width: usize, height: usize, data: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(data.len() * 2);
    for v in data {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Rgb8> {
    let path = path.as_ref();
    decode_ppm(&read_file(path)?).map_err(|e| with_path(path, e))
}

pub fn write_ppm(path: impl AsRef<Path>, width: usize, height: usize, data: &[[u8; 3]]) -> Result<()> {
    write_file(path.as_ref(), &encode_ppm(width, height, data))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Gray16> {
    let path = path.as_ref();
    decode_pgm(&read_file(path)?).map_err(|e| with_path(path, e))
}

pub fn write_pgm16(path: impl AsRef<Path>, width: usize, height: usize, data: &[u16]) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm16(width, height, data))
}

fn with_path(path: &Path, err: Error) -> Error {
    match err {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}
