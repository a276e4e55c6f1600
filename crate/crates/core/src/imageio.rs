//! 8-bit grayscale images and the PGM (P2/P5) format.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("image of {height}x{width} needs {expected} pixels, got {found}")]
pub struct ImageSizeError {
    pub height: usize,
    pub width: usize,
    pub expected: usize,
    pub found: usize,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self, ImageSizeError> {
        if height == 0 || width == 0 || pixels.len() != height * width {
            return Err(ImageSizeError {
                height,
                width,
                expected: height * width,
                found: pixels.len(),
            });
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Self {
        Self::new(height, width, vec![value; height * width]).expect("nonzero dimensions")
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels).expect("nonzero dimensions")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmMode {
    /// `P5`, raw bytes.
    Binary,
    /// `P2`, decimal text.
    Ascii,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("byte {offset}: not a P2 or P5 stream")]
    BadMagic { offset: usize },
    #[error("byte {offset}: stream ends before the {what} is complete")]
    Truncated { offset: usize, what: &'static str },
    #[error("byte {offset}: maxval {maxval} outside [1, 255]")]
    MaxvalOutOfRange { offset: usize, maxval: u64 },
    #[error("byte {offset}: image dimensions must be nonzero")]
    ZeroDimension { offset: usize },
    #[error("byte {offset}: expected a decimal number")]
    InvalidNumber { offset: usize },
    #[error("byte {offset}: sample {value} exceeds maxval {maxval}")]
    SampleOutOfRange {
        offset: usize,
        value: u64,
        maxval: u64,
    },
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<(u64, usize), PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        if start >= self.bytes.len() {
            return Err(PgmError::Truncated {
                offset: start,
                what,
            });
        }
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or(PgmError::InvalidNumber { offset: start })?;
            self.pos += 1;
        }
        let terminated = self
            .bytes
            .get(self.pos)
            .is_none_or(|b| b.is_ascii_whitespace() || *b == b'#');
        if self.pos == start || !terminated {
            return Err(PgmError::InvalidNumber { offset: start });
        }
        Ok((value, start))
    }
}

/// Parses a P2 or P5 stream. Samples are rescaled to `[0, 255]` when maxval is
/// smaller, as `round(v * 255 / maxval)`.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(PgmError::BadMagic { offset: 0 }),
    };
    if bytes
        .get(2)
        .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
    {
        return Err(PgmError::BadMagic { offset: 2 });
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let (width, w_off) = cur.number("header")?;
    let (height, h_off) = cur.number("header")?;
    if width == 0 {
        return Err(PgmError::ZeroDimension { offset: w_off });
    }
    if height == 0 {
        return Err(PgmError::ZeroDimension { offset: h_off });
    }
    let (maxval, m_off) = cur.number("header")?;
    if !(1..=255).contains(&maxval) {
        return Err(PgmError::MaxvalOutOfRange {
            offset: m_off,
            maxval,
        });
    }
    let count = usize::try_from(width.saturating_mul(height))
        .map_err(|_| PgmError::InvalidNumber { offset: w_off })?;

    let rescale = |v: u64| -> u8 {
        if maxval == 255 {
            v as u8
        } else {
            ((2 * v * 255 + maxval) / (2 * maxval)) as u8
        }
    };
    let mut pixels = Vec::with_capacity(count.min(bytes.len()));
    if binary {
        // exactly one whitespace byte separates maxval from the payload
        let start = cur.pos + 1;
        if cur.pos >= bytes.len() || bytes.len() - start < count {
            return Err(PgmError::Truncated {
                offset: bytes.len(),
                what: "payload",
            });
        }
        for (i, &b) in bytes[start..start + count].iter().enumerate() {
            let v = u64::from(b);
            if v > maxval {
                return Err(PgmError::SampleOutOfRange {
                    offset: start + i,
                    value: v,
                    maxval,
                });
            }
            pixels.push(rescale(v));
        }
    } else {
        for _ in 0..count {
            let (v, off) = cur.number("payload")?;
            if v > maxval {
                return Err(PgmError::SampleOutOfRange {
                    offset: off,
                    value: v,
                    maxval,
                });
            }
            pixels.push(rescale(v));
        }
    }
    Ok(GrayImage::new(height as usize, width as usize, pixels).expect("checked dimensions"))
}

/// Canonical encoding: `P5\n<w> <h>\n255\n` followed by raw bytes, or the P2
/// equivalent with one line of decimal samples per row.
pub fn write_pgm(img: &GrayImage, mode: PgmMode) -> Vec<u8> {
    match mode {
        PgmMode::Binary => {
            let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
            out.extend_from_slice(&img.pixels);
            out
        }
        PgmMode::Ascii => {
            let mut out = format!("P2\n{} {}\n255\n", img.width, img.height);
            for row in img.pixels.chunks_exact(img.width) {
                for (i, p) in row.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{p}");
                }
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

#[derive(Debug, Error)]
pub enum PgmFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: PgmError },
}

pub fn read_pgm_file(path: impl AsRef<Path>) -> Result<GrayImage, PgmFileError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PgmFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_pgm(&bytes).map_err(|source| PgmFileError::Parse {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_pgm_file(
    path: impl AsRef<Path>,
    img: &GrayImage,
    mode: PgmMode,
) -> Result<(), PgmFileError> {
    let path = path.as_ref();
    std::fs::write(path, write_pgm(img, mode)).map_err(|source| PgmFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_single_binary_pixel() {
        let img = read_pgm(b"P5\n1 1\n255\n\x7f").unwrap();
        assert_eq!((img.height(), img.width()), (1, 1));
        assert_eq!(img.pixels(), &[127]);
    }

    #[test]
    fn reads_ascii_endpoints() {
        let img = read_pgm(b"P2\n2 1\n255\n0 255\n").unwrap();
        assert_eq!(img.pixels(), &[0, 255]);
    }

    #[test]
    fn truncated_payload() {
        let err = read_pgm(b"P5\n2 2\n255\n\x01\x02\x03").unwrap_err();
        assert!(matches!(err, PgmError::Truncated { .. }));
        let err = read_pgm(b"P2\n2 2\n255\n1 2 3").unwrap_err();
        assert!(matches!(
            err,
            PgmError::Truncated {
                what: "payload",
                ..
            }
        ));
    }

    #[test]
    fn distinct_errors_with_offsets() {
        assert_eq!(
            read_pgm(b"P6\n1 1\n255\n\0"),
            Err(PgmError::BadMagic { offset: 0 })
        );
        assert_eq!(
            read_pgm(b"P5x1 1\n255\n\0"),
            Err(PgmError::BadMagic { offset: 2 })
        );
        assert_eq!(
            read_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(PgmError::MaxvalOutOfRange {
                offset: 7,
                maxval: 65535
            })
        );
        assert_eq!(
            read_pgm(b"P5\n0 1\n255\n"),
            Err(PgmError::ZeroDimension { offset: 3 })
        );
        assert_eq!(
            read_pgm(b"P5\n1 0\n255\n"),
            Err(PgmError::ZeroDimension { offset: 5 })
        );
        assert_eq!(
            read_pgm(b"P5\n1 z\n255\n"),
            Err(PgmError::InvalidNumber { offset: 5 })
        );
        assert!(matches!(
            read_pgm(b"P5\n1 1\n"),
            Err(PgmError::Truncated { .. })
        ));
        assert_eq!(
            read_pgm(b"P2\n1 1\n100\n101\n"),
            Err(PgmError::SampleOutOfRange {
                offset: 11,
                value: 101,
                maxval: 100
            })
        );
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = read_pgm(b"P2\n# made by hand\n2 # width\n1\n255\n7 8\n").unwrap();
        assert_eq!(img.pixels(), &[7, 8]);
    }

    #[test]
    fn small_maxval_is_rescaled() {
        let img = read_pgm(b"P2\n4 1\n3\n0 1 2 3\n").unwrap();
        assert_eq!(img.pixels(), &[0, 85, 170, 255]);
        // 1 * 255 / 2 = 127.5 rounds up
        let img = read_pgm(b"P5\n1 1\n2\n\x01").unwrap();
        assert_eq!(img.pixels(), &[128]);
    }

    #[test]
    fn canonical_output() {
        let img = GrayImage::new(1, 1, vec![0]).unwrap();
        assert_eq!(write_pgm(&img, PgmMode::Binary), b"P5\n1 1\n255\n\x00");
        let img = GrayImage::new(1, 2, vec![0, 255]).unwrap();
        assert_eq!(write_pgm(&img, PgmMode::Ascii), b"P2\n2 1\n255\n0 255\n");
    }

    #[test]
    fn image_size_checked() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
    }
}
