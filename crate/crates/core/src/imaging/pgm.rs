//! Netpbm grayscale I/O: P2/P5 graymaps (8 and 16 bit) and P1 bitmaps for masks.

use std::fs;
use std::path::Path;

use super::{BitDepth, ImagingError, ThermalFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    Binary,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
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

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<u32, ImagingError> {
        let tok = self
            .token()
            .ok_or_else(|| ImagingError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                ImagingError::MalformedHeader(format!("{what} is not a number: {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

/// Decodes a P2 or P5 graymap with maxval 255 or 65535.
pub fn decode_pgm(bytes: &[u8]) -> Result<ThermalFrame, ImagingError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let encoding = match cur.token() {
        Some(b"P2") => Encoding::Ascii,
        Some(b"P5") => Encoding::Binary,
        Some(other) => {
            return Err(ImagingError::MalformedHeader(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(ImagingError::MalformedHeader("empty file".into())),
    };
    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(ImagingError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    let maxval = cur.header_number("maxval")?;
    let bit_depth = BitDepth::from_maxval(maxval).ok_or(ImagingError::UnsupportedMaxval(maxval))?;
    let expected = width * height;

    let samples = match encoding {
        Encoding::Binary => {
            // exactly one whitespace byte separates the header from the raster
            if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
                return Err(ImagingError::TruncatedData { expected, found: 0 });
            }
            let raster = &bytes[cur.pos + 1..];
            match bit_depth {
                BitDepth::Eight => {
                    if raster.len() < expected {
                        return Err(ImagingError::TruncatedData {
                            expected,
                            found: raster.len(),
                        });
                    }
                    raster[..expected].iter().map(|&b| b as u16).collect::<Vec<_>>()
                }
                BitDepth::Sixteen => {
                    if raster.len() < 2 * expected {
                        return Err(ImagingError::TruncatedData {
                            expected,
                            found: raster.len() / 2,
                        });
                    }
                    raster[..2 * expected]
                        .chunks_exact(2)
                        .map(|p| u16::from_be_bytes([p[0], p[1]]))
                        .collect()
                }
            }
        }
        Encoding::Ascii => {
            let mut samples = Vec::with_capacity(expected);
            while samples.len() < expected {
                let Some(tok) = cur.token() else {
                    return Err(ImagingError::TruncatedData {
                        expected,
                        found: samples.len(),
                    });
                };
                let v = std::str::from_utf8(tok)
                    .ok()
                    .and_then(|s| s.parse::<u32>().ok())
                    .ok_or_else(|| {
                        ImagingError::MalformedHeader(format!("bad sample {:?}", String::from_utf8_lossy(tok)))
                    })?;
                if v > maxval {
                    return Err(ImagingError::IntensityOutOfRange {
                        value: v as f64,
                        max: maxval,
                    });
                }
                samples.push(v as u16);
            }
            samples
        }
    };
    ThermalFrame::from_samples(width, height, bit_depth, &samples)
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<ThermalFrame, ImagingError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ImagingError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    decode_pgm(&bytes)
}

/// Encodes a frame as binary P5; 16-bit samples are written big-endian.
pub fn encode_pgm(frame: &ThermalFrame) -> Vec<u8> {
    let depth = frame.bit_depth();
    let header = format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), depth.max_value());
    let samples = frame.to_samples();
    let mut out = header.into_bytes();
    match depth {
        BitDepth::Eight => out.extend(samples.iter().map(|&s| s as u8)),
        BitDepth::Sixteen => {
            for s in samples {
                out.extend_from_slice(&s.to_be_bytes());
            }
        }
    }
    out
}

pub fn save_frame(path: impl AsRef<Path>, frame: &ThermalFrame) -> Result<(), ImagingError> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(frame)).map_err(|e| ImagingError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Encodes a boolean mask as an ASCII P1 bitmap (`1` = set).
pub fn encode_pbm(width: usize, height: usize, mask: &[bool]) -> String {
    assert_eq!(mask.len(), width * height, "mask size mismatch");
    let mut out = format!("P1\n{width} {height}\n");
    for row in mask.chunks(width) {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_ascii_graymap() {
        let f = decode_pgm(b"P2\n# comment\n2 2\n255\n0 10\n20 30\n").unwrap();
        assert_eq!((f.width(), f.height()), (2, 2));
        assert_eq!(f.bit_depth(), BitDepth::Eight);
        assert_eq!(f.to_samples(), vec![0, 10, 20, 30]);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0x01, 0x00, 0x00, 0x02]);
        let f = decode_pgm(&bytes).unwrap();
        assert_eq!(f.get(0, 0), 256.0);
        assert_eq!(f.get(1, 0), 2.0);
    }

    #[test]
    fn short_payload_is_truncated() {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        assert!(matches!(
            decode_pgm(&bytes),
            Err(ImagingError::TruncatedData { expected: 6, found: 4 })
        ));
        assert!(matches!(
            decode_pgm(b"P2 2 2 255 1 2 3"),
            Err(ImagingError::TruncatedData { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn rejects_other_maxvals_and_magic() {
        assert!(matches!(
            decode_pgm(b"P2 1 1 1023 5"),
            Err(ImagingError::UnsupportedMaxval(1023))
        ));
        assert!(matches!(
            decode_pgm(b"P6 1 1 255 abc"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5 x 1 255 a"),
            Err(ImagingError::MalformedHeader(_))
        ));
    }

    #[test]
    fn pbm_layout() {
        let s = encode_pbm(3, 2, &[true, false, true, false, false, true]);
        assert_eq!(s, "P1\n3 2\n1 0 1\n0 0 1\n");
    }

    proptest! {
        #[test]
        fn p5_round_trip_is_bit_exact(
            (w, h, samples, sixteen) in (1usize..9, 1usize..9, any::<bool>()).prop_flat_map(|(w, h, s)| {
                let max = if s { u16::MAX } else { 255 };
                (Just(w), Just(h), proptest::collection::vec(0..=max, w * h), Just(s))
            })
        ) {
            let depth = if sixteen { BitDepth::Sixteen } else { BitDepth::Eight };
            let f = ThermalFrame::from_samples(w, h, depth, &samples).unwrap();
            let back = decode_pgm(&encode_pgm(&f)).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
