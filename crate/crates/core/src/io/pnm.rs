//! Binary Netpbm (P5/P6) reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Decoded;
use crate::error::{Error, Result};

/// Reads a binary PGM (P5) or PPM (P6) file. Maxval above 255 is rejected;
/// maxval below 255 is rescaled to full range.
pub fn read_pnm(path: &Path) -> Result<Decoded> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "empty file"),
        ));
    }
    let mut cursor = Cursor {
        bytes: &bytes,
        pos: 0,
    };

    let magic = cursor.take(2).ok_or_else(|| truncated(path))?;
    let channels = match magic {
        b"P5" => 1usize,
        b"P6" => 3usize,
        _ => {
            return Err(Error::Format(format!(
                "{}: not a binary PGM/PPM (magic {:?})",
                path.display(),
                String::from_utf8_lossy(magic)
            )))
        }
    };

    let width = cursor.read_number().ok_or_else(|| truncated(path))?;
    let height = cursor.read_number().ok_or_else(|| truncated(path))?;
    let maxval = cursor.read_number().ok_or_else(|| truncated(path))?;
    if maxval > 255 {
        return Err(Error::Format(format!(
            "{}: maxval {maxval} exceeds 8-bit depth",
            path.display()
        )));
    }
    if maxval == 0 {
        return Err(Error::Format(format!("{}: maxval 0", path.display())));
    }
    // Exactly one whitespace byte separates the header from the pixel data.
    if !cursor.next_byte().is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::Format(format!(
            "{}: missing whitespace before pixel data",
            path.display()
        )));
    }

    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "{}: zero dimension {width}x{height}",
            path.display()
        )));
    }
    let expected = width as usize * height as usize * channels;
    let data = cursor.take(expected).ok_or_else(|| truncated(path))?;
    let mut data = data.to_vec();
    if maxval != 255 {
        for v in &mut data {
            *v = ((*v as u32 * 255) / maxval) as u8;
        }
    }
    Ok(Decoded {
        width: width as usize,
        height: height as usize,
        channels,
        data,
    })
}

/// Writes a binary PGM (P5, maxval 255).
pub fn write_pgm(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    assert_eq!(data.len(), width * height, "pgm buffer length");
    write_raw(path, b"P5", width, height, data)
}

/// Writes a binary PPM (P6, maxval 255).
pub fn write_ppm(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    assert_eq!(data.len(), width * height * 3, "ppm buffer length");
    write_raw(path, b"P6", width, height, data)
}

fn write_raw(path: &Path, magic: &[u8], width: usize, height: usize, data: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(data.len() + 20);
    out.extend_from_slice(magic);
    write!(out, "\n{width} {height}\n255\n").expect("in-memory write");
    out.extend_from_slice(data);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn truncated(path: &Path) -> Error {
    Error::Format(format!("{}: truncated or malformed header", path.display()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return None;
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Some(s)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn next_byte(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(b) = self.next_byte() {
                    if b == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self) -> Option<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}
