//! Frame, mask, and probability-map files plus dataset layout discovery.
//!
//! Binary PPM (P6) and PGM (P5) with maxval up to 255 are always supported
//! and written bit-exactly per the Netpbm specification. PNG and JPEG
//! loading sits behind the `image-formats` feature, dispatched by file
//! extension through the same loader entry points. 16-bit sources are
//! rejected everywhere.

mod cdnet;
mod pnm;

pub use cdnet::{discover_cdnet_sequence, discover_dataset, SequenceDescriptor};

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{Label, Raster, Rgb};

/// Ground-truth label codes used by change-detection benchmarks.
pub mod gt_code {
    /// Static background.
    pub const STATIC: u8 = 0;
    /// Hard shadow; evaluated as background.
    pub const SHADOW: u8 = 50;
    /// Outside the region of interest; ignored by evaluation.
    pub const OUTSIDE_ROI: u8 = 85;
    /// Unknown motion; ignored by evaluation.
    pub const UNKNOWN: u8 = 170;
    /// Moving object.
    pub const MOVING: u8 = 255;
}

/// One video timestep: a dense 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples, 8 bits per channel.
    pub data: Vec<u8>,
    /// Frame number `t`, 1-based.
    pub index: u32,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>, index: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::Dimension(format!(
                "frame buffer holds {} bytes, expected {}",
                data.len(),
                width * height * 3
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
            index,
        })
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Per-pixel probability that the pixel belongs to a class of objects
/// likely to move, quantized to 8 bits (`p = v / 255`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticMap {
    pub width: usize,
    pub height: usize,
    pub probs: Vec<u8>,
    pub index: u32,
}

impl SemanticMap {
    pub fn new(width: usize, height: usize, probs: Vec<u8>, index: u32) -> Result<Self> {
        if probs.len() != width * height {
            return Err(Error::Dimension(format!(
                "semantic map holds {} values, expected {}",
                probs.len(),
                width * height
            )));
        }
        Ok(SemanticMap {
            width,
            height,
            probs,
            index,
        })
    }

    #[inline]
    pub fn raw(&self, x: usize, y: usize) -> u8 {
        self.probs[y * self.width + x]
    }

    /// Probability at a pixel, `v / 255`.
    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f32 {
        self.raw(x, y) as f32 / 255.0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Pixel-wise ground truth with benchmark label codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthMask {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl GroundTruthMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Dimension(format!(
                "ground truth holds {} labels, expected {}",
                labels.len(),
                width * height
            )));
        }
        for &v in &labels {
            if !matches!(
                v,
                gt_code::STATIC
                    | gt_code::SHADOW
                    | gt_code::OUTSIDE_ROI
                    | gt_code::UNKNOWN
                    | gt_code::MOVING
            ) {
                return Err(Error::Format(format!("invalid ground-truth label {v}")));
            }
        }
        Ok(GroundTruthMask {
            width,
            height,
            labels,
        })
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }
}

fn extension_of(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Last run of ASCII digits in a file stem, e.g. `in000042.ppm` -> 42.
pub fn parse_frame_index(path: &Path) -> Option<u32> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    let digits: String = digits.chars().rev().collect();
    digits.parse().ok()
}

/// Loads an RGB frame. Grayscale sources are replicated across channels.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let index = parse_frame_index(path).unwrap_or(0);
    let decoded = decode_raster(path)?;
    let data = match decoded.channels {
        3 => decoded.data,
        1 => {
            let mut rgb = Vec::with_capacity(decoded.data.len() * 3);
            for v in decoded.data {
                rgb.extend_from_slice(&[v, v, v]);
            }
            rgb
        }
        c => {
            return Err(Error::Format(format!(
                "{}: unsupported channel count {c}",
                path.display()
            )))
        }
    };
    Frame::new(decoded.width, decoded.height, data, index)
}

/// Loads an 8-bit single-channel probability map and checks its dimensions
/// against the sequence.
pub fn load_semantic_map(path: &Path, expected_dims: (usize, usize)) -> Result<SemanticMap> {
    let index = parse_frame_index(path).unwrap_or(0);
    let decoded = decode_raster(path)?;
    if decoded.channels != 1 {
        return Err(Error::Format(format!(
            "{}: semantic maps must be single-channel",
            path.display()
        )));
    }
    if (decoded.width, decoded.height) != expected_dims {
        return Err(Error::Format(format!(
            "{}: dimensions {}x{} do not match sequence {}x{}",
            path.display(),
            decoded.width,
            decoded.height,
            expected_dims.0,
            expected_dims.1
        )));
    }
    SemanticMap::new(decoded.width, decoded.height, decoded.data, index)
}

/// Loads a ground-truth mask, validating the label codes.
pub fn load_ground_truth(path: &Path, expected_dims: (usize, usize)) -> Result<GroundTruthMask> {
    let decoded = decode_raster(path)?;
    if decoded.channels != 1 {
        return Err(Error::Format(format!(
            "{}: ground truth must be single-channel",
            path.display()
        )));
    }
    if (decoded.width, decoded.height) != expected_dims {
        return Err(Error::Format(format!(
            "{}: dimensions do not match sequence",
            path.display()
        )));
    }
    GroundTruthMask::new(decoded.width, decoded.height, decoded.data)
}

/// Loads a binary mask written by [`write_mask`]: 0 is background, 255 is
/// foreground, anything else is a format error.
pub fn load_mask(path: &Path) -> Result<Raster<Label>> {
    let decoded = decode_raster(path)?;
    if decoded.channels != 1 {
        return Err(Error::Format(format!(
            "{}: masks must be single-channel",
            path.display()
        )));
    }
    let mut labels = Vec::with_capacity(decoded.data.len());
    for v in decoded.data {
        labels.push(match v {
            0 => Label::Background,
            255 => Label::Foreground,
            other => {
                return Err(Error::Format(format!(
                    "{}: mask value {other} is neither 0 nor 255",
                    path.display()
                )))
            }
        });
    }
    Ok(Raster::from_vec(decoded.width, decoded.height, labels))
}

/// Loads a per-pixel availability mask: 0 unavailable, 255 available.
pub fn load_availability(path: &Path, expected_dims: (usize, usize)) -> Result<Raster<bool>> {
    let decoded = decode_raster(path)?;
    if decoded.channels != 1 || (decoded.width, decoded.height) != expected_dims {
        return Err(Error::Format(format!(
            "{}: availability mask must be single-channel with sequence dimensions",
            path.display()
        )));
    }
    let mut flags = Vec::with_capacity(decoded.data.len());
    for v in decoded.data {
        flags.push(match v {
            0 => false,
            255 => true,
            other => {
                return Err(Error::Format(format!(
                    "{}: availability value {other} is neither 0 nor 255",
                    path.display()
                )))
            }
        });
    }
    Ok(Raster::from_vec(decoded.width, decoded.height, flags))
}

/// Writes a binary mask as PGM: background 0, foreground 255.
pub fn write_mask(path: &Path, mask: &Raster<Label>) -> Result<()> {
    let bytes: Vec<u8> = mask
        .iter()
        .map(|l| match l {
            Label::Background => 0u8,
            Label::Foreground => 255u8,
        })
        .collect();
    pnm::write_pgm(path, mask.width(), mask.height(), &bytes)
}

pub use pnm::{write_pgm, write_ppm};

struct Decoded {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

fn decode_raster(path: &Path) -> Result<Decoded> {
    match extension_of(path).as_str() {
        "ppm" | "pgm" | "pnm" => pnm::read_pnm(path),
        "png" | "jpg" | "jpeg" => decode_with_image(path),
        other => Err(Error::Format(format!(
            "{}: unsupported raster extension '{other}'",
            path.display()
        ))),
    }
}

#[cfg(feature = "image-formats")]
fn decode_with_image(path: &Path) -> Result<Decoded> {
    let img = image::open(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    use image::DynamicImage::*;
    match img {
        ImageLuma8(g) => Ok(Decoded {
            width: g.width() as usize,
            height: g.height() as usize,
            channels: 1,
            data: g.into_raw(),
        }),
        ImageRgb8(c) => Ok(Decoded {
            width: c.width() as usize,
            height: c.height() as usize,
            channels: 3,
            data: c.into_raw(),
        }),
        ImageLumaA8(_) | ImageRgba8(_) => {
            let c = img.to_rgb8();
            Ok(Decoded {
                width: c.width() as usize,
                height: c.height() as usize,
                channels: 3,
                data: c.into_raw(),
            })
        }
        _ => Err(Error::Format(format!(
            "{}: only 8-bit sources are supported",
            path.display()
        ))),
    }
}

#[cfg(not(feature = "image-formats"))]
fn decode_with_image(path: &Path) -> Result<Decoded> {
    Err(Error::Format(format!(
        "{}: PNG/JPEG support not built in (enable the image-formats feature)",
        path.display()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fs;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn load_frame_decodes_small_ppm() {
        let dir = tmp();
        let path = dir.path().join("in000001.ppm");
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 255, 255, 255]);
        fs::write(&path, bytes).unwrap();
        let f = load_frame(&path).unwrap();
        assert_eq!((f.width, f.height), (2, 1));
        assert_eq!(f.data, vec![0, 0, 0, 255, 255, 255]);
        assert_eq!(f.index, 1);
    }

    #[test]
    fn load_frame_rejects_empty_file() {
        let dir = tmp();
        let path = dir.path().join("in000001.ppm");
        fs::write(&path, b"").unwrap();
        match load_frame(&path) {
            Err(Error::Io { .. }) => {}
            other => panic!("expected IoError, got {other:?}"),
        }
    }

    #[test]
    fn load_frame_rejects_16_bit_depth() {
        let dir = tmp();
        let path = dir.path().join("deep.ppm");
        let mut bytes = b"P6\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 0, 0, 0]);
        fs::write(&path, bytes).unwrap();
        match load_frame(&path) {
            Err(Error::Format(_)) => {}
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn semantic_map_quantization_endpoints() {
        let dir = tmp();
        let path = dir.path().join("sem000001.pgm");
        let mut bytes = b"P5\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 128]);
        fs::write(&path, bytes).unwrap();
        let m = load_semantic_map(&path, (3, 1)).unwrap();
        assert_eq!(m.prob(0, 0), 1.0);
        assert_eq!(m.prob(1, 0), 0.0);
        assert!((m.prob(2, 0) - 128.0 / 255.0).abs() < 1e-6);
    }

    #[test]
    fn semantic_map_dimension_mismatch() {
        let dir = tmp();
        let path = dir.path().join("sem000001.pgm");
        let mut bytes = b"P5\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_semantic_map(&path, (2, 2)),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn mask_write_read_constant_masks() {
        let dir = tmp();
        let all_bg = Raster::filled(4, 3, Label::Background);
        let all_fg = Raster::filled(4, 3, Label::Foreground);
        let p_bg = dir.path().join("bg.pgm");
        let p_fg = dir.path().join("fg.pgm");
        write_mask(&p_bg, &all_bg).unwrap();
        write_mask(&p_fg, &all_fg).unwrap();
        let raw_bg = fs::read(&p_bg).unwrap();
        assert!(raw_bg.ends_with(&[0u8; 12]));
        let raw_fg = fs::read(&p_fg).unwrap();
        assert!(raw_fg.ends_with(&[255u8; 12]));
        assert_eq!(load_mask(&p_bg).unwrap(), all_bg);
        assert_eq!(load_mask(&p_fg).unwrap(), all_fg);
    }

    #[test]
    fn ground_truth_rejects_stray_codes() {
        assert!(GroundTruthMask::new(2, 1, vec![0, 51]).is_err());
        assert!(GroundTruthMask::new(2, 1, vec![50, 170]).is_ok());
    }

    proptest! {
        #[test]
        fn mask_roundtrip_is_identity(bits in proptest::collection::vec(any::<bool>(), 1..64)) {
            let dir = tmp();
            let w = bits.len();
            let labels: Vec<Label> = bits
                .iter()
                .map(|b| if *b { Label::Foreground } else { Label::Background })
                .collect();
            let mask = Raster::from_vec(w, 1, labels);
            let path = dir.path().join("m.pgm");
            write_mask(&path, &mask).unwrap();
            prop_assert_eq!(load_mask(&path).unwrap(), mask);
        }

        #[test]
        fn quantization_is_monotone(v1 in 0u8..=255, v2 in 0u8..=255) {
            let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
            let m = SemanticMap::new(2, 1, vec![lo, hi], 1).unwrap();
            prop_assert!(m.prob(0, 0) <= m.prob(1, 0));
        }
    }
}
