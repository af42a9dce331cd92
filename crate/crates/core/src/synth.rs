//! Deterministic synthetic video sequences with ground truth and oracle
//! semantic probability maps.
//!
//! Rectangles glide over a constant or slowly drifting background with
//! wrap-around positions, per-channel Gaussian pixel noise, and a
//! configurable-fidelity semantic oracle: object pixels draw their
//! probability near `semantic_fidelity`, background pixels near
//! `1 - semantic_fidelity`, both jittered with the same relative noise
//! scale as the frames. With zero noise and fidelity 1 the maps equal the
//! ground truth.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::{gt_code, write_pgm, write_ppm, Frame, GroundTruthMask, SemanticMap};
use crate::raster::Rgb;

/// A moving rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthObject {
    pub width: usize,
    pub height: usize,
    /// Pixels per frame; positions wrap at the frame borders.
    pub velocity: (i32, i32),
    pub color: Rgb,
}

/// Scene background.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Background {
    Solid(Rgb),
    /// Horizontal gradient whose phase drifts over time.
    Gradient {
        start: Rgb,
        end: Rgb,
        drift_per_frame: f32,
    },
}

/// Sequence description. Defaults: 320x240, 100 frames, two rectangles.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub objects: Vec<SynthObject>,
    pub background: Background,
    /// Per-channel additive Gaussian noise scale, clamped to [0, 255].
    pub noise_sigma: f64,
    /// How confidently the semantic oracle marks object pixels, in [0, 1].
    pub semantic_fidelity: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            width: 320,
            height: 240,
            num_frames: 100,
            objects: vec![
                SynthObject {
                    width: 48,
                    height: 36,
                    velocity: (5, 2),
                    color: [200, 60, 40],
                },
                SynthObject {
                    width: 32,
                    height: 24,
                    velocity: (-3, 4),
                    color: [30, 180, 210],
                },
            ],
            background: Background::Solid([90, 110, 130]),
            noise_sigma: 8.0,
            semantic_fidelity: 0.9,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.num_frames == 0 {
            return Err(Error::Config("synthetic dimensions must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.semantic_fidelity) {
            return Err(Error::Config("semantic_fidelity must lie in [0, 1]".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be non-negative".into()));
        }
        for o in &self.objects {
            if o.width == 0 || o.height == 0 {
                return Err(Error::Config("object dimensions must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Derives `count` rectangles with seeded sizes, velocities, and colors,
/// sized relative to the frame. Velocities are nonzero so every object
/// actually moves.
pub fn random_objects(count: usize, width: usize, height: usize, seed: u64) -> Vec<SynthObject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut velocity = (0i32, 0i32);
            while velocity == (0, 0) {
                velocity = (rng.random_range(-5..=5), rng.random_range(-5..=5));
            }
            // Channels drawn from the extremes keep objects far from the
            // default background in L1 distance.
            let mut color = [0u8; 3];
            for c in &mut color {
                *c = if rng.random_bool(0.5) {
                    rng.random_range(0..=50)
                } else {
                    rng.random_range(190..=255)
                };
            }
            SynthObject {
                width: (width / 10).max(2) + rng.random_range(0..(width / 10).max(1)),
                height: (height / 10).max(2) + rng.random_range(0..(height / 10).max(1)),
                velocity,
                color,
            }
        })
        .collect()
}

/// A generated sequence held in memory.
#[derive(Clone, Debug)]
pub struct SynthSequence {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<GroundTruthMask>,
    pub semantic: Vec<SemanticMap>,
}

/// Generates a sequence. Bit-identical for identical `(spec, seed)`.
pub fn generate(spec: &SynthSpec, name: &str, seed: u64) -> Result<SynthSequence> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Starting positions are part of the seeded randomness.
    let starts: Vec<(i64, i64)> = spec
        .objects
        .iter()
        .map(|_| {
            (
                rng.random_range(0..w as i64),
                rng.random_range(0..h as i64),
            )
        })
        .collect();

    let pixel_noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("valid sigma"))
    } else {
        None
    };
    let prob_noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma / 255.0).expect("valid sigma"))
    } else {
        None
    };

    let mut frames = Vec::with_capacity(spec.num_frames);
    let mut ground_truth = Vec::with_capacity(spec.num_frames);
    let mut semantic = Vec::with_capacity(spec.num_frames);

    for t in 1..=spec.num_frames as u32 {
        let mut object_mask = vec![false; w * h];
        for (obj, start) in spec.objects.iter().zip(&starts) {
            let ox = start.0 + obj.velocity.0 as i64 * (t as i64 - 1);
            let oy = start.1 + obj.velocity.1 as i64 * (t as i64 - 1);
            for dy in 0..obj.height as i64 {
                let y = (oy + dy).rem_euclid(h as i64) as usize;
                for dx in 0..obj.width as i64 {
                    let x = (ox + dx).rem_euclid(w as i64) as usize;
                    object_mask[y * w + x] = true;
                }
            }
        }

        let mut data = vec![0u8; w * h * 3];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let base = if object_mask[i] {
                    // Later objects paint over earlier ones; for rendering
                    // the color we must know which object owns the pixel.
                    owning_color(spec, &starts, t, x, y)
                        .unwrap_or_else(|| background_color(&spec.background, t, x, w))
                } else {
                    background_color(&spec.background, t, x, w)
                };
                for c in 0..3 {
                    let noisy = match &pixel_noise {
                        Some(n) => base[c] as f64 + n.sample(&mut rng),
                        None => base[c] as f64,
                    };
                    data[i * 3 + c] = noisy.round().clamp(0.0, 255.0) as u8;
                }
            }
        }

        let labels: Vec<u8> = object_mask
            .iter()
            .map(|&m| if m { gt_code::MOVING } else { gt_code::STATIC })
            .collect();

        let mut probs = vec![0u8; w * h];
        for (i, &is_object) in object_mask.iter().enumerate() {
            let target = if is_object {
                spec.semantic_fidelity
            } else {
                1.0 - spec.semantic_fidelity
            };
            let p = match &prob_noise {
                Some(n) => target + n.sample(&mut rng),
                None => target,
            };
            probs[i] = (p.clamp(0.0, 1.0) * 255.0).round() as u8;
        }

        frames.push(Frame::new(w, h, data, t)?);
        ground_truth.push(GroundTruthMask::new(w, h, labels)?);
        semantic.push(SemanticMap::new(w, h, probs, t)?);
    }

    Ok(SynthSequence {
        name: name.to_string(),
        width: w,
        height: h,
        frames,
        ground_truth,
        semantic,
    })
}

fn background_color(background: &Background, t: u32, x: usize, w: usize) -> Rgb {
    match background {
        Background::Solid(c) => *c,
        Background::Gradient {
            start,
            end,
            drift_per_frame,
        } => {
            let phase = (x as f32 + drift_per_frame * (t - 1) as f32).rem_euclid(w as f32)
                / w as f32;
            let mut c = [0u8; 3];
            for i in 0..3 {
                let v = start[i] as f32 + (end[i] as f32 - start[i] as f32) * phase;
                c[i] = v.round().clamp(0.0, 255.0) as u8;
            }
            c
        }
    }
}

/// Color of the topmost (last-listed) object covering a pixel at time `t`.
fn owning_color(
    spec: &SynthSpec,
    starts: &[(i64, i64)],
    t: u32,
    x: usize,
    y: usize,
) -> Option<Rgb> {
    let (w, h) = (spec.width as i64, spec.height as i64);
    for (obj, start) in spec.objects.iter().zip(starts).rev() {
        let ox = start.0 + obj.velocity.0 as i64 * (t as i64 - 1);
        let oy = start.1 + obj.velocity.1 as i64 * (t as i64 - 1);
        let dx = (x as i64 - ox).rem_euclid(w);
        let dy = (y as i64 - oy).rem_euclid(h);
        if dx < obj.width as i64 && dy < obj.height as i64 {
            return Some(obj.color);
        }
    }
    None
}

/// Writes a sequence to disk in the benchmark layout: `input/in%06d.ppm`,
/// `groundtruth/gt%06d.pgm`, `semantic/sem%06d.pgm`, and a
/// `temporalROI.txt` covering every frame.
pub fn write_sequence(seq: &SynthSequence, out_dir: &Path) -> Result<()> {
    let input = out_dir.join("input");
    let gt = out_dir.join("groundtruth");
    let sem = out_dir.join("semantic");
    for dir in [&input, &gt, &sem] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for (i, frame) in seq.frames.iter().enumerate() {
        let t = i + 1;
        write_ppm(
            &input.join(format!("in{t:06}.ppm")),
            seq.width,
            seq.height,
            &frame.data,
        )?;
        write_pgm(
            &gt.join(format!("gt{t:06}.pgm")),
            seq.width,
            seq.height,
            &seq.ground_truth[i].labels,
        )?;
        write_pgm(
            &sem.join(format!("sem{t:06}.pgm")),
            seq.width,
            seq.height,
            &seq.semantic[i].probs,
        )?;
    }
    let roi = out_dir.join("temporalROI.txt");
    fs::write(&roi, format!("1 {}\n", seq.frames.len())).map_err(|e| Error::io(&roi, e))
}
