//! Drives a pipeline over a frame sequence, from disk or from memory.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::config::{FusionMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::eval::Confusion;
use crate::fusion::Pipeline;
use crate::io::{
    self, Frame, GroundTruthMask, SemanticMap, SequenceDescriptor,
};
use crate::raster::Raster;
use crate::semantic::{Availability, Schedule};
use crate::synth::SynthSequence;

/// A video sequence the runner can iterate: frames by position, plus
/// optional semantic maps, availability masks, and ground truth looked up
/// by frame number.
pub trait FrameSource {
    fn name(&self) -> &str;
    fn category(&self) -> &str;
    fn num_frames(&self) -> usize;
    /// Frame number for a 1-based position (file numbering on disk).
    fn frame_number(&self, position: usize) -> u32;
    fn frame(&self, position: usize) -> Result<Frame>;
    /// Semantic map for a frame number; `None` when absent. Absence is a
    /// legal schedule, not an error.
    fn semantic(&self, frame_number: u32) -> Result<Option<SemanticMap>>;
    /// Explicit per-pixel availability mask for a frame number.
    fn availability_mask(&self, frame_number: u32) -> Result<Option<Raster<bool>>>;
    fn ground_truth(&self, frame_number: u32) -> Result<Option<GroundTruthMask>>;
    fn temporal_roi(&self) -> Option<(u32, u32)>;
}

/// Disk-backed source over a discovered sequence directory.
pub struct DiskSequence {
    descriptor: SequenceDescriptor,
    dims: (usize, usize),
}

impl DiskSequence {
    pub fn open(descriptor: SequenceDescriptor) -> Result<Self> {
        let first = descriptor
            .frames
            .first()
            .ok_or_else(|| Error::Layout(format!("{}: empty sequence", descriptor.name)))?;
        let frame = io::load_frame(&first.1)?;
        Ok(DiskSequence {
            dims: frame.dims(),
            descriptor,
        })
    }

    pub fn descriptor(&self) -> &SequenceDescriptor {
        &self.descriptor
    }

    fn side_file(&self, dir: &Option<PathBuf>, prefix: &str, frame_number: u32) -> Option<PathBuf> {
        let dir = dir.as_ref()?;
        for ext in ["pgm", "png"] {
            let path = dir.join(format!("{prefix}{frame_number:06}.{ext}"));
            if path.is_file() {
                return Some(path);
            }
        }
        None
    }
}

impl FrameSource for DiskSequence {
    fn name(&self) -> &str {
        &self.descriptor.name
    }

    fn category(&self) -> &str {
        &self.descriptor.category
    }

    fn num_frames(&self) -> usize {
        self.descriptor.frames.len()
    }

    fn frame_number(&self, position: usize) -> u32 {
        self.descriptor.frames[position - 1].0
    }

    fn frame(&self, position: usize) -> Result<Frame> {
        let (number, path) = &self.descriptor.frames[position - 1];
        let mut frame = io::load_frame(path)?;
        if frame.dims() != self.dims {
            return Err(Error::Format(format!(
                "{}: frame dimensions changed mid-sequence",
                path.display()
            )));
        }
        frame.index = *number;
        Ok(frame)
    }

    fn semantic(&self, frame_number: u32) -> Result<Option<SemanticMap>> {
        match self.side_file(&self.descriptor.semantic_dir, "sem", frame_number) {
            Some(path) => Ok(Some(io::load_semantic_map(&path, self.dims)?)),
            None => Ok(None),
        }
    }

    fn availability_mask(&self, frame_number: u32) -> Result<Option<Raster<bool>>> {
        match self.side_file(&self.descriptor.availability_dir, "avail", frame_number) {
            Some(path) => Ok(Some(io::load_availability(&path, self.dims)?)),
            None => Ok(None),
        }
    }

    fn ground_truth(&self, frame_number: u32) -> Result<Option<GroundTruthMask>> {
        match self.side_file(&self.descriptor.gt_dir, "gt", frame_number) {
            Some(path) => Ok(Some(io::load_ground_truth(&path, self.dims)?)),
            None => Ok(None),
        }
    }

    fn temporal_roi(&self) -> Option<(u32, u32)> {
        self.descriptor.temporal_roi
    }
}

/// In-memory source over a generated synthetic sequence.
impl FrameSource for SynthSequence {
    fn name(&self) -> &str {
        &self.name
    }

    fn category(&self) -> &str {
        ""
    }

    fn num_frames(&self) -> usize {
        self.frames.len()
    }

    fn frame_number(&self, position: usize) -> u32 {
        position as u32
    }

    fn frame(&self, position: usize) -> Result<Frame> {
        Ok(self.frames[position - 1].clone())
    }

    fn semantic(&self, frame_number: u32) -> Result<Option<SemanticMap>> {
        Ok(self.semantic.get(frame_number as usize - 1).cloned())
    }

    fn availability_mask(&self, _frame_number: u32) -> Result<Option<Raster<bool>>> {
        Ok(None)
    }

    fn ground_truth(&self, frame_number: u32) -> Result<Option<GroundTruthMask>> {
        Ok(self.ground_truth.get(frame_number as usize - 1).cloned())
    }

    fn temporal_roi(&self) -> Option<(u32, u32)> {
        None
    }
}

/// Everything a sequence run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub name: String,
    pub category: String,
    pub confusion: Confusion,
    pub frames_processed: usize,
    /// Time spent in the pipeline itself.
    pub compute: Duration,
    /// Time spent loading inputs and writing masks.
    pub io: Duration,
}

impl RunOutcome {
    /// Pipeline-compute frame rate.
    pub fn compute_fps(&self) -> f64 {
        let secs = self.compute.as_secs_f64();
        if secs > 0.0 {
            self.frames_processed as f64 / secs
        } else {
            f64::INFINITY
        }
    }
}

/// Runs one mode over one sequence, optionally writing `bin%06d.pgm`
/// masks, and accumulates confusion counts against any ground truth
/// inside the temporal region of interest.
pub fn run_source(
    source: &dyn FrameSource,
    mode: FusionMode,
    config: &PipelineConfig,
    mask_dir: Option<&Path>,
) -> Result<RunOutcome> {
    if let Some(dir) = mask_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let n = source.num_frames();
    if n == 0 {
        return Err(Error::Layout(format!("{}: empty sequence", source.name())));
    }

    let mut io_time = Duration::ZERO;
    let mut compute = Duration::ZERO;

    let t0 = Instant::now();
    let first = source.frame(1)?;
    io_time += t0.elapsed();

    let t0 = Instant::now();
    let mut pipeline = Pipeline::new(mode, config, &first)?;
    compute += t0.elapsed();

    let mut confusion = Confusion::default();
    let roi = source.temporal_roi();

    for position in 1..=n {
        let frame_number = source.frame_number(position);

        let t0 = Instant::now();
        let frame = if position == 1 {
            first.clone()
        } else {
            source.frame(position)?
        };
        let explicit = match pipeline.schedule() {
            Schedule::Explicit => source.availability_mask(frame_number)?,
            _ => None,
        };
        io_time += t0.elapsed();

        let mut availability = pipeline.availability_for(frame_number, explicit);
        let semantic = if availability.any() {
            let t0 = Instant::now();
            let map = source.semantic(frame_number)?;
            io_time += t0.elapsed();
            if map.is_none() {
                // Missing semantic file: the frame is simply not
                // semantic-bearing.
                availability = Availability::None;
            }
            map
        } else {
            None
        };

        let t0 = Instant::now();
        let result = pipeline.process(&frame, semantic.as_ref(), &availability)?;
        compute += t0.elapsed();

        let t0 = Instant::now();
        if let Some(dir) = mask_dir {
            io::write_mask(
                &dir.join(format!("bin{frame_number:06}.pgm")),
                &result.output_mask,
            )?;
        }
        if crate::eval::in_temporal_roi(roi, frame_number) {
            if let Some(gt) = source.ground_truth(frame_number)? {
                confusion.accumulate(&result.output_mask, &gt)?;
            }
        }
        io_time += t0.elapsed();
    }

    Ok(RunOutcome {
        name: source.name().to_string(),
        category: source.category().to_string(),
        confusion,
        frames_processed: n,
        compute,
        io: io_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, SynthSpec};

    fn tiny_spec() -> SynthSpec {
        SynthSpec {
            width: 32,
            height: 24,
            num_frames: 12,
            noise_sigma: 0.0,
            semantic_fidelity: 1.0,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn memory_and_disk_sources_agree() {
        let seq = synth::generate(&tiny_spec(), "seq", 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        synth::write_sequence(&seq, dir.path()).unwrap();
        let disk = DiskSequence::open(
            crate::io::discover_cdnet_sequence(dir.path()).unwrap(),
        )
        .unwrap();

        let config = PipelineConfig::default().with_x(3).unwrap();
        let mem = run_source(&seq, FusionMode::RtSbs, &config, None).unwrap();
        let dsk = run_source(&disk, FusionMode::RtSbs, &config, None).unwrap();
        assert_eq!(mem.confusion, dsk.confusion);
        assert_eq!(mem.frames_processed, dsk.frames_processed);
    }

    #[test]
    fn missing_semantic_dir_downgrades_availability() {
        let seq = synth::generate(&tiny_spec(), "seq", 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        synth::write_sequence(&seq, dir.path()).unwrap();
        std::fs::remove_dir_all(dir.path().join("semantic")).unwrap();
        let disk = DiskSequence::open(
            crate::io::discover_cdnet_sequence(dir.path()).unwrap(),
        )
        .unwrap();
        let config = PipelineConfig::default();
        // X=1 wants semantics on every frame; with none on disk the run
        // must still succeed as a pure-subtractor sequence.
        let outcome = run_source(&disk, FusionMode::RtSbs, &config, None).unwrap();
        assert_eq!(outcome.frames_processed, 12);
    }

    #[test]
    fn written_masks_cover_every_frame() {
        let seq = synth::generate(&tiny_spec(), "seq", 4).unwrap();
        let masks = tempfile::tempdir().unwrap();
        let config = PipelineConfig::default().with_x(2).unwrap();
        run_source(&seq, FusionMode::RtSbs, &config, Some(masks.path())).unwrap();
        for t in 1..=12 {
            assert!(masks.path().join(format!("bin{t:06}.pgm")).is_file());
        }
    }
}
