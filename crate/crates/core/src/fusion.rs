//! Classifier combination and per-frame pipeline orchestration.
//!
//! Two fixed decision tables govern the fusion. With fresh semantics
//! ([`combine_sbs`]), a determinate semantic decision overrides the
//! subtractor and "don't know" defers to it. With possibly-stale
//! semantics ([`combine_rtsbs`]), a change detector arbitrates the
//! disagreement rows: an unchanged pixel repeats the cached semantic
//! decision, a changed pixel falls back to the subtractor. When both
//! classifiers agree, or the cached decision is indeterminate, the change
//! verdict has no effect.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::change::{detect, ChangeParams, ChangeVerdict};
use crate::config::{FusionMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::io::{Frame, SemanticMap};
use crate::raster::{median3x3, Label, Raster};
use crate::semantic::{
    Availability, Schedule, SemanticCache, SemanticDecision, SemanticModel, SemanticParams,
};
use crate::vibe::VibeModel;

/// Combines the subtractor's label with a fresh semantic decision: a
/// determinate decision wins, "don't know" defers to the subtractor.
#[inline]
pub fn combine_sbs(b: Label, s: SemanticDecision) -> Label {
    match s {
        SemanticDecision::Background => Label::Background,
        SemanticDecision::Foreground => Label::Foreground,
        SemanticDecision::DontKnow => b,
    }
}

/// Combines the subtractor's label, the cached semantic decision from
/// `t*`, and the change verdict since `t*`.
///
/// When the cached decision is indeterminate, or agrees with the
/// subtractor, the verdict is irrelevant and the output follows the
/// agreeing side. On disagreement, `NoChange` repeats the cached decision
/// and `Change` falls back to the subtractor; an indeterminate verdict on
/// a disagreement row (which the change detector never produces for a
/// determinate cached decision) also falls back to the subtractor.
#[inline]
pub fn combine_rtsbs(b: Label, s_star: SemanticDecision, c: ChangeVerdict) -> Label {
    match (b, s_star, c) {
        (b, SemanticDecision::DontKnow, _) => b,
        (Label::Background, SemanticDecision::Background, _) => Label::Background,
        (Label::Foreground, SemanticDecision::Foreground, _) => Label::Foreground,
        (b, _, ChangeVerdict::Change | ChangeVerdict::DontCare) => b,
        (_, SemanticDecision::Background, ChangeVerdict::NoChange) => Label::Background,
        (_, SemanticDecision::Foreground, ChangeVerdict::NoChange) => Label::Foreground,
    }
}

/// All four per-pixel rasters produced for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    /// The subtractor's own classification (`B_t`).
    pub bgs_mask: Raster<Label>,
    /// Semantic decision in effect per pixel, fresh or cached (`S_t*`).
    pub semantic_mask: Raster<SemanticDecision>,
    /// Change verdict per pixel (`C_t`).
    pub change_mask: Raster<ChangeVerdict>,
    /// Fused output (`D_t`).
    pub output_mask: Raster<Label>,
}

/// Per-sequence pipeline state: the background model, the semantic
/// baseline and cache, and the resolved configuration.
///
/// Within a frame the stages run in a fixed order: subtractor
/// classification, fresh semantic classification and cache refresh where
/// available, change detection, fusion, then the conservative model
/// updates (subtractor first, semantic baseline last) driven by the fused
/// output when feedback is on or by the subtractor's own labels when off.
pub struct Pipeline {
    mode: FusionMode,
    width: usize,
    height: usize,
    vibe: VibeModel,
    semantic_model: SemanticModel,
    cache: SemanticCache,
    semantic_params: SemanticParams,
    change_params: ChangeParams,
    schedule: Schedule,
    feedback: bool,
    post_filter: bool,
    phi_s: u32,
    sem_rng: ChaCha8Rng,
    next_t: u32,
}

impl Pipeline {
    /// Builds the pipeline, initializing the background model from the
    /// first frame. The first frame must then be processed as well.
    pub fn new(mode: FusionMode, config: &PipelineConfig, first_frame: &Frame) -> Result<Self> {
        config.validate()?;
        let resolved = config.resolve(mode);
        let (w, h) = first_frame.dims();
        let vibe = VibeModel::new(first_frame, resolved.vibe, resolved.seed)?;
        // Separate generator stream for the semantic baseline so schedules
        // that never consume semantics leave the subtractor's stream
        // untouched.
        let mut sem_rng = ChaCha8Rng::seed_from_u64(resolved.seed);
        sem_rng.set_stream(1);
        Ok(Pipeline {
            mode,
            width: w,
            height: h,
            vibe,
            semantic_model: SemanticModel::new(w, h),
            cache: SemanticCache::new(w, h),
            semantic_params: resolved.semantic,
            change_params: resolved.change,
            schedule: resolved.schedule,
            feedback: resolved.feedback,
            post_filter: resolved.post_filter,
            phi_s: resolved.vibe.subsample_factor,
            sem_rng,
            next_t: 1,
        })
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Frame number the next `process` call will be treated as.
    pub fn next_frame_number(&self) -> u32 {
        self.next_t
    }

    /// Availability for frame `t` under the resolved schedule.
    pub fn availability_for(&self, t: u32, explicit_mask: Option<Raster<bool>>) -> Availability {
        self.schedule.availability(t, explicit_mask)
    }

    /// Runs one frame through the pipeline.
    ///
    /// `semantic` must be present exactly when `availability` marks at
    /// least one pixel available, otherwise the call fails with a
    /// schedule error.
    pub fn process(
        &mut self,
        frame: &Frame,
        semantic: Option<&SemanticMap>,
        availability: &Availability,
    ) -> Result<FrameResult> {
        if frame.dims() != (self.width, self.height) {
            return Err(Error::Dimension(format!(
                "frame {}x{} vs pipeline {}x{}",
                frame.width, frame.height, self.width, self.height
            )));
        }
        if let Availability::Mask(m) = availability {
            if (m.width(), m.height()) != (self.width, self.height) {
                return Err(Error::Dimension(
                    "availability mask does not match pipeline dimensions".into(),
                ));
            }
        }
        let available = availability.any();
        match (available, semantic.is_some()) {
            (true, false) => {
                return Err(Error::Schedule(format!(
                    "frame {}: semantic availability scheduled but no map supplied",
                    self.next_t
                )))
            }
            (false, true) => {
                return Err(Error::Schedule(format!(
                    "frame {}: semantic map supplied but schedule marks nothing available",
                    self.next_t
                )))
            }
            _ => {}
        }
        let t = self.next_t;
        self.next_t += 1;

        let bgs_mask = self.vibe.classify(frame)?;

        let fresh = match semantic {
            Some(map) => Some(self.semantic_model.observe_and_classify(
                map,
                availability,
                &self.semantic_params,
            )?),
            None => None,
        };

        let (semantic_mask, change_mask, output_mask) = match self.mode {
            FusionMode::PureBgs => (
                Raster::filled(self.width, self.height, SemanticDecision::DontKnow),
                Raster::filled(self.width, self.height, ChangeVerdict::DontCare),
                bgs_mask.clone(),
            ),
            FusionMode::Sbs => {
                // Fresh decisions only; no cache, no change detection.
                let semantic_mask = fresh.clone().unwrap_or_else(|| {
                    Raster::filled(self.width, self.height, SemanticDecision::DontKnow)
                });
                let mut output = bgs_mask.clone();
                for y in 0..self.height {
                    for x in 0..self.width {
                        output.set(x, y, combine_sbs(bgs_mask.get(x, y), semantic_mask.get(x, y)));
                    }
                }
                (
                    semantic_mask,
                    Raster::filled(self.width, self.height, ChangeVerdict::DontCare),
                    output,
                )
            }
            FusionMode::RtSbs
            | FusionMode::HeuristicNeverRepeat
            | FusionMode::HeuristicAlwaysRepeat => {
                if let Some(decisions) = &fresh {
                    self.cache.refresh(t, frame, decisions, availability)?;
                }
                let semantic_mask = self.cache.decisions();
                let mut change_mask =
                    Raster::filled(self.width, self.height, ChangeVerdict::DontCare);
                let mut output = bgs_mask.clone();
                for y in 0..self.height {
                    for x in 0..self.width {
                        let entry = self.cache.entry(x, y);
                        let verdict = detect(frame.pixel(x, y), &entry, &self.change_params);
                        change_mask.set(x, y, verdict);
                        output.set(
                            x,
                            y,
                            combine_rtsbs(bgs_mask.get(x, y), entry.decision, verdict),
                        );
                    }
                }
                (semantic_mask, change_mask, output)
            }
        };

        let output_mask = if self.post_filter {
            median3x3(&output_mask)
        } else {
            output_mask
        };

        let update_labels = if self.feedback {
            &output_mask
        } else {
            &bgs_mask
        };
        self.vibe.update(frame, update_labels)?;
        if let Some(map) = semantic {
            self.semantic_model.update(
                map,
                update_labels,
                availability,
                self.phi_s,
                &mut self.sem_rng,
            )?;
        }

        Ok(FrameResult {
            bgs_mask,
            semantic_mask,
            change_mask,
            output_mask,
        })
    }
}
