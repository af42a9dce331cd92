//! Threshold search over `(tau_bg, tau_fg, tau_star_bg, tau_star_fg)`
//! maximizing overall F1.
//!
//! Seeded random search over the grid, followed by coordinate-wise hill
//! climbing with exponentially spaced probes. The incumbent(s) are always
//! injected as trial 0, so the returned score can never fall below the
//! baseline, and the whole procedure is a deterministic function of
//! `(space, budget, seed)`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::change::MAX_L1_DISTANCE;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};

/// The four thresholds under search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdParams {
    pub tau_bg: f64,
    pub tau_fg: f64,
    pub tau_star_bg: i32,
    pub tau_star_fg: i32,
}

impl ThresholdParams {
    pub fn from_config(config: &PipelineConfig) -> Self {
        ThresholdParams {
            tau_bg: config.semantic.tau_bg as f64,
            tau_fg: config.semantic.tau_fg as f64,
            tau_star_bg: config.change.tau_star_bg,
            tau_star_fg: config.change.tau_star_fg,
        }
    }

    /// Applies the thresholds onto a config, leaving everything else.
    pub fn apply_to(&self, config: &PipelineConfig) -> PipelineConfig {
        let mut out = config.clone();
        out.semantic.tau_bg = self.tau_bg as f32;
        out.semantic.tau_fg = self.tau_fg as f32;
        out.change.tau_star_bg = self.tau_star_bg;
        out.change.tau_star_fg = self.tau_star_fg;
        out
    }
}

/// A continuous axis sampled on a fixed grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    fn num_points(&self) -> u64 {
        ((self.hi - self.lo) / self.step).round() as u64 + 1
    }

    fn point(&self, k: u64) -> f64 {
        (self.lo + k as f64 * self.step).min(self.hi)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.point(rng.random_range(0..self.num_points()))
    }

    fn clamp_to_grid(&self, value: f64) -> f64 {
        let k = ((value - self.lo) / self.step).round().max(0.0) as u64;
        self.point(k.min(self.num_points() - 1))
    }
}

/// An integer axis with inclusive bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntAxis {
    pub lo: i32,
    pub hi: i32,
}

impl IntAxis {
    fn sample<R: Rng>(&self, rng: &mut R) -> i32 {
        rng.random_range(self.lo..=self.hi)
    }
}

/// Search bounds. Default: probability thresholds on a 0.01 grid over
/// [0, 1]; change thresholds over {-1, 0, ..., 765}, where -1 encodes the
/// never-repeat degeneration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchSpace {
    pub tau_bg: GridAxis,
    pub tau_fg: GridAxis,
    pub tau_star_bg: IntAxis,
    pub tau_star_fg: IntAxis,
}

impl Default for SearchSpace {
    fn default() -> Self {
        let prob = GridAxis {
            lo: 0.0,
            hi: 1.0,
            step: 0.01,
        };
        let dist = IntAxis {
            lo: -1,
            hi: MAX_L1_DISTANCE as i32,
        };
        SearchSpace {
            tau_bg: prob,
            tau_fg: prob,
            tau_star_bg: dist,
            tau_star_fg: dist,
        }
    }
}

impl SearchSpace {
    fn sample<R: Rng>(&self, rng: &mut R) -> ThresholdParams {
        ThresholdParams {
            tau_bg: self.tau_bg.sample(rng),
            tau_fg: self.tau_fg.sample(rng),
            tau_star_bg: self.tau_star_bg.sample(rng),
            tau_star_fg: self.tau_star_fg.sample(rng),
        }
    }

    /// Snaps a point onto the grid and into bounds.
    pub fn clamp(&self, p: ThresholdParams) -> ThresholdParams {
        ThresholdParams {
            tau_bg: self.tau_bg.clamp_to_grid(p.tau_bg),
            tau_fg: self.tau_fg.clamp_to_grid(p.tau_fg),
            tau_star_bg: p.tau_star_bg.clamp(self.tau_star_bg.lo, self.tau_star_bg.hi),
            tau_star_fg: p.tau_star_fg.clamp(self.tau_star_fg.lo, self.tau_star_fg.hi),
        }
    }

    fn contains(&self, p: &ThresholdParams) -> bool {
        p.tau_bg >= self.tau_bg.lo - 1e-12
            && p.tau_bg <= self.tau_bg.hi + 1e-12
            && p.tau_fg >= self.tau_fg.lo - 1e-12
            && p.tau_fg <= self.tau_fg.hi + 1e-12
            && (self.tau_star_bg.lo..=self.tau_star_bg.hi).contains(&p.tau_star_bg)
            && (self.tau_star_fg.lo..=self.tau_star_fg.hi).contains(&p.tau_star_fg)
    }
}

/// One objective evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trial {
    pub params: ThresholdParams,
    /// Overall F1, or `None` when undefined.
    pub score: Option<f64>,
    pub seed: u64,
    /// Evaluation index within the search that produced this trial.
    pub budget_id: u32,
}

/// A finished search: the best trial and the full log.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: Trial,
    pub trials: Vec<Trial>,
}

fn better(candidate: Option<f64>, incumbent: Option<f64>) -> bool {
    match (candidate, incumbent) {
        (Some(c), Some(i)) => c > i,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Uniform random search over the grid.
///
/// Trial 0 evaluates the supplied baseline; trials 1..budget sample the
/// space uniformly. Ties keep the earliest trial, so a constant objective
/// returns trial 0. Identical `(space, budget, seed)` produce the
/// identical trial sequence, and a longer budget with the same seed
/// extends the shorter one's sequence.
pub fn random_search<F>(
    mut objective: F,
    space: &SearchSpace,
    baseline: ThresholdParams,
    budget: u32,
    seed: u64,
) -> Result<SearchOutcome>
where
    F: FnMut(&ThresholdParams) -> Result<Option<f64>>,
{
    if budget < 1 {
        return Err(Error::Config("search budget must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(budget as usize);
    let mut best: Option<Trial> = None;
    for budget_id in 0..budget {
        let params = if budget_id == 0 {
            space.clamp(baseline)
        } else {
            space.sample(&mut rng)
        };
        let score = objective(&params)?;
        let trial = Trial {
            params,
            score,
            seed,
            budget_id,
        };
        trials.push(trial);
        if best.is_none() || better(score, best.unwrap().score) {
            best = Some(trial);
        }
    }
    Ok(SearchOutcome {
        best: best.expect("budget >= 1"),
        trials,
    })
}

/// Coordinate-wise hill climbing on the search grid.
///
/// Each round walks the four axes in a fixed order; on each axis the
/// objective is probed at exponentially spaced offsets (1, 2, 4, ... grid
/// units in both directions, `steps_per_axis` magnitudes), moving to the
/// best strictly improving candidate. Stops early when a full round makes
/// no move. The returned score is never below the start's.
pub fn coordinate_refine<F>(
    mut objective: F,
    space: &SearchSpace,
    start: Trial,
    steps_per_axis: u32,
    rounds: u32,
) -> Result<SearchOutcome>
where
    F: FnMut(&ThresholdParams) -> Result<Option<f64>>,
{
    if !space.contains(&start.params) {
        return Err(Error::Config("refinement start lies outside the space".into()));
    }
    let mut current = start;
    let mut trials = Vec::new();
    let mut budget_id = start.budget_id;
    for _ in 0..rounds {
        let mut moved = false;
        for axis in 0..4usize {
            let mut best_candidate: Option<Trial> = None;
            for magnitude in (0..steps_per_axis).map(|j| 1i64 << j) {
                for direction in [-1i64, 1] {
                    let offset = direction * magnitude;
                    let candidate = offset_axis(&current.params, axis, offset, space);
                    let Some(params) = candidate else { continue };
                    let score = objective(&params)?;
                    budget_id += 1;
                    let trial = Trial {
                        params,
                        score,
                        seed: start.seed,
                        budget_id,
                    };
                    trials.push(trial);
                    let incumbent = best_candidate.map_or(current.score, |t| t.score);
                    if better(score, incumbent) {
                        best_candidate = Some(trial);
                    }
                }
            }
            if let Some(winner) = best_candidate {
                current = winner;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(SearchOutcome {
        best: current,
        trials,
    })
}

/// Moves one axis by a signed number of grid units, or `None` when the
/// result leaves the space.
fn offset_axis(
    p: &ThresholdParams,
    axis: usize,
    offset: i64,
    space: &SearchSpace,
) -> Option<ThresholdParams> {
    let mut out = *p;
    match axis {
        0 => out.tau_bg += offset as f64 * space.tau_bg.step,
        1 => out.tau_fg += offset as f64 * space.tau_fg.step,
        2 => out.tau_star_bg = out.tau_star_bg.checked_add(offset as i32)?,
        _ => out.tau_star_fg = out.tau_star_fg.checked_add(offset as i32)?,
    }
    if axis < 2 {
        // Snap float axes back onto the grid to avoid drift.
        out.tau_bg = space.tau_bg.clamp_to_grid(out.tau_bg);
        out.tau_fg = space.tau_fg.clamp_to_grid(out.tau_fg);
    }
    space.contains(&out).then_some(out)
}

/// Runs `random_search` + `coordinate_refine` independently per video,
/// seeding every per-video trial set with the same incumbent (typically
/// the globally optimized parameters), so each per-video best is at least
/// as good as the incumbent on that video.
#[allow(clippy::too_many_arguments)]
pub fn scene_specific<F>(
    mut objective: F,
    videos: &[String],
    space: &SearchSpace,
    incumbent: ThresholdParams,
    budget: u32,
    refine_steps: u32,
    refine_rounds: u32,
    seed: u64,
) -> Result<BTreeMap<String, SearchOutcome>>
where
    F: FnMut(&str, &ThresholdParams) -> Result<Option<f64>>,
{
    let mut out = BTreeMap::new();
    for (i, video) in videos.iter().enumerate() {
        let video_seed = seed.wrapping_add(i as u64);
        let searched = random_search(
            |p| objective(video, p),
            space,
            incumbent,
            budget,
            video_seed,
        )?;
        let refined = coordinate_refine(
            |p| objective(video, p),
            space,
            searched.best,
            refine_steps,
            refine_rounds,
        )?;
        let mut trials = searched.trials;
        trials.extend(refined.trials);
        out.insert(
            video.clone(),
            SearchOutcome {
                best: refined.best,
                trials,
            },
        );
    }
    Ok(out)
}

/// Writes the trial log CSV:
/// `trial,tau_bg,tau_fg,tau_star_bg,tau_star_fg,f1`.
pub fn write_trials_csv<W: Write>(trials: &[Trial], mut out: W) -> std::io::Result<()> {
    writeln!(out, "trial,tau_bg,tau_fg,tau_star_bg,tau_star_fg,f1")?;
    for t in trials {
        let f1 = match t.score {
            Some(v) => format!("{v:.6}"),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{:.2},{:.2},{},{},{}",
            t.budget_id, t.params.tau_bg, t.params.tau_fg, t.params.tau_star_bg,
            t.params.tau_star_fg, f1
        )?;
    }
    Ok(())
}
