//! Three-class semantic classifier, its per-pixel background baseline, and
//! the per-pixel cache of the last semantic decision.
//!
//! The classifier turns a segmentation probability into one of three
//! classes using two signals: a low absolute probability marks background,
//! a large increment over the pixel's baseline marks foreground, and
//! everything else is "don't know". Because segmentation can run slower
//! than the video, decisions are cached per pixel together with the frame
//! number `t*` and the pixel's color at `t*`; downstream stages reuse the
//! cached decision while a change detector certifies it still valid.

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::{Frame, SemanticMap};
use crate::raster::{Label, Raster, Rgb};

/// Output of the semantic classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum SemanticDecision {
    Background,
    Foreground,
    /// The classifier abstains: neither signal fired.
    DontKnow,
}

/// Thresholds for the two semantic signals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemanticParams {
    /// Probabilities at or below this are background. In [0, 1].
    pub tau_bg: f32,
    /// Probability increments over the baseline at or above this are
    /// foreground. In [-1, 1].
    pub tau_fg: f32,
}

impl Default for SemanticParams {
    fn default() -> Self {
        SemanticParams {
            tau_bg: 0.2,
            tau_fg: 0.5,
        }
    }
}

impl SemanticParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau_bg) {
            return Err(Error::Config(format!(
                "tau_bg must lie in [0, 1], got {}",
                self.tau_bg
            )));
        }
        if !(-1.0..=1.0).contains(&self.tau_fg) {
            return Err(Error::Config(format!(
                "tau_fg must lie in [-1, 1], got {}",
                self.tau_fg
            )));
        }
        Ok(())
    }
}

/// Classifies one pixel from its semantic probability and baseline.
///
/// The background rule is checked first; when thresholds make both rules
/// satisfiable the background rule wins. Both comparisons are closed, so
/// `tau_bg = 0` with `p_s = 0` still classifies background.
#[inline]
pub fn classify_semantic(p_s: f32, baseline: f32, params: &SemanticParams) -> SemanticDecision {
    if p_s <= params.tau_bg {
        SemanticDecision::Background
    } else if p_s - baseline >= params.tau_fg {
        SemanticDecision::Foreground
    } else {
        SemanticDecision::DontKnow
    }
}

/// Per-pixel baseline of semantic probability, updated conservatively.
///
/// Each pixel's baseline initializes lazily from the first probability
/// observed for it and afterwards follows background-labeled observations
/// with probability `1/phi_s`.
#[derive(Clone, Debug)]
pub struct SemanticModel {
    width: usize,
    height: usize,
    baseline: Vec<f32>,
    initialized: Vec<bool>,
}

impl SemanticModel {
    pub fn new(width: usize, height: usize) -> Self {
        SemanticModel {
            width,
            height,
            baseline: vec![0.0; width * height],
            initialized: vec![false; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Baseline value for a pixel, if it has been initialized.
    pub fn baseline(&self, x: usize, y: usize) -> Option<f32> {
        let i = y * self.width + x;
        self.initialized[i].then(|| self.baseline[i])
    }

    /// Classifies every available pixel of a probability map, initializing
    /// baselines on first observation. Unavailable pixels get `DontKnow`.
    pub fn observe_and_classify(
        &mut self,
        map: &SemanticMap,
        availability: &Availability,
        params: &SemanticParams,
    ) -> Result<Raster<SemanticDecision>> {
        if map.dims() != (self.width, self.height) {
            return Err(Error::Dimension(
                "semantic map does not match model dimensions".into(),
            ));
        }
        let mut out = Raster::filled(self.width, self.height, SemanticDecision::DontKnow);
        for y in 0..self.height {
            for x in 0..self.width {
                if !availability.is_available(x, y) {
                    continue;
                }
                let i = y * self.width + x;
                let p = map.prob(x, y);
                if !self.initialized[i] {
                    self.baseline[i] = p;
                    self.initialized[i] = true;
                }
                out.set(x, y, classify_semantic(p, self.baseline[i], params));
            }
        }
        Ok(out)
    }

    /// Conservative stochastic baseline update: every available pixel whose
    /// final label is background adopts the observed probability with
    /// probability `1/phi_s`. Foreground pixels are left untouched.
    pub fn update<R: Rng>(
        &mut self,
        map: &SemanticMap,
        final_labels: &Raster<Label>,
        availability: &Availability,
        phi_s: u32,
        rng: &mut R,
    ) -> Result<()> {
        if map.dims() != (self.width, self.height)
            || final_labels.width() != self.width
            || final_labels.height() != self.height
        {
            return Err(Error::Dimension(
                "semantic model update inputs do not share dimensions".into(),
            ));
        }
        if phi_s == 0 {
            return Err(Error::Config("phi_s must be at least 1".into()));
        }
        for y in 0..self.height {
            for x in 0..self.width {
                if !availability.is_available(x, y) {
                    continue;
                }
                if final_labels.get(x, y) != Label::Background {
                    continue;
                }
                if rng.random_range(0..phi_s) == 0 {
                    let i = y * self.width + x;
                    self.baseline[i] = map.prob(x, y);
                    self.initialized[i] = true;
                }
            }
        }
        Ok(())
    }
}

/// One pixel's view of the semantic cache.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CacheEntry {
    /// Frame number of the last semantic availability; `None` before the
    /// first one.
    pub t_star: Option<u32>,
    /// The pixel's color at `t*`.
    pub color: Rgb,
    /// The semantic decision at `t*`; reads as `DontKnow` while empty.
    pub decision: SemanticDecision,
}

/// Per-pixel record of the last available semantic decision, the frame it
/// was made on, and the pixel's color back then.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticCache {
    width: usize,
    height: usize,
    t_star: Vec<u32>, // 0 encodes "never": frame numbers are 1-based
    colors: Vec<u8>,
    decisions: Vec<SemanticDecision>,
}

impl SemanticCache {
    pub fn new(width: usize, height: usize) -> Self {
        SemanticCache {
            width,
            height,
            t_star: vec![0; width * height],
            colors: vec![0; width * height * 3],
            decisions: vec![SemanticDecision::DontKnow; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> CacheEntry {
        let i = y * self.width + x;
        CacheEntry {
            t_star: (self.t_star[i] > 0).then_some(self.t_star[i]),
            color: [
                self.colors[i * 3],
                self.colors[i * 3 + 1],
                self.colors[i * 3 + 2],
            ],
            decision: self.decisions[i],
        }
    }

    /// Decisions currently held, pixel by pixel (fresh or stale).
    pub fn decisions(&self) -> Raster<SemanticDecision> {
        Raster::from_vec(self.width, self.height, self.decisions.clone())
    }

    /// Records time, color, and decision at every available pixel; other
    /// pixels keep their entries.
    pub fn refresh(
        &mut self,
        t: u32,
        frame: &Frame,
        decisions: &Raster<SemanticDecision>,
        availability: &Availability,
    ) -> Result<()> {
        if frame.dims() != (self.width, self.height)
            || decisions.width() != self.width
            || decisions.height() != self.height
        {
            return Err(Error::Dimension(
                "cache refresh inputs do not share dimensions".into(),
            ));
        }
        for y in 0..self.height {
            for x in 0..self.width {
                if !availability.is_available(x, y) {
                    continue;
                }
                let i = y * self.width + x;
                self.t_star[i] = t;
                let c = frame.pixel(x, y);
                self.colors[i * 3..i * 3 + 3].copy_from_slice(&c);
                self.decisions[i] = decisions.get(x, y);
            }
        }
        Ok(())
    }
}

/// Which pixels carry semantic information on a given frame.
#[derive(Clone, Debug, PartialEq)]
pub enum Availability {
    /// Every pixel.
    All,
    /// No pixel.
    None,
    /// Per-pixel mask.
    Mask(Raster<bool>),
}

impl Availability {
    #[inline]
    pub fn is_available(&self, x: usize, y: usize) -> bool {
        match self {
            Availability::All => true,
            Availability::None => false,
            Availability::Mask(m) => m.get(x, y),
        }
    }

    /// True when at least one pixel is available.
    pub fn any(&self) -> bool {
        match self {
            Availability::All => true,
            Availability::None => false,
            Availability::Mask(m) => m.iter().any(|b| *b),
        }
    }
}

/// When semantic information arrives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// One in every `X` frames is semantic-bearing, starting at frame 1.
    EveryKth(u32),
    /// Per-pixel masks supplied externally (`avail%06d.pgm` files).
    Explicit,
    /// Semantic information never arrives.
    Never,
}

impl Schedule {
    pub fn every_kth(x: u32) -> Result<Self> {
        if x < 1 {
            return Err(Error::Config("semantic frame rate X must be >= 1".into()));
        }
        Ok(Schedule::EveryKth(x))
    }

    /// Availability for frame `t` (1-based). `Explicit` consumes the
    /// supplied mask; a missing mask means nothing is available, which is
    /// a legal schedule, not an error.
    pub fn availability(&self, t: u32, explicit_mask: Option<Raster<bool>>) -> Availability {
        match self {
            Schedule::EveryKth(x) => {
                if (t - 1).is_multiple_of(*x) {
                    Availability::All
                } else {
                    Availability::None
                }
            }
            Schedule::Never => Availability::None,
            Schedule::Explicit => match explicit_mask {
                Some(m) => Availability::Mask(m),
                Option::None => Availability::None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(tau_bg: f32, tau_fg: f32) -> SemanticParams {
        SemanticParams { tau_bg, tau_fg }
    }

    #[test]
    fn classify_rule_examples() {
        let p = params(0.1, 0.2);
        assert_eq!(classify_semantic(0.0, 0.0, &p), SemanticDecision::Background);
        assert_eq!(classify_semantic(0.9, 0.1, &p), SemanticDecision::Foreground);
        assert_eq!(classify_semantic(0.3, 0.25, &p), SemanticDecision::DontKnow);
    }

    #[test]
    fn background_rule_takes_precedence() {
        // tau_bg large enough that both rules fire; background must win.
        let p = params(0.9, 0.1);
        assert_eq!(classify_semantic(0.8, 0.0, &p), SemanticDecision::Background);
    }

    #[test]
    fn closed_boundaries() {
        let p = params(0.0, 0.5);
        assert_eq!(classify_semantic(0.0, 0.0, &p), SemanticDecision::Background);
        let p = params(0.1, 0.5);
        assert_eq!(classify_semantic(0.6, 0.1, &p), SemanticDecision::Foreground);
    }

    fn uniform_map(w: usize, h: usize, v: u8) -> SemanticMap {
        SemanticMap::new(w, h, vec![v; w * h], 1).unwrap()
    }

    fn uniform_frame(w: usize, h: usize, c: Rgb) -> Frame {
        let mut data = Vec::with_capacity(w * h * 3);
        for _ in 0..w * h {
            data.extend_from_slice(&c);
        }
        Frame::new(w, h, data, 1).unwrap()
    }

    #[test]
    fn model_update_is_conservative() {
        let mut model = SemanticModel::new(4, 4);
        let map = uniform_map(4, 4, 200);
        let _ = model
            .observe_and_classify(&map, &Availability::All, &SemanticParams::default())
            .unwrap();
        let before = model.clone();
        let all_fg = Raster::filled(4, 4, Label::Foreground);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        model
            .update(&map, &all_fg, &Availability::All, 1, &mut rng)
            .unwrap();
        assert_eq!(model.baseline(2, 2), before.baseline(2, 2));
    }

    #[test]
    fn model_update_forced_with_phi_one() {
        let mut model = SemanticModel::new(3, 3);
        let first = uniform_map(3, 3, 10);
        let _ = model
            .observe_and_classify(&first, &Availability::All, &SemanticParams::default())
            .unwrap();
        let next = uniform_map(3, 3, 250);
        let all_bg = Raster::filled(3, 3, Label::Background);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        model
            .update(&next, &all_bg, &Availability::All, 1, &mut rng)
            .unwrap();
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(model.baseline(x, y), Some(250.0 / 255.0));
            }
        }
    }

    #[test]
    fn model_update_deterministic_under_seed() {
        let run = || {
            let mut model = SemanticModel::new(8, 8);
            let map = uniform_map(8, 8, 77);
            let _ = model
                .observe_and_classify(&map, &Availability::All, &SemanticParams::default())
                .unwrap();
            let next = uniform_map(8, 8, 200);
            let all_bg = Raster::filled(8, 8, Label::Background);
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            model
                .update(&next, &all_bg, &Availability::All, 16, &mut rng)
                .unwrap();
            format!("{:?}", model)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn cache_refresh_masked() {
        let mut cache = SemanticCache::new(2, 2);
        let frame = uniform_frame(2, 2, [9, 8, 7]);
        let decisions = Raster::filled(2, 2, SemanticDecision::Foreground);

        let untouched = cache.clone();
        cache
            .refresh(3, &frame, &decisions, &Availability::None)
            .unwrap();
        assert_eq!(cache, untouched);

        let checker = Raster::from_vec(2, 2, vec![true, false, false, true]);
        cache
            .refresh(3, &frame, &decisions, &Availability::Mask(checker))
            .unwrap();
        assert_eq!(cache.entry(0, 0).t_star, Some(3));
        assert_eq!(cache.entry(1, 0).t_star, None);
        assert_eq!(cache.entry(1, 0).decision, SemanticDecision::DontKnow);
        assert_eq!(cache.entry(1, 1).color, [9, 8, 7]);

        cache
            .refresh(5, &frame, &decisions, &Availability::All)
            .unwrap();
        for y in 0..2 {
            for x in 0..2 {
                assert_eq!(cache.entry(x, y).t_star, Some(5));
            }
        }
    }

    #[test]
    fn cache_reads_back_frame_state_until_next_refresh() {
        let mut cache = SemanticCache::new(2, 1);
        let frame = uniform_frame(2, 1, [1, 2, 3]);
        let mut decisions = Raster::filled(2, 1, SemanticDecision::Background);
        decisions.set(1, 0, SemanticDecision::Foreground);
        cache.refresh(7, &frame, &decisions, &Availability::All).unwrap();
        // Reads at later times with no intervening refresh return frame-7 state.
        let e = cache.entry(1, 0);
        assert_eq!(e.t_star, Some(7));
        assert_eq!(e.color, [1, 2, 3]);
        assert_eq!(e.decision, SemanticDecision::Foreground);
    }

    #[test]
    fn schedule_every_kth() {
        let s1 = Schedule::every_kth(1).unwrap();
        for t in 1..=7 {
            assert!(matches!(s1.availability(t, None), Availability::All));
        }
        let s5 = Schedule::every_kth(5).unwrap();
        for t in [1u32, 6, 11] {
            assert!(matches!(s5.availability(t, None), Availability::All));
        }
        for t in 2..=5 {
            assert!(matches!(s5.availability(t, None), Availability::None));
        }
        assert!(Schedule::every_kth(0).is_err());
    }

    #[test]
    fn never_schedule_keeps_classifier_silent() {
        let mut model = SemanticModel::new(2, 2);
        let map = uniform_map(2, 2, 255);
        let schedule = Schedule::Never;
        for t in 1..=10 {
            let avail = schedule.availability(t, None);
            let out = model
                .observe_and_classify(&map, &avail, &SemanticParams::default())
                .unwrap();
            assert!(out.iter().all(|d| *d == SemanticDecision::DontKnow));
        }
    }

    proptest! {
        #[test]
        fn raising_probability_never_moves_fg_to_bg(
            p1 in 0.0f32..=1.0,
            p2 in 0.0f32..=1.0,
            baseline in 0.0f32..=1.0,
            tau_bg in 0.0f32..=1.0,
            tau_fg in -1.0f32..=1.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let params = params(tau_bg, tau_fg);
            let a = classify_semantic(lo, baseline, &params);
            let b = classify_semantic(hi, baseline, &params);
            prop_assert!(!(a == SemanticDecision::Foreground && b == SemanticDecision::Background));
        }

        #[test]
        fn full_availability_keeps_cache_fresh(t in 1u32..100) {
            let mut cache = SemanticCache::new(3, 3);
            let frame = uniform_frame(3, 3, [5, 5, 5]);
            let decisions = Raster::filled(3, 3, SemanticDecision::Background);
            let schedule = Schedule::every_kth(1).unwrap();
            for step in 1..=t {
                let avail = schedule.availability(step, None);
                cache.refresh(step, &frame, &decisions, &avail).unwrap();
                prop_assert_eq!(cache.entry(1, 1).t_star, Some(step));
            }
        }
    }
}
