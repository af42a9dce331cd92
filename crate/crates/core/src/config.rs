//! Pipeline configuration, fusion modes, and the key-value config file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::change::{ChangeParams, MAX_L1_DISTANCE};
use crate::error::{Error, Result};
use crate::semantic::{Schedule, SemanticParams};
use crate::vibe::VibeParams;

/// How the subtractor, the semantic classifier, and the change detector
/// are combined.
///
/// The two heuristics are not separate code paths: they run the full
/// pipeline with the change thresholds forced to -1 (discard every cached
/// decision) or to the distance upper bound (repeat every cached
/// decision).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionMode {
    /// Background subtraction alone; semantics never consumed.
    PureBgs,
    /// Fresh semantic decisions only; frames or pixels without semantic
    /// data fall back to the subtractor.
    Sbs,
    /// Cached semantic decisions reused while the change detector
    /// certifies them.
    RtSbs,
    /// RT-SBS with both change thresholds forced negative.
    HeuristicNeverRepeat,
    /// RT-SBS with both change thresholds forced past the distance bound.
    HeuristicAlwaysRepeat,
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vibe" => Ok(FusionMode::PureBgs),
            "sbs" => Ok(FusionMode::Sbs),
            "rtsbs" => Ok(FusionMode::RtSbs),
            "never" => Ok(FusionMode::HeuristicNeverRepeat),
            "always" => Ok(FusionMode::HeuristicAlwaysRepeat),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected vibe, sbs, rtsbs, never, or always)"
            ))),
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FusionMode::PureBgs => "vibe",
            FusionMode::Sbs => "sbs",
            FusionMode::RtSbs => "rtsbs",
            FusionMode::HeuristicNeverRepeat => "never",
            FusionMode::HeuristicAlwaysRepeat => "always",
        };
        f.write_str(s)
    }
}

/// Everything a pipeline run needs besides the mode and the data.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub vibe: VibeParams,
    pub semantic: SemanticParams,
    pub change: ChangeParams,
    pub schedule: Schedule,
    /// Drive the conservative model updates with the fused output instead
    /// of the subtractor's own labels.
    pub feedback: bool,
    pub seed: u64,
    /// Apply a 3x3 majority filter to the output mask.
    pub post_filter: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vibe: VibeParams::default(),
            semantic: SemanticParams::default(),
            change: ChangeParams::default(),
            schedule: Schedule::EveryKth(1),
            feedback: false,
            seed: 1,
            post_filter: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.vibe.validate()?;
        self.semantic.validate()?;
        if let Schedule::EveryKth(x) = self.schedule {
            if x < 1 {
                return Err(Error::Config("semantic frame rate X must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Semantic frame rate when the schedule is frame-based.
    pub fn x(&self) -> Option<u32> {
        match self.schedule {
            Schedule::EveryKth(x) => Some(x),
            _ => None,
        }
    }

    pub fn with_x(mut self, x: u32) -> Result<Self> {
        self.schedule = Schedule::every_kth(x)?;
        Ok(self)
    }

    /// Effective change thresholds and schedule once the mode's forced
    /// settings are applied.
    pub fn resolve(&self, mode: FusionMode) -> PipelineConfig {
        let mut resolved = self.clone();
        match mode {
            FusionMode::PureBgs => {
                resolved.schedule = Schedule::Never;
                resolved.feedback = false;
            }
            FusionMode::Sbs | FusionMode::RtSbs => {}
            FusionMode::HeuristicNeverRepeat => {
                resolved.change = ChangeParams {
                    tau_star_bg: -1,
                    tau_star_fg: -1,
                };
            }
            FusionMode::HeuristicAlwaysRepeat => {
                resolved.change = ChangeParams {
                    tau_star_bg: MAX_L1_DISTANCE as i32,
                    tau_star_fg: MAX_L1_DISTANCE as i32,
                };
            }
        }
        resolved
    }

    /// Serializes to the key-value config format.
    pub fn to_config_text(&self) -> String {
        let x = match self.schedule {
            Schedule::EveryKth(x) => x,
            // The file format only carries frame-based schedules.
            _ => 1,
        };
        format!(
            "tau_bg = {}\ntau_fg = {}\ntau_star_bg = {}\ntau_star_fg = {}\n\
             X = {}\nfeedback = {}\nseed = {}\nN = {}\nR = {}\n\
             min_matches = {}\nphi = {}\npost_filter = {}\n",
            self.semantic.tau_bg,
            self.semantic.tau_fg,
            self.change.tau_star_bg,
            self.change.tau_star_fg,
            x,
            self.feedback,
            self.seed,
            self.vibe.num_samples,
            self.vibe.match_radius,
            self.vibe.min_matches,
            self.vibe.subsample_factor,
            self.post_filter,
        )
    }

    /// Applies one config key. Used by both the file parser and CLI
    /// overrides so the two surfaces accept identical keys.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
        }
        match key {
            "tau_bg" => self.semantic.tau_bg = parse(key, value)?,
            "tau_fg" => self.semantic.tau_fg = parse(key, value)?,
            "tau_star_bg" => self.change.tau_star_bg = parse(key, value)?,
            "tau_star_fg" => self.change.tau_star_fg = parse(key, value)?,
            "X" => self.schedule = Schedule::every_kth(parse(key, value)?)?,
            "feedback" => self.feedback = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "N" => self.vibe.num_samples = parse(key, value)?,
            "R" => self.vibe.match_radius = parse(key, value)?,
            "min_matches" => self.vibe.min_matches = parse(key, value)?,
            "phi" => self.vibe.subsample_factor = parse(key, value)?,
            "post_filter" => self.post_filter = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Loads a config file (`key = value` lines, `#` comments) over the
    /// defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = PipelineConfig::default();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected 'key = value'",
                    path.display(),
                    line_no + 1
                ))
            })?;
            config.apply_key(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_config_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "on" => Ok(true),
        "false" | "0" | "off" => Ok(false),
        other => Err(Error::Config(format!(
            "invalid boolean '{other}' for key '{key}'"
        ))),
    }
}
