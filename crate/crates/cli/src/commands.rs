//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use rtsbs_core::error::{Error, Result};
use rtsbs_core::eval::{
    score_report, sweep as run_sweep, write_sweep_csv, write_video_report_csv, ScoreReport,
    SweepMode,
};
use rtsbs_core::io::{self, discover_dataset, SequenceDescriptor};
use rtsbs_core::optimize::{
    coordinate_refine, random_search, scene_specific, write_trials_csv, SearchSpace,
    ThresholdParams,
};
use rtsbs_core::runner::{run_source, DiskSequence, RunOutcome};
use rtsbs_core::synth::{self, Background, SynthSpec};

use crate::{config_error, mode_of, EvalOpts, OptimizeOpts, RunOpts, SweepOpts, SynthOpts};

pub fn synth(args: SynthOpts) -> Result<()> {
    let background = if args.gradient {
        Background::Gradient {
            start: [60, 80, 100],
            end: [120, 140, 160],
            drift_per_frame: 0.5,
        }
    } else {
        Background::Solid([90, 110, 130])
    };
    let spec = SynthSpec {
        width: args.width,
        height: args.height,
        num_frames: args.frames,
        objects: synth::random_objects(args.objects, args.width, args.height, args.seed),
        background,
        noise_sigma: args.noise_sigma,
        semantic_fidelity: args.fidelity,
    };
    if args.sequences == 0 {
        return Err(config_error("--sequences must be at least 1"));
    }
    if args.sequences == 1 {
        let seq = synth::generate(&spec, sequence_name(&args.out), args.seed)?;
        synth::write_sequence(&seq, &args.out)?;
        println!("wrote {} frames to {}", args.frames, args.out.display());
    } else {
        for i in 0..args.sequences {
            let name = format!("seq{:02}", i + 1);
            let seq = synth::generate(&spec, &name, args.seed + i as u64)?;
            synth::write_sequence(&seq, &args.out.join(&name))?;
        }
        println!(
            "wrote {} sequences of {} frames under {}",
            args.sequences,
            args.frames,
            args.out.display()
        );
    }
    Ok(())
}

fn sequence_name(path: &Path) -> &str {
    path.file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("sequence")
}

/// Mask directory for a sequence, nested per category when present.
fn mask_dir_for(out: &Path, descriptor: &SequenceDescriptor) -> PathBuf {
    if descriptor.category.is_empty() {
        out.join(&descriptor.name)
    } else {
        out.join(&descriptor.category).join(&descriptor.name)
    }
}

fn print_outcomes(outcomes: &[RunOutcome], report: &ScoreReport) {
    let mut frames = 0usize;
    let mut compute = std::time::Duration::ZERO;
    let mut io_time = std::time::Duration::ZERO;
    for outcome in outcomes {
        frames += outcome.frames_processed;
        compute += outcome.compute;
        io_time += outcome.io;
        let f1 = report.per_video[&outcome.name]
            .1
            .map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{}: {} frames, compute {:.2} s ({:.1} fps), io {:.2} s, F1 {}",
            outcome.name,
            outcome.frames_processed,
            outcome.compute.as_secs_f64(),
            outcome.compute_fps(),
            outcome.io.as_secs_f64(),
            f1,
        );
    }
    let total_fps = if compute.as_secs_f64() > 0.0 {
        frames as f64 / compute.as_secs_f64()
    } else {
        f64::INFINITY
    };
    println!(
        "total: {frames} frames, pipeline compute {:.2} s ({total_fps:.1} fps), file io {:.2} s",
        compute.as_secs_f64(),
        io_time.as_secs_f64(),
    );
    match report.overall {
        Some(v) => println!("overall F1: {v:.6}"),
        None => println!("overall F1: undefined (no ground truth)"),
    }
}

pub fn run(args: RunOpts) -> Result<()> {
    let mut config = args.pipeline.build()?;
    let mode = mode_of(&args.mode, &mut config)?;
    let descriptors = discover_dataset(&args.data)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let jobs: Vec<(SequenceDescriptor, Option<PathBuf>)> = descriptors
        .into_iter()
        .map(|d| {
            let masks = (!args.no_masks).then(|| mask_dir_for(&args.out, &d));
            (d, masks)
        })
        .collect();

    let run_one = |(descriptor, masks): &(SequenceDescriptor, Option<PathBuf>)| {
        let source = DiskSequence::open(descriptor.clone())?;
        run_source(&source, mode, &config, masks.as_deref())
    };

    let mut outcomes: Vec<RunOutcome> = if args.parallel_videos > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.parallel_videos)
            .build()
            .map_err(|e| config_error(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            jobs.par_iter().map(run_one).collect::<Result<Vec<_>>>()
        })?
    } else {
        jobs.iter().map(run_one).collect::<Result<Vec<_>>>()?
    };
    outcomes.sort_by(|a, b| (&a.category, &a.name).cmp(&(&b.category, &b.name)));

    let report = score_report(&outcomes);
    let report_path = args.out.join("report.csv");
    let mut csv = Vec::new();
    write_video_report_csv(&report, &mut csv).expect("in-memory write");
    fs::write(&report_path, csv).map_err(|e| Error::io(&report_path, e))?;

    print_outcomes(&outcomes, &report);
    println!("report: {}", report_path.display());
    Ok(())
}

pub fn eval(args: EvalOpts) -> Result<()> {
    let descriptors = discover_dataset(&args.data)?;
    let mut outcomes = Vec::new();
    for descriptor in descriptors {
        let source = DiskSequence::open(descriptor.clone())?;
        let mask_dir = mask_dir_for(&args.masks, &descriptor);
        let mut confusion = rtsbs_core::Confusion::default();
        let mut frames = 0usize;
        for (frame_number, _) in &descriptor.frames {
            frames += 1;
            if !rtsbs_core::eval::in_temporal_roi(descriptor.temporal_roi, *frame_number) {
                continue;
            }
            use rtsbs_core::runner::FrameSource;
            let Some(gt) = source.ground_truth(*frame_number)? else {
                continue;
            };
            let mask_path = mask_dir.join(format!("bin{frame_number:06}.pgm"));
            if !mask_path.is_file() {
                return Err(Error::Layout(format!(
                    "{}: missing mask for frame {frame_number}",
                    mask_path.display()
                )));
            }
            let mask = io::load_mask(&mask_path)?;
            confusion.accumulate(&mask, &gt)?;
        }
        outcomes.push(RunOutcome {
            name: descriptor.name.clone(),
            category: descriptor.category.clone(),
            confusion,
            frames_processed: frames,
            compute: std::time::Duration::ZERO,
            io: std::time::Duration::ZERO,
        });
    }
    let report = score_report(&outcomes);
    for (name, (c, f1)) in &report.per_video {
        println!(
            "{name}: tp {} fp {} fn {} tn {} F1 {}",
            c.true_positives,
            c.false_positives,
            c.false_negatives,
            c.true_negatives,
            f1.map_or("-".to_string(), |v| format!("{v:.6}")),
        );
    }
    match report.overall {
        Some(v) => println!("overall F1: {v:.6}"),
        None => println!("overall F1: undefined"),
    }
    let report_path = args
        .out
        .unwrap_or_else(|| args.masks.join("report.csv"));
    let mut csv = Vec::new();
    write_video_report_csv(&report, &mut csv).expect("in-memory write");
    fs::write(&report_path, csv).map_err(|e| Error::io(&report_path, e))?;
    println!("report: {}", report_path.display());
    Ok(())
}

pub fn sweep(args: SweepOpts) -> Result<()> {
    let config = args.pipeline.build()?;
    let modes: Vec<SweepMode> = args
        .modes
        .split(',')
        .filter(|t| !t.is_empty())
        .map(SweepMode::parse)
        .collect::<Result<_>>()?;
    let xs: Vec<u32> = args
        .x_values
        .split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| config_error(format!("invalid X value '{t}'")))
        })
        .collect::<Result<_>>()?;
    if modes.is_empty() || xs.is_empty() {
        return Err(config_error("sweep needs at least one mode and one X"));
    }

    let descriptors = discover_dataset(&args.data)?;
    let sources: Vec<DiskSequence> = descriptors
        .into_iter()
        .map(DiskSequence::open)
        .collect::<Result<_>>()?;
    let source_refs: Vec<&dyn rtsbs_core::runner::FrameSource> = sources
        .iter()
        .map(|s| s as &dyn rtsbs_core::runner::FrameSource)
        .collect();

    let rows = run_sweep(&source_refs, &config, &modes, &xs)?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).expect("in-memory write");
    print!("{}", String::from_utf8_lossy(&csv));
    fs::write(&args.out, csv).map_err(|e| Error::io(&args.out, e))?;
    println!("sweep: {}", args.out.display());
    Ok(())
}

pub fn optimize(args: OptimizeOpts) -> Result<()> {
    let mut config = args.pipeline.build()?;
    let mode = mode_of(&args.mode, &mut config)?;
    let descriptors = discover_dataset(&args.data)?;
    let sources: Vec<DiskSequence> = descriptors
        .into_iter()
        .map(DiskSequence::open)
        .collect::<Result<_>>()?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let space = SearchSpace::default();
    let per_video = |params: &ThresholdParams, source: &DiskSequence| -> Result<Option<f64>> {
        let candidate = params.apply_to(&config);
        Ok(run_source(source, mode, &candidate, None)?.confusion.f1())
    };
    let overall = |params: &ThresholdParams| -> Result<Option<f64>> {
        let mut outcomes = Vec::with_capacity(sources.len());
        for source in &sources {
            let candidate = params.apply_to(&config);
            outcomes.push(run_source(source, mode, &candidate, None)?);
        }
        Ok(score_report(&outcomes).overall)
    };

    let defaults = ThresholdParams::from_config(&config);
    let searched = random_search(overall, &space, defaults, args.budget, args.search_seed)?;
    let refined = coordinate_refine(
        overall,
        &space,
        searched.best,
        args.refine_steps,
        args.refine_rounds,
    )?;
    let mut trials = searched.trials;
    trials.extend(refined.trials);

    let trials_path = args.out_dir.join("trials.csv");
    let mut csv = Vec::new();
    write_trials_csv(&trials, &mut csv).expect("in-memory write");
    fs::write(&trials_path, csv).map_err(|e| Error::io(&trials_path, e))?;

    let best_config = refined.best.params.apply_to(&config);
    let best_path = args.out_dir.join("best.conf");
    best_config.write_file(&best_path)?;
    println!(
        "global best: tau_bg {:.2} tau_fg {:.2} tau*_bg {} tau*_fg {} -> F1 {}",
        refined.best.params.tau_bg,
        refined.best.params.tau_fg,
        refined.best.params.tau_star_bg,
        refined.best.params.tau_star_fg,
        refined
            .best
            .score
            .map_or("undefined".to_string(), |v| format!("{v:.6}")),
    );
    println!("trials: {} ({} evaluations)", trials_path.display(), trials.len());
    println!("best config: {}", best_path.display());

    if args.scene_specific {
        let names: Vec<String> = sources
            .iter()
            .map(|s| s.descriptor().name.clone())
            .collect();
        let outcomes = scene_specific(
            |video, params| {
                let source = sources
                    .iter()
                    .find(|s| s.descriptor().name == video)
                    .expect("known video");
                per_video(params, source)
            },
            &names,
            &space,
            refined.best.params,
            args.budget,
            args.refine_steps,
            args.refine_rounds,
            args.search_seed.wrapping_add(1),
        )?;
        let mut scores = Vec::new();
        for (video, outcome) in &outcomes {
            let trials_path = args.out_dir.join(format!("trials_{video}.csv"));
            let mut csv = Vec::new();
            write_trials_csv(&outcome.trials, &mut csv).expect("in-memory write");
            fs::write(&trials_path, csv).map_err(|e| Error::io(&trials_path, e))?;
            let conf_path = args.out_dir.join(format!("best_{video}.conf"));
            outcome.best.params.apply_to(&config).write_file(&conf_path)?;
            println!(
                "{video}: best F1 {}",
                outcome
                    .best
                    .score
                    .map_or("undefined".to_string(), |v| format!("{v:.6}")),
            );
            if let Some(v) = outcome.best.score {
                scores.push(v);
            }
        }
        if !scores.is_empty() {
            println!(
                "scene-specific aggregate F1: {:.6}",
                scores.iter().sum::<f64>() / scores.len() as f64
            );
        }
    }
    Ok(())
}
