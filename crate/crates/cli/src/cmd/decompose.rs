use std::path::PathBuf;

use trigfit_core::audio::{
    self, load_wav_left, frames_to_csv, NormalizationScope, STANDARD_RATE_DIVISOR,
};
use trigfit_core::sinefit::{decompose, DecompositionRecord, FitConfig, FrameOutcome, TrainingMode};

use crate::config::{ensure_dir, write_text, ConfigFile};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::DecomposeArgs;

pub fn run(args: DecomposeArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_ref())?;
    let wav: PathBuf = cfg.require(args.wav, "wav")?;
    let n_frames = cfg.resolve(args.frames, "frames", 800)?;
    let frame_len = cfg.resolve(args.frame_len, "frame-len", 1000)?;
    let n_waves = cfg.resolve(args.waves, "waves", 20)?;
    let passes = cfg.resolve(args.passes, "passes", 10)?;
    let step = cfg.resolve(args.step, "step", 1.0)?;
    let mode = match (args.mode, cfg.get::<String>("mode")?) {
        (Some(m), _) => m,
        (None, Some(token)) => crate::parse_mode(&token).map_err(CliError::argument)?,
        (None, None) => TrainingMode::Independent,
    };
    let use_header_rate =
        args.use_header_rate || cfg.get::<bool>("use-header-rate")?.unwrap_or(false);
    let per_frame_norm =
        args.per_frame_norm || cfg.get::<bool>("per-frame-norm")?.unwrap_or(false);
    let threads = match args.threads {
        Some(t) => Some(t),
        None => cfg.get::<usize>("threads")?,
    };
    let out_dir = cfg.resolve(args.out_dir, "out-dir", PathBuf::from("trigfit-decompose"))?;
    let frames_csv = match args.frames_csv {
        Some(p) => Some(p),
        None => cfg.get::<PathBuf>("frames-csv")?,
    };

    let signal = load_wav_left(&wav)?;
    let rate_divisor = if use_header_rate {
        f64::from(signal.sample_rate)
    } else {
        cfg.resolve(args.rate_divisor, "rate-divisor", STANDARD_RATE_DIVISOR)?
    };
    let scope = if per_frame_norm {
        NormalizationScope::PerFrame
    } else {
        NormalizationScope::Global
    };
    let fit_config = FitConfig {
        n_waves,
        passes,
        step,
        mode,
        ..FitConfig::default()
    };

    let outcomes = match threads {
        Some(t) if t >= 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::argument(format!("--threads {t}: {e}")))?;
            pool.install(|| decompose(&signal, &fit_config, n_frames, frame_len, rate_divisor, scope))?
        }
        Some(t) => {
            return Err(CliError::argument(format!(
                "--threads must be at least 1, got {t}"
            )))
        }
        None => decompose(&signal, &fit_config, n_frames, frame_len, rate_divisor, scope)?,
    };

    ensure_dir(&out_dir)?;
    let mut manifest = RunManifest::new("decompose");
    manifest
        .arg("wav", wav.display().to_string())
        .arg("frames", n_frames)
        .arg("frame-len", frame_len)
        .arg("waves", n_waves)
        .arg("passes", passes)
        .arg("step", step)
        .arg(
            "mode",
            match mode {
                TrainingMode::Independent => "independent",
                TrainingMode::Dependent => "dependent",
            },
        )
        .arg("rate-divisor", rate_divisor)
        .arg("use-header-rate", use_header_rate)
        .arg("per-frame-norm", per_frame_norm)
        .arg("threads", threads)
        .arg("out-dir", out_dir.display().to_string())
        .input(&wav)?;

    let record = DecompositionRecord::from_outcomes(
        &signal,
        &fit_config,
        n_frames,
        frame_len,
        rate_divisor,
        scope,
        &outcomes,
    );
    let fits_path = out_dir.join("fits.json");
    write_text(
        &fits_path,
        &serde_json::to_string_pretty(&record).expect("record serializes"),
    )?;
    manifest.output(&fits_path);

    let mut losses = String::from("frame,start_index,frame_loss,diverged\n");
    for (k, outcome) in outcomes.iter().enumerate() {
        match outcome {
            FrameOutcome::Converged(fit) => {
                losses.push_str(&format!("{k},{},{},false\n", fit.start_index, fit.frame_loss));
            }
            FrameOutcome::Diverged(info) => {
                losses.push_str(&format!("{k},{},,true\n", info.start_index));
            }
        }
    }
    let losses_path = out_dir.join("frame_losses.csv");
    write_text(&losses_path, &losses)?;
    manifest.output(&losses_path);

    // Predicted-vs-original trace for plotting.
    let frames = audio::prepare_frames(&signal, rate_divisor, n_frames, frame_len, scope)?;
    let trace_path = out_dir.join("trace.csv");
    write_text(&trace_path, &trigfit_core::sinefit::trace_csv(&frames, &outcomes))?;
    manifest.output(&trace_path);

    if let Some(path) = &frames_csv {
        write_text(path, &frames_to_csv(&frames))?;
        manifest.arg("frames-csv", path.display().to_string());
        manifest.output(path);
    }

    manifest.write_in_dir(&out_dir)?;
    let diverged = outcomes.iter().filter(|o| o.is_diverged()).count();
    println!(
        "decomposed {n_frames} frames ({} converged, {diverged} diverged) into {}",
        n_frames - diverged,
        out_dir.display()
    );
    Ok(())
}
