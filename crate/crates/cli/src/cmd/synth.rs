use std::fs;
use std::path::PathBuf;

use trigfit_core::audio::{write_wav, AudioSignal};
use trigfit_core::sinefit::{resynthesize, DecompositionRecord};

use crate::config::ConfigFile;
use crate::error::{io_error, CliError};
use crate::manifest::RunManifest;
use crate::SynthArgs;

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_ref())?;
    let fits_path: PathBuf = cfg.require(args.fits, "fits")?;
    let out: PathBuf = cfg.resolve(args.out, "out", PathBuf::from("resynthesis.wav"))?;
    let no_amplitude = args.no_amplitude || cfg.get::<bool>("no-amplitude")?.unwrap_or(false);
    let divide = args.divide || cfg.get::<bool>("divide")?.unwrap_or(false);

    let text = fs::read_to_string(&fits_path).map_err(|e| io_error(&fits_path, e))?;
    let record: DecompositionRecord = serde_json::from_str(&text).map_err(|e| {
        CliError::io_format(format!("{}: invalid fits JSON: {e}", fits_path.display()))
    })?;

    // Flags override the configuration stored at decomposition time.
    let include_amplitude = if no_amplitude {
        false
    } else {
        record.config.include_amplitude_in_resynthesis
    };
    let divide_by_n = divide || record.config.divide_by_n_waves;

    let resynth = resynthesize(
        &record.resynth_frames(),
        record.frame_len,
        record.rate_divisor,
        record.normalization,
        include_amplitude,
        divide_by_n,
    )?;
    let signal = AudioSignal::new(record.sample_rate, resynth.samples)?;
    write_wav(&signal, &out)?;

    let mut manifest = RunManifest::new("synth");
    manifest
        .arg("fits", fits_path.display().to_string())
        .arg("out", out.display().to_string())
        .arg("no-amplitude", no_amplitude)
        .arg("divide", divide)
        .arg("include-amplitude-effective", include_amplitude)
        .arg("divide-effective", divide_by_n)
        .input(&fits_path)?;
    manifest.output(&out);
    manifest.write_beside(&out)?;

    println!(
        "wrote {} ({} samples, clamped {})",
        out.display(),
        signal.len(),
        resynth.clamped
    );
    Ok(())
}
