//! Frame-wise decomposition into sums of sinusoids by per-wave stochastic
//! gradient descent.
//!
//! Each frame is explained by `n_waves` sinusoids `a * sin(2*pi*(f*t + p))`
//! fitted one wave at a time against the residual implied by the running
//! superposition buffer `h`: wave `k` trains for `passes` sweeps over the
//! samples, then its output is added into `h` before wave `k+1` starts.
//!
//! Within a sample the three parameters update in the fixed order amplitude,
//! frequency, phase, each gradient evaluated with the parameter values
//! current at that instant, and each applied subtractively scaled by the
//! step. Two gradient modes exist: independent training derives each
//! parameter's gradient with the other two held at their neutral values
//! (a = 1, f = 1, p = 0); dependent training carries the current values of
//! the other parameters through. Everything is deterministic: there is no
//! randomness anywhere in the procedure.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{
    frame_normalization, prepare_frames, AudioError, AudioSignal, Frame, NormalizationScope,
    TimeNormalization,
};

#[derive(Debug, Error)]
pub enum SineFitError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("divergence: non-finite parameter in wave {wave}, pass {pass}, sample {sample}")]
    Divergence {
        wave: usize,
        pass: usize,
        sample: usize,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Amplitude, frequency, and phase of one sinusoid. Phase is in cycles; it
/// is multiplied by 2*pi inside the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl WaveParams {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
        }
    }

    fn is_finite(&self) -> bool {
        self.amplitude.is_finite() && self.frequency.is_finite() && self.phase.is_finite()
    }
}

/// The neutral starting point the independent gradients assume.
impl Default for WaveParams {
    fn default() -> Self {
        Self::new(1.0, 1.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingMode {
    Independent,
    Dependent,
}

/// Knobs for [`fit_frame`] and resynthesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_waves: usize,
    pub passes: usize,
    pub step: f64,
    pub mode: TrainingMode,
    pub init: WaveParams,
    pub include_amplitude_in_resynthesis: bool,
    pub divide_by_n_waves: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_waves: 20,
            passes: 10,
            step: 1.0,
            mode: TrainingMode::Independent,
            init: WaveParams::default(),
            include_amplitude_in_resynthesis: true,
            divide_by_n_waves: false,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), SineFitError> {
        if self.n_waves == 0 || self.passes == 0 {
            return Err(SineFitError::InvalidArgument(
                "n_waves and passes must be at least 1".to_string(),
            ));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SineFitError::InvalidArgument(format!(
                "step must be positive and finite, got {}",
                self.step
            )));
        }
        if !self.init.is_finite() {
            return Err(SineFitError::InvalidArgument(
                "initial parameters must be finite".to_string(),
            ));
        }
        Ok(())
    }
}

// Per-parameter gradients. Each equals `step` times the derivative of its
// own half-squared per-sample loss with respect to its parameter.

fn ga_independent(a: f64, h: f64, x: f64, y: f64, step: f64) -> f64 {
    let s = (TAU * x).sin();
    step * (h + a * s - y) * s
}

fn gf_shared(f: f64, h: f64, x: f64, y: f64, step: f64) -> f64 {
    step * (h + (TAU * f * x).sin() - y) * (TAU * x * (TAU * f * x).cos())
}

fn gp_independent(p: f64, h: f64, x: f64, y: f64, step: f64) -> f64 {
    step * (h + (TAU * x + TAU * p).sin() - y) * (TAU * (TAU * x + TAU * p).cos())
}

fn ga_dependent(a: f64, f: f64, h: f64, x: f64, y: f64, step: f64) -> f64 {
    let s = (TAU * f * x).sin();
    step * (h + a * s - y) * s
}

fn gp_dependent(a: f64, f: f64, p: f64, h: f64, x: f64, y: f64, step: f64) -> f64 {
    let arg = TAU * f * x + TAU * p;
    step * (h + a * arg.sin() - y) * (TAU * a * arg.cos())
}

/// Independent-mode gradients `(Ga, Gf, Gp)`: each parameter's loss holds
/// the other two at their neutral values.
pub fn gradients_independent(w: &WaveParams, h: f64, x: f64, y: f64, step: f64) -> (f64, f64, f64) {
    (
        ga_independent(w.amplitude, h, x, y, step),
        gf_shared(w.frequency, h, x, y, step),
        gp_independent(w.phase, h, x, y, step),
    )
}

/// Dependent-mode gradients `(Ga, Gf, Gp)`: amplitude is trained with
/// respect to the current frequency, and phase with respect to both.
pub fn gradients_dependent(w: &WaveParams, h: f64, x: f64, y: f64, step: f64) -> (f64, f64, f64) {
    (
        ga_dependent(w.amplitude, w.frequency, h, x, y, step),
        gf_shared(w.frequency, h, x, y, step),
        gp_dependent(w.amplitude, w.frequency, w.phase, h, x, y, step),
    )
}

/// Result of fitting one frame: the wave parameters in training order, the
/// final superposition buffer, and the squared-error sum of that buffer
/// against the targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFit {
    pub start_index: usize,
    pub params: Vec<WaveParams>,
    pub final_h: Vec<f64>,
    pub frame_loss: f64,
}

/// Fit `cfg.n_waves` sinusoids to one frame.
pub fn fit_frame(frame: &Frame, cfg: &FitConfig) -> Result<FrameFit, SineFitError> {
    cfg.validate()?;
    if frame.is_empty() {
        return Err(SineFitError::InvalidArgument(
            "frame must hold at least one sample".to_string(),
        ));
    }
    let n = frame.len();
    let mut h = vec![0.0f64; n];
    let mut params = Vec::with_capacity(cfg.n_waves);
    for wave in 0..cfg.n_waves {
        let mut w = cfg.init;
        for pass in 0..cfg.passes {
            for (i, ((&x, &y), &hi)) in frame
                .times
                .iter()
                .zip(&frame.targets)
                .zip(h.iter())
                .enumerate()
            {
                match cfg.mode {
                    TrainingMode::Independent => {
                        // Each independent gradient touches a disjoint
                        // parameter, so one evaluation per sample equals the
                        // sequential amplitude-frequency-phase update.
                        let (ga, gf, gp) = gradients_independent(&w, hi, x, y, cfg.step);
                        w.amplitude -= ga;
                        w.frequency -= gf;
                        w.phase -= gp;
                    }
                    TrainingMode::Dependent => {
                        let ga = ga_dependent(w.amplitude, w.frequency, hi, x, y, cfg.step);
                        w.amplitude -= ga;
                        let gf = gf_shared(w.frequency, hi, x, y, cfg.step);
                        w.frequency -= gf;
                        let gp =
                            gp_dependent(w.amplitude, w.frequency, w.phase, hi, x, y, cfg.step);
                        w.phase -= gp;
                    }
                }
                if !w.is_finite() {
                    return Err(SineFitError::Divergence {
                        wave,
                        pass,
                        sample: i,
                    });
                }
            }
        }
        for (hv, &t) in h.iter_mut().zip(&frame.times) {
            *hv += w.amplitude * (TAU * (w.frequency * t + w.phase)).sin();
        }
        params.push(w);
    }
    let frame_loss = frame
        .targets
        .iter()
        .zip(&h)
        .map(|(y, hv)| (hv - y) * (hv - y))
        .sum();
    Ok(FrameFit {
        start_index: frame.start_index,
        params,
        final_h: h,
        frame_loss,
    })
}

/// Superpose waves over a time axis: `sum_i [a_i or 1] * sin(2*pi*(f_i*t +
/// p_i))`, optionally divided by the wave count.
pub fn superpose(
    params: &[WaveParams],
    times: &[f64],
    include_amplitude: bool,
    divide_by_n: bool,
) -> Vec<f64> {
    let mut out = vec![0.0f64; times.len()];
    for w in params {
        let amp = if include_amplitude { w.amplitude } else { 1.0 };
        for (o, &t) in out.iter_mut().zip(times) {
            *o += amp * (TAU * (w.frequency * t + w.phase)).sin();
        }
    }
    if divide_by_n && !params.is_empty() {
        let n = params.len() as f64;
        for o in &mut out {
            *o /= n;
        }
    }
    out
}

/// Squared-error sum of the superposition against the frame targets.
pub fn frame_loss(
    params: &[WaveParams],
    frame: &Frame,
    include_amplitude: bool,
    divide_by_n: bool,
) -> f64 {
    superpose(params, &frame.times, include_amplitude, divide_by_n)
        .iter()
        .zip(&frame.targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum()
}

/// Where and when a frame's training blew up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceInfo {
    pub start_index: usize,
    pub wave: usize,
    pub pass: usize,
    pub sample: usize,
}

/// Per-frame outcome of [`decompose`]: diverged frames are flagged, not
/// fatal, and resynthesize as silence.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameOutcome {
    Converged(FrameFit),
    Diverged(DivergenceInfo),
}

impl FrameOutcome {
    pub fn start_index(&self) -> usize {
        match self {
            FrameOutcome::Converged(fit) => fit.start_index,
            FrameOutcome::Diverged(info) => info.start_index,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, FrameOutcome::Diverged(_))
    }
}

/// Segment the signal and fit every frame. Frames are independent so they
/// run in parallel; output order matches frame order and is bit-identical to
/// a sequential run.
pub fn decompose(
    signal: &AudioSignal,
    cfg: &FitConfig,
    n_frames: usize,
    frame_len: usize,
    rate_divisor: f64,
    scope: NormalizationScope,
) -> Result<Vec<FrameOutcome>, SineFitError> {
    cfg.validate()?;
    let frames = prepare_frames(signal, rate_divisor, n_frames, frame_len, scope)?;
    Ok(frames
        .par_iter()
        .map(|frame| match fit_frame(frame, cfg) {
            Ok(fit) => FrameOutcome::Converged(fit),
            Err(SineFitError::Divergence { wave, pass, sample }) => {
                FrameOutcome::Diverged(DivergenceInfo {
                    start_index: frame.start_index,
                    wave,
                    pass,
                    sample,
                })
            }
            Err(e) => unreachable!("fit_frame only fails by divergence on valid input: {e}"),
        })
        .collect())
}

/// The minimum a frame contributes to resynthesis: its start and its fitted
/// waves (`None` for diverged frames, which come back as silence).
#[derive(Debug, Clone)]
pub struct ResynthFrame {
    pub start_index: usize,
    pub params: Option<Vec<WaveParams>>,
}

impl From<&FrameOutcome> for ResynthFrame {
    fn from(outcome: &FrameOutcome) -> Self {
        match outcome {
            FrameOutcome::Converged(fit) => ResynthFrame {
                start_index: fit.start_index,
                params: Some(fit.params.clone()),
            },
            FrameOutcome::Diverged(info) => ResynthFrame {
                start_index: info.start_index,
                params: None,
            },
        }
    }
}

/// Concatenated superposition of every frame, clamped to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Resynthesis {
    pub samples: Vec<f64>,
    pub clamped: usize,
}

/// Rebuild a signal from fitted frames. Each frame's time axis is
/// reconstructed from the normalization scope used during decomposition;
/// `include_amplitude` and `divide_by_n` select the superposition variant.
pub fn resynthesize(
    frames: &[ResynthFrame],
    frame_len: usize,
    rate_divisor: f64,
    scope: NormalizationScope,
    include_amplitude: bool,
    divide_by_n: bool,
) -> Result<Resynthesis, SineFitError> {
    if frames.is_empty() {
        return Err(SineFitError::InvalidArgument(
            "no frames to resynthesize".to_string(),
        ));
    }
    if frame_len == 0 {
        return Err(SineFitError::InvalidArgument(
            "frame_len must be at least 1".to_string(),
        ));
    }
    let total = frames.len() * frame_len;
    let global_norm = match scope {
        NormalizationScope::Global => Some(crate::audio::compute_time_normalization(
            total,
            rate_divisor,
        )?),
        NormalizationScope::PerFrame => None,
    };
    let mut samples = Vec::with_capacity(total);
    let mut clamped = 0usize;
    for frame in frames {
        match &frame.params {
            None => samples.extend(std::iter::repeat_n(0.0, frame_len)),
            Some(params) => {
                let norm: TimeNormalization = match &global_norm {
                    Some(n) => *n,
                    None => frame_normalization(frame.start_index, frame_len, rate_divisor)?,
                };
                let times: Vec<f64> = (frame.start_index..frame.start_index + frame_len)
                    .map(|i| norm.normalized_time(i))
                    .collect();
                for v in superpose(params, &times, include_amplitude, divide_by_n) {
                    if v.abs() > 1.0 {
                        clamped += 1;
                        samples.push(v.clamp(-1.0, 1.0));
                    } else {
                        samples.push(v);
                    }
                }
            }
        }
    }
    Ok(Resynthesis { samples, clamped })
}

// --- Serialization schema ---------------------------------------------------

/// One frame as serialized: start index, `[a, f, p]` triples, loss, and the
/// divergence flag. The superposition buffer is recomputable and not stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub start_index: usize,
    pub params: Option<Vec<[f64; 3]>>,
    pub frame_loss: Option<f64>,
    pub diverged: Option<DivergenceInfo>,
}

impl From<&FrameOutcome> for FrameRecord {
    fn from(outcome: &FrameOutcome) -> Self {
        match outcome {
            FrameOutcome::Converged(fit) => FrameRecord {
                start_index: fit.start_index,
                params: Some(
                    fit.params
                        .iter()
                        .map(|w| [w.amplitude, w.frequency, w.phase])
                        .collect(),
                ),
                frame_loss: Some(fit.frame_loss),
                diverged: None,
            },
            FrameOutcome::Diverged(info) => FrameRecord {
                start_index: info.start_index,
                params: None,
                frame_loss: None,
                diverged: Some(*info),
            },
        }
    }
}

impl FrameRecord {
    pub fn to_resynth_frame(&self) -> ResynthFrame {
        ResynthFrame {
            start_index: self.start_index,
            params: self.params.as_ref().map(|ps| {
                ps.iter()
                    .map(|&[a, f, p]| WaveParams::new(a, f, p))
                    .collect()
            }),
        }
    }
}

/// Everything a later resynthesis run needs, bundled with the per-frame
/// fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub sample_rate: u32,
    pub rate_divisor: f64,
    pub n_frames: usize,
    pub frame_len: usize,
    pub normalization: NormalizationScope,
    pub config: FitConfig,
    pub frames: Vec<FrameRecord>,
}

impl DecompositionRecord {
    pub fn from_outcomes(
        signal: &AudioSignal,
        cfg: &FitConfig,
        n_frames: usize,
        frame_len: usize,
        rate_divisor: f64,
        scope: NormalizationScope,
        outcomes: &[FrameOutcome],
    ) -> Self {
        Self {
            sample_rate: signal.sample_rate,
            rate_divisor,
            n_frames,
            frame_len,
            normalization: scope,
            config: cfg.clone(),
            frames: outcomes.iter().map(FrameRecord::from).collect(),
        }
    }

    pub fn resynth_frames(&self) -> Vec<ResynthFrame> {
        self.frames.iter().map(|f| f.to_resynth_frame()).collect()
    }
}

/// CSV trace of original versus predicted amplitudes, with the predicted
/// column in both the full-superposition and the unit-amplitude mean-wave
/// variants.
pub fn trace_csv(frames: &[Frame], outcomes: &[FrameOutcome]) -> String {
    let mut out = String::from("index,time,original,predicted,predicted_mean_wave\n");
    for (frame, outcome) in frames.iter().zip(outcomes) {
        let (full, mean): (Vec<f64>, Vec<f64>) = match outcome {
            FrameOutcome::Converged(fit) => (
                superpose(&fit.params, &frame.times, true, false),
                superpose(&fit.params, &frame.times, false, true),
            ),
            FrameOutcome::Diverged(_) => {
                (vec![0.0; frame.len()], vec![0.0; frame.len()])
            }
        };
        for i in 0..frame.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                frame.start_index + i,
                frame.times[i],
                frame.targets[i],
                full[i],
                mean[i]
            ));
        }
    }
    out
}
