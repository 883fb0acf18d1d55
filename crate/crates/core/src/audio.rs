//! WAV audio I/O, time-axis normalization, and frame segmentation.
//!
//! Only RIFF/WAVE files holding 16-bit PCM in one or two channels are
//! accepted; anything else is a format error naming the offending chunk, so
//! parsing stays bit-exact. Integer samples are scaled by 1/32768 into
//! `[-1, 1)` on load; stereo files contribute their first (left) channel.
//!
//! The time axis handed to the curve fitters is `index / rate_divisor`,
//! standardized to mean 0 and population standard deviation 1. The divisor
//! defaults to 44100 independent of the file's header rate; the statistics
//! are computed once over the whole analyzed prefix unless per-frame
//! normalization is requested.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default divisor applied to sample indices to form the raw time axis.
pub const STANDARD_RATE_DIVISOR: f64 = 44100.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: unsupported format in `{chunk}` chunk: {reason}")]
    Format {
        path: String,
        chunk: String,
        reason: String,
    },
    #[error("{path}: truncated file while reading {what}")]
    Truncated { path: String, what: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A sample-rate-tagged amplitude sequence in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

impl AudioSignal {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidArgument(
                "sample rate must be positive".to_string(),
            ));
        }
        if let Some(s) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(AudioError::InvalidArgument(format!(
                "sample {s} outside [-1, 1]"
            )));
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Normalization of the raw time axis `index / rate_divisor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeNormalization {
    pub rate_divisor: f64,
    pub mean: f64,
    pub std: f64,
}

impl TimeNormalization {
    /// The standardized time at a global sample index.
    pub fn normalized_time(&self, index: usize) -> f64 {
        (index as f64 / self.rate_divisor - self.mean) / self.std
    }
}

/// Mean and population standard deviation of the raw times
/// `0/d, 1/d, ..., (n-1)/d`.
pub fn compute_time_normalization(
    n_samples: usize,
    rate_divisor: f64,
) -> Result<TimeNormalization, AudioError> {
    normalization_over(0, n_samples, rate_divisor)
}

/// Same statistics computed over the index window `start..start + len`.
pub fn frame_normalization(
    start: usize,
    len: usize,
    rate_divisor: f64,
) -> Result<TimeNormalization, AudioError> {
    normalization_over(start, len, rate_divisor)
}

fn normalization_over(
    start: usize,
    len: usize,
    rate_divisor: f64,
) -> Result<TimeNormalization, AudioError> {
    if len < 2 {
        return Err(AudioError::InvalidArgument(format!(
            "need at least 2 samples to normalize, got {len}"
        )));
    }
    if !(rate_divisor > 0.0 && rate_divisor.is_finite()) {
        return Err(AudioError::InvalidArgument(format!(
            "rate divisor must be positive and finite, got {rate_divisor}"
        )));
    }
    let n = len as f64;
    let mut mean = 0.0;
    for i in start..start + len {
        mean += i as f64 / rate_divisor;
    }
    mean /= n;
    let mut var = 0.0;
    for i in start..start + len {
        let d = i as f64 / rate_divisor - mean;
        var += d * d;
    }
    let std = (var / n).sqrt();
    Ok(TimeNormalization {
        rate_divisor,
        mean,
        std,
    })
}

/// A contiguous window of samples with its normalized time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub start_index: usize,
    pub times: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Frame {
    pub fn new(start_index: usize, times: Vec<f64>, targets: Vec<f64>) -> Result<Self, AudioError> {
        if times.len() != targets.len() {
            return Err(AudioError::InvalidArgument(format!(
                "times ({}) and targets ({}) lengths differ",
                times.len(),
                targets.len()
            )));
        }
        if times.is_empty() {
            return Err(AudioError::InvalidArgument(
                "a frame needs at least one sample".to_string(),
            ));
        }
        // partial_cmp so NaN times are rejected along with misordered ones
        let increasing = times
            .windows(2)
            .all(|w| w[0].partial_cmp(&w[1]) == Some(std::cmp::Ordering::Less));
        if !increasing {
            return Err(AudioError::InvalidArgument(
                "frame times must be strictly increasing".to_string(),
            ));
        }
        Ok(Self {
            start_index,
            times,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Whether normalization statistics cover the whole analyzed prefix or each
/// frame separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationScope {
    Global,
    PerFrame,
}

/// Cut `n_frames` non-overlapping frames of `frame_len` samples off the
/// front of the signal, using `norm` for every frame's time axis.
pub fn segment_frames(
    signal: &AudioSignal,
    norm: &TimeNormalization,
    n_frames: usize,
    frame_len: usize,
) -> Result<Vec<Frame>, AudioError> {
    if n_frames == 0 || frame_len == 0 {
        return Err(AudioError::InvalidArgument(
            "n_frames and frame_len must be at least 1".to_string(),
        ));
    }
    let required = n_frames * frame_len;
    if required > signal.len() {
        return Err(AudioError::InvalidArgument(format!(
            "{n_frames} frames of {frame_len} samples need {required} samples, signal has {}",
            signal.len()
        )));
    }
    Ok((0..n_frames)
        .map(|k| {
            let start = k * frame_len;
            let times = (start..start + frame_len)
                .map(|i| norm.normalized_time(i))
                .collect();
            let targets = signal.samples[start..start + frame_len].to_vec();
            Frame {
                start_index: start,
                times,
                targets,
            }
        })
        .collect())
}

/// Segment with the chosen normalization scope; the global scope computes
/// one statistic over the full `n_frames * frame_len` prefix.
pub fn prepare_frames(
    signal: &AudioSignal,
    rate_divisor: f64,
    n_frames: usize,
    frame_len: usize,
    scope: NormalizationScope,
) -> Result<Vec<Frame>, AudioError> {
    match scope {
        NormalizationScope::Global => {
            let norm = compute_time_normalization(n_frames * frame_len, rate_divisor)?;
            segment_frames(signal, &norm, n_frames, frame_len)
        }
        NormalizationScope::PerFrame => {
            let mut frames = segment_frames(
                signal,
                &compute_time_normalization(n_frames * frame_len, rate_divisor)?,
                n_frames,
                frame_len,
            )?;
            for frame in &mut frames {
                let norm = frame_normalization(frame.start_index, frame_len, rate_divisor)?;
                for (i, t) in frame.times.iter_mut().enumerate() {
                    *t = norm.normalized_time(frame.start_index + i);
                }
            }
            Ok(frames)
        }
    }
}

/// CSV export of frames: one `(start_index, time, target)` line per sample.
pub fn frames_to_csv(frames: &[Frame]) -> String {
    let mut out = String::from("start_index,time,target\n");
    for f in frames {
        for (t, y) in f.times.iter().zip(&f.targets) {
            out.push_str(&format!("{},{t},{y}\n", f.start_index));
        }
    }
    out
}

// --- WAV parsing -----------------------------------------------------------

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8], AudioError> {
        if self.pos + len > self.bytes.len() {
            return Err(AudioError::Truncated {
                path: self.path.to_string(),
                what: what.to_string(),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32, AudioError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Read a 16-bit PCM WAV file and return its left channel scaled to
/// `[-1, 1)`. Unknown chunks are skipped; unsupported encodings are format
/// errors naming the chunk.
pub fn load_wav_left(path: impl AsRef<Path>) -> Result<AudioSignal, AudioError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| AudioError::Io {
        path: path_str.clone(),
        source,
    })?;
    parse_wav_left(&bytes, &path_str)
}

fn parse_wav_left(bytes: &[u8], path: &str) -> Result<AudioSignal, AudioError> {
    let format_err = |chunk: &str, reason: String| AudioError::Format {
        path: path.to_string(),
        chunk: chunk.to_string(),
        reason,
    };

    let mut r = Reader {
        bytes,
        pos: 0,
        path,
    };
    let riff = r.take(4, "RIFF header")?;
    if riff != b"RIFF" {
        return Err(format_err("RIFF", "missing RIFF magic".to_string()));
    }
    let _file_size = r.u32("RIFF size")?;
    let wave = r.take(4, "WAVE tag")?;
    if wave != b"WAVE" {
        return Err(format_err("WAVE", "missing WAVE tag".to_string()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while r.pos < bytes.len() {
        let id = r.take(4, "chunk id")?.to_vec();
        let size = r.u32("chunk size")? as usize;
        let body = r.take(size, &format!("`{}` chunk body", chunk_name(&id)))?;
        if size % 2 == 1 && r.pos < bytes.len() {
            r.pos += 1; // chunks are word-aligned
        }
        match &id[..] {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(format_err("fmt ", "chunk shorter than 16 bytes".to_string()));
                }
                let format = u16::from_le_bytes([body[0], body[1]]);
                let channels = u16::from_le_bytes([body[2], body[3]]);
                let rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
                let bits = u16::from_le_bytes([body[14], body[15]]);
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {} // skip unknown chunks
        }
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| format_err("fmt ", "chunk not found".to_string()))?;
    if format != 1 {
        return Err(format_err(
            "fmt ",
            format!("audio format code {format} is not PCM (1); floats and extensible WAV are unsupported"),
        ));
    }
    if bits != 16 {
        return Err(format_err(
            "fmt ",
            format!("{bits}-bit samples unsupported; only 16-bit PCM is accepted"),
        ));
    }
    if !(channels == 1 || channels == 2) {
        return Err(format_err(
            "fmt ",
            format!("{channels} channels unsupported; expected mono or stereo"),
        ));
    }
    if rate == 0 {
        return Err(format_err("fmt ", "sample rate is zero".to_string()));
    }
    let data = data.ok_or_else(|| format_err("data", "chunk not found".to_string()))?;

    let stride = 2 * channels as usize;
    let n_frames = data.len() / stride;
    let mut samples = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let off = f * stride;
        let v = i16::from_le_bytes([data[off], data[off + 1]]);
        samples.push(f64::from(v) / 32768.0);
    }
    Ok(AudioSignal {
        sample_rate: rate,
        samples,
    })
}

fn chunk_name(id: &[u8]) -> String {
    String::from_utf8_lossy(id).into_owned()
}

/// Write a mono 16-bit PCM WAV file. Samples outside `[-1, 1]` are clamped;
/// the count of clamped samples is returned.
pub fn write_wav(signal: &AudioSignal, path: impl AsRef<Path>) -> Result<usize, AudioError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let (bytes, clamped) = encode_wav(signal);
    let mut file = fs::File::create(path).map_err(|source| AudioError::Io {
        path: path_str.clone(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| AudioError::Io {
        path: path_str,
        source,
    })?;
    Ok(clamped)
}

fn encode_wav(signal: &AudioSignal) -> (Vec<u8>, usize) {
    let data_size = signal.len() * 2;
    let mut out = Vec::with_capacity(44 + data_size);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_size) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&signal.sample_rate.to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_size as u32).to_le_bytes());
    let mut clamped = 0usize;
    for &s in &signal.samples {
        let s = if !(-1.0..=1.0).contains(&s) {
            clamped += 1;
            s.clamp(-1.0, 1.0)
        } else {
            s
        };
        // Quantize; only exactly +1.0 hits the integer clamp below.
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    (out, clamped)
}
