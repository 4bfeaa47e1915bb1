use std::path::Path;

use crate::error::{Error, Result};

/// Mono audio normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub const MIN_SAMPLE_RATE: u32 = 8000;

    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidAudio("zero-length audio".into()));
        }
        if sample_rate < Self::MIN_SAMPLE_RATE {
            return Err(Error::InvalidAudio(format!(
                "sample rate {sample_rate} Hz is below {} Hz",
                Self::MIN_SAMPLE_RATE
            )));
        }
        if let Some((i, x)) = samples
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || x.abs() > 1.0)
        {
            return Err(Error::InvalidAudio(format!(
                "sample {i} = {x} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Returns a copy with every sample multiplied by `gain`, clipped to [-1, 1].
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|x| (x * gain).clamp(-1.0, 1.0))
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Sample encodings accepted by [`read_audio`] and produced by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

impl WavEncoding {
    fn spec(self, sample_rate: u32, channels: u16) -> hound::WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
            WavEncoding::Pcm24 => (24, hound::SampleFormat::Int),
            WavEncoding::Float32 => (32, hound::SampleFormat::Float),
        };
        hound::WavSpec {
            channels,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::Unsupported => {
            Error::UnsupportedEncoding(format!("{}: not linear PCM or float", path.display()))
        }
        hound::Error::FormatError(msg) if msg.contains("format") || msg.contains("compress") => {
            Error::UnsupportedEncoding(format!("{}: {msg}", path.display()))
        }
        other => Error::InvalidAudio(format!("{}: {other}", path.display())),
    }
}

/// Reads a RIFF WAV file (PCM16, PCM24 or float32), downmixing by channel averaging.
pub fn read_audio(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels.max(1));

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16 | 24) => {
            let scale = f64::from(1u32 << (spec.bits_per_sample - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| f64::from(v).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{}: {bits}-bit {format:?}",
                path.display()
            )))
        }
    };

    if interleaved.is_empty() {
        return Err(Error::InvalidAudio(format!(
            "{}: zero-length audio",
            path.display()
        )));
    }

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Writes mono audio. Integer encodings round to the nearest quantization step.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let spec = encoding.spec(audio.sample_rate(), 1);
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    match encoding {
        WavEncoding::Pcm16 | WavEncoding::Pcm24 => {
            let scale = f64::from(1u32 << (spec.bits_per_sample - 1));
            let (lo, hi) = (-scale, scale - 1.0);
            for &x in audio.samples() {
                let q = (x * scale).round().clamp(lo, hi) as i32;
                writer.write_sample(q).map_err(|e| map_hound(path, e))?;
            }
        }
        WavEncoding::Float32 => {
            for &x in audio.samples() {
                writer
                    .write_sample(x as f32)
                    .map_err(|e| map_hound(path, e))?;
            }
        }
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}
