use std::io::Read;
use std::path::Path;

use super::PitchError;

/// Mono samples scaled to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl Audio {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

pub fn read_wav(path: &Path) -> Result<Audio, PitchError> {
    let reader = hound::WavReader::open(path)?;
    decode(reader)
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<Audio, PitchError> {
    decode(hound::WavReader::new(std::io::Cursor::new(bytes))?)
}

/// Integer PCM and 32-bit float; multi-channel audio is averaged to mono.
fn decode<R: Read>(reader: hound::WavReader<R>) -> Result<Audio, PitchError> {
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            reader.into_samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>()?
        }
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            reader.into_samples::<i32>().map(|s| s.map(|v| v as f64 / scale)).collect::<Result<_, _>>()?
        }
    };
    let samples = interleaved.chunks(channels).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    Ok(Audio { samples, sample_rate: spec.sample_rate as f64 })
}
