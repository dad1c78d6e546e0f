//! Acoustic feature extraction: 13 MFCCs plus deltas and delta-deltas per
//! 10 ms frame, and per-speaker z-normalization.

mod deltas;
mod mfcc;
mod normalize;
mod wav;

use std::path::Path;

pub use deltas::{append_deltas, append_deltas_with, deltas, DELTA_WIDTH};
pub use mfcc::{
    compute_mfcc, dct_basis, frame_count, hamming, hz_to_mel, mel_filterbank, mel_to_hz,
    MfccConfig, MfccExtractor,
};
pub use normalize::{denormalize, fit_speaker_stats, z_normalize, SpeakerStats, STD_FLOOR};
pub use wav::{read_wav, write_wav, Audio};

use crate::error::{Error, Result};
use crate::framefile::{self, FrameFile};
use crate::numerics::Tensor;

pub const FEATURE_MAGIC: &[u8; 4] = b"AFEA";
/// MFCC + Δ + ΔΔ.
pub const ACOUSTIC_DIM: usize = 39;
pub const FRAME_PERIOD_US: u32 = 10_000;
/// Analysis window assumed for feature files, used to place frame midpoints.
pub const WINDOW_US: u32 = 25_000;

/// Per-frame acoustic features for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticSequence {
    pub utterance: String,
    pub frames: Tensor,
    pub frame_period_us: u32,
}

impl AcousticSequence {
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Time in seconds of the centre of frame `t`'s analysis window.
    pub fn frame_midpoint(&self, t: usize) -> f64 {
        frame_midpoint(t, self.frame_period_us)
    }
}

pub fn frame_midpoint(t: usize, frame_period_us: u32) -> f64 {
    (t as f64 * frame_period_us as f64 + WINDOW_US as f64 / 2.0) * 1e-6
}

/// Full 39-dim pipeline for a decoded waveform.
pub fn extract_features(utterance: &str, audio: &Audio) -> Result<AcousticSequence> {
    let mfcc = compute_mfcc(&audio.samples, audio.sample_rate)?;
    Ok(AcousticSequence {
        utterance: utterance.to_string(),
        frames: append_deltas(&mfcc),
        frame_period_us: FRAME_PERIOD_US,
    })
}

pub fn write_features(path: &Path, seq: &AcousticSequence) -> Result<()> {
    framefile::write(
        path,
        FEATURE_MAGIC,
        &FrameFile {
            kind: None,
            frame_period_us: seq.frame_period_us,
            frames: seq.frames.clone(),
        },
    )
}

pub fn read_features(path: &Path, utterance: &str) -> Result<AcousticSequence> {
    let f = framefile::read(path, FEATURE_MAGIC, false)?;
    Ok(AcousticSequence {
        utterance: utterance.to_string(),
        frames: f.frames,
        frame_period_us: f.frame_period_us,
    })
}

/// Loads acoustic features from either a WAV file or a feature file.
/// 13-dim feature files get deltas appended.
pub fn load_acoustic(path: &Path, utterance: &str) -> Result<AcousticSequence> {
    if framefile::has_magic(path, FEATURE_MAGIC) {
        let mut seq = read_features(path, utterance)?;
        match seq.frames.cols() {
            ACOUSTIC_DIM => {}
            13 => seq.frames = append_deltas(&seq.frames),
            d => {
                return Err(Error::format(
                    path,
                    format!("feature dim {d}, expected 13 or {ACOUSTIC_DIM}"),
                ))
            }
        }
        Ok(seq)
    } else {
        extract_features(utterance, &read_wav(path)?)
    }
}
