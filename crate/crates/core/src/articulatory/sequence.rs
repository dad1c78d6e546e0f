use std::path::Path;

use crate::acoustic::frame_midpoint;
use crate::error::{Error, Result};
use crate::framefile::{self, FrameFile};
use crate::numerics::Tensor;

pub const TRACK_MAGIC: &[u8; 4] = b"AART";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArticKind {
    /// x-y positions of 8 pellets.
    Pellets,
    /// Six tract variables.
    TractVariables,
}

impl ArticKind {
    pub fn dims(self) -> usize {
        match self {
            ArticKind::Pellets => 16,
            ArticKind::TractVariables => 6,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ArticKind::Pellets => 0,
            ArticKind::TractVariables => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ArticKind::Pellets),
            1 => Some(ArticKind::TractVariables),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pt" => Ok(ArticKind::Pellets),
            "vtv" => Ok(ArticKind::TractVariables),
            other => Err(Error::config(format!("unknown articulatory target {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArticKind::Pellets => "pt",
            ArticKind::TractVariables => "vtv",
        }
    }

    pub fn feature_names(self) -> Vec<String> {
        match self {
            ArticKind::TractVariables => VTV_NAMES.iter().map(|s| s.to_string()).collect(),
            ArticKind::Pellets => crate::articulatory::PELLET_NAMES
                .iter()
                .flat_map(|p| [format!("{p}x"), format!("{p}y")])
                .collect(),
        }
    }
}

pub const VTV_NAMES: [&str; 6] = ["LP", "LA", "TTCL", "TTCD", "TBCL", "TBCD"];

#[derive(Debug, Clone, PartialEq)]
pub struct ArticulatorySequence {
    pub frames: Tensor,
    pub kind: ArticKind,
    pub frame_period_us: u32,
    pub speaker: String,
}

impl ArticulatorySequence {
    pub fn new(frames: Tensor, kind: ArticKind, frame_period_us: u32, speaker: &str) -> Result<Self> {
        if frames.cols() != kind.dims() {
            return Err(Error::shape(format!(
                "{} track needs {} dims, got {}",
                kind.as_str(),
                kind.dims(),
                frames.cols()
            )));
        }
        frames.ensure_finite("articulatory track")?;
        if frame_period_us == 0 {
            return Err(Error::data("zero frame period"));
        }
        Ok(ArticulatorySequence {
            frames,
            kind,
            frame_period_us,
            speaker: speaker.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Linear interpolation onto the midpoints of `n_frames` acoustic
    /// frames; sample `k` of this track sits at `k · frame_period`.
    pub fn resample_to_frames(&self, n_frames: usize, acoustic_period_us: u32) -> ArticulatorySequence {
        let src = &self.frames;
        let d = src.cols();
        let last = src.rows() - 1;
        let mut data = Vec::with_capacity(n_frames * d);
        for t in 0..n_frames {
            let pos = frame_midpoint(t, acoustic_period_us) / (self.frame_period_us as f64 * 1e-6);
            let pos = pos.clamp(0.0, last as f64);
            let k = (pos.floor() as usize).min(last);
            let frac = pos - k as f64;
            if frac <= 0.0 || k == last {
                data.extend_from_slice(src.row(k));
            } else {
                let (a, b) = (src.row(k), src.row(k + 1));
                data.extend(a.iter().zip(b).map(|(x, y)| x + frac * (y - x)));
            }
        }
        ArticulatorySequence {
            frames: Tensor::matrix(n_frames, d, data).expect("non-empty"),
            kind: self.kind,
            frame_period_us: acoustic_period_us,
            speaker: self.speaker.clone(),
        }
    }
}

pub fn write_track(path: &Path, seq: &ArticulatorySequence) -> Result<()> {
    framefile::write(
        path,
        TRACK_MAGIC,
        &FrameFile {
            kind: Some(seq.kind.code()),
            frame_period_us: seq.frame_period_us,
            frames: seq.frames.clone(),
        },
    )
}

pub fn read_track(path: &Path, speaker: &str) -> Result<ArticulatorySequence> {
    let f = framefile::read(path, TRACK_MAGIC, true)?;
    let code = f.kind.unwrap_or(u8::MAX);
    let kind = ArticKind::from_code(code)
        .ok_or_else(|| Error::format(path, format!("unknown track kind {code}")))?;
    ArticulatorySequence::new(f.frames, kind, f.frame_period_us, speaker)
        .map_err(|e| e.context(path.display().to_string()))
}
