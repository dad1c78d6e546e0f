//! Phone alignments: `<start-s> <end-s> <phone>` per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::acoustic::frame_midpoint;
use crate::error::{Error, Result};

/// Tolerated gap between the end of the alignment and the end of the audio.
pub const COVERAGE_SLACK_S: f64 = 0.050;

#[derive(Debug, Clone, PartialEq)]
pub struct PhoneSegment {
    pub start: f64,
    pub end: f64,
    pub phone: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhoneAlignment {
    pub segments: Vec<PhoneSegment>,
}

impl PhoneAlignment {
    pub fn new(segments: Vec<PhoneSegment>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite() && s.start < s.end) {
                return Err(Error::data(format!(
                    "segment {i} ({}) has invalid span {}..{}",
                    s.phone, s.start, s.end
                )));
            }
        }
        if segments.windows(2).any(|w| w[1].start < w[0].end - 1e-9) {
            return Err(Error::data("alignment segments overlap or are unordered"));
        }
        Ok(PhoneAlignment { segments })
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut segments = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::parse(path, i + 1, "expected `<start> <end> <phone>`"));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(path, i + 1, format!("bad time {s:?}")))
            };
            segments.push(PhoneSegment {
                start: num(fields[0])?,
                end: num(fields[1])?,
                phone: fields[2].to_string(),
            });
        }
        if segments.is_empty() {
            return Err(Error::parse(path, 0, "empty alignment"));
        }
        PhoneAlignment::new(segments).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for seg in &self.segments {
            let _ = writeln!(s, "{} {} {}", seg.start, seg.end, seg.phone);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Phone active at time `t`; a boundary belongs to the later phone.
    pub fn phone_at(&self, t: f64) -> Option<&str> {
        let i = self.segments.partition_point(|s| s.start <= t);
        let seg = self.segments.get(i.checked_sub(1)?)?;
        (t < seg.end).then_some(seg.phone.as_str())
    }

    /// Labels frames by the phone active at each frame's midpoint.
    ///
    /// Trailing frames past the alignment end are dropped when the audio
    /// (`audio_end` seconds) extends at most [`COVERAGE_SLACK_S`] beyond
    /// the alignment; any other unlabeled frame is an error.
    pub fn label_frames(&self, n_frames: usize, frame_period_us: u32, audio_end: f64) -> Result<Vec<String>> {
        let mut labels = Vec::with_capacity(n_frames);
        for t in 0..n_frames {
            let m = frame_midpoint(t, frame_period_us);
            match self.phone_at(m) {
                Some(p) => labels.push(p.to_string()),
                None if m >= self.end() && audio_end - self.end() <= COVERAGE_SLACK_S + 1e-9 => break,
                None => {
                    return Err(Error::data(format!(
                        "frame {t} (midpoint {m:.4}s) is not covered by the alignment"
                    )))
                }
            }
        }
        if labels.is_empty() {
            return Err(Error::data("alignment covers no frames"));
        }
        Ok(labels)
    }
}
