//! Frame-synchronous utterances: normalized acoustic features, phone
//! labels, priors and articulatory targets on one 10 ms grid.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::manifest::{DatasetManifest, Gender, SpeakerEntry, UtteranceEntry};
use crate::acoustic::{fit_speaker_stats, load_acoustic, z_normalize, SpeakerStats, WINDOW_US};
use crate::alignment::PhoneAlignment;
use crate::articulatory::{
    compute_statistical_priors, fit_speaker_geometry, lip_origin, pellets_to_vtvs, priors_for_labels,
    read_track, ArticKind, ArticulatorySequence, PriorTable, Provenance, SpeakerGeometry,
};
use crate::error::{Error, Result, ResultExt};
use crate::numerics::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedUtterance {
    pub speaker: String,
    pub gender: Gender,
    pub utterance: String,
    /// `N × 39`, z-normalized per speaker.
    pub acoustic: Tensor,
    pub labels: Vec<String>,
    /// `N × 10`, present once a prior table has been applied.
    pub priors: Option<Tensor>,
    /// `N × 16` pellet positions, z-normalized per speaker.
    pub pellets: Option<Tensor>,
    /// `N × 6` tract variables, z-normalized per speaker.
    pub vtvs: Option<Tensor>,
}

impl AlignedUtterance {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn target(&self, kind: ArticKind) -> Option<&Tensor> {
        match kind {
            ArticKind::Pellets => self.pellets.as_ref(),
            ArticKind::TractVariables => self.vtvs.as_ref(),
        }
    }

    pub fn require_priors(&self) -> Result<&Tensor> {
        self.priors
            .as_ref()
            .ok_or_else(|| Error::State(format!("utterance {} has no priors", self.utterance)))
    }

    pub fn require_target(&self, kind: ArticKind) -> Result<&Tensor> {
        self.target(kind).ok_or_else(|| {
            Error::data(format!(
                "utterance {} has no {} track",
                self.utterance,
                kind.as_str()
            ))
        })
    }

    pub fn attach_priors(&mut self, table: &PriorTable) -> Result<()> {
        self.priors = Some(
            priors_for_labels(&self.labels, table).context(|| format!("utterance {}", self.utterance))?,
        );
        Ok(())
    }
}

/// Un-normalized utterance data on the acoustic frame grid.
#[derive(Debug, Clone)]
pub struct RawUtterance {
    pub speaker: String,
    pub gender: Gender,
    pub utterance: String,
    pub acoustic: Tensor,
    pub labels: Vec<String>,
    /// Track at its native rate, as read.
    pub track: Option<ArticulatorySequence>,
}

/// Reads features, labels frames by their midpoints and truncates the
/// features to the labelled frames.
pub fn read_raw(manifest: &DatasetManifest, spk: &SpeakerEntry, u: &UtteranceEntry) -> Result<RawUtterance> {
    let ctx = || format!("utterance {} of speaker {}", u.id, spk.id);
    let seq = load_acoustic(&manifest.resolve(&u.acoustic), &u.id).context(ctx)?;
    let alignment = PhoneAlignment::load(&manifest.resolve(&u.alignment)).context(ctx)?;
    let n = seq.len();
    let audio_end = ((n as f64 - 1.0) * seq.frame_period_us as f64 + WINDOW_US as f64) * 1e-6;
    let labels = alignment
        .label_frames(n, seq.frame_period_us, audio_end)
        .context(ctx)?;
    let acoustic = if labels.len() < n {
        seq.frames.slice_rows(0, labels.len())
    } else {
        seq.frames
    };
    let track = match &u.articulatory {
        Some(p) => Some(read_track(&manifest.resolve(p), &spk.id).context(ctx)?),
        None => None,
    };
    Ok(RawUtterance {
        speaker: spk.id.clone(),
        gender: spk.gender,
        utterance: u.id.clone(),
        acoustic,
        labels,
        track,
    })
}

/// Per-speaker reference data for normalizing its utterances.
#[derive(Debug, Clone)]
pub struct SpeakerNormalization {
    pub acoustic: SpeakerStats,
    pub geometry: Option<SpeakerGeometry>,
    pub pellets: Option<SpeakerStats>,
    pub vtvs: Option<SpeakerStats>,
}

/// Tract variables and pellets of a raw utterance, both on the frame grid.
fn targets_on_grid(
    raw: &RawUtterance,
    geometry: Option<&SpeakerGeometry>,
    period_us: u32,
) -> Result<(Option<Tensor>, Option<Tensor>, usize)> {
    let Some(track) = &raw.track else { return Ok((None, None, 0)) };
    let n = raw.labels.len();
    match track.kind {
        ArticKind::TractVariables => Ok((None, Some(track.resample_to_frames(n, period_us).frames), 0)),
        ArticKind::Pellets => {
            let geom = geometry.ok_or_else(|| Error::State("pellet track without speaker geometry".into()))?;
            let ex = pellets_to_vtvs(track, geom)?;
            let flagged = ex.flagged_count();
            Ok((
                Some(track.resample_to_frames(n, period_us).frames),
                Some(ex.sequence.resample_to_frames(n, period_us).frames),
                flagged,
            ))
        }
    }
}

const PERIOD_US: u32 = crate::acoustic::FRAME_PERIOD_US;

/// Fits normalization statistics over all of one speaker's utterances.
/// The palate comes from `manifest` when given there, otherwise it is
/// fitted to the tongue pellets.
pub fn fit_speaker_normalization(manifest: &DatasetManifest, raws: &[&RawUtterance]) -> Result<SpeakerNormalization> {
    let speaker = &raws
        .first()
        .ok_or_else(|| Error::data("speaker has no utterances"))?
        .speaker;
    let acoustic: Vec<&Tensor> = raws.iter().map(|r| &r.acoustic).collect();
    let acoustic = fit_speaker_stats(speaker, &acoustic)?;

    let pellet_tracks: Vec<&ArticulatorySequence> = raws
        .iter()
        .filter_map(|r| r.track.as_ref())
        .filter(|t| t.kind == ArticKind::Pellets)
        .collect();
    let geometry = if pellet_tracks.is_empty() {
        None
    } else {
        Some(match manifest.palates.get(speaker) {
            Some(p) => SpeakerGeometry {
                palate: p.clone(),
                lip_origin_x: lip_origin(&pellet_tracks)?,
            },
            None => fit_speaker_geometry(&pellet_tracks).context(|| format!("palate of speaker {speaker}"))?,
        })
    };

    let mut pellets = Vec::new();
    let mut vtvs = Vec::new();
    for r in raws {
        let (p, v, _) = targets_on_grid(r, geometry.as_ref(), PERIOD_US)?;
        pellets.extend(p);
        vtvs.extend(v);
    }
    let fit = |v: &[Tensor]| -> Result<Option<SpeakerStats>> {
        if v.is_empty() {
            return Ok(None);
        }
        fit_speaker_stats(speaker, &v.iter().collect::<Vec<_>>()).map(Some)
    };
    Ok(SpeakerNormalization {
        acoustic,
        pellets: fit(&pellets)?,
        vtvs: fit(&vtvs)?,
        geometry,
    })
}

/// Normalizes a raw utterance, resamples its track to the frame grid and
/// expands priors when a table is given. Returns the number of track
/// frames flagged during tract-variable extraction as well.
pub fn normalize_utterance(
    raw: &RawUtterance,
    norm: &SpeakerNormalization,
    table: Option<&PriorTable>,
) -> Result<(AlignedUtterance, usize)> {
    let (pellets, vtvs, flagged) = targets_on_grid(raw, norm.geometry.as_ref(), PERIOD_US)?;
    let scale = |t: Option<Tensor>, stats: &Option<SpeakerStats>| -> Result<Option<Tensor>> {
        match (t, stats) {
            (Some(t), Some(s)) => z_normalize(&t, s).map(Some),
            (None, _) => Ok(None),
            (Some(_), None) => Err(Error::State("track without normalization statistics".into())),
        }
    };
    let mut out = AlignedUtterance {
        speaker: raw.speaker.clone(),
        gender: raw.gender,
        utterance: raw.utterance.clone(),
        acoustic: z_normalize(&raw.acoustic, &norm.acoustic)?,
        labels: raw.labels.clone(),
        priors: None,
        pellets: scale(pellets, &norm.pellets)?,
        vtvs: scale(vtvs, &norm.vtvs)?,
    };
    if let Some(t) = table {
        out.attach_priors(t)?;
    }
    Ok((out, flagged))
}

/// Single-utterance alignment against precomputed speaker statistics.
pub fn align_utterance(
    manifest: &DatasetManifest,
    spk: &SpeakerEntry,
    entry: &UtteranceEntry,
    table: Option<&PriorTable>,
    norm: &SpeakerNormalization,
) -> Result<AlignedUtterance> {
    let raw = read_raw(manifest, spk, entry)?;
    Ok(normalize_utterance(&raw, norm, table)?.0)
}

#[derive(Debug, Clone)]
pub struct Corpus {
    /// Ordered by speaker, then utterance.
    pub utterances: Vec<AlignedUtterance>,
    pub normalization: BTreeMap<String, SpeakerNormalization>,
    /// Track frames with tongue pellets outside the palate domain.
    pub flagged_frames: usize,
}

impl Corpus {
    /// Loads every non-excluded utterance of the manifest. Normalization
    /// statistics for each speaker come from all of its utterances.
    pub fn load(manifest: &DatasetManifest, table: Option<&PriorTable>) -> Result<Self> {
        let entries: Vec<(&SpeakerEntry, &UtteranceEntry)> = manifest.utterances().collect();
        let raws: Vec<RawUtterance> = entries
            .par_iter()
            .map(|(s, u)| read_raw(manifest, s, u))
            .collect::<Result<_>>()?;

        let mut by_speaker: BTreeMap<&str, Vec<&RawUtterance>> = BTreeMap::new();
        for r in &raws {
            by_speaker.entry(&r.speaker).or_default().push(r);
        }
        let normalization: BTreeMap<String, SpeakerNormalization> = by_speaker
            .iter()
            .map(|(s, rs)| Ok((s.to_string(), fit_speaker_normalization(manifest, rs)?)))
            .collect::<Result<_>>()?;

        let done: Vec<(AlignedUtterance, usize)> = raws
            .par_iter()
            .map(|r| normalize_utterance(r, &normalization[&r.speaker], table))
            .collect::<Result<_>>()?;
        let flagged_frames = done.iter().map(|d| d.1).sum();
        if flagged_frames > 0 {
            log::warn!("{flagged_frames} track frames had tongue pellets outside the palate domain");
        }
        Ok(Corpus {
            utterances: done.into_iter().map(|d| d.0).collect(),
            normalization,
            flagged_frames,
        })
    }

    pub fn attach_priors(&mut self, table: &PriorTable) -> Result<()> {
        self.utterances.iter_mut().try_for_each(|u| u.attach_priors(table))
    }

    pub fn of_speakers<'a>(&'a self, speakers: &'a [String]) -> impl Iterator<Item = &'a AlignedUtterance> + 'a {
        self.utterances.iter().filter(move |u| speakers.contains(&u.speaker))
    }

    pub fn speakers(&self) -> Vec<String> {
        let mut v: Vec<String> = self.utterances.iter().map(|u| u.speaker.clone()).collect();
        v.dedup();
        v
    }

    pub fn get(&self, utterance: &str) -> Option<&AlignedUtterance> {
        self.utterances.iter().find(|u| u.utterance == utterance)
    }

    /// Statistical prior table from the z-scored tract variables of
    /// `speakers`, with the non-tract entries copied from `seed`.
    pub fn statistical_priors(&self, speakers: &[String], seed: &PriorTable) -> Result<PriorTable> {
        let mut data = Vec::new();
        for u in self.of_speakers(speakers) {
            data.push((u.labels.as_slice(), u.require_target(ArticKind::TractVariables)?));
        }
        if data.is_empty() {
            return Err(Error::data(format!("no utterances for speakers {}", speakers.join(","))));
        }
        compute_statistical_priors(&data, seed, Provenance::statistical(speakers.len()))
    }
}
