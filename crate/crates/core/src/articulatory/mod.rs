//! Articulatory representations: pellet tracks, tract variables derived
//! from them, and phone-indexed prior vectors.

mod palate;
mod priors;
mod sequence;
mod vtv;

pub use palate::{fit_palate, Foot, PalateModel, PALATE_BINS};
pub use priors::{
    compute_statistical_priors, priors_for_labels, PriorTable, PriorVector, Provenance,
    PRIOR_DIM, PRIOR_NAMES, VTV_PRIOR_DIM,
};
pub use sequence::{read_track, write_track, ArticKind, ArticulatorySequence, TRACK_MAGIC, VTV_NAMES};
pub use vtv::{
    fit_speaker_geometry, frame_vtvs, lip_origin, pellets_for_vtvs, pellets_to_vtvs,
    SpeakerGeometry, VtvExtraction, PELLET_NAMES,
};

use crate::alignment::PhoneAlignment;
use crate::error::Result;
use crate::numerics::Tensor;

/// Per-frame priors for `n_frames` acoustic frames of an utterance whose
/// audio lasts `audio_end` seconds. Trailing frames within the coverage
/// slack are dropped, so the result may be shorter than `n_frames`.
pub fn priors_for_utterance(
    alignment: &PhoneAlignment,
    n_frames: usize,
    frame_period_us: u32,
    audio_end: f64,
    table: &PriorTable,
) -> Result<Tensor> {
    let labels = alignment.label_frames(n_frames, frame_period_us, audio_end)?;
    priors_for_labels(&labels, table)
}
