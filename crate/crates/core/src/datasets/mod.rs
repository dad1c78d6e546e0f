//! Corpus manifests, speaker splits, frame-aligned utterances and the
//! synthetic corpus generator.

mod corpus;
mod manifest;
mod split;
mod synth;

pub use corpus::{
    align_utterance, fit_speaker_normalization, normalize_utterance, read_raw, AlignedUtterance, Corpus,
    RawUtterance, SpeakerNormalization,
};
pub use manifest::{DatasetManifest, Gender, SpeakerEntry, UtteranceEntry};
pub use split::{make_split, SplitCounts, SplitKind, SplitPlan};
pub use synth::{generate, synth_corpus, SynthConfig, SynthData, SynthPaths, SynthSpeaker, SynthUtterance, SILENCE};
