//! Scoring of reconstructed against measured articulatory features,
//! result reports and plot data.

mod metrics;
mod plot;
mod report;

pub use metrics::{mean, normalized_rmse, pearson_r, std_dev};
pub use plot::{emit_plot_data, plot_data_text};
pub use report::{fmt_opt, PooledScore, ReportMeta, ScoreReport, SeedSummary};

use crate::articulatory::{ArticKind, VTV_PRIOR_DIM};
use crate::datasets::AlignedUtterance;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Compares the tract-variable part of each utterance's priors directly
/// with its measured tract variables. RMSE is left out for
/// linguistically defined (LF) priors, which are not on a measurement scale.
pub fn score_baseline(utts: &[&AlignedUtterance], meta: ReportMeta) -> Result<ScoreReport> {
    let mut owned = Vec::with_capacity(utts.len());
    for u in utts {
        let z = u.require_priors()?;
        owned.push(z.slice_cols(0, VTV_PRIOR_DIM));
    }
    let with_rmse = meta.provenance != "lf";
    score_against_vtvs(utts, &owned, meta, with_rmse)
}

/// Scores the first six components of generated sequences against the
/// measured tract variables.
pub fn score_generated(utts: &[&AlignedUtterance], generated: &[Tensor], meta: ReportMeta) -> Result<ScoreReport> {
    let owned: Vec<Tensor> = generated.iter().map(|g| g.slice_cols(0, VTV_PRIOR_DIM)).collect();
    score_against_vtvs(utts, &owned, meta, true)
}

fn score_against_vtvs(utts: &[&AlignedUtterance], preds: &[Tensor], meta: ReportMeta, with_rmse: bool) -> Result<ScoreReport> {
    score_predictions(utts, preds, ArticKind::TractVariables, meta, with_rmse)
}

/// Scores per-utterance predictions against the chosen measured target.
pub fn score_predictions(
    utts: &[&AlignedUtterance],
    preds: &[Tensor],
    target: ArticKind,
    meta: ReportMeta,
    with_rmse: bool,
) -> Result<ScoreReport> {
    if utts.len() != preds.len() {
        return Err(Error::shape(format!("{} utterances, {} predictions", utts.len(), preds.len())));
    }
    let mut items = Vec::with_capacity(utts.len());
    for (u, p) in utts.iter().zip(preds) {
        items.push((u.speaker.as_str(), p, u.require_target(target)?));
    }
    ScoreReport::build(meta, target.feature_names(), &items, with_rmse)
}
