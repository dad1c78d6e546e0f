use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::metrics::{mean, normalized_rmse, pearson_r, std_dev};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Scores pooled over all frames of one speaker (or of everyone).
#[derive(Debug, Clone, PartialEq)]
pub struct PooledScore {
    pub frames: usize,
    /// `None` where the correlation is undefined.
    pub r: Vec<Option<f64>>,
    pub rmse: Option<Vec<f64>>,
}

impl PooledScore {
    /// Scores concatenated `(prediction, measurement)` pairs.
    pub fn compute(pairs: &[(&Tensor, &Tensor)], with_rmse: bool) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| Error::data("nothing to score"))?;
        let dims = first.1.cols();
        let mut preds = Vec::with_capacity(pairs.len());
        let mut meas = Vec::with_capacity(pairs.len());
        for (p, m) in pairs {
            if p.shape() != m.shape() || m.cols() != dims {
                return Err(Error::shape(format!("prediction {:?} against measurement {:?}", p.shape(), m.shape())));
            }
            preds.push(*p);
            meas.push(*m);
        }
        let p = Tensor::concat_rows(&preds)?;
        let m = Tensor::concat_rows(&meas)?;
        let r = (0..dims)
            .map(|d| pearson_r(&p.column(d), &m.column(d)).ok())
            .collect();
        let rmse = if with_rmse { Some(normalized_rmse(&p, &m)?) } else { None };
        Ok(PooledScore { frames: p.rows(), r, rmse })
    }

    pub fn undefined(&self) -> usize {
        self.r.iter().filter(|r| r.is_none()).count()
    }

    /// Mean over the features with a defined correlation.
    pub fn mean_r(&self) -> Option<f64> {
        let v: Vec<f64> = self.r.iter().flatten().copied().collect();
        (!v.is_empty()).then(|| mean(&v))
    }

    pub fn mean_rmse(&self) -> Option<f64> {
        self.rmse.as_ref().map(|v| mean(v))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub model: String,
    pub split: String,
    pub provenance: String,
}

/// Per-speaker and globally pooled scores. The headline numbers are the
/// per-speaker feature averages, averaged over speakers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub meta: ReportMeta,
    pub features: Vec<String>,
    pub speakers: BTreeMap<String, PooledScore>,
    pub global: PooledScore,
    /// Per-speaker feature correlations left out as undefined.
    pub excluded: usize,
}

impl ScoreReport {
    /// Builds a report from `(speaker, prediction, measurement)` triples.
    pub fn build(
        meta: ReportMeta,
        features: Vec<String>,
        items: &[(&str, &Tensor, &Tensor)],
        with_rmse: bool,
    ) -> Result<Self> {
        let mut by_speaker: BTreeMap<&str, Vec<(&Tensor, &Tensor)>> = BTreeMap::new();
        for (s, p, m) in items {
            if m.cols() != features.len() {
                return Err(Error::shape(format!("{} features named, {} scored", features.len(), m.cols())));
            }
            by_speaker.entry(s).or_default().push((*p, *m));
        }
        let mut speakers = BTreeMap::new();
        let mut excluded = 0;
        for (s, pairs) in &by_speaker {
            let score = PooledScore::compute(pairs, with_rmse)?;
            if score.undefined() > 0 {
                log::warn!("speaker {s}: {} features with undefined correlation excluded", score.undefined());
            }
            excluded += score.undefined();
            speakers.insert(s.to_string(), score);
        }
        let all: Vec<(&Tensor, &Tensor)> = items.iter().map(|(_, p, m)| (*p, *m)).collect();
        let global = PooledScore::compute(&all, with_rmse)?;
        Ok(ScoreReport {
            meta,
            features,
            speakers,
            global,
            excluded,
        })
    }

    /// Headline correlation: per-speaker feature means, averaged over speakers.
    pub fn r(&self) -> f64 {
        let v: Vec<f64> = self.speakers.values().filter_map(PooledScore::mean_r).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            mean(&v)
        }
    }

    pub fn rmse(&self) -> Option<f64> {
        let v: Vec<f64> = self.speakers.values().filter_map(PooledScore::mean_rmse).collect();
        (!v.is_empty()).then(|| mean(&v))
    }

    /// Per-feature correlation averaged over the speakers where it is defined.
    pub fn feature_r(&self) -> Vec<Option<f64>> {
        (0..self.features.len())
            .map(|d| {
                let v: Vec<f64> = self.speakers.values().filter_map(|s| s.r[d]).collect();
                (!v.is_empty()).then(|| mean(&v))
            })
            .collect()
    }

    pub fn feature_rmse(&self) -> Option<Vec<f64>> {
        let rows: Vec<&Vec<f64>> = self.speakers.values().filter_map(|s| s.rmse.as_ref()).collect();
        if rows.is_empty() {
            return None;
        }
        Some(
            (0..self.features.len())
                .map(|d| mean(&rows.iter().map(|r| r[d]).collect::<Vec<_>>()))
                .collect(),
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# model\t{}", self.meta.model);
        let _ = writeln!(s, "# split\t{}", self.meta.split);
        let _ = writeln!(s, "# provenance\t{}", self.meta.provenance);
        let _ = writeln!(s, "# excluded\t{}", self.excluded);
        let _ = writeln!(s, "scope\tframes\tfeature\trmse\tr");
        let mut block = |scope: &str, p: &PooledScore| {
            for (d, name) in self.features.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{scope}\t{}\t{name}\t{}\t{}",
                    p.frames,
                    fmt_opt(p.rmse.as_ref().map(|v| v[d])),
                    fmt_opt(p.r[d])
                );
            }
            let _ = writeln!(s, "{scope}\t{}\tmean\t{}\t{}", p.frames, fmt_opt(p.mean_rmse()), fmt_opt(p.mean_r()));
        };
        for (spk, p) in &self.speakers {
            block(spk, p);
        }
        block("global", &self.global);
        let frames: usize = self.speakers.values().map(|p| p.frames).sum();
        let _ = writeln!(s, "speaker-mean\t{frames}\tmean\t{}\t{}", fmt_opt(self.rmse()), fmt_opt(Some(self.r())));
        s
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Headline scores of repeated runs (one per seed).
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub r: Vec<f64>,
    pub rmse: Option<Vec<f64>>,
}

impl SeedSummary {
    pub fn from_reports(reports: &[ScoreReport]) -> Self {
        let rmse: Option<Vec<f64>> = reports.iter().map(ScoreReport::rmse).collect();
        SeedSummary {
            r: reports.iter().map(ScoreReport::r).collect(),
            rmse,
        }
    }

    pub fn r_mean(&self) -> f64 {
        mean(&self.r)
    }

    pub fn r_std(&self) -> f64 {
        std_dev(&self.r)
    }

    pub fn rmse_mean(&self) -> Option<f64> {
        self.rmse.as_ref().map(|v| mean(v))
    }

    pub fn rmse_std(&self) -> Option<f64> {
        self.rmse.as_ref().map(|v| std_dev(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[[f64; 2]]) -> Tensor {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn per_speaker_and_global_pooling() {
        let p1 = t(&[[1.0, 0.0], [2.0, 1.0], [3.0, 0.0]]);
        let m1 = t(&[[1.0, 1.0], [2.0, 2.0], [2.0, 3.0]]);
        let p2 = t(&[[0.0, 5.0], [1.0, 5.0]]);
        let m2 = t(&[[0.0, 1.0], [1.0, 2.0]]);
        let names = vec!["a".to_string(), "b".to_string()];
        let rep = ScoreReport::build(
            ReportMeta::default(),
            names,
            &[("s1", &p1, &m1), ("s2", &p2, &m2)],
            true,
        )
        .unwrap();
        // s2 feature b has a constant prediction
        assert_eq!(rep.excluded, 1);
        assert_eq!(rep.speakers["s2"].r[1], None);
        let s1 = &rep.speakers["s1"];
        assert!((s1.r[0].unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-12);
        let s1_mean = (s1.r[0].unwrap() + s1.r[1].unwrap()) / 2.0;
        assert!((s1.mean_r().unwrap() - s1_mean).abs() < 1e-12);
        let expected = (s1_mean + 1.0) / 2.0;
        assert!((rep.r() - expected).abs() < 1e-12);
        assert_eq!(rep.global.frames, 5);
        let tsv = rep.to_tsv();
        assert!(tsv.contains("# excluded\t1"));
        assert!(tsv.lines().any(|l| l.starts_with("s2\t2\tb\t")));
    }

    #[test]
    fn rmse_omitted_when_not_requested() {
        let p = t(&[[1.0, 0.0], [2.0, 1.0]]);
        let rep = ScoreReport::build(ReportMeta::default(), vec!["a".into(), "b".into()], &[("s", &p, &p)], false).unwrap();
        assert_eq!(rep.rmse(), None);
        assert!(rep.to_tsv().contains("s\t2\ta\t\t1.0000"));
    }

    #[test]
    fn seed_summary() {
        let s = SeedSummary {
            r: vec![0.5, 0.7],
            rmse: None,
        };
        assert!((s.r_mean() - 0.6).abs() < 1e-15);
        assert!((s.r_std() - 0.2f64 / 2f64.sqrt()).abs() < 1e-12);
    }
}
