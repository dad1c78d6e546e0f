//! Experiment protocol: data preparation for a config, per-seed training
//! and scoring, and the consolidated result tables.

mod config;
mod tables;

use std::collections::BTreeSet;

pub use config::{ExperimentConfig, InputFeatures, PhoneEncoding, PriorKind};
pub use tables::{run_table1, run_table2, Table2Options};

use crate::articulatory::{priors_for_labels, PriorTable, Provenance};
use crate::datasets::{make_split, AlignedUtterance, Corpus, DatasetManifest, SplitPlan};
use crate::error::{Error, Result, ResultExt};
use crate::evaluation::{score_baseline, score_generated, score_predictions, ReportMeta, ScoreReport, SeedSummary};
use crate::models::{Model, ModelKind, ModelSpec};
use crate::numerics::Tensor;
use crate::training::{train_supervised, train_weakly_supervised, TrainLog};

/// Loaded corpus, split and tables shared by the runs of one experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub manifest: DatasetManifest,
    pub plan: SplitPlan,
    pub corpus: Corpus,
    pub seed_table: Option<PriorTable>,
    /// Table currently attached to the corpus as its `priors`.
    pub table: Option<PriorTable>,
    /// Sorted phone inventory of the corpus.
    pub phones: Vec<String>,
}

impl Prepared {
    /// Loads the manifest, split plan and seed table named by `cfg`.
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let manifest_path = cfg
            .manifest
            .as_ref()
            .ok_or_else(|| Error::config("no manifest given"))?;
        let manifest = DatasetManifest::load(manifest_path)?;
        let plan = match &cfg.split_plan {
            Some(p) => {
                let plan = SplitPlan::load(p)?;
                if plan.kind != cfg.split {
                    return Err(Error::config(format!(
                        "split plan is {}, config asks for {}",
                        plan.kind.as_str(),
                        cfg.split.as_str()
                    )));
                }
                plan
            }
            None => make_split(&manifest, cfg.split, cfg.split_counts, cfg.split_seed)?,
        };
        plan.check_against(&manifest)?;
        let seed_table = cfg.priors.as_deref().map(PriorTable::load).transpose()?;
        let corpus = Corpus::load(&manifest, None)?;
        Self::new(manifest, plan, corpus, seed_table)
    }

    pub fn new(manifest: DatasetManifest, plan: SplitPlan, corpus: Corpus, seed_table: Option<PriorTable>) -> Result<Self> {
        let phones: BTreeSet<&str> = corpus
            .utterances
            .iter()
            .flat_map(|u| u.labels.iter().map(String::as_str))
            .collect();
        let phones = phones.into_iter().map(String::from).collect();
        Ok(Prepared {
            manifest,
            plan,
            corpus,
            seed_table,
            table: None,
            phones,
        })
    }

    fn seed(&self) -> Result<&PriorTable> {
        self.seed_table
            .as_ref()
            .ok_or_else(|| Error::config("a seed prior table is required"))
    }

    /// The expert table, or a statistical table from `speakers` (the
    /// training split when `None`).
    pub fn prior_table(&self, provenance: Provenance, speakers: Option<&[String]>) -> Result<PriorTable> {
        let seed = self.seed()?;
        if provenance == Provenance::Lf {
            return Ok(seed.clone());
        }
        let speakers = speakers.unwrap_or(&self.plan.train);
        let mut table = self.corpus.statistical_priors(speakers, seed)?;
        table.provenance = provenance;
        Ok(table)
    }

    /// Attaches `table` to every utterance.
    pub fn use_table(&mut self, table: PriorTable) -> Result<()> {
        self.corpus.attach_priors(&table)?;
        self.table = Some(table);
        Ok(())
    }

    /// Attaches the table the config's inputs or baseline call for.
    pub fn use_config_table(&mut self, cfg: &ExperimentConfig) -> Result<()> {
        if let Some(p) = cfg.input_provenance() {
            let t = self.prior_table(p, cfg.prior_speakers.as_deref())?;
            self.use_table(t)?;
        }
        Ok(())
    }

    pub fn utterances(&self, speakers: &[String]) -> Vec<&AlignedUtterance> {
        self.corpus
            .utterances
            .iter()
            .filter(|u| speakers.contains(&u.speaker))
            .collect()
    }

    pub fn test(&self) -> Vec<&AlignedUtterance> {
        self.utterances(&self.plan.test)
    }

    fn meta(&self, model: &str) -> ReportMeta {
        ReportMeta {
            model: model.to_string(),
            split: self.plan.kind.as_str().to_string(),
            provenance: self.table.as_ref().map_or("none", |t| t.provenance.as_str()).to_string(),
        }
    }
}

/// Frame-level BLSTM input for one utterance.
pub fn build_input(u: &AlignedUtterance, cfg: &ExperimentConfig, data: &Prepared) -> Result<Tensor> {
    let inputs = cfg.inputs.ok_or_else(|| Error::config("blstm requires inputs"))?;
    let mut parts: Vec<Tensor> = Vec::new();
    if inputs.uses_acoustic() {
        parts.push(u.acoustic.clone());
    }
    if inputs.uses_phones() {
        parts.push(match cfg.phone_encoding {
            Some(PhoneEncoding::OneHot) => one_hot(&u.labels, &data.phones)?,
            Some(PhoneEncoding::Table) => priors_for_labels(&u.labels, data.seed()?)?,
            None => return Err(Error::config("phone inputs require phone_encoding")),
        });
    }
    if inputs.prior().is_some() {
        parts.push(u.require_priors()?.clone());
    }
    let refs: Vec<&Tensor> = parts.iter().collect();
    Tensor::concat_cols(&refs)
}

fn one_hot(labels: &[String], phones: &[String]) -> Result<Tensor> {
    let mut t = Tensor::zeros(&[labels.len(), phones.len()]);
    for (i, l) in labels.iter().enumerate() {
        let j = phones
            .binary_search(l)
            .map_err(|_| Error::data(format!("phone {l} is not in the inventory")))?;
        t.set(i, j, 1.0);
    }
    Ok(t)
}

fn spec_for(cfg: &ExperimentConfig, input_dim: usize, output_dim: usize, seed: u64) -> ModelSpec {
    let mut spec = match cfg.kind {
        ModelKind::Blstm => ModelSpec::blstm(cfg.scale, input_dim, output_dim, seed),
        ModelKind::Ae1 => ModelSpec::ae1(cfg.scale, input_dim, output_dim, seed),
        ModelKind::Ae2 => ModelSpec::ae2(cfg.scale, input_dim, output_dim, seed),
        ModelKind::ResDnn => ModelSpec::resdnn(cfg.scale, input_dim, output_dim, cfg.residual, seed),
    };
    spec.loss = cfg.loss;
    if cfg.kind.is_weakly_supervised() {
        spec = spec.with_half_width(cfg.half_width);
    }
    spec
}

/// Trains one model with `seed`; the data must carry the config's table.
pub fn train_model(cfg: &ExperimentConfig, data: &Prepared, seed: u64) -> Result<(Model, TrainLog)> {
    let mut tc = cfg.train.clone();
    tc.shuffle_seed = seed;
    let train_spk = cfg.train_speakers.as_deref().unwrap_or(&data.plan.train);
    let train = data.utterances(train_spk);
    let valid = data.utterances(&data.plan.validation);
    if train.is_empty() {
        return Err(Error::data("no training utterances"));
    }
    if cfg.kind == ModelKind::Blstm {
        let pairs = |utts: &[&AlignedUtterance]| -> Result<Vec<(Tensor, Tensor)>> {
            utts.iter()
                .map(|u| Ok((build_input(u, cfg, data)?, u.require_target(cfg.target)?.clone())))
                .collect()
        };
        let tr = pairs(&train)?;
        let va = pairs(&valid)?;
        let spec = spec_for(cfg, tr[0].0.cols(), cfg.target.dims(), seed);
        let mut model = Model::new(spec)?;
        let tr: Vec<(&Tensor, &Tensor)> = tr.iter().map(|(a, b)| (a, b)).collect();
        let va: Vec<(&Tensor, &Tensor)> = va.iter().map(|(a, b)| (a, b)).collect();
        let log = train_supervised(&mut model, &tr, &va, &tc)?;
        return Ok((model, log));
    }
    let tr = weak_pairs(&train)?;
    let va = weak_pairs(&valid)?;
    let spec = spec_for(cfg, tr[0].0.cols(), tr[0].1.cols(), seed);
    let mut model = Model::new(spec)?;
    let log = train_weakly_supervised(&mut model, &tr, &va, &tc)?;
    Ok((model, log))
}

fn weak_pairs<'a>(utts: &[&'a AlignedUtterance]) -> Result<Vec<(&'a Tensor, &'a Tensor)>> {
    utts.iter().map(|u| Ok((&u.acoustic, u.require_priors()?))).collect()
}

/// Scores a trained model on the test speakers.
pub fn evaluate_model(cfg: &ExperimentConfig, data: &Prepared, model: &Model) -> Result<ScoreReport> {
    let test = data.test();
    let meta = data.meta(model.kind().as_str());
    match model.kind() {
        ModelKind::Blstm => {
            let preds = test
                .iter()
                .map(|u| model.predict(&build_input(u, cfg, data)?))
                .collect::<Result<Vec<_>>>()?;
            score_predictions(&test, &preds, cfg.target, meta, true)
        }
        ModelKind::Ae1 => {
            let gen = test.iter().map(|u| model.generate(&u.acoustic)).collect::<Result<Vec<_>>>()?;
            score_generated(&test, &gen, meta)
        }
        ModelKind::Ae2 | ModelKind::ResDnn => {
            let gen = test
                .iter()
                .map(|u| model.generate(u.require_priors()?))
                .collect::<Result<Vec<_>>>()?;
            score_generated(&test, &gen, meta)
        }
    }
}

/// Scores the attached prior table directly against the test speakers.
pub fn baseline(data: &Prepared) -> Result<ScoreReport> {
    score_baseline(&data.test(), data.meta("baseline"))
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub log: TrainLog,
    pub report: ScoreReport,
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub runs: Vec<SeedRun>,
    pub summary: SeedSummary,
}

impl ProtocolResult {
    pub fn reports(&self) -> Vec<&ScoreReport> {
        self.runs.iter().map(|r| &r.report).collect()
    }
}

/// Trains and scores once per configured seed.
pub fn run_protocol(cfg: &ExperimentConfig, data: &Prepared) -> Result<ProtocolResult> {
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let (model, log) = train_model(cfg, data, seed).context(|| format!("{} seed {seed}", cfg.kind.as_str()))?;
        let report = evaluate_model(cfg, data, &model)?;
        log::info!("{} seed {seed}: r {:.4}", cfg.kind.as_str(), report.r());
        runs.push(SeedRun { seed, log, report });
    }
    let reports: Vec<ScoreReport> = runs.iter().map(|r| r.report.clone()).collect();
    Ok(ProtocolResult {
        summary: SeedSummary::from_reports(&reports),
        runs,
    })
}
