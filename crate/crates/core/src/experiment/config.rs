use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::articulatory::{ArticKind, Provenance};
use crate::datasets::{SplitCounts, SplitKind};
use crate::error::{Error, Result};
use crate::kv::{self, KvFile};
use crate::models::{LossConfig, ModelKind, ResidualMode, Scale, DEFAULT_HALF_WIDTH};
use crate::numerics::{OptimizerConfig, OptimizerKind};
use crate::training::TrainConfig;

/// Input representation of a supervised BLSTM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputFeatures {
    Mfcc,
    Phones,
    Lf,
    Sf,
    MfccPhones,
    MfccLf,
    MfccSf,
}

impl InputFeatures {
    pub const ALL: [InputFeatures; 7] = [
        InputFeatures::Mfcc,
        InputFeatures::Phones,
        InputFeatures::Lf,
        InputFeatures::Sf,
        InputFeatures::MfccPhones,
        InputFeatures::MfccLf,
        InputFeatures::MfccSf,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown input features {s}")))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputFeatures::Mfcc => "mfcc",
            InputFeatures::Phones => "phones",
            InputFeatures::Lf => "lf",
            InputFeatures::Sf => "sf",
            InputFeatures::MfccPhones => "mfcc+phones",
            InputFeatures::MfccLf => "mfcc+lf",
            InputFeatures::MfccSf => "mfcc+sf",
        }
    }

    /// Row label in result tables.
    pub fn label(self) -> &'static str {
        match self {
            InputFeatures::Mfcc => "MFCCs",
            InputFeatures::Phones => "Phonemes",
            InputFeatures::Lf => "LFs",
            InputFeatures::Sf => "SFs",
            InputFeatures::MfccPhones => "MFCCs + Phonemes",
            InputFeatures::MfccLf => "MFCCs + LFs",
            InputFeatures::MfccSf => "MFCCs + SFs",
        }
    }

    pub fn uses_acoustic(self) -> bool {
        matches!(
            self,
            InputFeatures::Mfcc | InputFeatures::MfccPhones | InputFeatures::MfccLf | InputFeatures::MfccSf
        )
    }

    pub fn uses_phones(self) -> bool {
        matches!(self, InputFeatures::Phones | InputFeatures::MfccPhones)
    }

    /// Prior features carried by the input, if any.
    pub fn prior(self) -> Option<PriorKind> {
        match self {
            InputFeatures::Lf | InputFeatures::MfccLf => Some(PriorKind::Lf),
            InputFeatures::Sf | InputFeatures::MfccSf => Some(PriorKind::Sf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Lf,
    Sf,
}

/// How phone identities are turned into input vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhoneEncoding {
    /// Indicator over the sorted phone inventory of the corpus.
    OneHot,
    /// The phone's row of the seed prior table.
    Table,
}

impl PhoneEncoding {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "one-hot" => Ok(PhoneEncoding::OneHot),
            "table" => Ok(PhoneEncoding::Table),
            other => Err(Error::config(format!("unknown phone encoding {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhoneEncoding::OneHot => "one-hot",
            PhoneEncoding::Table => "table",
        }
    }
}

/// Everything needed to train and score one model family on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ModelKind,
    /// BLSTM input; weakly supervised models have fixed inputs.
    pub inputs: Option<InputFeatures>,
    pub phone_encoding: Option<PhoneEncoding>,
    pub target: ArticKind,
    pub split: SplitKind,
    pub split_seed: u64,
    pub split_counts: SplitCounts,
    pub seeds: Vec<u64>,
    pub loss: LossConfig,
    pub train: TrainConfig,
    pub scale: Scale,
    pub residual: ResidualMode,
    pub half_width: usize,
    /// Prior table used by weakly supervised models and the baseline.
    pub provenance: Provenance,
    /// Speakers whose tract variables define statistical tables; the
    /// training speakers when unset.
    pub prior_speakers: Option<Vec<String>>,
    /// Speakers the model is trained on; the training split when unset.
    pub train_speakers: Option<Vec<String>>,
    pub manifest: Option<PathBuf>,
    /// Seed prior table: the expert table, and the source of the
    /// non-tract entries of statistical tables.
    pub priors: Option<PathBuf>,
    /// Precomputed split plan; derived from the manifest when unset.
    pub split_plan: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "kind",
    "inputs",
    "phone_encoding",
    "target",
    "split",
    "split_seed",
    "split_counts",
    "seeds",
    "lambda_z",
    "lambda_x",
    "lambda_w",
    "optimizer",
    "learning_rate",
    "decay_every",
    "decay_rate",
    "breakpoints",
    "epochs",
    "batch_size",
    "patience",
    "scale",
    "residual",
    "half_width",
    "provenance",
    "prior_speakers",
    "train_speakers",
    "manifest",
    "priors",
    "split_plan",
];

/// `step:rate` entry of a piecewise-constant schedule.
fn parse_breakpoint(s: &str) -> Result<(u64, f64)> {
    let bad = || Error::config(format!("breakpoint must be step:rate, got {s}"));
    let (step, rate) = s.split_once(':').ok_or_else(bad)?;
    Ok((step.trim().parse().map_err(|_| bad())?, rate.trim().parse().map_err(|_| bad())?))
}

/// Learning rate and residual weight decay of desk-scale runs.
const DESK_SUPERVISED_LR: f64 = 0.01;
const DESK_WEAK_LR: f64 = 0.001;
const DESK_LAMBDA_W: f64 = 200.0;

impl ExperimentConfig {
    /// Defaults for `kind` at `scale`: the published settings at paper
    /// scale, smaller networks and rates at desk scale.
    pub fn defaults(kind: ModelKind, scale: Scale) -> Self {
        let mut train = TrainConfig::for_kind(kind);
        let mut loss = LossConfig::default();
        if scale == Scale::Desk {
            train.optimizer.learning_rate = if kind.is_weakly_supervised() {
                DESK_WEAK_LR
            } else {
                DESK_SUPERVISED_LR
            };
            loss.lambda_w = DESK_LAMBDA_W;
        }
        ExperimentConfig {
            kind,
            inputs: (kind == ModelKind::Blstm).then_some(InputFeatures::Mfcc),
            phone_encoding: None,
            target: ArticKind::TractVariables,
            split: SplitKind::Matched,
            split_seed: 0,
            split_counts: SplitCounts {
                train: 4,
                validation: 1,
                test: 1,
            },
            seeds: vec![1, 2],
            loss,
            train,
            scale,
            residual: ResidualMode::Scalar,
            half_width: DEFAULT_HALF_WIDTH,
            provenance: Provenance::Sf,
            prior_speakers: None,
            train_speakers: None,
            manifest: None,
            priors: None,
            split_plan: None,
        }
    }

    /// Reads and validates a config; relative paths resolve against `base`.
    pub fn from_kv(kv: &KvFile, base: &Path) -> Result<Self> {
        let c = Self::from_kv_unchecked(kv, base)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config without checking the combination of settings, for
    /// callers that apply further overrides first.
    pub fn from_kv_unchecked(kv: &KvFile, base: &Path) -> Result<Self> {
        kv.reject_unknown(KEYS)?;
        let kind = ModelKind::parse(kv.require("kind")?)?;
        let scale = Scale::parse(kv.get("scale").unwrap_or("paper"))?;
        let mut c = Self::defaults(kind, scale);
        if let Some(v) = kv.get("inputs") {
            c.inputs = Some(InputFeatures::parse(v)?);
        }
        if let Some(v) = kv.get("phone_encoding") {
            c.phone_encoding = Some(PhoneEncoding::parse(v)?);
        }
        if let Some(v) = kv.get("target") {
            c.target = ArticKind::parse(v)?;
        }
        if let Some(v) = kv.get("split") {
            c.split = SplitKind::parse(v)?;
        }
        c.split_seed = kv.parse_or("split_seed", c.split_seed)?;
        if let Some(v) = kv.list::<usize>("split_counts")? {
            let [train, validation, test] = v[..] else {
                return Err(Error::config("split_counts takes train, validation and test counts"));
            };
            c.split_counts = SplitCounts { train, validation, test };
        }
        if let Some(v) = kv.list("seeds")? {
            c.seeds = v;
        }
        c.loss.lambda_z = kv.parse_or("lambda_z", c.loss.lambda_z)?;
        c.loss.lambda_x = kv.parse_or("lambda_x", c.loss.lambda_x)?;
        c.loss.lambda_w = kv.parse_or("lambda_w", c.loss.lambda_w)?;
        if let Some(v) = kv.get("optimizer") {
            let chosen = OptimizerKind::parse(v)?;
            if chosen != c.train.optimizer.kind {
                let rate = c.train.optimizer.learning_rate;
                c.train.optimizer = match chosen {
                    OptimizerKind::Adam => OptimizerConfig::adam(),
                    OptimizerKind::SgdExpDecay => OptimizerConfig::sgd(),
                };
                c.train.optimizer.learning_rate = rate;
            }
        }
        let o = &mut c.train.optimizer;
        o.learning_rate = kv.parse_or("learning_rate", o.learning_rate)?;
        o.decay_every = kv.parse_or("decay_every", o.decay_every)?;
        o.decay_rate = kv.parse_or("decay_rate", o.decay_rate)?;
        if let Some(v) = kv.list::<String>("breakpoints")? {
            o.breakpoints = v.iter().map(|b| parse_breakpoint(b)).collect::<Result<_>>()?;
        }
        c.train.max_epochs = kv.parse_or("epochs", c.train.max_epochs)?;
        c.train.batch_size = kv.parse_or("batch_size", c.train.batch_size)?;
        c.train.patience = kv.parse_or("patience", c.train.patience)?;
        if let Some(v) = kv.get("residual") {
            c.residual = ResidualMode::parse(v)?;
        }
        c.half_width = kv.parse_or("half_width", c.half_width)?;
        if let Some(v) = kv.get("provenance") {
            c.provenance = Provenance::parse(v)?;
        }
        c.prior_speakers = kv.list("prior_speakers")?;
        c.train_speakers = kv.list("train_speakers")?;
        let path = |k: &str| kv.get(k).map(|p| base.join(p));
        c.manifest = path("manifest");
        c.priors = path("priors");
        c.split_plan = path("split_plan");
        Ok(c)
    }

    /// Loads a config file with `key=value` overrides applied on top.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let mut kv = KvFile::load(path)?;
        for (k, v) in overrides {
            kv.set(k, v);
        }
        Self::from_kv(&kv, path.parent().unwrap_or(Path::new(".")))
    }

    /// Checks the combination of settings without touching any data.
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.half_width == 0 {
            return Err(Error::config("half_width must be positive"));
        }
        if self.split_counts.train == 0 || self.split_counts.test == 0 {
            return Err(Error::config("split needs training and test speakers"));
        }
        match self.kind {
            ModelKind::Blstm => {
                let inputs = self
                    .inputs
                    .ok_or_else(|| Error::config("blstm requires inputs"))?;
                if inputs.uses_phones() && self.phone_encoding.is_none() {
                    return Err(Error::config("phone inputs require phone_encoding = one-hot or table"));
                }
                let table_needed =
                    inputs.prior().is_some() || self.phone_encoding == Some(PhoneEncoding::Table) && inputs.uses_phones();
                if table_needed && self.priors.is_none() {
                    return Err(Error::config(format!("inputs {} require a prior table", inputs.as_str())));
                }
                if inputs.prior() == Some(PriorKind::Sf) && self.provenance == Provenance::Lf {
                    return Err(Error::config("sf inputs need a statistical provenance"));
                }
            }
            kind => {
                if self.inputs.is_some() {
                    return Err(Error::config(format!("{} has fixed inputs", kind.as_str())));
                }
                if self.priors.is_none() {
                    return Err(Error::config(format!("{} requires a prior table", kind.as_str())));
                }
                if self.target != ArticKind::TractVariables {
                    return Err(Error::config(format!("{} is scored against vtv targets", kind.as_str())));
                }
            }
        }
        Ok(())
    }

    /// The same experiment for another model family. Switching between
    /// supervised and weakly supervised families swaps in the other
    /// family's optimizer and batching; epoch limits carry over.
    pub fn with_kind(&self, kind: ModelKind) -> Self {
        let mut c = self.clone();
        c.kind = kind;
        if kind.is_weakly_supervised() {
            c.inputs = None;
            c.phone_encoding = None;
            c.target = ArticKind::TractVariables;
        } else if c.inputs.is_none() {
            c.inputs = Some(InputFeatures::Mfcc);
        }
        if kind.is_weakly_supervised() != self.kind.is_weakly_supervised() {
            c.train = TrainConfig {
                max_epochs: self.train.max_epochs,
                patience: self.train.patience,
                ..Self::defaults(kind, self.scale).train
            };
        }
        c
    }

    /// Provenance of the prior features fed to the model or baseline.
    pub fn input_provenance(&self) -> Option<Provenance> {
        match self.kind {
            ModelKind::Blstm => match self.inputs?.prior()? {
                PriorKind::Lf => Some(Provenance::Lf),
                PriorKind::Sf => Some(self.provenance),
            },
            _ => Some(self.provenance),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("kind", self.kind.as_str().into());
        put("scale", self.scale.as_str().into());
        if let Some(i) = self.inputs {
            put("inputs", i.as_str().into());
        }
        if let Some(e) = self.phone_encoding {
            put("phone_encoding", e.as_str().into());
        }
        put("target", self.target.as_str().into());
        put("split", self.split.as_str().into());
        put("split_seed", self.split_seed.to_string());
        let n = self.split_counts;
        put("split_counts", format!("{},{},{}", n.train, n.validation, n.test));
        put("seeds", kv::join(&self.seeds));
        put("lambda_z", self.loss.lambda_z.to_string());
        put("lambda_x", self.loss.lambda_x.to_string());
        put("lambda_w", self.loss.lambda_w.to_string());
        put("optimizer", self.train.optimizer.kind.as_str().into());
        put("learning_rate", self.train.optimizer.learning_rate.to_string());
        put("decay_every", self.train.optimizer.decay_every.to_string());
        put("decay_rate", self.train.optimizer.decay_rate.to_string());
        if !self.train.optimizer.breakpoints.is_empty() {
            let b: Vec<String> = self.train.optimizer.breakpoints.iter().map(|(s, r)| format!("{s}:{r}")).collect();
            put("breakpoints", b.join(","));
        }
        put("epochs", self.train.max_epochs.to_string());
        put("batch_size", self.train.batch_size.to_string());
        put("patience", self.train.patience.to_string());
        put("residual", self.residual.as_str().into());
        put("half_width", self.half_width.to_string());
        put("provenance", self.provenance.as_str().into());
        if let Some(v) = &self.prior_speakers {
            put("prior_speakers", kv::join(v));
        }
        if let Some(v) = &self.train_speakers {
            put("train_speakers", kv::join(v));
        }
        for (k, p) in [("manifest", &self.manifest), ("priors", &self.priors), ("split_plan", &self.split_plan)] {
            if let Some(p) = p {
                put(k, p.display().to_string());
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_kv(&KvFile::parse(text, Path::new("x.cfg"))?, Path::new("/data"))
    }

    #[test]
    fn published_defaults() {
        let c = parse("kind = ae2\npriors = lf.txt\n").unwrap();
        assert_eq!(c.train.max_epochs, 50);
        assert_eq!(c.train.optimizer.kind, OptimizerKind::SgdExpDecay);
        assert_eq!(c.train.optimizer.learning_rate, 0.01);
        assert_eq!(c.loss, LossConfig::default());
        assert_eq!(c.priors, Some(PathBuf::from("/data/lf.txt")));
        let b = parse("kind = blstm\n").unwrap();
        assert_eq!(b.train.optimizer.kind, OptimizerKind::Adam);
        assert_eq!(b.train.optimizer.learning_rate, 0.1);
    }

    #[test]
    fn desk_scale_and_overrides() {
        let c = parse("kind = resdnn\nscale = desk\npriors = lf.txt\nlambda_w = 5\nseeds = 3,4\n").unwrap();
        assert_eq!(c.train.optimizer.learning_rate, DESK_WEAK_LR);
        assert_eq!(c.loss.lambda_w, 5.0);
        assert_eq!(c.seeds, vec![3, 4]);
        let again = ExperimentConfig::from_kv(&KvFile::parse(&c.to_text(), Path::new("y")).unwrap(), Path::new("/")).unwrap();
        assert_eq!(again, c);

        let b = parse("kind = blstm\ninputs = mfcc\nbreakpoints = 100:0.05, 200:0.01\n").unwrap();
        assert_eq!(b.train.optimizer.breakpoints, vec![(100, 0.05), (200, 0.01)]);
        let again = ExperimentConfig::from_kv(&KvFile::parse(&b.to_text(), Path::new("y")).unwrap(), Path::new("/")).unwrap();
        assert_eq!(again, b);
        assert!(parse("kind = blstm\ninputs = mfcc\nbreakpoints = 200:0.05,100:0.01\n").is_err());
        assert!(parse("kind = blstm\ninputs = mfcc\nbreakpoints = 100\n").is_err());
    }

    #[test]
    fn invalid_combinations() {
        for text in [
            "kind = ae2\n",
            "kind = ae1\npriors = a\ninputs = mfcc\n",
            "kind = ae2\npriors = a\ntarget = pt\n",
            "kind = blstm\ninputs = phones\n",
            "kind = blstm\ninputs = sf\n",
            "kind = blstm\nseeds =\n",
            "kind = blstm\nsplit_counts = 1,2\n",
            "kind = blstm\nbogus = 1\n",
            "kind = lstm\n",
        ] {
            let e = parse(text).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{text}: {e}");
        }
        assert!(parse("kind = blstm\ninputs = phones\nphone_encoding = one-hot\n").is_ok());
    }
}
