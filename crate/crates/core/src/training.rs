//! Training loops: frame-level minibatch training for the weakly
//! supervised models and utterance-level training for the BLSTM, both
//! with validation early stopping and restoration of the best parameters.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{supervised_loss, Model, ModelKind};
use crate::numerics::{Graph, Optimizer, OptimizerConfig, ParameterSet, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub max_epochs: usize,
    /// Frames per minibatch for weakly supervised models, utterances per
    /// update for the BLSTM.
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub shuffle_seed: u64,
}

impl TrainConfig {
    /// SGD with exponential decay, minibatches of 128 frames, at most 50 epochs.
    pub fn weakly_supervised() -> Self {
        TrainConfig {
            optimizer: OptimizerConfig::sgd(),
            max_epochs: 50,
            batch_size: 128,
            patience: 5,
            shuffle_seed: 0,
        }
    }

    /// Adam, one utterance per update, at most 50 epochs.
    pub fn supervised() -> Self {
        TrainConfig {
            optimizer: OptimizerConfig::adam(),
            max_epochs: 50,
            batch_size: 1,
            patience: 5,
            shuffle_seed: 0,
        }
    }

    pub fn for_kind(kind: ModelKind) -> Self {
        if kind.is_weakly_supervised() {
            Self::weakly_supervised()
        } else {
            Self::supervised()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::config("epochs, batch size and patience must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max-epochs",
            StopReason::EarlyStop => "early-stop",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Validation criterion: acoustic reconstruction error for weakly
    /// supervised models, mean squared error for the BLSTM.
    pub valid_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub stop: StopReason,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("epoch\ttrain_loss\tvalid_loss\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{}\t{:.9e}\t{:.9e}", e.epoch, e.train_loss, e.valid_loss);
        }
        let _ = writeln!(s, "# stop: {}", self.stop.as_str());
        let _ = writeln!(s, "# best_epoch: {}", self.best_epoch);
        s
    }
}

/// Tracks the best validation loss and decides when to stop.
struct EarlyStopper {
    best: f64,
    best_epoch: usize,
    snapshot: Option<ParameterSet>,
    patience: usize,
}

impl EarlyStopper {
    fn new(patience: usize) -> Self {
        EarlyStopper {
            best: f64::INFINITY,
            best_epoch: 0,
            snapshot: None,
            patience,
        }
    }

    /// Returns true when training should stop.
    fn observe(&mut self, epoch: usize, loss: f64, params: &ParameterSet) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.snapshot = Some(params.clone());
        }
        epoch - self.best_epoch >= self.patience
    }

    fn restore(self, params: &mut ParameterSet) -> Result<usize> {
        if let Some(best) = &self.snapshot {
            params.copy_values_from(best)?;
        }
        Ok(self.best_epoch)
    }
}

fn check_loss(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} loss")))
    }
}

fn all_frames(utts: &[(&Tensor, &Tensor)]) -> Vec<(usize, usize)> {
    utts.iter()
        .enumerate()
        .flat_map(|(u, (x, _))| (0..x.rows()).map(move |t| (u, t)))
        .collect()
}

const EVAL_CHUNK: usize = 2048;

/// Mean per-frame objective over all frames of `utts`.
pub fn weak_objective(model: &Model, utts: &[(&Tensor, &Tensor)]) -> Result<f64> {
    let picks = all_frames(utts);
    if picks.is_empty() {
        return Err(Error::data("no frames to evaluate"));
    }
    let mut total = 0.0;
    for chunk in picks.chunks(EVAL_CHUNK) {
        let batch = model.make_batch(utts, chunk)?;
        let mut g = Graph::new();
        let loss = model.weak_loss(&mut g, &model.params, &batch)?;
        total += g.value(loss).item() * chunk.len() as f64;
    }
    Ok(total / picks.len() as f64)
}

/// Mean acoustic reconstruction error over all frames of `utts`.
pub fn acoustic_reconstruction_error(model: &Model, utts: &[(&Tensor, &Tensor)]) -> Result<f64> {
    let picks = all_frames(utts);
    if picks.is_empty() {
        return Err(Error::data("no frames to evaluate"));
    }
    let mut total = 0.0;
    for chunk in picks.chunks(EVAL_CHUNK) {
        let batch = model.make_batch(utts, chunk)?;
        total += model.acoustic_error(&batch)? * chunk.len() as f64;
    }
    Ok(total / picks.len() as f64)
}

/// Trains AE1, AE2 or ResDNN on `(acoustic, priors)` utterance pairs.
///
/// Each epoch visits every frame once in shuffled minibatches. Training
/// stops early once the acoustic reconstruction error on `valid` (on
/// `train` when `valid` is empty) has not decreased for `patience`
/// epochs; the best parameters are restored before returning.
pub fn train_weakly_supervised(
    model: &mut Model,
    train: &[(&Tensor, &Tensor)],
    valid: &[(&Tensor, &Tensor)],
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    if !model.kind().is_weakly_supervised() {
        return Err(Error::config("BLSTM models train on whole utterances"));
    }
    let mut picks = all_frames(train);
    if picks.is_empty() {
        return Err(Error::data("training set has no frames"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut opt = Optimizer::new(cfg.optimizer.clone(), &model.params)?;
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut epochs = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=cfg.max_epochs {
        picks.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in picks.chunks(cfg.batch_size) {
            let batch = model.make_batch(train, chunk)?;
            let mut g = Graph::new();
            let loss = model.weak_loss(&mut g, &model.params, &batch)?;
            total += check_loss(g.value(loss).item(), "training")? * chunk.len() as f64;
            model.params.zero_grads();
            g.backward_into(loss, &mut model.params)?;
            opt.step(&mut model.params)?;
        }
        let train_loss = total / picks.len() as f64;
        let valid_loss = check_loss(
            acoustic_reconstruction_error(model, if valid.is_empty() { train } else { valid })?,
            "validation",
        )?;
        log::info!("epoch {epoch}: train {train_loss:.6} valid {valid_loss:.6}");
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            valid_loss,
        });
        if stopper.observe(epoch, valid_loss, &model.params) && epoch < cfg.max_epochs {
            stop = StopReason::EarlyStop;
            break;
        }
    }
    let best_epoch = stopper.restore(&mut model.params)?;
    Ok(TrainLog {
        epochs,
        stop,
        best_epoch,
    })
}

/// Mean squared error of BLSTM predictions, pooled over all frames.
pub fn supervised_objective(model: &Model, utts: &[(&Tensor, &Tensor)]) -> Result<f64> {
    let (mut total, mut count) = (0.0, 0usize);
    for (x, y) in utts {
        let mut g = Graph::new();
        let input = g.constant((*x).clone());
        let pred = model.blstm_forward(&mut g, &model.params, input)?;
        let target = g.constant((*y).clone());
        let loss = supervised_loss(&mut g, pred, target)?;
        total += g.value(loss).item() * y.len() as f64;
        count += y.len();
    }
    if count == 0 {
        return Err(Error::data("no frames to evaluate"));
    }
    Ok(total / count as f64)
}

/// Trains a BLSTM on `(input, target)` utterance pairs with per-utterance
/// losses averaged over `batch_size` utterances per update.
pub fn train_supervised(
    model: &mut Model,
    train: &[(&Tensor, &Tensor)],
    valid: &[(&Tensor, &Tensor)],
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    if model.kind() != ModelKind::Blstm {
        return Err(Error::config("only BLSTM models train on whole utterances"));
    }
    if train.is_empty() {
        return Err(Error::data("training set has no utterances"));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut opt = Optimizer::new(cfg.optimizer.clone(), &model.params)?;
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut epochs = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut total, mut frames) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            model.params.zero_grads();
            for &u in chunk {
                let (x, y) = train[u];
                let mut g = Graph::new();
                let input = g.constant(x.clone());
                let pred = model.blstm_forward(&mut g, &model.params, input)?;
                let target = g.constant(y.clone());
                let loss = supervised_loss(&mut g, pred, target)?;
                total += check_loss(g.value(loss).item(), "training")? * y.len() as f64;
                frames += y.len();
                g.backward_into(loss, &mut model.params)?;
            }
            model.params.scale_grads(1.0 / chunk.len() as f64);
            opt.step(&mut model.params)?;
        }
        let train_loss = total / frames as f64;
        let valid_loss = check_loss(
            supervised_objective(model, if valid.is_empty() { train } else { valid })?,
            "validation",
        )?;
        log::info!("epoch {epoch}: train {train_loss:.6} valid {valid_loss:.6}");
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            valid_loss,
        });
        if stopper.observe(epoch, valid_loss, &model.params) && epoch < cfg.max_epochs {
            stop = StopReason::EarlyStop;
            break;
        }
    }
    let best_epoch = stopper.restore(&mut model.params)?;
    Ok(TrainLog {
        epochs,
        stop,
        best_epoch,
    })
}
