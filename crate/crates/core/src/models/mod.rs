//! Model families: the supervised BLSTM and the weakly supervised AE1, AE2
//! and ResDNN, their losses, and a uniform wrapper for training,
//! persistence and generation.

mod autoencoder;
mod blstm;
mod dense;
pub mod losses;
mod resdnn;
mod window;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use autoencoder::{Autoencoder, AutoencoderSpec};
pub use blstm::{Blstm, BlstmSpec};
pub use dense::Mlp;
pub use losses::{
    ae1_loss, ae1_loss_value, ae2_loss, batch_sq_error, ae2_loss_value, resdnn_loss, resdnn_loss_value,
    supervised_loss, LossConfig,
};
pub use resdnn::{residual_layer, ResDnn, ResDnnSpec, ResidualMode};
pub use window::{ContextWindow, DEFAULT_HALF_WIDTH};

use crate::error::{Error, Result};
use crate::kv::{self, KvFile};
use crate::numerics::{load_checkpoint, save_checkpoint, Graph, ParamId, ParameterSet, Tensor, Var};

pub(crate) fn lookup(params: &ParameterSet, name: &str, shape: &[usize]) -> Result<ParamId> {
    let id = params
        .id(name)
        .ok_or_else(|| Error::State(format!("checkpoint lacks parameter {name}")))?;
    if params.value(id).shape() != shape {
        return Err(Error::shape(format!(
            "parameter {name} has shape {:?}, expected {shape:?}",
            params.value(id).shape()
        )));
    }
    Ok(id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Blstm,
    Ae1,
    Ae2,
    ResDnn,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "blstm" => Ok(ModelKind::Blstm),
            "ae1" => Ok(ModelKind::Ae1),
            "ae2" => Ok(ModelKind::Ae2),
            "resdnn" => Ok(ModelKind::ResDnn),
            other => Err(Error::config(format!("unknown model kind {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Blstm => "blstm",
            ModelKind::Ae1 => "ae1",
            ModelKind::Ae2 => "ae2",
            ModelKind::ResDnn => "resdnn",
        }
    }

    pub fn is_weakly_supervised(self) -> bool {
        self != ModelKind::Blstm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(Error::config(format!("unknown scale {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        }
    }

    fn encoder(self) -> Vec<usize> {
        match self {
            Scale::Paper => vec![200, 130, 70],
            Scale::Desk => vec![64, 32],
        }
    }

    fn trunk(self) -> Vec<usize> {
        match self {
            Scale::Paper => vec![1000; 4],
            Scale::Desk => vec![128; 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Architecture {
    Blstm(BlstmSpec),
    /// Acoustic-window autoencoder whose bottleneck is the prior estimate.
    Ae1 { window: ContextWindow, ae: AutoencoderSpec, prior_dim: usize },
    /// Prior-window autoencoder whose bottleneck is the acoustic estimate.
    /// With `average`, each frame's estimate is the mean over all windows
    /// covering it instead of the centre of its own window.
    Ae2 { window: ContextWindow, ae: AutoencoderSpec, prior_dim: usize, average: bool },
    ResDnn(ResDnnSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub arch: Architecture,
    pub loss: LossConfig,
    pub seed: u64,
}

impl ModelSpec {
    pub fn blstm(scale: Scale, input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let spec = match scale {
            Scale::Paper => BlstmSpec::full(input_dim, output_dim),
            Scale::Desk => BlstmSpec::desk(input_dim, output_dim),
        };
        ModelSpec {
            arch: Architecture::Blstm(spec),
            loss: LossConfig::default(),
            seed,
        }
    }

    pub fn ae1(scale: Scale, acoustic_dim: usize, prior_dim: usize, seed: u64) -> Self {
        let window = ContextWindow::default();
        ModelSpec {
            arch: Architecture::Ae1 {
                window,
                ae: AutoencoderSpec {
                    input_dim: window.width(acoustic_dim),
                    encoder: scale.encoder(),
                    bottleneck: prior_dim,
                },
                prior_dim,
            },
            loss: LossConfig::default(),
            seed,
        }
    }

    pub fn ae2(scale: Scale, acoustic_dim: usize, prior_dim: usize, seed: u64) -> Self {
        let window = ContextWindow::default();
        ModelSpec {
            arch: Architecture::Ae2 {
                window,
                ae: AutoencoderSpec {
                    input_dim: window.width(prior_dim),
                    encoder: scale.encoder(),
                    bottleneck: acoustic_dim,
                },
                prior_dim,
                average: false,
            },
            loss: LossConfig::default(),
            seed,
        }
    }

    pub fn resdnn(scale: Scale, acoustic_dim: usize, prior_dim: usize, mode: ResidualMode, seed: u64) -> Self {
        ModelSpec {
            arch: Architecture::ResDnn(ResDnnSpec {
                prior_dim,
                window: ContextWindow::default(),
                trunk: scale.trunk(),
                output_dim: acoustic_dim,
                residual: mode,
            }),
            loss: LossConfig::default(),
            seed,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.arch {
            Architecture::Blstm(_) => ModelKind::Blstm,
            Architecture::Ae1 { .. } => ModelKind::Ae1,
            Architecture::Ae2 { .. } => ModelKind::Ae2,
            Architecture::ResDnn(_) => ModelKind::ResDnn,
        }
    }

    /// Context window of the weakly supervised models.
    pub fn window(&self) -> Option<ContextWindow> {
        match &self.arch {
            Architecture::Blstm(_) => None,
            Architecture::Ae1 { window, .. } | Architecture::Ae2 { window, .. } => Some(*window),
            Architecture::ResDnn(s) => Some(s.window),
        }
    }

    pub fn with_half_width(mut self, half_width: usize) -> Self {
        let w = ContextWindow::new(half_width);
        match &mut self.arch {
            Architecture::Blstm(_) => {}
            Architecture::Ae1 { window, ae, .. } => {
                ae.input_dim = ae.input_dim / window.span() * w.span();
                *window = w;
            }
            Architecture::Ae2 { window, ae, prior_dim, .. } => {
                ae.input_dim = w.width(*prior_dim);
                *window = w;
            }
            Architecture::ResDnn(s) => s.window = w,
        }
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("kind", self.kind().as_str().into());
        match &self.arch {
            Architecture::Blstm(b) => {
                put("input_dim", b.input_dim.to_string());
                put("output_dim", b.output_dim.to_string());
                put("layers", b.layers.to_string());
                put("hidden", b.hidden.to_string());
                put("peepholes", b.peepholes.to_string());
            }
            Architecture::Ae1 { window, ae, prior_dim } => {
                put("acoustic_dim", (ae.input_dim / window.span()).to_string());
                put("prior_dim", prior_dim.to_string());
                put("half_width", window.half_width.to_string());
                put("encoder", kv::join(&ae.encoder));
            }
            Architecture::Ae2 { window, ae, prior_dim, average } => {
                put("acoustic_dim", ae.bottleneck.to_string());
                put("prior_dim", prior_dim.to_string());
                put("half_width", window.half_width.to_string());
                put("encoder", kv::join(&ae.encoder));
                put("average", average.to_string());
            }
            Architecture::ResDnn(r) => {
                put("acoustic_dim", r.output_dim.to_string());
                put("prior_dim", r.prior_dim.to_string());
                put("half_width", r.window.half_width.to_string());
                put("trunk", kv::join(&r.trunk));
                put("residual", r.residual.as_str().into());
            }
        }
        put("lambda_z", self.loss.lambda_z.to_string());
        put("lambda_x", self.loss.lambda_x.to_string());
        put("lambda_w", self.loss.lambda_w.to_string());
        put("seed", self.seed.to_string());
        s
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let kind = ModelKind::parse(kv.require("kind")?)?;
        let req = |k: &str| -> Result<usize> {
            kv.parse_opt(k)?.ok_or_else(|| Error::config(format!("model spec lacks {k}")))
        };
        let list = |k: &str| -> Result<Vec<usize>> {
            kv.list(k)?.ok_or_else(|| Error::config(format!("model spec lacks {k}")))
        };
        let arch = match kind {
            ModelKind::Blstm => Architecture::Blstm(BlstmSpec {
                input_dim: req("input_dim")?,
                output_dim: req("output_dim")?,
                layers: req("layers")?,
                hidden: req("hidden")?,
                peepholes: kv.parse_or("peepholes", true)?,
            }),
            ModelKind::Ae1 => {
                let window = ContextWindow::new(req("half_width")?);
                Architecture::Ae1 {
                    window,
                    ae: AutoencoderSpec {
                        input_dim: window.width(req("acoustic_dim")?),
                        encoder: list("encoder")?,
                        bottleneck: req("prior_dim")?,
                    },
                    prior_dim: req("prior_dim")?,
                }
            }
            ModelKind::Ae2 => {
                let window = ContextWindow::new(req("half_width")?);
                Architecture::Ae2 {
                    window,
                    ae: AutoencoderSpec {
                        input_dim: window.width(req("prior_dim")?),
                        encoder: list("encoder")?,
                        bottleneck: req("acoustic_dim")?,
                    },
                    prior_dim: req("prior_dim")?,
                    average: kv.parse_or("average", false)?,
                }
            }
            ModelKind::ResDnn => Architecture::ResDnn(ResDnnSpec {
                prior_dim: req("prior_dim")?,
                window: ContextWindow::new(req("half_width")?),
                trunk: list("trunk")?,
                output_dim: req("acoustic_dim")?,
                residual: ResidualMode::parse(kv.get("residual").unwrap_or("scalar"))?,
            }),
        };
        let d = LossConfig::default();
        let loss = LossConfig {
            lambda_z: kv.parse_or("lambda_z", d.lambda_z)?,
            lambda_x: kv.parse_or("lambda_x", d.lambda_x)?,
            lambda_w: kv.parse_or("lambda_w", d.lambda_w)?,
        };
        loss.validate()?;
        Ok(ModelSpec {
            arch,
            loss,
            seed: kv.parse_or("seed", 0)?,
        })
    }
}

#[derive(Debug, Clone)]
enum Network {
    Blstm(Blstm),
    Autoencoder(Autoencoder),
    ResDnn(ResDnn),
}

/// Frames for one weakly supervised minibatch. Each model family uses
/// windows on one side and centre frames on the other.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakBatch {
    /// AE1: acoustic windows; AE2 and ResDNN: centre acoustic frames.
    pub acoustic: Tensor,
    /// AE1: centre priors; AE2 and ResDNN: prior windows.
    pub priors: Tensor,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: ParameterSet,
    net: Network,
}

pub fn spec_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".spec");
    PathBuf::from(s)
}

impl Model {
    /// Fresh model with Xavier-initialized weights drawn from the spec seed.
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut params = ParameterSet::new();
        let net = match &spec.arch {
            Architecture::Blstm(b) => Network::Blstm(Blstm::build(b, &mut params, &mut rng)?),
            Architecture::Ae1 { ae, .. } | Architecture::Ae2 { ae, .. } => {
                Network::Autoencoder(Autoencoder::build(ae, &mut params, &mut rng)?)
            }
            Architecture::ResDnn(r) => Network::ResDnn(ResDnn::build(r, &mut params, &mut rng)?),
        };
        Ok(Model { spec, params, net })
    }

    pub fn from_parts(spec: ModelSpec, params: ParameterSet) -> Result<Self> {
        let net = match &spec.arch {
            Architecture::Blstm(b) => Network::Blstm(Blstm::bind(b, &params)?),
            Architecture::Ae1 { ae, .. } | Architecture::Ae2 { ae, .. } => {
                Network::Autoencoder(Autoencoder::bind(ae, &params)?)
            }
            Architecture::ResDnn(r) => Network::ResDnn(ResDnn::bind(r, &params)?),
        };
        Ok(Model { spec, params, net })
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    /// A model counts as trained once the optimizer has taken a step.
    pub fn is_trained(&self) -> bool {
        self.params.step() > 0
    }

    /// Writes the checkpoint and its spec alongside as `<path>.spec`.
    pub fn save(&self, path: &Path) -> Result<()> {
        save_checkpoint(&self.params, path)?;
        let sp = spec_path(path);
        std::fs::write(&sp, self.spec.to_text()).map_err(|e| Error::io(sp, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let spec = ModelSpec::from_kv(&KvFile::load(&spec_path(path))?)?;
        Self::from_parts(spec, load_checkpoint(path)?)
    }

    fn require_trained(&self) -> Result<()> {
        if !self.is_trained() {
            return Err(Error::State(format!("{} model has not been trained", self.kind().as_str())));
        }
        Ok(())
    }

    /// Supervised forward pass for one utterance.
    pub fn blstm_forward(&self, g: &mut Graph, params: &ParameterSet, input: Var) -> Result<Var> {
        match &self.net {
            Network::Blstm(b) => b.forward(g, params, input),
            _ => Err(Error::State("not a BLSTM model".into())),
        }
    }

    /// BLSTM predictions for one utterance.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        self.require_trained()?;
        match &self.net {
            Network::Blstm(b) => b.predict(&self.params, input),
            _ => Err(Error::State("not a BLSTM model".into())),
        }
    }

    /// Gathers a minibatch from `(acoustic, priors)` utterance pairs at
    /// `(utterance, frame)` positions.
    pub fn make_batch(&self, utts: &[(&Tensor, &Tensor)], picks: &[(usize, usize)]) -> Result<WeakBatch> {
        let window = self
            .spec
            .window()
            .ok_or_else(|| Error::State("BLSTM models take whole utterances".into()))?;
        let windowed_acoustic = self.kind() == ModelKind::Ae1;
        let (mut ac, mut pr) = (Vec::new(), Vec::new());
        let (mut ac_w, mut pr_w) = (0, 0);
        for &(u, t) in picks {
            let (x, z) = utts
                .get(u)
                .ok_or_else(|| Error::shape(format!("utterance index {u} out of range")))?;
            if x.rows() != z.rows() || t >= x.rows() {
                return Err(Error::shape(format!(
                    "frame {t} of utterance {u} ({} acoustic, {} prior frames)",
                    x.rows(),
                    z.rows()
                )));
            }
            if windowed_acoustic {
                window.extend_into(x, t, &mut ac);
                pr.extend_from_slice(z.row(t));
                (ac_w, pr_w) = (window.width(x.cols()), z.cols());
            } else {
                ac.extend_from_slice(x.row(t));
                window.extend_into(z, t, &mut pr);
                (ac_w, pr_w) = (x.cols(), window.width(z.cols()));
            }
        }
        Ok(WeakBatch {
            acoustic: Tensor::matrix(picks.len(), ac_w, ac)?,
            priors: Tensor::matrix(picks.len(), pr_w, pr)?,
        })
    }

    /// Minibatch objective of a weakly supervised model.
    pub fn weak_loss(&self, g: &mut Graph, params: &ParameterSet, batch: &WeakBatch) -> Result<Var> {
        let loss = &self.spec.loss;
        let x = g.constant(batch.acoustic.clone());
        let z = g.constant(batch.priors.clone());
        match (&self.net, self.kind()) {
            (Network::Autoencoder(ae), ModelKind::Ae1) => {
                let (z_hat, x_hat) = ae.forward(g, params, x)?;
                ae1_loss(g, x, x_hat, z, z_hat, loss.lambda_z)
            }
            (Network::Autoencoder(ae), ModelKind::Ae2) => {
                let (x_hat, z_hat) = ae.forward(g, params, z)?;
                ae2_loss(g, z, z_hat, x, x_hat, loss.lambda_x)
            }
            (Network::ResDnn(r), _) => {
                let (_, x_hat) = r.forward(g, params, z)?;
                let w = g.param(params, r.residual);
                resdnn_loss(g, x, x_hat, w, loss.lambda_w)
            }
            _ => Err(Error::State("BLSTM models have no weakly supervised loss".into())),
        }
    }

    /// Mean acoustic reconstruction error `‖x − x̂‖²` of a minibatch
    /// (acoustic windows for AE1), the early-stopping criterion.
    pub fn acoustic_error(&self, batch: &WeakBatch) -> Result<f64> {
        let mut g = Graph::new();
        let x = g.constant(batch.acoustic.clone());
        let z = g.constant(batch.priors.clone());
        let x_hat = match (&self.net, self.kind()) {
            (Network::Autoencoder(ae), ModelKind::Ae1) => ae.forward(&mut g, &self.params, x)?.1,
            (Network::Autoencoder(ae), ModelKind::Ae2) => ae.forward(&mut g, &self.params, z)?.0,
            (Network::ResDnn(r), _) => r.forward(&mut g, &self.params, z)?.1,
            _ => return Err(Error::State("BLSTM models have no weakly supervised loss".into())),
        };
        let e = batch_sq_error(&mut g, x, x_hat, "acoustic estimate")?;
        Ok(g.value(e).item())
    }

    /// Generated articulatory sequence `ẑ` (`N × G`). AE1 reads acoustic
    /// frames; AE2 and ResDNN read priors.
    pub fn generate(&self, input: &Tensor) -> Result<Tensor> {
        self.require_trained()?;
        let window = self
            .spec
            .window()
            .ok_or_else(|| Error::State("BLSTM models do not generate priors".into()))?;
        let mut g = Graph::new();
        let inp = g.constant(window.all(input));
        match (&self.net, &self.spec.arch) {
            (Network::Autoencoder(ae), Architecture::Ae1 { .. }) => {
                let (code, _) = ae.forward(&mut g, &self.params, inp)?;
                Ok(g.value(code).clone())
            }
            (Network::Autoencoder(ae), Architecture::Ae2 { prior_dim, average, .. }) => {
                let (_, recon) = ae.forward(&mut g, &self.params, inp)?;
                let recon = g.value(recon);
                let gd = *prior_dim;
                let h = window.half_width;
                if !*average {
                    return Ok(recon.slice_cols(h * gd, gd));
                }
                let n = input.rows();
                let mut sum = Tensor::zeros(&[n, gd]);
                let mut count = vec![0usize; n];
                for t in 0..n {
                    for k in 0..window.span() {
                        let s = t as isize + k as isize - h as isize;
                        if s < 0 || s >= n as isize {
                            continue;
                        }
                        let s = s as usize;
                        for (acc, v) in sum.row_mut(s).iter_mut().zip(&recon.row(t)[k * gd..(k + 1) * gd]) {
                            *acc += v;
                        }
                        count[s] += 1;
                    }
                }
                for (t, c) in count.iter().enumerate() {
                    sum.row_mut(t).iter_mut().for_each(|v| *v /= *c as f64);
                }
                Ok(sum)
            }
            (Network::ResDnn(r), _) => {
                let z_hat = r.refine(&mut g, &self.params, inp)?;
                Ok(g.value(z_hat).clone())
            }
            _ => Err(Error::State("inconsistent model".into())),
        }
    }
}

/// Generated articulatory features for one utterance; see [`Model::generate`].
pub fn generate_afs(model: &Model, input: &Tensor) -> Result<Tensor> {
    model.generate(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_difference_check;
    use rand::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn toy(kind: ModelKind, mode: ResidualMode) -> Model {
        let spec = match kind {
            ModelKind::Ae1 => ModelSpec::ae1(Scale::Desk, 4, 3, 7),
            ModelKind::Ae2 => ModelSpec::ae2(Scale::Desk, 5, 3, 7),
            ModelKind::ResDnn => ModelSpec::resdnn(Scale::Desk, 4, 3, mode, 7),
            ModelKind::Blstm => ModelSpec::blstm(Scale::Desk, 3, 2, 7),
        };
        let mut spec = spec.with_half_width(1);
        match &mut spec.arch {
            Architecture::Ae1 { ae, .. } | Architecture::Ae2 { ae, .. } => ae.encoder = vec![6, 4],
            Architecture::ResDnn(r) => r.trunk = vec![5, 4],
            Architecture::Blstm(b) => b.hidden = 3,
        }
        Model::new(spec).unwrap()
    }

    fn toy_batch(model: &Model) -> WeakBatch {
        let (xd, zd) = match model.kind() {
            ModelKind::Ae2 => (5, 3),
            _ => (4, 3),
        };
        let x = random(6, xd, 1);
        let z = random(6, zd, 2);
        model.make_batch(&[(&x, &z)], &[(0, 0), (0, 3), (0, 5)]).unwrap()
    }

    #[test]
    fn weak_losses_pass_gradient_check() {
        for (kind, mode) in [
            (ModelKind::Ae1, ResidualMode::Scalar),
            (ModelKind::Ae2, ResidualMode::Scalar),
            (ModelKind::ResDnn, ResidualMode::Scalar),
            (ModelKind::ResDnn, ResidualMode::PerComponent),
        ] {
            let model = toy(kind, mode);
            let batch = toy_batch(&model);
            let mut ps = model.params.clone();
            // move the residual weights off zero
            if let Some(id) = ps.id("res.w") {
                let r = random(ps.value(id).rows(), ps.value(id).cols(), 9);
                ps.value_mut(id).data_mut().copy_from_slice(r.data());
            }
            let err = finite_difference_check(&mut ps, 1e-5, |g, ps| model.weak_loss(g, ps, &batch)).unwrap();
            assert!(err < 1e-4, "{kind:?} {mode:?}: {err}");
        }
    }

    #[test]
    fn batch_layout() {
        let model = toy(ModelKind::Ae1, ResidualMode::Scalar);
        let b = toy_batch(&model);
        assert_eq!(b.acoustic.shape(), &[3, 12]);
        assert_eq!(b.priors.shape(), &[3, 3]);
        let model = toy(ModelKind::ResDnn, ResidualMode::Scalar);
        let b = toy_batch(&model);
        assert_eq!(b.acoustic.shape(), &[3, 4]);
        assert_eq!(b.priors.shape(), &[3, 9]);
    }

    #[test]
    fn untrained_generation_fails() {
        let model = toy(ModelKind::Ae2, ResidualMode::Scalar);
        assert!(model.generate(&random(4, 3, 1)).is_err());
    }

    #[test]
    fn resdnn_zero_residual_returns_priors() {
        let mut model = toy(ModelKind::ResDnn, ResidualMode::Scalar);
        model.params.set_step(1);
        let z = random(7, 3, 4);
        assert_eq!(model.generate(&z).unwrap(), z);
    }

    #[test]
    fn ae2_constant_input_constant_output() {
        let mut model = toy(ModelKind::Ae2, ResidualMode::Scalar);
        model.params.set_step(1);
        let z = Tensor::full(&[6, 3], 0.5);
        let out = model.generate(&z).unwrap();
        assert_eq!(out.shape(), &[6, 3]);
        for r in 1..6 {
            assert_eq!(out.row(r), out.row(0));
        }
        if let Architecture::Ae2 { average, .. } = &mut model.spec.arch {
            *average = true;
        }
        // frames covered by every window position agree
        let avg = model.generate(&z).unwrap();
        for r in 2..5 {
            for (a, b) in avg.row(r).iter().zip(avg.row(1)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [ModelKind::Blstm, ModelKind::Ae1, ModelKind::Ae2, ModelKind::ResDnn] {
            let mut model = toy(kind, ResidualMode::PerComponent);
            model.params.set_step(3);
            let p = dir.path().join(format!("{}.ckpt", kind.as_str()));
            model.save(&p).unwrap();
            let back = Model::load(&p).unwrap();
            assert_eq!(back.spec, model.spec);
            assert_eq!(back.params.step(), 3);
            for ((n1, a), (n2, b)) in back.params.iter().zip(model.params.iter()) {
                assert_eq!(n1, n2);
                assert_eq!(a, b);
            }
        }
    }
}
