use crate::error::{Error, Result};
use crate::numerics::{ParameterSet, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    SgdExpDecay,
}

impl OptimizerKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" | "sgd-exp-decay" => Ok(OptimizerKind::SgdExpDecay),
            other => Err(Error::config(format!("unknown optimizer {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::SgdExpDecay => "sgd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Adam first-moment decay (the "momentum").
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Piecewise-constant Adam schedule: from step `s` on, use rate `lr`.
    /// Empty means a constant `learning_rate`.
    pub breakpoints: Vec<(u64, f64)>,
    pub decay_every: u64,
    pub decay_rate: f64,
}

impl OptimizerConfig {
    /// Adam: initial rate 0.1, moment decays 0.9 / 0.999, epsilon 1e-8.
    pub fn adam() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            breakpoints: Vec::new(),
            decay_every: 10_000,
            decay_rate: 0.96,
        }
    }

    /// SGD: rate 0.01, multiplied by 0.96 every 10000 steps.
    pub fn sgd() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::SgdExpDecay,
            learning_rate: 0.01,
            ..Self::adam()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.decay_every == 0 {
            return Err(Error::config("decay_every must be positive"));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate < 1.0) {
            return Err(Error::config("decay_rate must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("moment decay rates must lie in [0, 1)"));
        }
        if self.breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config("learning-rate breakpoints must be increasing"));
        }
        Ok(())
    }

    /// Learning rate in effect for the update taken at `step`.
    pub fn rate_at(&self, step: u64) -> f64 {
        match self.kind {
            OptimizerKind::Adam => self
                .breakpoints
                .iter()
                .take_while(|(s, _)| *s <= step)
                .last()
                .map_or(self.learning_rate, |(_, lr)| *lr),
            OptimizerKind::SgdExpDecay => {
                self.learning_rate * self.decay_rate.powi((step / self.decay_every) as i32)
            }
        }
    }
}

/// Optimizer state (Adam moment buffers) bound to one parameter layout.
#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, params: &ParameterSet) -> Result<Self> {
        cfg.validate()?;
        let zeros: Vec<Tensor> = params
            .ids()
            .map(|id| Tensor::zeros(params.value(id).shape()))
            .collect();
        Ok(Optimizer {
            first: zeros.clone(),
            second: zeros,
            cfg,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn step(&mut self, params: &mut ParameterSet) -> Result<()> {
        match self.cfg.kind {
            OptimizerKind::Adam => adam_step(params, &self.cfg, &mut self.first, &mut self.second),
            OptimizerKind::SgdExpDecay => sgd_step(params, &self.cfg),
        }
    }
}

fn ensure_ready(params: &ParameterSet) -> Result<()> {
    if !params.has_grads() {
        return Err(Error::State(
            "optimizer step before any backward pass".into(),
        ));
    }
    Ok(())
}

/// One bias-corrected Adam update. Increments the step counter.
pub fn adam_step(
    params: &mut ParameterSet,
    cfg: &OptimizerConfig,
    first: &mut [Tensor],
    second: &mut [Tensor],
) -> Result<()> {
    ensure_ready(params)?;
    let lr = cfg.rate_at(params.step());
    let t = (params.step() + 1) as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let (value, grad) = params.value_and_grad_mut(id);
        let m = first[id.index()].data_mut();
        let v = second[id.index()].data_mut();
        for (((p, &g), m), v) in value.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        value.ensure_finite("parameter after adam step")?;
    }
    params.increment_step();
    Ok(())
}

/// `p ← p − lr(step)·g` with exponentially decayed rate. Increments the
/// step counter.
pub fn sgd_step(params: &mut ParameterSet, cfg: &OptimizerConfig) -> Result<()> {
    ensure_ready(params)?;
    let lr = cfg.rate_at(params.step());
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let (value, grad) = params.value_and_grad_mut(id);
        for (p, g) in value.data_mut().iter_mut().zip(grad.data()) {
            *p -= lr * g;
        }
        value.ensure_finite("parameter after sgd step")?;
    }
    params.increment_step();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Graph, ParamId};

    fn single(value: f64, grad: f64) -> (ParameterSet, ParamId) {
        let mut ps = ParameterSet::new();
        let id = ps.add("w", Tensor::scalar(value)).unwrap();
        let mut g = Graph::new();
        let p = g.param(&ps, id);
        let loss = g.scale(p, grad);
        g.backward_into(loss, &mut ps).unwrap();
        (ps, id)
    }

    #[test]
    fn published_defaults() {
        let a = OptimizerConfig::adam();
        assert_eq!((a.learning_rate, a.beta1, a.beta2, a.epsilon), (0.1, 0.9, 0.999, 1e-8));
        let s = OptimizerConfig::sgd();
        assert_eq!((s.learning_rate, s.decay_every, s.decay_rate), (0.01, 10_000, 0.96));
    }

    #[test]
    fn first_adam_step_is_minus_lr() {
        let (mut ps, id) = single(0.0, 1.0);
        let mut opt = Optimizer::new(OptimizerConfig::adam(), &ps).unwrap();
        opt.step(&mut ps).unwrap();
        assert!((ps.value(id).item() + 0.1).abs() < 1e-8);
        assert_eq!(ps.step(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for cfg in [OptimizerConfig::adam(), OptimizerConfig::sgd()] {
            let (mut ps, id) = single(0.75, 0.0);
            let mut opt = Optimizer::new(cfg, &ps).unwrap();
            opt.step(&mut ps).unwrap();
            assert_eq!(ps.value(id).item(), 0.75);
        }
    }

    #[test]
    fn step_before_backward_fails() {
        let mut ps = ParameterSet::new();
        ps.add("w", Tensor::scalar(1.0)).unwrap();
        for cfg in [OptimizerConfig::adam(), OptimizerConfig::sgd()] {
            let mut opt = Optimizer::new(cfg, &ps).unwrap();
            assert!(matches!(opt.step(&mut ps), Err(Error::State(_))));
        }
    }

    #[test]
    fn sgd_decay_schedule() {
        let cfg = OptimizerConfig::sgd();
        assert_eq!(cfg.rate_at(0), 0.01);
        assert_eq!(cfg.rate_at(9_999), 0.01);
        assert!((cfg.rate_at(10_000) - 0.0096).abs() < 1e-15);
        assert!((cfg.rate_at(25_000) - 0.01 * 0.96 * 0.96).abs() < 1e-15);
    }

    #[test]
    fn adam_breakpoints() {
        let mut cfg = OptimizerConfig::adam();
        assert_eq!(cfg.rate_at(1_000_000), 0.1);
        cfg.breakpoints = vec![(100, 0.05), (200, 0.01)];
        assert_eq!(cfg.rate_at(99), 0.1);
        assert_eq!(cfg.rate_at(100), 0.05);
        assert_eq!(cfg.rate_at(500), 0.01);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let (mut ps, id) = single(0.3, -2.0);
            let mut opt = Optimizer::new(OptimizerConfig::adam(), &ps).unwrap();
            for _ in 0..5 {
                opt.step(&mut ps).unwrap();
            }
            ps.value(id).item().to_bits()
        };
        assert_eq!(run(), run());
    }
}
