use rand::Rng;

use crate::error::Result;
use crate::numerics::{xavier_with, Graph, ParamId, ParameterSet, Tensor, Var};

/// Fully connected stack: tanh on hidden layers, linear output.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<(ParamId, ParamId)>,
    sizes: Vec<usize>,
}

impl Mlp {
    /// Registers weights `"{prefix}.{i}.w"` (Xavier) and biases (zero).
    pub fn build<R: Rng>(
        params: &mut ParameterSet,
        prefix: &str,
        sizes: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (i, pair) in sizes.windows(2).enumerate() {
            let w = params.add(format!("{prefix}.{i}.w"), xavier_with(rng, pair[0], pair[1]))?;
            let b = params.add(format!("{prefix}.{i}.b"), Tensor::zeros(&[1, pair[1]]))?;
            layers.push((w, b));
        }
        Ok(Mlp {
            layers,
            sizes: sizes.to_vec(),
        })
    }

    /// Re-attaches to parameters registered by [`build`](Self::build).
    pub fn bind(params: &ParameterSet, prefix: &str, sizes: &[usize]) -> Result<Self> {
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (i, pair) in sizes.windows(2).enumerate() {
            let lookup = |suffix: &str, shape: [usize; 2]| {
                super::lookup(params, &format!("{prefix}.{i}.{suffix}"), &shape)
            };
            layers.push((lookup("w", [pair[1], pair[0]])?, lookup("b", [1, pair[1]])?));
        }
        Ok(Mlp {
            layers,
            sizes: sizes.to_vec(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn forward(&self, g: &mut Graph, params: &ParameterSet, x: Var) -> Var {
        let mut h = x;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let (w, b) = (g.param(params, w), g.param(params, b));
            h = g.linear(h, w, Some(b));
            if i + 1 < self.layers.len() {
                h = g.tanh(h);
            }
        }
        h
    }
}
