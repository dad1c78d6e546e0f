//! Residual prior refinement followed by a feed-forward trunk that maps
//! the refined prior to the acoustic frame.
//!
//! In the scalar form the residual is a single value
//! `R_t = Σ_s Σ_g z_s^g · w_sg` over the prior window, added to every
//! component of the centre prior. The per-component form learns a
//! separate residual for each component.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParameterSet, Tensor, Var};

use super::dense::Mlp;
use super::window::ContextWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    Scalar,
    PerComponent,
}

impl ResidualMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(ResidualMode::Scalar),
            "per-component" => Ok(ResidualMode::PerComponent),
            other => Err(Error::config(format!("unknown residual mode {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ResidualMode::Scalar => "scalar",
            ResidualMode::PerComponent => "per-component",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResDnnSpec {
    pub prior_dim: usize,
    pub window: ContextWindow,
    pub trunk: Vec<usize>,
    pub output_dim: usize,
    pub residual: ResidualMode,
}

impl ResDnnSpec {
    pub fn residual_rows(&self) -> usize {
        match self.residual {
            ResidualMode::Scalar => 1,
            ResidualMode::PerComponent => self.prior_dim,
        }
    }

    pub fn trunk_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.prior_dim];
        s.extend(&self.trunk);
        s.push(self.output_dim);
        s
    }
}

/// `ẑ_t = z_t + R_t` for one window of `(2T+1)·G` values; `w` holds one
/// row of `(2T+1)·G` weights (scalar form) or `G` rows (per component).
pub fn residual_layer(z_window: &[f64], w: &[f64], prior_dim: usize) -> Result<Vec<f64>> {
    let width = z_window.len();
    if prior_dim == 0 || !width.is_multiple_of(prior_dim) || (width / prior_dim).is_multiple_of(2) {
        return Err(Error::shape(format!(
            "prior window of {width} values is not an odd number of {prior_dim}-dim frames"
        )));
    }
    let rows = w.len() / width.max(1);
    if rows * width != w.len() || !(rows == 1 || rows == prior_dim) {
        return Err(Error::shape(format!(
            "residual weights have {} values for a {width}-value window",
            w.len()
        )));
    }
    let centre = (width / prior_dim / 2) * prior_dim;
    let dot = |r: usize| -> f64 {
        w[r * width..(r + 1) * width]
            .iter()
            .zip(z_window)
            .map(|(a, b)| a * b)
            .sum()
    };
    Ok((0..prior_dim)
        .map(|i| z_window[centre + i] + dot(if rows == 1 { 0 } else { i }))
        .collect())
}

#[derive(Debug, Clone)]
pub struct ResDnn {
    spec: ResDnnSpec,
    pub residual: ParamId,
    pub trunk: Mlp,
}

impl ResDnn {
    /// Residual weights start at zero, so the untrained layer is the identity.
    pub fn build<R: Rng>(spec: &ResDnnSpec, params: &mut ParameterSet, rng: &mut R) -> Result<Self> {
        let residual = params.add(
            "res.w",
            Tensor::zeros(&[spec.residual_rows(), spec.window.width(spec.prior_dim)]),
        )?;
        let trunk = Mlp::build(params, "trunk", &spec.trunk_sizes(), rng)?;
        Ok(ResDnn {
            spec: spec.clone(),
            residual,
            trunk,
        })
    }

    pub fn bind(spec: &ResDnnSpec, params: &ParameterSet) -> Result<Self> {
        Ok(ResDnn {
            spec: spec.clone(),
            residual: super::lookup(
                params,
                "res.w",
                &[spec.residual_rows(), spec.window.width(spec.prior_dim)],
            )?,
            trunk: Mlp::bind(params, "trunk", &spec.trunk_sizes())?,
        })
    }

    /// Refined centre priors for a batch of prior windows.
    pub fn refine(&self, g: &mut Graph, params: &ParameterSet, z_windows: Var) -> Result<Var> {
        let width = self.spec.window.width(self.spec.prior_dim);
        if g.shape(z_windows).1 != width {
            return Err(Error::shape(format!(
                "ResDNN expects {width}-value prior windows, got {}",
                g.shape(z_windows).1
            )));
        }
        let g_dim = self.spec.prior_dim;
        let centre = g.slice_cols(z_windows, self.spec.window.half_width * g_dim, g_dim);
        let w = g.param(params, self.residual);
        let r = g.linear(z_windows, w, None);
        Ok(match self.spec.residual {
            ResidualMode::Scalar => g.add_col(centre, r),
            ResidualMode::PerComponent => g.add(centre, r),
        })
    }

    /// Returns `(ẑ, x̂)` for a batch of prior windows.
    pub fn forward(&self, g: &mut Graph, params: &ParameterSet, z_windows: Var) -> Result<(Var, Var)> {
        let z_hat = self.refine(g, params, z_windows)?;
        let x_hat = self.trunk.forward(g, params, z_hat);
        Ok((z_hat, x_hat))
    }
}
