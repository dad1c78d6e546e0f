use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Graph, ParameterSet, Var};

use super::dense::Mlp;

/// Hourglass autoencoder: encoder widths, a linear bottleneck, and a
/// decoder mirroring the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderSpec {
    pub input_dim: usize,
    pub encoder: Vec<usize>,
    pub bottleneck: usize,
}

impl AutoencoderSpec {
    pub fn encoder_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim];
        s.extend(&self.encoder);
        s.push(self.bottleneck);
        s
    }

    pub fn decoder_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.bottleneck];
        s.extend(self.encoder.iter().rev());
        s.push(self.input_dim);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.bottleneck == 0 || self.encoder.contains(&0) {
            return Err(Error::config("autoencoder widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Autoencoder {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl Autoencoder {
    pub fn build<R: Rng>(spec: &AutoencoderSpec, params: &mut ParameterSet, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        Ok(Autoencoder {
            encoder: Mlp::build(params, "enc", &spec.encoder_sizes(), rng)?,
            decoder: Mlp::build(params, "dec", &spec.decoder_sizes(), rng)?,
        })
    }

    pub fn bind(spec: &AutoencoderSpec, params: &ParameterSet) -> Result<Self> {
        Ok(Autoencoder {
            encoder: Mlp::bind(params, "enc", &spec.encoder_sizes())?,
            decoder: Mlp::bind(params, "dec", &spec.decoder_sizes())?,
        })
    }

    /// Returns `(code, reconstruction)` for a batch of input rows.
    pub fn forward(&self, g: &mut Graph, params: &ParameterSet, input: Var) -> Result<(Var, Var)> {
        if g.shape(input).1 != self.encoder.input_dim() {
            return Err(Error::shape(format!(
                "autoencoder expects {} inputs, got {}",
                self.encoder.input_dim(),
                g.shape(input).1
            )));
        }
        let code = self.encoder.forward(g, params, input);
        let recon = self.decoder.forward(g, params, code);
        Ok((code, recon))
    }
}
