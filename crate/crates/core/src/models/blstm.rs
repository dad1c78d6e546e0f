//! Bidirectional peephole LSTM with a linear output head.
//!
//! Per direction and step, with `a = W_x·x_t + W_h·h_{t−1} + b` split into
//! input, forget, cell and output blocks:
//!
//! ```text
//! i = σ(a_i + p_i ⊙ c_{t−1})
//! f = σ(a_f + p_f ⊙ c_{t−1})
//! c = f ⊙ c_{t−1} + i ⊙ tanh(a_g)
//! o = σ(a_o + p_o ⊙ c)
//! h = o ⊙ tanh(c)
//! ```
//!
//! The backward direction runs the same recurrence from the last frame.
//! Each layer feeds `[h_fwd | h_bwd]` to the next.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{xavier_with, Graph, ParamId, ParameterSet, Tensor, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct BlstmSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: usize,
    /// Memory blocks per direction per layer.
    pub hidden: usize,
    pub peepholes: bool,
}

impl BlstmSpec {
    pub fn full(input_dim: usize, output_dim: usize) -> Self {
        BlstmSpec {
            input_dim,
            output_dim,
            layers: 5,
            hidden: 250,
            peepholes: true,
        }
    }

    pub fn desk(input_dim: usize, output_dim: usize) -> Self {
        BlstmSpec {
            layers: 2,
            hidden: 64,
            ..Self::full(input_dim, output_dim)
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Direction {
    wx: ParamId,
    wh: ParamId,
    b: ParamId,
    peep: Option<[ParamId; 3]>,
}

#[derive(Debug, Clone)]
pub struct Blstm {
    spec: BlstmSpec,
    layers: Vec<[Direction; 2]>,
    head_w: ParamId,
    head_b: ParamId,
}

const DIRS: [&str; 2] = ["fwd", "bwd"];
const PEEPS: [&str; 3] = ["pi", "pf", "po"];

impl Blstm {
    pub fn build<R: Rng>(spec: &BlstmSpec, params: &mut ParameterSet, rng: &mut R) -> Result<Self> {
        let h = spec.hidden;
        let mut layers = Vec::with_capacity(spec.layers);
        for l in 0..spec.layers {
            let input = if l == 0 { spec.input_dim } else { 2 * h };
            let mut dirs = Vec::with_capacity(2);
            for d in DIRS {
                let p = format!("blstm.{l}.{d}");
                let wx = params.add(format!("{p}.wx"), xavier_with(rng, input, 4 * h))?;
                let wh = params.add(format!("{p}.wh"), xavier_with(rng, h, 4 * h))?;
                let b = params.add(format!("{p}.b"), Tensor::zeros(&[1, 4 * h]))?;
                let peep = if spec.peepholes {
                    let mut ids = [wx; 3];
                    for (slot, name) in ids.iter_mut().zip(PEEPS) {
                        *slot = params.add(format!("{p}.{name}"), Tensor::zeros(&[1, h]))?;
                    }
                    Some(ids)
                } else {
                    None
                };
                dirs.push(Direction { wx, wh, b, peep });
            }
            layers.push([dirs[0], dirs[1]]);
        }
        let head_w = params.add("head.w", xavier_with(rng, 2 * h, spec.output_dim))?;
        let head_b = params.add("head.b", Tensor::zeros(&[1, spec.output_dim]))?;
        Ok(Blstm {
            spec: spec.clone(),
            layers,
            head_w,
            head_b,
        })
    }

    pub fn bind(spec: &BlstmSpec, params: &ParameterSet) -> Result<Self> {
        let h = spec.hidden;
        let mut layers = Vec::with_capacity(spec.layers);
        for l in 0..spec.layers {
            let input = if l == 0 { spec.input_dim } else { 2 * h };
            let mut dirs = Vec::with_capacity(2);
            for d in DIRS {
                let p = format!("blstm.{l}.{d}");
                let peep = if spec.peepholes {
                    let mut ids = Vec::with_capacity(3);
                    for name in PEEPS {
                        ids.push(super::lookup(params, &format!("{p}.{name}"), &[1, h])?);
                    }
                    Some([ids[0], ids[1], ids[2]])
                } else {
                    None
                };
                dirs.push(Direction {
                    wx: super::lookup(params, &format!("{p}.wx"), &[4 * h, input])?,
                    wh: super::lookup(params, &format!("{p}.wh"), &[4 * h, h])?,
                    b: super::lookup(params, &format!("{p}.b"), &[1, 4 * h])?,
                    peep,
                });
            }
            layers.push([dirs[0], dirs[1]]);
        }
        Ok(Blstm {
            spec: spec.clone(),
            layers,
            head_w: super::lookup(params, "head.w", &[spec.output_dim, 2 * h])?,
            head_b: super::lookup(params, "head.b", &[1, spec.output_dim])?,
        })
    }

    pub fn spec(&self) -> &BlstmSpec {
        &self.spec
    }

    fn run_direction(
        &self,
        g: &mut Graph,
        params: &ParameterSet,
        dir: &Direction,
        input: Var,
        reverse: bool,
    ) -> Var {
        let h = self.spec.hidden;
        let (n, _) = g.shape(input);
        let (wx, wh, b) = (g.param(params, dir.wx), g.param(params, dir.wh), g.param(params, dir.b));
        let peep = dir.peep.map(|ids| ids.map(|id| g.param(params, id)));
        let projected = g.linear(input, wx, Some(b));

        let mut hidden: Option<Var> = None;
        let mut cell: Option<Var> = None;
        let mut outputs = vec![None; n];
        let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
        for t in order {
            let mut a = g.row(projected, t);
            if let Some(hp) = hidden {
                let rec = g.linear(hp, wh, None);
                a = g.add(a, rec);
            }
            let mut ai = g.slice_cols(a, 0, h);
            let mut af = g.slice_cols(a, h, h);
            let ag = g.slice_cols(a, 2 * h, h);
            let mut ao = g.slice_cols(a, 3 * h, h);
            if let (Some([pi, pf, _]), Some(c)) = (peep, cell) {
                let ti = g.mul(pi, c);
                ai = g.add(ai, ti);
                let tf = g.mul(pf, c);
                af = g.add(af, tf);
            }
            let i = g.sigmoid(ai);
            let cand = g.tanh(ag);
            let mut c = g.mul(i, cand);
            if let Some(cp) = cell {
                let f = g.sigmoid(af);
                let kept = g.mul(f, cp);
                c = g.add(c, kept);
            }
            if let Some([_, _, po]) = peep {
                let to = g.mul(po, c);
                ao = g.add(ao, to);
            }
            let o = g.sigmoid(ao);
            let tc = g.tanh(c);
            let ht = g.mul(o, tc);
            outputs[t] = Some(ht);
            hidden = Some(ht);
            cell = Some(c);
        }
        let rows: Vec<Var> = outputs.into_iter().map(|v| v.expect("every step visited")).collect();
        g.stack_rows(&rows)
    }

    /// `N × output_dim` predictions for one utterance.
    pub fn forward(&self, g: &mut Graph, params: &ParameterSet, input: Var) -> Result<Var> {
        let (n, d) = g.shape(input);
        if n == 0 {
            return Err(Error::shape("empty input sequence"));
        }
        if d != self.spec.input_dim {
            return Err(Error::shape(format!(
                "BLSTM expects {} input dims, got {d}",
                self.spec.input_dim
            )));
        }
        let mut x = input;
        for layer in &self.layers {
            let f = self.run_direction(g, params, &layer[0], x, false);
            let b = self.run_direction(g, params, &layer[1], x, true);
            x = g.concat_cols(&[f, b]);
        }
        let (w, b) = (g.param(params, self.head_w), g.param(params, self.head_b));
        Ok(g.linear(x, w, Some(b)))
    }

    /// Convenience inference on a plain tensor.
    pub fn predict(&self, params: &ParameterSet, input: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let x = g.constant(input.clone());
        let y = self.forward(&mut g, params, x)?;
        Ok(g.value(y).clone())
    }
}
