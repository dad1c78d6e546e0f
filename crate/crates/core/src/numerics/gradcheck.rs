use crate::error::Result;
use crate::numerics::{Graph, ParameterSet, Var};

/// Compares reverse-mode gradients against central finite differences.
///
/// `build` records the loss for the current parameter values. Returns the
/// maximum over all parameter entries of
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_difference_check<F>(params: &mut ParameterSet, step: f64, mut build: F) -> Result<f64>
where
    F: FnMut(&mut Graph, &ParameterSet) -> Result<Var>,
{
    let mut g = Graph::new();
    let loss = build(&mut g, params)?;
    let analytic = g.backward(loss, params)?;

    let mut eval = |ps: &ParameterSet| -> Result<f64> {
        let mut g = Graph::new();
        let loss = build(&mut g, ps)?;
        Ok(g.value(loss).item())
    };

    let mut worst: f64 = 0.0;
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        for i in 0..params.value(id).len() {
            let original = params.value(id).data()[i];
            params.value_mut(id).data_mut()[i] = original + step;
            let plus = eval(params)?;
            params.value_mut(id).data_mut()[i] = original - step;
            let minus = eval(params)?;
            params.value_mut(id).data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let exact = analytic.get(id).map_or(0.0, |t| t.data()[i]);
            let denom = exact.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((exact - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{xavier_init, Tensor};

    #[test]
    fn quadratic_is_exact() {
        let mut ps = ParameterSet::new();
        let id = ps
            .add("q", Tensor::matrix(1, 3, vec![0.5, -1.5, 2.0]).unwrap())
            .unwrap();
        let err = finite_difference_check(&mut ps, 1e-5, |g, ps| {
            let p = g.param(ps, id);
            let c = g.constant(Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]).unwrap());
            let d = g.sub(p, c);
            let s = g.sum_squares(d);
            Ok(g.scale(s, 0.7))
        })
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn every_op_matches_differences() {
        let mut ps = ParameterSet::new();
        let w = ps.add("w", xavier_init(4, 3, 1)).unwrap();
        let b = ps.add("b", Tensor::matrix(1, 3, vec![0.1, -0.2, 0.3]).unwrap()).unwrap();
        let r = ps.add("r", Tensor::matrix(2, 1, vec![0.4, -0.1]).unwrap()).unwrap();
        let x = Tensor::matrix(2, 4, vec![0.3, -0.7, 0.2, 1.1, -0.5, 0.9, 0.4, -0.3]).unwrap();
        let err = finite_difference_check(&mut ps, 1e-5, |g, ps| {
            let x = g.constant(x.clone());
            let (w, b, r) = (g.param(ps, w), g.param(ps, b), g.param(ps, r));
            let h = g.linear(x, w, Some(b));
            let t = g.tanh(h);
            let s = g.sigmoid(h);
            let m = g.mul(t, s);
            let c = g.add_col(m, r);
            let left = g.slice_cols(c, 0, 2);
            let right = g.slice_cols(c, 1, 2);
            let both = g.concat_cols(&[left, right]);
            let r0 = g.row(both, 0);
            let r1 = g.row(both, 1);
            let d = g.sub(r1, r0);
            let stacked = g.stack_rows(&[d, r0]);
            let bias_row = g.slice_cols(b, 0, 1);
            let bias4 = g.concat_cols(&[bias_row, bias_row, bias_row, bias_row]);
            let shifted = g.add_row(stacked, bias4);
            let sq = g.sum_squares(shifted);
            let lin = g.sum(shifted);
            let lin = g.scale(lin, 0.3);
            Ok(g.add(sq, lin))
        })
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }
}
