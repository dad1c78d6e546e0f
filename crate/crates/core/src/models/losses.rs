//! Training objectives. Squared norms are summed within a sample and
//! averaged over the rows (samples) of a minibatch.

use crate::error::{Error, Result};
use crate::numerics::{Graph, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Weight of the prior-matching term of AE1.
    pub lambda_z: f64,
    /// Weight of the acoustic term of AE2.
    pub lambda_x: f64,
    /// Weight decay on the residual weights of ResDNN.
    pub lambda_w: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_z: 2.0,
            lambda_x: 0.5,
            lambda_w: 0.01,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_z", self.lambda_z),
            ("lambda_x", self.lambda_x),
            ("lambda_w", self.lambda_w),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a finite value ≥ 0")));
            }
        }
        Ok(())
    }
}

fn same_shape(g: &Graph, a: Var, b: Var, what: &str) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(Error::shape(format!(
            "{what}: {:?} vs {:?}",
            g.shape(a),
            g.shape(b)
        )));
    }
    Ok(())
}

/// Σ‖a − b‖² over rows, divided by the row count.
pub fn batch_sq_error(g: &mut Graph, a: Var, b: Var, what: &str) -> Result<Var> {
    same_shape(g, a, b, what)?;
    let rows = g.shape(a).0 as f64;
    let d = g.sub(a, b);
    let s = g.sum_squares(d);
    Ok(g.scale(s, 1.0 / rows))
}

/// Mean squared error over all frames and dimensions.
pub fn supervised_loss(g: &mut Graph, pred: Var, target: Var) -> Result<Var> {
    same_shape(g, pred, target, "prediction vs target")?;
    let (n, d) = g.shape(pred);
    let diff = g.sub(pred, target);
    let s = g.sum_squares(diff);
    Ok(g.scale(s, 1.0 / (n * d) as f64))
}

/// `‖x_win − x̂_win‖² + λ_z‖z − ẑ‖²`.
pub fn ae1_loss(g: &mut Graph, x_win: Var, x_hat: Var, z: Var, z_hat: Var, lambda_z: f64) -> Result<Var> {
    if g.shape(x_win).0 != g.shape(z).0 {
        return Err(Error::shape("acoustic and prior batches differ in size"));
    }
    let rec = batch_sq_error(g, x_win, x_hat, "acoustic window reconstruction")?;
    let pri = batch_sq_error(g, z, z_hat, "prior estimate")?;
    let pri = g.scale(pri, lambda_z);
    Ok(g.add(rec, pri))
}

/// `‖z_win − ẑ_win‖² + λ_x‖x − x̂‖²`.
pub fn ae2_loss(g: &mut Graph, z_win: Var, z_hat: Var, x: Var, x_hat: Var, lambda_x: f64) -> Result<Var> {
    if g.shape(z_win).0 != g.shape(x).0 {
        return Err(Error::shape("prior and acoustic batches differ in size"));
    }
    let rec = batch_sq_error(g, z_win, z_hat, "prior window reconstruction")?;
    let ac = batch_sq_error(g, x, x_hat, "acoustic estimate")?;
    let ac = g.scale(ac, lambda_x);
    Ok(g.add(rec, ac))
}

/// `‖x − x̂‖² + λ_w‖w‖²`.
pub fn resdnn_loss(g: &mut Graph, x: Var, x_hat: Var, w: Var, lambda_w: f64) -> Result<Var> {
    let rec = batch_sq_error(g, x, x_hat, "acoustic estimate")?;
    let decay = g.sum_squares(w);
    let decay = g.scale(decay, lambda_w);
    Ok(g.add(rec, decay))
}

fn sq_dist(a: &[f64], b: &[f64], what: &str) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("{what}: {} vs {} values", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Single-sample value of [`ae1_loss`].
pub fn ae1_loss_value(x_win: &[f64], x_hat: &[f64], z: &[f64], z_hat: &[f64], lambda_z: f64) -> Result<f64> {
    Ok(sq_dist(x_win, x_hat, "acoustic window")? + lambda_z * sq_dist(z, z_hat, "prior")?)
}

/// Single-sample value of [`ae2_loss`].
pub fn ae2_loss_value(z_win: &[f64], z_hat: &[f64], x: &[f64], x_hat: &[f64], lambda_x: f64) -> Result<f64> {
    Ok(sq_dist(z_win, z_hat, "prior window")? + lambda_x * sq_dist(x, x_hat, "acoustic")?)
}

/// Single-sample value of [`resdnn_loss`].
pub fn resdnn_loss_value(x: &[f64], x_hat: &[f64], w: &[f64], lambda_w: f64) -> Result<f64> {
    Ok(sq_dist(x, x_hat, "acoustic")? + lambda_w * w.iter().map(|v| v * v).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    fn row(g: &mut Graph, v: &[f64]) -> Var {
        g.constant(Tensor::row_vector(v.to_vec()))
    }

    #[test]
    fn worked_values() {
        // ‖x−x̂‖² = 0.5, ‖z−ẑ‖² = 1
        let v = ae1_loss_value(&[0.5, 0.5], &[0.0, 0.0], &[1.0], &[0.0], 2.0).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        let v = ae2_loss_value(&[1.0, 1.0], &[0.0, 0.0], &[2.0], &[0.0], 0.5).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = resdnn_loss_value(&[1.0], &[0.0], &[2.0, 0.0], 0.01).unwrap();
        assert!((v - 1.04).abs() < 1e-12);
    }

    #[test]
    fn graph_matches_values_and_averages() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::matrix(2, 2, vec![0.5, 0.5, 1.0, 0.0]).unwrap());
        let xh = g.constant(Tensor::zeros(&[2, 2]));
        let z = g.constant(Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap());
        let zh = g.constant(Tensor::zeros(&[2, 1]));
        let l = ae1_loss(&mut g, x, xh, z, zh, 2.0).unwrap();
        let want = (ae1_loss_value(&[0.5, 0.5], &[0.0, 0.0], &[1.0], &[0.0], 2.0).unwrap()
            + ae1_loss_value(&[1.0, 0.0], &[0.0, 0.0], &[2.0], &[0.0], 2.0).unwrap())
            / 2.0;
        assert!((g.value(l).item() - want).abs() < 1e-12);

        let mut g = Graph::new();
        let (a, b, w) = (row(&mut g, &[1.0]), row(&mut g, &[0.0]), row(&mut g, &[2.0]));
        let l = resdnn_loss(&mut g, a, b, w, 0.0).unwrap();
        assert_eq!(g.value(l).item(), 1.0);
    }

    #[test]
    fn supervised_mse() {
        let mut g = Graph::new();
        let p = g.constant(Tensor::full(&[3, 2], 1.5));
        let t = g.constant(Tensor::full(&[3, 2], 0.5));
        let l = supervised_loss(&mut g, p, t).unwrap();
        assert_eq!(g.value(l).item(), 1.0);
        let l = supervised_loss(&mut g, p, p).unwrap();
        assert_eq!(g.value(l).item(), 0.0);
        let bad = g.constant(Tensor::zeros(&[2, 2]));
        assert!(supervised_loss(&mut g, p, bad).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(ae1_loss_value(&[0.0; 3], &[0.0; 2], &[0.0], &[0.0], 1.0).is_err());
        assert!(resdnn_loss_value(&[0.0], &[0.0, 1.0], &[], 1.0).is_err());
    }
}
