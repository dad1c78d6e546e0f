use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Product-moment correlation. Undefined (an error) for fewer than two
/// points or a constant series.
pub fn pearson_r(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("series of length {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::data("correlation needs at least two points"));
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::data("correlation undefined for a constant series"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Per-feature root mean squared error between z-normalized sequences.
pub fn normalized_rmse(pred: &Tensor, meas: &Tensor) -> Result<Vec<f64>> {
    if pred.shape() != meas.shape() {
        return Err(Error::shape(format!("{:?} against {:?}", pred.shape(), meas.shape())));
    }
    let n = pred.rows();
    if n == 0 {
        return Err(Error::data("no frames to score"));
    }
    let mut acc = vec![0.0; pred.cols()];
    for t in 0..n {
        for ((a, p), m) in acc.iter_mut().zip(pred.row(t)).zip(meas.row(t)) {
            *a += (p - m) * (p - m);
        }
    }
    Ok(acc.into_iter().map(|s| (s / n as f64).sqrt()).collect())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_correlation() {
        let r = pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(pearson_r(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap(), 1.0);
        assert!((pearson_r(&[1.0, 2.0, 4.0], &[-1.0, -2.0, -4.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson_r(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn rmse_cases() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(normalized_rmse(&a, &a).unwrap(), vec![0.0, 0.0]);
        let b = a.map(|v| v + 1.0);
        assert_eq!(normalized_rmse(&a, &b).unwrap(), vec![1.0, 1.0]);
        assert!(normalized_rmse(&a, &Tensor::zeros(&[3, 2])).is_err());
    }

    proptest! {
        #[test]
        fn correlation_is_affine_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 5..40),
            noise in prop::collection::vec(-1.0f64..1.0, 40),
            alpha in 0.1f64..10.0,
            beta in -5.0f64..5.0,
        ) {
            let b: Vec<f64> = a.iter().zip(&noise).map(|(x, e)| x * 0.3 + e).collect();
            let scaled: Vec<f64> = b.iter().map(|x| alpha * x + beta).collect();
            if let (Ok(r1), Ok(r2)) = (pearson_r(&a, &b), pearson_r(&a, &scaled)) {
                prop_assert!((r1 - r2).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&r1));
            }
        }
    }
}
