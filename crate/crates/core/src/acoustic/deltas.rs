use crate::numerics::Tensor;

/// Regression half-width used for Δ and ΔΔ.
pub const DELTA_WIDTH: usize = 2;

/// Regression deltas over `±width` frames with edge replication.
pub fn deltas(x: &Tensor, width: usize) -> Tensor {
    let (n, d) = (x.rows(), x.cols());
    let denom: f64 = 2.0 * (1..=width).map(|k| (k * k) as f64).sum::<f64>();
    let mut out = Tensor::zeros(&[n, d]);
    let last = n as isize - 1;
    for t in 0..n {
        for k in 1..=width {
            let fwd = (t as isize + k as isize).min(last) as usize;
            let back = (t as isize - k as isize).max(0) as usize;
            for j in 0..d {
                let v = out.get(t, j) + k as f64 * (x.get(fwd, j) - x.get(back, j));
                out.set(t, j, v);
            }
        }
    }
    out.data_mut().iter_mut().for_each(|v| *v /= denom);
    out
}

/// `[static | Δ | ΔΔ]` columns, so 13 cepstra become 39 features.
pub fn append_deltas(mfcc: &Tensor) -> Tensor {
    append_deltas_with(mfcc, DELTA_WIDTH)
}

pub fn append_deltas_with(mfcc: &Tensor, width: usize) -> Tensor {
    let d1 = deltas(mfcc, width);
    let d2 = deltas(&d1, width);
    Tensor::concat_cols(&[mfcc, &d1, &d2]).expect("same row count")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_deltas() {
        let x = Tensor::full(&[6, 13], 3.5);
        let y = append_deltas(&x);
        assert_eq!(y.shape(), &[6, 39]);
        for r in 0..6 {
            assert!(y.row(r)[13..].iter().all(|v| *v == 0.0));
            assert_eq!(&y.row(r)[..13], x.row(r));
        }
    }

    #[test]
    fn ramp_slope_recovered_in_interior() {
        let slope = 0.37;
        let n = 12;
        let x = Tensor::matrix(n, 1, (0..n).map(|t| 1.0 + slope * t as f64).collect()).unwrap();
        let y = append_deltas(&x);
        for t in 2..n - 2 {
            assert!((y.get(t, 1) - slope).abs() < 1e-12);
        }
        // second differences of an ideal ramp vanish away from both edges
        for t in 4..n - 4 {
            assert!(y.get(t, 2).abs() < 1e-12);
        }
    }

    #[test]
    fn single_frame_has_zero_deltas() {
        let x = Tensor::matrix(1, 13, (0..13).map(f64::from).collect()).unwrap();
        let y = append_deltas(&x);
        assert!(y.row(0)[13..].iter().all(|v| *v == 0.0));
    }
}
