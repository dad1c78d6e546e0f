use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Lower bound applied to per-dimension standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension mean and population standard deviation for one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerStats {
    pub speaker: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl SpeakerStats {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }
}

/// Fits mean and population std over every frame of `sequences`.
pub fn fit_speaker_stats(speaker: &str, sequences: &[&Tensor]) -> Result<SpeakerStats> {
    let dims = sequences
        .first()
        .map(|s| s.cols())
        .ok_or_else(|| Error::data(format!("no frames for speaker {speaker}")))?;
    if sequences.iter().any(|s| s.cols() != dims) {
        return Err(Error::shape(format!(
            "inconsistent feature dims for speaker {speaker}"
        )));
    }
    let count: usize = sequences.iter().map(|s| s.rows()).sum();
    if count == 0 {
        return Err(Error::data(format!("no frames for speaker {speaker}")));
    }
    let mut mean = vec![0.0; dims];
    for s in sequences {
        for r in 0..s.rows() {
            for (m, v) in mean.iter_mut().zip(s.row(r)) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let mut var = vec![0.0; dims];
    for s in sequences {
        for r in 0..s.rows() {
            for ((acc, v), m) in var.iter_mut().zip(s.row(r)).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
    }
    let std = var
        .into_iter()
        .map(|v| (v / count as f64).sqrt().max(STD_FLOOR))
        .collect();
    Ok(SpeakerStats {
        speaker: speaker.to_string(),
        mean,
        std,
    })
}

fn check_dims(frames: &Tensor, stats: &SpeakerStats) -> Result<()> {
    if frames.cols() != stats.dims() {
        return Err(Error::shape(format!(
            "frames have {} dims, stats for {} have {}",
            frames.cols(),
            stats.speaker,
            stats.dims()
        )));
    }
    Ok(())
}

/// `(value − mean) / std` per dimension.
pub fn z_normalize(frames: &Tensor, stats: &SpeakerStats) -> Result<Tensor> {
    check_dims(frames, stats)?;
    let mut out = frames.clone();
    let d = stats.dims();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v = (*v - stats.mean[i % d]) / stats.std[i % d];
    }
    Ok(out)
}

pub fn denormalize(frames: &Tensor, stats: &SpeakerStats) -> Result<Tensor> {
    check_dims(frames, stats)?;
    let mut out = frames.clone();
    let d = stats.dims();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v = *v * stats.std[i % d] + stats.mean[i % d];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_frames_clamp_std() {
        let x = Tensor::full(&[5, 3], 2.0);
        let s = fit_speaker_stats("a", &[&x]).unwrap();
        assert_eq!(s.mean, vec![2.0; 3]);
        assert_eq!(s.std, vec![STD_FLOOR; 3]);
    }

    #[test]
    fn population_convention() {
        let x = Tensor::matrix(2, 1, vec![0.0, 2.0]).unwrap();
        let s = fit_speaker_stats("a", &[&x]).unwrap();
        assert_eq!((s.mean[0], s.std[0]), (1.0, 1.0));
    }

    #[test]
    fn no_frames_is_error() {
        assert!(fit_speaker_stats("a", &[]).is_err());
    }

    #[test]
    fn definition_values() {
        let s = SpeakerStats {
            speaker: "a".into(),
            mean: vec![1.0, -2.0],
            std: vec![0.5, 3.0],
        };
        let x = Tensor::matrix(2, 2, vec![1.0, -2.0, 2.0, 4.0]).unwrap();
        let z = z_normalize(&x, &s).unwrap();
        assert_eq!(z.data(), &[0.0, 0.0, 2.0, 2.0]);
        let bad = Tensor::zeros(&[1, 3]);
        assert!(z_normalize(&bad, &s).is_err());
    }

    proptest! {
        #[test]
        fn fit_then_normalize_is_standard(
            vals in prop::collection::vec(-50.0f64..50.0, 12..60),
        ) {
            let rows = vals.len() / 3;
            let x = Tensor::matrix(rows, 3, vals[..rows * 3].to_vec()).unwrap();
            let s = fit_speaker_stats("p", &[&x]).unwrap();
            prop_assume!(s.std.iter().all(|v| *v > 1e-3));
            let z = z_normalize(&x, &s).unwrap();
            let back = denormalize(&z, &s).unwrap();
            for (a, b) in back.data().iter().zip(x.data()) {
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
            }
            let again = fit_speaker_stats("p", &[&z]).unwrap();
            for d in 0..3 {
                prop_assert!(again.mean[d].abs() < 1e-10);
                prop_assert!((again.std[d] - 1.0).abs() < 1e-10);
            }
        }
    }
}
