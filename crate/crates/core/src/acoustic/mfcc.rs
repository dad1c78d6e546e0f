//! MFCC front end: pre-emphasis, Hamming framing, magnitude spectrum,
//! triangular mel filterbank, log compression and an orthonormal DCT-II.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    /// Analysis window length in seconds.
    pub window_s: f64,
    /// Frame shift in seconds.
    pub hop_s: f64,
    pub pre_emphasis: f64,
    pub mel_filters: usize,
    pub coefficients: usize,
    /// Filter energies are clamped to this value before the log.
    pub log_floor: f64,
}

impl MfccConfig {
    /// 25 ms Hamming windows every 10 ms, 13 cepstra from 26 filters.
    pub fn new(sample_rate: u32) -> Self {
        MfccConfig {
            sample_rate,
            window_s: 0.025,
            hop_s: 0.010,
            pre_emphasis: 0.97,
            mel_filters: 26,
            coefficients: 13,
            log_floor: 1e-10,
        }
    }

    pub fn window_len(&self) -> usize {
        (self.window_s * self.sample_rate as f64).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        (self.hop_s * self.sample_rate as f64).round() as usize
    }

    pub fn fft_len(&self) -> usize {
        self.window_len().next_power_of_two()
    }
}

/// `floor((samples − window) / hop) + 1`, or `None` when the signal is
/// shorter than one window.
pub fn frame_count(samples: usize, window: usize, hop: usize) -> Option<usize> {
    (samples >= window).then(|| (samples - window) / hop + 1)
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// `filters × (fft_len/2 + 1)` triangular weights spaced evenly on the mel
/// scale between 0 Hz and Nyquist, evaluated at each bin's centre
/// frequency.
pub fn mel_filterbank(filters: usize, fft_len: usize, sample_rate: u32) -> Tensor {
    let bins = fft_len / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..filters + 2)
        .map(|i| mel_to_hz(top * i as f64 / (filters + 1) as f64))
        .collect();
    let mut w = Tensor::zeros(&[filters, bins]);
    for f in 0..filters {
        let (lo, mid, hi) = (edges[f], edges[f + 1], edges[f + 2]);
        for b in 0..bins {
            let hz = b as f64 * sample_rate as f64 / fft_len as f64;
            let v = if hz > lo && hz <= mid {
                (hz - lo) / (mid - lo)
            } else if hz > mid && hz < hi {
                (hi - hz) / (hi - mid)
            } else {
                0.0
            };
            w.set(f, b, v);
        }
    }
    w
}

/// Orthonormal DCT-II basis, row `k` holds coefficient `k`.
pub fn dct_basis(n: usize) -> Tensor {
    let mut t = Tensor::zeros(&[n, n]);
    for k in 0..n {
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for m in 0..n {
            t.set(k, m, scale * (PI * k as f64 * (m as f64 + 0.5) / n as f64).cos());
        }
    }
    t
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Reusable extractor holding the window, filterbank, DCT basis and FFT plan.
pub struct MfccExtractor {
    config: MfccConfig,
    window: Vec<f64>,
    filterbank: Tensor,
    dct: Tensor,
    fft: Arc<dyn Fft<f64>>,
}

impl MfccExtractor {
    pub fn new(config: MfccConfig) -> Result<Self> {
        if config.sample_rate < 8000 {
            return Err(Error::config(format!(
                "sample rate {} below 8 kHz",
                config.sample_rate
            )));
        }
        if config.coefficients > config.mel_filters {
            return Err(Error::config("more cepstra than mel filters"));
        }
        let window = hamming(config.window_len());
        let filterbank = mel_filterbank(config.mel_filters, config.fft_len(), config.sample_rate);
        let dct = dct_basis(config.mel_filters);
        let fft = FftPlanner::new().plan_fft_forward(config.fft_len());
        Ok(MfccExtractor {
            config,
            window,
            filterbank,
            dct,
            fft,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    /// `N × coefficients` cepstra for a mono signal.
    pub fn compute(&self, audio: &[f64]) -> Result<Tensor> {
        let win = self.config.window_len();
        let hop = self.config.hop_len();
        let n = frame_count(audio.len(), win, hop).ok_or_else(|| {
            Error::data(format!(
                "audio of {} samples is shorter than one {win}-sample window",
                audio.len()
            ))
        })?;
        if audio.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("audio samples".into()));
        }

        let mut emphasized = Vec::with_capacity(audio.len());
        emphasized.push(audio[0]);
        for w in audio.windows(2) {
            emphasized.push(w[1] - self.config.pre_emphasis * w[0]);
        }

        let nfft = self.config.fft_len();
        let bins = nfft / 2 + 1;
        let filters = self.config.mel_filters;
        let ceps = self.config.coefficients;
        let mut buf = vec![Complex::new(0.0, 0.0); nfft];
        let mut mags = vec![0.0; bins];
        let mut logs = vec![0.0; filters];
        let mut out = Vec::with_capacity(n * ceps);

        for t in 0..n {
            let frame = &emphasized[t * hop..t * hop + win];
            for (slot, (s, w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                *slot = Complex::new(s * w, 0.0);
            }
            for slot in &mut buf[win..] {
                *slot = Complex::new(0.0, 0.0);
            }
            self.fft.process(&mut buf);
            for (m, c) in mags.iter_mut().zip(&buf) {
                *m = c.norm();
            }
            for (f, l) in logs.iter_mut().enumerate() {
                let e: f64 = self
                    .filterbank
                    .row(f)
                    .iter()
                    .zip(&mags)
                    .map(|(w, m)| w * m)
                    .sum();
                *l = e.max(self.config.log_floor).ln();
            }
            for k in 0..ceps {
                out.push(self.dct.row(k).iter().zip(&logs).map(|(b, l)| b * l).sum());
            }
        }
        Tensor::matrix(n, ceps, out)
    }
}

/// One-shot MFCC computation with the default configuration.
pub fn compute_mfcc(audio: &[f64], sample_rate: u32) -> Result<Tensor> {
    if audio.is_empty() {
        return Err(Error::data("empty audio"));
    }
    MfccExtractor::new(MfccConfig::new(sample_rate))?.compute(audio)
}
