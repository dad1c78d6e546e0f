//! Synthetic corpora with known articulatory ground truth.
//!
//! Each phone has a target configuration in `{-1, 0, 1}^6`. The latent
//! articulatory path on a 10 ms grid splits into a shared "jaw" component
//! (the mean of the active target) and per-dimension offsets. Both are
//! relaxed toward their targets forwards and then backwards in time, the
//! jaw more slowly, so each frame is coloured by both neighbours. A slow
//! AR(1) drift is added on top. Per speaker and dimension, white noise is
//! added so that the per-speaker z-scored phone means land on the targets.
//! Tract variables are a per-speaker affine image of the path, pellets are
//! placed from them against a per-speaker palate, and observations are a
//! fixed two-layer tanh mixing of a speaker-distorted path plus Gaussian
//! noise, written directly as 39-dim feature files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::Gender;
use crate::acoustic::{frame_midpoint, write_features, AcousticSequence, ACOUSTIC_DIM, FRAME_PERIOD_US};
use crate::alignment::{PhoneAlignment, PhoneSegment};
use crate::articulatory::{
    pellets_for_vtvs, write_track, ArticKind, ArticulatorySequence, PalateModel, PriorTable, PriorVector,
    Provenance, SpeakerGeometry, PRIOR_DIM,
};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const SILENCE: &str = "sil";
const LATENT_DIM: usize = 6;
const MIX_HIDDEN: usize = 24;
/// Tract-variable units per latent unit and base offsets (mm).
const VTV_UNIT: [f64; 6] = [2.0, 3.0, 8.0, 2.5, 7.0, 2.5];
const VTV_BASE: [f64; 6] = [0.0, 16.0, 40.0, 18.0, 40.0, 18.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub speakers: usize,
    pub utterances: usize,
    /// Phone inventory size including silence.
    pub phones: usize,
    pub seed: u64,
    /// Observation noise standard deviation.
    pub noise: f64,
    /// Relaxation rate toward the phone target per 10 ms.
    pub alpha: f64,
    /// Relaxation rate of the component shared by all dimensions (the
    /// jaw), which follows each phone's mean target.
    pub jaw_alpha: f64,
    pub walk_sigma: f64,
    /// Phone duration range in 10 ms samples.
    pub min_duration: usize,
    pub max_duration: usize,
    /// Non-silence phones per utterance.
    pub min_phones: usize,
    pub max_phones: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            speakers: 6,
            utterances: 40,
            phones: 12,
            seed: 1,
            noise: 0.3,
            alpha: 0.2,
            jaw_alpha: 0.1,
            walk_sigma: 0.05,
            min_duration: 6,
            max_duration: 18,
            min_phones: 5,
            max_phones: 9,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phones < 3 || self.speakers < 2 || self.utterances == 0 {
            return Err(Error::config("synthetic corpus needs ≥3 phones, ≥2 speakers and ≥1 utterance"));
        }
        if self.min_duration < 2 || self.min_duration > self.max_duration {
            return Err(Error::config("invalid phone duration range"));
        }
        if self.min_phones == 0 || self.min_phones > self.max_phones {
            return Err(Error::config("invalid phones-per-utterance range"));
        }
        if !(self.noise >= 0.0) || !(self.alpha > 0.0 && self.alpha <= 1.0)
            || !(self.jaw_alpha > 0.0 && self.jaw_alpha <= 1.0)
            || !(self.walk_sigma >= 0.0) {
            return Err(Error::config("invalid noise or dynamics parameters"));
        }
        Ok(())
    }

    pub fn phone_names(&self) -> Vec<String> {
        let mut v = vec![SILENCE.to_string()];
        v.extend((1..self.phones).map(|i| format!("ph{i:02}")));
        v
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpeaker {
    pub id: String,
    pub gender: Gender,
    pub geometry: SpeakerGeometry,
    /// Standard deviation of the added white noise per dimension.
    pub topup: [f64; LATENT_DIM],
}

#[derive(Debug, Clone)]
pub struct SynthUtterance {
    pub id: String,
    pub speaker: String,
    /// Articulatory state on the 10 ms grid (`K × 6`).
    pub latent: Tensor,
    /// Raw tract variables on the same grid.
    pub vtvs: Tensor,
    pub pellets: Tensor,
    /// `(K − 2) × 39` observations at the acoustic frame midpoints.
    pub observations: Tensor,
    pub alignment: PhoneAlignment,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub config: SynthConfig,
    pub phones: Vec<String>,
    pub targets: BTreeMap<String, [i32; LATENT_DIM]>,
    pub lf_table: PriorTable,
    pub speakers: Vec<SynthSpeaker>,
    pub utterances: Vec<SynthUtterance>,
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng) * sd
}

/// Per dimension a symmetric multiset of {-1, 0, 1} over the non-silence
/// phones, correlated across dimensions; silence sits at the origin.
fn design_targets(phones: &[String], rng: &mut ChaCha8Rng) -> BTreeMap<String, [i32; LATENT_DIM]> {
    let n = phones.len() - 1;
    let mut values: Vec<i32> = (0..n / 3).flat_map(|_| [-1, 0, 1]).collect();
    match n % 3 {
        1 => values.push(0),
        2 => values.extend([-1, 1]),
        _ => {}
    }
    loop {
        // every column starts from one shared order and is partly
        // reshuffled, so phones differ in overall openness
        let mut base = values.clone();
        base.shuffle(rng);
        let mut cols = Vec::with_capacity(LATENT_DIM);
        for _ in 0..LATENT_DIM {
            let mut v = base.clone();
            for _ in 0..n / 3 {
                let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                v.swap(i, j);
            }
            cols.push(v);
        }
        let mut map = BTreeMap::new();
        map.insert(phones[0].clone(), [0; LATENT_DIM]);
        for (i, p) in phones[1..].iter().enumerate() {
            map.insert(p.clone(), std::array::from_fn(|d| cols[d][i]));
        }
        let mut distinct: Vec<_> = map.values().collect();
        distinct.sort();
        distinct.dedup();
        if distinct.len() == phones.len() {
            return map;
        }
    }
}

fn lf_table(phones: &[String], targets: &BTreeMap<String, [i32; LATENT_DIM]>, rng: &mut ChaCha8Rng) -> Result<PriorTable> {
    let mut entries = BTreeMap::new();
    for (i, p) in phones.iter().enumerate() {
        let sil = p == SILENCE;
        let mut v: PriorVector = [0; PRIOR_DIM];
        for d in 0..LATENT_DIM {
            let jitter = if rng.gen_bool(0.3) { if rng.gen_bool(0.5) { 1 } else { -1 } } else { 0 };
            v[d] = targets[p][d] + 2 + jitter;
        }
        if !sil {
            v[6] = rng.gen_range(0..=2);
            v[7] = rng.gen_range(0..=2);
            v[8] = (i % 2) as i32;
        }
        v[9] = sil as i32;
        entries.insert(p.clone(), v);
    }
    PriorTable::new(entries, Provenance::Lf)
}

struct Mixing {
    w1: Vec<[f64; LATENT_DIM]>,
    b1: Vec<f64>,
    w2: Vec<[f64; MIX_HIDDEN]>,
}

impl Mixing {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let in_sd = 1.2 / (LATENT_DIM as f64).sqrt();
        let out_sd = 1.5 / (MIX_HIDDEN as f64).sqrt();
        Mixing {
            w1: (0..MIX_HIDDEN).map(|_| std::array::from_fn(|_| normal(rng, in_sd))).collect(),
            b1: (0..MIX_HIDDEN).map(|_| normal(rng, 0.3)).collect(),
            w2: (0..ACOUSTIC_DIM).map(|_| std::array::from_fn(|_| normal(rng, out_sd))).collect(),
        }
    }

    fn apply(&self, s: &[f64; LATENT_DIM]) -> [f64; ACOUSTIC_DIM] {
        let h: Vec<f64> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| (w.iter().zip(s).map(|(a, x)| a * x).sum::<f64>() + b).tanh())
            .collect();
        std::array::from_fn(|o| self.w2[o].iter().zip(&h).map(|(a, x)| a * x).sum())
    }
}

/// Per-speaker distortion of the articulatory state before mixing.
struct SpeakerMix {
    d: [[f64; LATENT_DIM]; LATENT_DIM],
    e: [f64; LATENT_DIM],
    vtv_scale: [f64; LATENT_DIM],
    vtv_offset: [f64; LATENT_DIM],
}

impl SpeakerMix {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut d = [[0.0; LATENT_DIM]; LATENT_DIM];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 1.0 } else { 0.0 } + normal(rng, 0.25);
            }
        }
        SpeakerMix {
            d,
            e: std::array::from_fn(|_| normal(rng, 0.4)),
            vtv_scale: std::array::from_fn(|k| VTV_UNIT[k] * rng.gen_range(0.8..1.25)),
            vtv_offset: std::array::from_fn(|k| VTV_BASE[k] + VTV_UNIT[k] * rng.gen_range(-0.5..0.5)),
        }
    }

    fn distort(&self, a: &[f64]) -> [f64; LATENT_DIM] {
        std::array::from_fn(|i| self.e[i] + self.d[i].iter().zip(a).map(|(w, x)| w * x).sum::<f64>())
    }
}

fn speaker_geometry(rng: &mut ChaCha8Rng) -> SpeakerGeometry {
    let a = rng.gen_range(-0.006..-0.003);
    let x0: f64 = rng.gen_range(-25.0..-15.0);
    let top = rng.gen_range(10.0..14.0);
    SpeakerGeometry {
        palate: PalateModel::new([a, -2.0 * a * x0, a * x0 * x0 + top], -60.0, 20.0).expect("valid palate"),
        lip_origin_x: rng.gen_range(30.0..40.0),
    }
}

/// Latent position of acoustic frame `t` on the 10 ms sample grid.
fn frame_position(t: usize) -> f64 {
    frame_midpoint(t, FRAME_PERIOD_US) / (FRAME_PERIOD_US as f64 * 1e-6)
}

fn interpolate(path: &Tensor, pos: f64) -> Vec<f64> {
    let k = pos.floor() as usize;
    let f = pos - k as f64;
    let (a, b) = (path.row(k), path.row((k + 1).min(path.rows() - 1)));
    a.iter().zip(b).map(|(x, y)| x + f * (y - x)).collect()
}

/// Forward then backward first-order relaxation toward the targets:
/// articulators carry over the previous configuration and anticipate
/// the next one symmetrically around each boundary.
fn relax_both_ways(mu: &[[f64; LATENT_DIM]], alpha: f64) -> Vec<[f64; LATENT_DIM]> {
    let mut out = mu.to_vec();
    for k in 1..out.len() {
        for d in 0..LATENT_DIM {
            out[k][d] = out[k - 1][d] + alpha * (mu[k][d] - out[k - 1][d]);
        }
    }
    for k in (0..out.len().saturating_sub(1)).rev() {
        for d in 0..LATENT_DIM {
            out[k][d] = out[k + 1][d] + alpha * (out[k][d] - out[k + 1][d]);
        }
    }
    out
}

struct PhonePlan {
    phones: Vec<String>,
    /// Start sample of each phone, plus the total length.
    starts: Vec<usize>,
}

fn plan_utterance(cfg: &SynthConfig, deck: &mut Vec<String>, inventory: &[String], rng: &mut ChaCha8Rng) -> PhonePlan {
    let m = rng.gen_range(cfg.min_phones..=cfg.max_phones);
    let mut phones = vec![SILENCE.to_string()];
    for _ in 0..m {
        if deck.is_empty() {
            *deck = inventory[1..].to_vec();
            deck.shuffle(rng);
        }
        let last = phones.last().expect("non-empty").clone();
        let pick = deck.iter().position(|p| *p != last).unwrap_or(0);
        phones.push(deck.remove(pick));
    }
    phones.push(SILENCE.to_string());
    let mut starts = vec![0];
    for _ in &phones {
        let d = rng.gen_range(cfg.min_duration..=cfg.max_duration);
        starts.push(starts.last().expect("non-empty") + d);
    }
    PhonePlan { phones, starts }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phones = cfg.phone_names();
    let targets = design_targets(&phones, &mut rng);
    let lf_table = lf_table(&phones, &targets, &mut rng)?;
    let mixing = Mixing::new(&mut rng);

    let mut speakers = Vec::new();
    let mut utterances = Vec::new();
    for s in 0..cfg.speakers {
        let id = format!("s{:02}", s + 1);
        let gender = if s % 2 == 0 { Gender::M } else { Gender::F };
        let geometry = speaker_geometry(&mut rng);
        let mix = SpeakerMix::new(&mut rng);

        // latent paths
        let mut deck = Vec::new();
        let mut plans = Vec::new();
        let mut paths = Vec::new();
        for _ in 0..cfg.utterances {
            let plan = plan_utterance(cfg, &mut deck, &phones, &mut rng);
            let k_total = *plan.starts.last().expect("non-empty");
            let mut own = Vec::with_capacity(k_total);
            let mut jaw = Vec::with_capacity(k_total);
            for (j, p) in plan.phones.iter().enumerate() {
                let mu = targets[p].map(f64::from);
                let shared = mu.iter().sum::<f64>() / LATENT_DIM as f64;
                for _ in plan.starts[j]..plan.starts[j + 1] {
                    own.push(mu.map(|m| m - shared));
                    jaw.push([shared; LATENT_DIM]);
                }
            }
            let own = relax_both_ways(&own, cfg.alpha);
            let jaw = relax_both_ways(&jaw, cfg.jaw_alpha);
            let path: Vec<[f64; LATENT_DIM]> = own
                .iter()
                .zip(&jaw)
                .map(|(o, j)| std::array::from_fn(|d| o[d] + j[d]))
                .collect();
            let mut drift = [0.0; LATENT_DIM];
            let mut data = Vec::with_capacity(k_total * LATENT_DIM);
            for row in &path {
                for d in 0..LATENT_DIM {
                    drift[d] = (1.0 - cfg.alpha) * drift[d] + normal(&mut rng, cfg.walk_sigma);
                    data.push(row[d] + drift[d]);
                }
            }
            paths.push(Tensor::matrix(k_total, LATENT_DIM, data)?);
            plans.push(plan);
        }

        // calibrate the white-noise top-up on the frames the loader will see
        let mut sums = [[0.0f64; 5]; LATENT_DIM]; // n, Σu, Σu², Σμ, Σμ², Σuμ packed below
        let mut cross = [0.0f64; LATENT_DIM];
        for (plan, path) in plans.iter().zip(&paths) {
            let n_frames = path.rows() - 2;
            for t in 0..n_frames {
                let pos = frame_position(t);
                let sample = pos.round() as usize;
                let j = plan.starts.partition_point(|&st| st <= sample) - 1;
                let mu = targets[&plan.phones[j]];
                let v = interpolate(path, pos);
                for d in 0..LATENT_DIM {
                    let m = mu[d] as f64;
                    let acc = &mut sums[d];
                    acc[0] += 1.0;
                    acc[1] += v[d];
                    acc[2] += v[d] * v[d];
                    acc[3] += m;
                    acc[4] += m * m;
                    cross[d] += v[d] * m;
                }
            }
        }
        // interpolating white noise at a quarter-sample offset keeps this share of its variance
        let keep = 0.75f64.powi(2) + 0.25f64.powi(2);
        let mut topup = [0.0; LATENT_DIM];
        for d in 0..LATENT_DIM {
            let [n, su, suu, sm, smm] = sums[d];
            let var_u = suu / n - (su / n).powi(2);
            let var_m = smm / n - (sm / n).powi(2);
            let cov = cross[d] / n - su * sm / (n * n);
            let kappa = cov / var_m;
            let deficit = kappa * kappa - var_u;
            if deficit > 0.0 {
                topup[d] = (deficit / keep).sqrt();
            } else {
                log::warn!("speaker {id} dim {d}: path variance exceeds the calibrated target spread");
            }
        }

        for (i, (plan, path)) in plans.iter().zip(paths).enumerate() {
            let utt = format!("{id}_u{:03}", i + 1);
            let k_total = path.rows();
            let mut latent = path;
            for r in 0..k_total {
                for (d, v) in latent.row_mut(r).iter_mut().enumerate() {
                    *v += normal(&mut rng, topup[d]);
                }
            }
            let mut vtv = Vec::with_capacity(k_total * LATENT_DIM);
            let mut pel = Vec::with_capacity(k_total * 16);
            for r in 0..k_total {
                let v: [f64; 6] =
                    std::array::from_fn(|d| mix.vtv_offset[d] + mix.vtv_scale[d] * latent.get(r, d));
                vtv.extend_from_slice(&v);
                pel.extend_from_slice(&pellets_for_vtvs(&v, &geometry));
            }
            let n_frames = k_total - 2;
            let mut obs = Vec::with_capacity(n_frames * ACOUSTIC_DIM);
            for t in 0..n_frames {
                let a = interpolate(&latent, frame_position(t));
                let clean = mixing.apply(&mix.distort(&a));
                obs.extend(clean.iter().map(|c| c + normal(&mut rng, cfg.noise)));
            }
            let mut segments = Vec::with_capacity(plan.phones.len());
            for (j, p) in plan.phones.iter().enumerate() {
                let start = if j == 0 { 0.0 } else { (plan.starts[j] as f64 - 0.5) * 0.01 };
                segments.push(PhoneSegment {
                    start,
                    end: (plan.starts[j + 1] as f64 - 0.5) * 0.01,
                    phone: p.clone(),
                });
            }
            utterances.push(SynthUtterance {
                id: utt,
                speaker: id.clone(),
                vtvs: Tensor::matrix(k_total, LATENT_DIM, vtv)?,
                pellets: Tensor::matrix(k_total, 16, pel)?,
                observations: Tensor::matrix(n_frames, ACOUSTIC_DIM, obs)?,
                latent,
                alignment: PhoneAlignment::new(segments)?,
            });
        }
        speakers.push(SynthSpeaker {
            id,
            gender,
            geometry,
            topup,
        });
    }
    Ok(SynthData {
        config: cfg.clone(),
        phones,
        targets,
        lf_table,
        speakers,
        utterances,
    })
}

/// Paths of a corpus written by [`write_corpus`].
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub manifest: PathBuf,
    pub lf_table: PathBuf,
    /// Designed targets as a prior table (tract entries) with the
    /// remaining entries from the LF table.
    pub targets: PathBuf,
}

impl SynthData {
    pub fn target_table(&self) -> Result<PriorTable> {
        let mut entries = BTreeMap::new();
        for (p, t) in &self.targets {
            let mut v = *self.lf_table.get(p)?;
            v[..LATENT_DIM].copy_from_slice(t);
            entries.insert(p.clone(), v);
        }
        PriorTable::new(entries, Provenance::Sf)
    }

    /// Writes features, alignments, pellet tracks, ground-truth tract
    /// variables, the LF table and a manifest with palate directives.
    pub fn write(&self, out: &Path) -> Result<SynthPaths> {
        for sub in ["feat", "ali", "art", "truth"] {
            let d = out.join(sub);
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        let mut manifest = String::from("# synthetic corpus\n");
        for s in &self.speakers {
            let p = &s.geometry.palate;
            let [a, b, c] = p.coeffs;
            manifest.push_str(&format!("!palate {} {a} {b} {c} {} {}\n", s.id, p.x_min, p.x_max));
        }
        let gender: BTreeMap<&str, Gender> = self.speakers.iter().map(|s| (s.id.as_str(), s.gender)).collect();
        for u in &self.utterances {
            let feat = format!("feat/{}.feat", u.id);
            let ali = format!("ali/{}.ali", u.id);
            let art = format!("art/{}.art", u.id);
            write_features(
                &out.join(&feat),
                &AcousticSequence {
                    utterance: u.id.clone(),
                    frames: u.observations.clone(),
                    frame_period_us: FRAME_PERIOD_US,
                },
            )?;
            u.alignment.save(&out.join(&ali))?;
            let track = |frames: &Tensor, kind| {
                ArticulatorySequence::new(frames.clone(), kind, FRAME_PERIOD_US, &u.speaker)
            };
            write_track(&out.join(&art), &track(&u.pellets, ArticKind::Pellets)?)?;
            write_track(
                &out.join(format!("truth/{}.vtv.art", u.id)),
                &track(&u.vtvs, ArticKind::TractVariables)?,
            )?;
            manifest.push_str(&format!("{} {} {} {feat} {ali} {art}\n", u.speaker, gender[u.speaker.as_str()], u.id));
        }
        let paths = SynthPaths {
            manifest: out.join("manifest.txt"),
            lf_table: out.join("lf_table.txt"),
            targets: out.join("targets.txt"),
        };
        fs::write(&paths.manifest, manifest).map_err(|e| Error::io(&paths.manifest, e))?;
        self.lf_table.save(&paths.lf_table)?;
        self.target_table()?.save(&paths.targets)?;
        Ok(paths)
    }
}

/// Generates a corpus and writes it under `out`.
pub fn synth_corpus(cfg: &SynthConfig, out: &Path) -> Result<(SynthData, SynthPaths)> {
    let data = generate(cfg)?;
    let paths = data.write(out)?;
    Ok((data, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{Corpus, DatasetManifest};

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            speakers: 2,
            utterances: 6,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(&small(4)).unwrap();
        let b = generate(&small(4)).unwrap();
        for (x, y) in a.utterances.iter().zip(&b.utterances) {
            assert_eq!(x.observations, y.observations);
            assert_eq!(x.pellets, y.pellets);
            assert_eq!(x.alignment, y.alignment);
        }
        let c = generate(&small(5)).unwrap();
        assert_ne!(a.utterances[0].observations, c.utterances[0].observations);
    }

    #[test]
    fn targets_are_distinct_and_balanced() {
        let d = generate(&small(1)).unwrap();
        assert_eq!(d.targets[SILENCE], [0; 6]);
        let mut vs: Vec<_> = d.targets.values().collect();
        vs.sort();
        vs.dedup();
        assert_eq!(vs.len(), d.phones.len());
        for dim in 0..6 {
            let s: i32 = d.targets.values().map(|t| t[dim]).sum();
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn frames_match_alignment() {
        let d = generate(&small(2)).unwrap();
        for u in &d.utterances {
            let k = u.latent.rows();
            assert_eq!(u.observations.rows(), k - 2);
            let audio_end = ((k - 3) as f64 * 0.01) + 0.025;
            let labels = u.alignment.label_frames(k - 2, FRAME_PERIOD_US, audio_end).unwrap();
            assert_eq!(labels.len(), k - 2);
            assert_eq!(labels[0], SILENCE);
        }
    }

    #[test]
    fn written_corpus_recovers_targets() {
        let cfg = SynthConfig {
            speakers: 2,
            utterances: 25,
            seed: 9,
            ..SynthConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let (data, paths) = synth_corpus(&cfg, dir.path()).unwrap();
        let manifest = DatasetManifest::load(&paths.manifest).unwrap();
        let corpus = Corpus::load(&manifest, None).unwrap();
        assert_eq!(corpus.flagged_frames, 0);
        let speakers = corpus.speakers();
        let table = corpus.statistical_priors(&speakers, &data.lf_table).unwrap();
        for (p, t) in &data.targets {
            assert_eq!(&table.get(p).unwrap()[..6], t, "phone {p}");
        }
        // extracted tract variables agree with the generating ones up to
        // the per-speaker standardization
        let truth: Vec<Tensor> = corpus
            .of_speakers(&speakers[..1])
            .map(|u| {
                let path = dir.path().join(format!("truth/{}.vtv.art", u.utterance));
                let raw = crate::articulatory::read_track(&path, &u.speaker).unwrap();
                raw.resample_to_frames(u.len(), FRAME_PERIOD_US).frames
            })
            .collect();
        let stats = crate::acoustic::fit_speaker_stats("s01", &truth.iter().collect::<Vec<_>>()).unwrap();
        for (u, t) in corpus.of_speakers(&speakers[..1]).zip(&truth) {
            let z = crate::acoustic::z_normalize(t, &stats).unwrap();
            for (i, (a, b)) in z.data().iter().zip(u.vtvs.as_ref().unwrap().data()).enumerate() {
                // tracks are stored as f32
                assert!((a - b).abs() < 1e-3, "{} {i} {a} vs {b}", u.utterance);
            }
        }
    }
}
