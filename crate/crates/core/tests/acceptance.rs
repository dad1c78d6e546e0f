//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use artic_core::acoustic::{compute_mfcc, dct_basis, fit_speaker_stats, z_normalize, MfccConfig};
use artic_core::articulatory::{
    fit_palate, pellets_to_vtvs, ArticKind, ArticulatorySequence, PalateModel, PriorTable, Provenance,
    SpeakerGeometry, VTV_PRIOR_DIM,
};
use artic_core::datasets::{
    make_split, synth_corpus, Corpus, DatasetManifest, Gender, SplitCounts, SplitKind, SynthConfig, SynthData,
};
use artic_core::evaluation::{mean, normalized_rmse, pearson_r};
use artic_core::experiment::{
    baseline, run_protocol, run_table1, run_table2, ExperimentConfig, InputFeatures, Prepared, Table2Options,
};
use artic_core::models::{
    ae1_loss, ae1_loss_value, ae2_loss, ae2_loss_value, residual_layer, resdnn_loss, resdnn_loss_value,
    supervised_loss, Architecture, Model, ModelKind, ModelSpec, ResidualMode, Scale,
};
use artic_core::numerics::{finite_difference_check, Graph, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// A synthetic corpus on disk, loaded once and shared.
struct Synth {
    _dir: tempfile::TempDir,
    data: SynthData,
    manifest: DatasetManifest,
    corpus: Corpus,
}

impl Synth {
    fn new(cfg: &SynthConfig) -> Result<Self, String> {
        let dir = tempfile::tempdir().map_err(e2s)?;
        let (data, paths) = synth_corpus(cfg, dir.path()).map_err(e2s)?;
        let manifest = DatasetManifest::load(&paths.manifest).map_err(e2s)?;
        let corpus = Corpus::load(&manifest, None).map_err(e2s)?;
        Ok(Synth {
            _dir: dir,
            data,
            manifest,
            corpus,
        })
    }

    fn prepared(&self, kind: SplitKind, counts: SplitCounts, seed: u64) -> Result<Prepared, String> {
        let plan = make_split(&self.manifest, kind, counts, seed).map_err(e2s)?;
        Prepared::new(
            self.manifest.clone(),
            plan,
            self.corpus.clone(),
            Some(self.data.lf_table.clone()),
        )
        .map_err(e2s)
    }
}

fn toy_model(kind: ModelKind, seed: u64) -> Model {
    let spec = match kind {
        ModelKind::Ae1 => ModelSpec::ae1(Scale::Desk, 4, 3, seed),
        ModelKind::Ae2 => ModelSpec::ae2(Scale::Desk, 4, 3, seed),
        ModelKind::ResDnn => ModelSpec::resdnn(Scale::Desk, 4, 3, ResidualMode::Scalar, seed),
        ModelKind::Blstm => ModelSpec::blstm(Scale::Desk, 3, 2, seed),
    };
    let mut spec = spec.with_half_width(1);
    match &mut spec.arch {
        Architecture::Ae1 { ae, .. } | Architecture::Ae2 { ae, .. } => ae.encoder = vec![5, 4],
        Architecture::ResDnn(r) => r.trunk = vec![5, 4],
        Architecture::Blstm(b) => {
            b.hidden = 3;
            b.layers = 2;
        }
    }
    Model::new(spec).unwrap()
}

fn gradients() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = Vec::new();

    let blstm = toy_model(ModelKind::Blstm, 1);
    let x = random(2, 3, &mut rng);
    let y = random(2, 2, &mut rng);
    let mut ps = blstm.params.clone();
    let err = finite_difference_check(&mut ps, 1e-5, |g, ps| {
        let xi = g.constant(x.clone());
        let pred = blstm.blstm_forward(g, ps, xi)?;
        let t = g.constant(y.clone());
        supervised_loss(g, pred, t)
    })
    .map_err(e2s)?;
    worst.push(("supervised", err));

    for (name, kind) in [("ae1", ModelKind::Ae1), ("ae2", ModelKind::Ae2), ("resdnn", ModelKind::ResDnn)] {
        let model = toy_model(kind, 2);
        let x = random(5, 4, &mut rng);
        let z = random(5, 3, &mut rng);
        let batch = model.make_batch(&[(&x, &z)], &[(0, 0), (0, 2)]).map_err(e2s)?;
        let mut ps = model.params.clone();
        if let Some(id) = ps.id("res.w") {
            let n = ps.value(id).len();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            ps.value_mut(id).data_mut().copy_from_slice(&w);
        }
        let err = finite_difference_check(&mut ps, 1e-5, |g, ps| model.weak_loss(g, ps, &batch)).map_err(e2s)?;
        worst.push((name, err));
    }
    let detail = worst
        .iter()
        .map(|(n, e)| format!("{n} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(worst.iter().all(|(_, e)| *e < 1e-4), format!("max rel-err ≥ 1e-4: {detail}"))?;
    Ok(detail)
}

fn residual_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..100 {
        let g = rng.gen_range(1..=10);
        let t = rng.gen_range(0..=12);
        let width = (2 * t + 1) * g;
        let window: Vec<f64> = (0..width).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let rows = if i % 2 == 0 { 1 } else { g };
        let out = residual_layer(&window, &vec![0.0; rows * width], g).map_err(e2s)?;
        let centre = &window[t * g..(t + 1) * g];
        ensure(
            out.iter().zip(centre).all(|(a, b)| a.to_bits() == b.to_bits()),
            format!("instance {i} differs from the centre frame"),
        )?;
    }
    // the trained-model path with untouched (zero) residual weights
    let mut model = toy_model(ModelKind::ResDnn, 3);
    model.params.set_step(1);
    let z = random(9, 3, &mut rng);
    let out = model.generate(&z).map_err(e2s)?;
    ensure(
        out.data().iter().zip(z.data()).all(|(a, b)| a.to_bits() == b.to_bits()),
        "model generation differs from priors",
    )?;
    Ok("100 instances bit-equal".into())
}

fn loss_values() -> Check {
    let graph_value = |f: &dyn Fn(&mut Graph) -> artic_core::Result<artic_core::numerics::Var>| -> Result<f64, String> {
        let mut g = Graph::new();
        let v = f(&mut g).map_err(e2s)?;
        Ok(g.value(v).item())
    };
    let row = |v: &[f64]| Tensor::row_vector(v.to_vec());
    // ‖x − x̂‖² = 0.5, ‖z − ẑ‖² = 1, λ_z = 2
    let ae1 = ae1_loss_value(&[0.5, 0.5], &[0.0, 0.0], &[1.0], &[0.0], 2.0).map_err(e2s)?;
    let ae1g = graph_value(&|g| {
        let (a, b, c, d) = (
            g.constant(row(&[0.5, 0.5])),
            g.constant(row(&[0.0, 0.0])),
            g.constant(row(&[1.0])),
            g.constant(row(&[0.0])),
        );
        ae1_loss(g, a, b, c, d, 2.0)
    })?;
    // ‖z − ẑ‖² = 2, ‖x − x̂‖² = 4, λ_x = 0.5
    let ae2 = ae2_loss_value(&[1.0, 1.0], &[0.0, 0.0], &[2.0], &[0.0], 0.5).map_err(e2s)?;
    let ae2g = graph_value(&|g| {
        let (a, b, c, d) = (
            g.constant(row(&[1.0, 1.0])),
            g.constant(row(&[0.0, 0.0])),
            g.constant(row(&[2.0])),
            g.constant(row(&[0.0])),
        );
        ae2_loss(g, a, b, c, d, 0.5)
    })?;
    // ‖x − x̂‖² = 1, ‖w‖² = 4, λ_w = 0.01
    let res = resdnn_loss_value(&[1.0], &[0.0], &[2.0], 0.01).map_err(e2s)?;
    let resg = graph_value(&|g| {
        let (a, b, w) = (g.constant(row(&[1.0])), g.constant(row(&[0.0])), g.constant(row(&[2.0])));
        resdnn_loss(g, a, b, w, 0.01)
    })?;
    for (name, got, want) in [
        ("ae1", ae1, 2.5),
        ("ae1 graph", ae1g, 2.5),
        ("ae2", ae2, 4.0),
        ("ae2 graph", ae2g, 4.0),
        ("resdnn", res, 1.04),
        ("resdnn graph", resg, 1.04),
    ] {
        ensure((got - want).abs() < 1e-12, format!("{name}: {got} vs {want}"))?;
    }
    Ok(format!("{ae1} / {ae2} / {res}"))
}

fn metric_oracles() -> Check {
    let r = pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).map_err(e2s)?;
    let want = 3f64.sqrt() / 2.0;
    ensure((r - want).abs() < 1e-12, format!("pearson {r} vs {want}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let raw = Tensor::matrix(10_000, 3, (0..30_000).map(|i| rng.gen_range(-2.0..2.0) * (1 + i % 3) as f64 + 5.0).collect())
        .map_err(e2s)?;
    let stats = fit_speaker_stats("s", &[&raw]).map_err(e2s)?;
    let z = z_normalize(&raw, &stats).map_err(e2s)?;
    let rmse = normalized_rmse(&Tensor::zeros(&[10_000, 3]), &z).map_err(e2s)?;
    ensure(rmse.iter().all(|v| (0.95..=1.05).contains(v)), format!("zero-predictor RMSE {rmse:?}"))?;
    Ok(format!("r {r:.12}, zero-predictor RMSE {:.4}", mean(&rmse)))
}

fn vtv_targets(table: &PriorTable, data: &SynthData) -> Result<usize, String> {
    let mut wrong = 0;
    for (phone, target) in &data.targets {
        let got = table.get(phone).map_err(e2s)?;
        if got[..VTV_PRIOR_DIM] != target[..] {
            wrong += 1;
        }
    }
    Ok(wrong)
}

fn sf_quantization(synth: &Synth) -> Check {
    let all = synth.manifest.speaker_ids();
    let sf = synth.corpus.statistical_priors(&all, &synth.data.lf_table).map_err(e2s)?;
    let one = vec![all[0].clone()];
    let sf1 = synth.corpus.statistical_priors(&one, &synth.data.lf_table).map_err(e2s)?;
    ensure(sf.provenance == Provenance::Sf && sf1.provenance == Provenance::Sf1, "provenance labels")?;
    let (w, w1) = (vtv_targets(&sf, &synth.data)?, vtv_targets(&sf1, &synth.data)?);
    ensure(w == 0, format!("{w} phones missed with all speakers"))?;
    ensure(w1 == 0, format!("{w1} phones missed with speaker {}", one[0]))?;
    ensure(sf.entries == sf1.entries, "single-speaker table differs")?;
    Ok(format!("{} phones recovered from {} speakers and from {}", sf.len(), all.len(), one[0]))
}

fn weak_improvement(synth: &Synth) -> Check {
    let counts = SplitCounts {
        train: 4,
        validation: 1,
        test: 1,
    };
    let mut data = synth.prepared(SplitKind::Matched, counts, 1)?;
    let table = data.prior_table(Provenance::Sf, None).map_err(e2s)?;
    data.use_table(table).map_err(e2s)?;
    let base = baseline(&data).map_err(e2s)?.r();
    let mut detail = format!("baseline {base:.4}");
    let mut failures = Vec::new();
    for (kind, margin) in [(ModelKind::Ae2, 0.02), (ModelKind::ResDnn, 0.0), (ModelKind::Ae1, f64::NAN)] {
        let cfg = ExperimentConfig::defaults(kind, Scale::Desk);
        let res = run_protocol(&cfg, &data).map_err(e2s)?;
        let rs: Vec<f64> = res.runs.iter().map(|r| r.report.r()).collect();
        detail.push_str(&format!(
            ", {} {}",
            kind.as_str(),
            rs.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join("/")
        ));
        if !margin.is_nan() && !rs.iter().all(|r| *r > base + margin) {
            failures.push(format!("{} does not exceed baseline by {margin}", kind.as_str()));
        }
    }
    ensure(failures.is_empty(), format!("{}: {detail}", failures.join("; ")))?;
    Ok(detail)
}

fn supervised_ordering(synth: &Synth) -> Check {
    let counts = SplitCounts {
        train: 4,
        validation: 1,
        test: 1,
    };
    let mut data = synth.prepared(SplitKind::Matched, counts, 1)?;
    let mut prior = ExperimentConfig::defaults(ModelKind::Blstm, Scale::Desk);
    prior.inputs = Some(InputFeatures::Sf);
    prior.priors = Some("seed table".into());
    prior.validate().map_err(e2s)?;
    data.use_config_table(&prior).map_err(e2s)?;
    let full = run_protocol(&prior, &data).map_err(e2s)?.summary.r_mean();
    let mut single = ExperimentConfig::defaults(ModelKind::Blstm, Scale::Desk);
    single.inputs = Some(InputFeatures::Mfcc);
    single.train_speakers = Some(vec![data.plan.train[0].clone()]);
    let s1 = run_protocol(&single, &data).map_err(e2s)?.summary.r_mean();
    let detail = format!("prior-input BLSTM {full:.4} vs single-speaker acoustic BLSTM {s1:.4}");
    ensure(full > s1, detail.clone())?;
    Ok(detail)
}

fn mismatched(synth: &Synth) -> Check {
    let counts = SplitCounts {
        train: 0,
        validation: 1,
        test: 0,
    };
    let mut data = synth.prepared(SplitKind::MismatchedTestFemale, counts, 1)?;
    let gender = |id: &String| synth.manifest.speaker(id).map(|s| s.gender);
    ensure(data.plan.test.iter().all(|s| gender(s) == Some(Gender::F)), "test speakers are not all female")?;
    ensure(
        data.plan.train.iter().chain(&data.plan.validation).all(|s| gender(s) == Some(Gender::M)),
        "training speakers are not all male",
    )?;
    let table = data.prior_table(Provenance::Sf, None).map_err(e2s)?;
    data.use_table(table).map_err(e2s)?;
    let base = baseline(&data).map_err(e2s)?.r();
    let cfg = ExperimentConfig::defaults(ModelKind::Ae2, Scale::Desk);
    let res = run_protocol(&cfg, &data).map_err(e2s)?;
    let rs: Vec<f64> = res.runs.iter().map(|r| r.report.r()).collect();
    let detail = format!(
        "test {:?}, baseline {base:.4}, ae2 {}",
        data.plan.test,
        rs.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join("/")
    );
    ensure(rs.iter().all(|r| *r >= base + 0.01), detail.clone())?;
    Ok(detail)
}

fn determinism() -> Check {
    let synth = Synth::new(&SynthConfig {
        speakers: 4,
        utterances: 5,
        seed: 3,
        ..SynthConfig::default()
    })?;
    let counts = SplitCounts {
        train: 2,
        validation: 1,
        test: 1,
    };
    let mut cfg = ExperimentConfig::defaults(ModelKind::Ae2, Scale::Desk);
    cfg.train.max_epochs = 2;
    cfg.priors = Some("seed table".into());
    let run = || -> Result<(String, String), String> {
        let mut data = synth.prepared(SplitKind::Matched, counts, 0)?;
        let s1 = data.plan.train[0].clone();
        let t1 = run_table1(&cfg, &mut data, Some(&s1)).map_err(e2s)?;
        let t2 = run_table2(&cfg, &mut data, &Table2Options::default()).map_err(e2s)?;
        Ok((t1, t2))
    };
    let (a1, a2) = run()?;
    let (b1, b2) = run()?;
    ensure(a1.as_bytes() == b1.as_bytes(), "table1 reruns differ")?;
    ensure(a2.as_bytes() == b2.as_bytes(), "table2 reruns differ")?;
    let rows1 = a1.lines().filter(|l| !l.starts_with('#')).count() - 1;
    let rows2 = a2.lines().filter(|l| !l.starts_with('#')).count() - 1;
    ensure(rows1 == 8 && rows2 == 4, format!("table shapes {rows1} and {rows2} rows"))?;
    Ok(format!("table1 {} bytes, table2 {} bytes identical", a1.len(), a2.len()))
}

fn geometry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let height = rng.gen_range(-5.0..5.0);
        let geom = SpeakerGeometry {
            palate: PalateModel::new([0.0, 0.0, height], -60.0, 20.0).map_err(e2s)?,
            lip_origin_x: 35.0,
        };
        let frames = 25;
        let mut data = Vec::with_capacity(frames * 16);
        let mut expect = Vec::new();
        for _ in 0..frames {
            let mut row = [0.0; 16];
            for p in 0..8 {
                row[2 * p] = rng.gen_range(-55.0..15.0);
                row[2 * p + 1] = height - rng.gen_range(0.0..20.0);
            }
            let tip = (row[5] - height).abs();
            let body = [3, 4, 5].iter().map(|&p| (row[2 * p + 1] - height).abs()).fold(f64::INFINITY, f64::min);
            expect.push((tip, body));
            data.extend_from_slice(&row);
        }
        let seq = ArticulatorySequence {
            speaker: "s".into(),
            kind: ArticKind::Pellets,
            frames: Tensor::matrix(frames, 16, data).map_err(e2s)?,
            frame_period_us: 10_000,
        };
        let out = pellets_to_vtvs(&seq, &geom).map_err(e2s)?;
        for (t, (tip, body)) in expect.iter().enumerate() {
            worst = worst.max((out.sequence.frames.get(t, 3) - tip).abs());
            worst = worst.max((out.sequence.frames.get(t, 5) - body).abs());
        }
    }
    ensure(worst < 1e-9, format!("flat palate error {worst:.2e}"))?;

    let mut fit_worst: f64 = 0.0;
    for _ in 0..20 {
        let coeffs = [rng.gen_range(-0.01..0.0), rng.gen_range(-0.2..0.2), rng.gen_range(5.0..15.0)];
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let x = -60.0 + 80.0 * i as f64 / 199.0;
                (x, coeffs[0] * x * x + coeffs[1] * x + coeffs[2])
            })
            .collect();
        let m = fit_palate(&pts).map_err(e2s)?;
        for (a, b) in m.coeffs.iter().zip(coeffs) {
            fit_worst = fit_worst.max((a - b).abs());
        }
    }
    ensure(fit_worst < 1e-9, format!("palate fit error {fit_worst:.2e}"))?;
    Ok(format!("flat palate {worst:.1e}, quadratic fit {fit_worst:.1e}"))
}

fn mfcc_pipeline() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let cfg = MfccConfig::new(16_000);
    let (win, hop) = (400usize, 160usize);
    ensure(cfg.window_len() == win && cfg.hop_len() == hop, "16 kHz window and hop")?;
    for _ in 0..50 {
        let n = rng.gen_range(win..win + 8_000);
        let audio: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let frames = compute_mfcc(&audio, 16_000).map_err(e2s)?.rows();
        let want = (n - win) / hop + 1;
        ensure(frames == want, format!("{n} samples: {frames} frames, expected {want}"))?;
    }

    let m = 26;
    let d = dct_basis(m);
    let mut dct_err: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let dot: f64 = (0..m).map(|k| d.get(i, k) * d.get(j, k)).sum();
            dct_err = dct_err.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    ensure(dct_err < 1e-10, format!("DCT orthonormality error {dct_err:.2e}"))?;

    let noise: Vec<f64> = (0..16_000).map(|_| rng.gen_range(-0.25..0.25)).collect();
    let doubled: Vec<f64> = noise.iter().map(|v| 2.0 * v).collect();
    let a = compute_mfcc(&noise, 16_000).map_err(e2s)?;
    let b = compute_mfcc(&doubled, 16_000).map_err(e2s)?;
    let shift = 2f64.ln() * (m as f64).sqrt();
    let mut scale_err: f64 = 0.0;
    for t in 0..a.rows() {
        scale_err = scale_err.max((b.get(t, 0) - a.get(t, 0) - shift).abs());
        for k in 1..13 {
            scale_err = scale_err.max((b.get(t, k) - a.get(t, k)).abs());
        }
    }
    ensure(scale_err < 1e-6, format!("scaling property error {scale_err:.2e}"))?;
    Ok(format!("DCT {dct_err:.1e}, scaling {scale_err:.1e}"))
}

fn report(n: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let mut outcome = f();
    let took = start.elapsed();
    if let (Ok(d), Some(l)) = (&outcome, limit) {
        if took > l {
            outcome = Err(format!("{d}; took {took:.1?}, limit {l:?}"));
        }
    }
    match &outcome {
        Ok(d) => println!("PASS {n:>2} {name}: {d} [{:.1} s]", took.as_secs_f64()),
        Err(e) => println!("FAIL {n:>2} {name}: {e} [{:.1} s]", took.as_secs_f64()),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    let mut ok = true;
    ok &= report(1, "gradient fidelity", Some(Duration::from_secs(30)), gradients);
    ok &= report(2, "zero residual identity", None, residual_identity);
    ok &= report(3, "loss value oracles", None, loss_values);
    ok &= report(4, "metric oracles", None, metric_oracles);

    let synth = match Synth::new(&SynthConfig::default()) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL  5-8 synthetic corpus: {e}");
            return ExitCode::FAILURE;
        }
    };
    ok &= report(5, "SF quantization", min(1), || sf_quantization(&synth));
    ok &= report(6, "weakly supervised improvement", min(10), || weak_improvement(&synth));
    ok &= report(7, "supervised ordering", min(15), || supervised_ordering(&synth));
    ok &= report(8, "mismatched protocol", None, || mismatched(&synth));
    ok &= report(9, "table determinism", None, determinism);
    ok &= report(10, "geometry oracles", None, geometry);
    ok &= report(11, "MFCC pipeline", None, mfcc_pipeline);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
