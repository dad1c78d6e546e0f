use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use artic_core::acoustic::{extract_features, read_wav, write_features};
use artic_core::articulatory::{ArticKind, PriorTable, VTV_NAMES};
use artic_core::datasets::{make_split, synth_corpus, Corpus, DatasetManifest, SplitCounts, SplitKind, SynthConfig};
use artic_core::error::{Error, Result};
use artic_core::evaluation::emit_plot_data;
use artic_core::experiment::{
    baseline, evaluate_model, run_table1, run_table2, train_model, ExperimentConfig, Prepared, Table2Options,
};
use artic_core::kv::KvFile;
use artic_core::models::{Model, ModelKind};
use clap::{Args, Parser, Subcommand};

/// Articulatory feature reconstruction from acoustic and phonetic input.
#[derive(Parser)]
#[command(name = "artic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute 39-dim MFCC features from a 16-bit mono WAV file.
    Extract {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Expected sample rate in Hz, or `auto` to take it from the file.
        #[arg(long, default_value = "auto")]
        rate: String,
    },
    /// Compute a statistical prior table from measured tract variables.
    Priors {
        #[arg(long)]
        manifest: PathBuf,
        /// Table supplying the phone inventory and non-tract entries.
        #[arg(long)]
        seed_table: PathBuf,
        /// `all` or a comma-separated list of speaker ids.
        #[arg(long, default_value = "all")]
        speakers: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with known articulatory ground truth.
    Synth {
        #[arg(long, default_value_t = 6)]
        speakers: usize,
        #[arg(long, default_value_t = 40)]
        utts: usize,
        #[arg(long, default_value_t = 12)]
        phones: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Observation noise standard deviation.
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition the speakers of a manifest into train, validation and test.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        /// matched, mismatched-test-female or mismatched-test-male.
        #[arg(long, default_value = "matched")]
        kind: String,
        #[arg(long, default_value_t = 4)]
        train: usize,
        #[arg(long, default_value_t = 1)]
        validation: usize,
        #[arg(long, default_value_t = 1)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model for every configured seed.
    Train {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Train only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for checkpoints, logs and reports.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained checkpoint on the test speakers.
    Eval {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Supervised results for every input configuration and target.
    Table1 {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Also train an acoustic model on this single speaker.
        #[arg(long)]
        s1: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weakly supervised results for every prior provenance.
    Table2 {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Speaker behind the single-speaker statistical table.
        #[arg(long, value_delimiter = ',')]
        sf1_speakers: Option<Vec<String>>,
        /// Speakers behind the two-speaker statistical table.
        #[arg(long, value_delimiter = ',')]
        sf2_speakers: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measured, prior and reconstructed tract variables of one utterance.
    PlotData {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        utt: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Experiment settings shared by the training and evaluation commands.
#[derive(Args)]
struct ExperimentArgs {
    /// Key/value experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus manifest (overrides `manifest`).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Seed prior table (overrides `priors`).
    #[arg(long)]
    priors: Option<PathBuf>,
    /// Split plan file (overrides `split_plan`).
    #[arg(long)]
    split: Option<PathBuf>,
    /// `paper` (full size) or `desk`.
    #[arg(long)]
    scale: Option<String>,
    /// Further `key=value` config overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    /// Builds and validates the config; `kind` is used when the config
    /// names none.
    fn config(&self, kind: ModelKind) -> Result<ExperimentConfig> {
        let (mut kv, base) = match &self.config {
            Some(p) => (KvFile::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
            None => (KvFile::default(), PathBuf::new()),
        };
        if kv.get("kind").is_none() {
            kv.set("kind", kind.as_str());
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("--set expects KEY=VALUE, got {item}")))?;
            kv.set(k.trim(), v.trim());
        }
        if let Some(s) = &self.scale {
            kv.set("scale", s);
        }
        let mut cfg = ExperimentConfig::from_kv_unchecked(&kv, &base)?;
        for (slot, flag) in [
            (&mut cfg.manifest, &self.manifest),
            (&mut cfg.priors, &self.priors),
            (&mut cfg.split_plan, &self.split),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        cfg.validate()?;
        if cfg.manifest.is_none() {
            return Err(Error::config("no manifest given (--manifest or `manifest` key)"));
        }
        Ok(cfg)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn extract(audio: &Path, out: &Path, rate: &str) -> Result<()> {
    let expected = match rate {
        "auto" => None,
        r => Some(r.parse::<u32>().map_err(|_| Error::config(format!("--rate must be auto or Hz, got {r}")))?),
    };
    let wav = read_wav(audio)?;
    if let Some(r) = expected.filter(|&r| r != wav.sample_rate) {
        return Err(Error::data(format!("{} is sampled at {} Hz, expected {r}", audio.display(), wav.sample_rate)));
    }
    let name = audio.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let seq = extract_features(&name, &wav)?;
    log::info!("{}: {} frames", audio.display(), seq.len());
    write_features(out, &seq)
}

fn priors(manifest: &Path, seed_table: &Path, speakers: &str, out: &Path) -> Result<()> {
    let manifest = DatasetManifest::load(manifest)?;
    let seed = PriorTable::load(seed_table)?;
    let ids: Vec<String> = if speakers == "all" {
        manifest.speaker_ids()
    } else {
        speakers.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    for id in &ids {
        if manifest.speaker(id).is_none() {
            return Err(Error::config(format!("speaker {id} is not in the manifest")));
        }
    }
    let corpus = Corpus::load(&manifest, None)?;
    let table = corpus.statistical_priors(&ids, &seed)?;
    log::info!("{} table from {} speakers", table.provenance.as_str(), ids.len());
    table.save(out)
}

fn train(cfg: &ExperimentConfig, only: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = cfg.clone();
    if let Some(s) = only {
        cfg.seeds = vec![s];
    }
    let mut data = Prepared::load(&cfg)?;
    data.use_config_table(&cfg)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join("experiment.cfg"), &cfg.to_text())?;
    write_file(&out.join("split.txt"), &data.plan.to_text())?;
    if let Some(t) = &data.table {
        t.save(&out.join("priors.txt"))?;
        if cfg.kind.is_weakly_supervised() {
            write_file(&out.join("baseline.report.tsv"), &baseline(&data)?.to_tsv())?;
        }
    }
    for &seed in &cfg.seeds {
        let (model, log) = train_model(&cfg, &data, seed)?;
        log::info!("seed {seed}: stop {} at best epoch {}", log.stop.as_str(), log.best_epoch);
        model.save(&out.join(format!("seed{seed}.ckpt")))?;
        write_file(&out.join(format!("seed{seed}.log")), &log.to_text())?;
        let report = evaluate_model(&cfg, &data, &model)?;
        write_file(&out.join(format!("seed{seed}.report.tsv")), &report.to_tsv())?;
    }
    Ok(())
}

fn eval(cfg: &ExperimentConfig, model: &Path, out: &Path) -> Result<()> {
    let model = Model::load(model)?;
    let cfg = if model.kind() == cfg.kind { cfg.clone() } else { cfg.with_kind(model.kind()) };
    cfg.validate()?;
    let mut data = Prepared::load(&cfg)?;
    data.use_config_table(&cfg)?;
    let report = evaluate_model(&cfg, &data, &model)?;
    log::info!("r {:.4}", report.r());
    write_file(out, &report.to_tsv())
}

fn plot_data(cfg: &ExperimentConfig, model: &Path, utt: &str, out: &Path) -> Result<()> {
    let model = Model::load(model)?;
    if !model.kind().is_weakly_supervised() {
        return Err(Error::config("plot-data needs a weakly supervised model"));
    }
    let cfg = cfg.with_kind(model.kind());
    cfg.validate()?;
    let mut data = Prepared::load(&cfg)?;
    data.use_config_table(&cfg)?;
    let u = data
        .corpus
        .get(utt)
        .ok_or_else(|| Error::data(format!("utterance {utt} is not in the corpus")))?;
    let prior = u.require_priors()?;
    let generated = match model.kind() {
        ModelKind::Ae1 => model.generate(&u.acoustic)?,
        _ => model.generate(prior)?,
    };
    let names: Vec<String> = VTV_NAMES.iter().map(|s| s.to_string()).collect();
    emit_plot_data(u.require_target(ArticKind::TractVariables)?, prior, &generated, &names, out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract { audio, out, rate } => extract(&audio, &out, &rate),
        Command::Priors {
            manifest,
            seed_table,
            speakers,
            out,
        } => priors(&manifest, &seed_table, &speakers, &out),
        Command::Synth {
            speakers,
            utts,
            phones,
            seed,
            noise,
            out,
        } => {
            let cfg = SynthConfig {
                speakers,
                utterances: utts,
                phones,
                seed,
                noise,
                ..SynthConfig::default()
            };
            cfg.validate()?;
            let (data, paths) = synth_corpus(&cfg, &out)?;
            log::info!("{} utterances, manifest {}", data.utterances.len(), paths.manifest.display());
            Ok(())
        }
        Command::Split {
            manifest,
            kind,
            train,
            validation,
            test,
            seed,
            out,
        } => {
            let kind = SplitKind::parse(&kind)?;
            let manifest = DatasetManifest::load(&manifest)?;
            let plan = make_split(&manifest, kind, SplitCounts { train, validation, test }, seed)?;
            write_file(&out, &plan.to_text())
        }
        Command::Train { exp, seed, out } => train(&exp.config(ModelKind::Blstm)?, seed, &out),
        Command::Eval { exp, model, out } => eval(&exp.config(ModelKind::Blstm)?, &model, &out),
        Command::Table1 { exp, s1, out } => {
            let cfg = exp.config(ModelKind::Blstm)?;
            let mut data = Prepared::load(&cfg)?;
            if let Some(s) = &s1 {
                if data.manifest.speaker(s).is_none() {
                    return Err(Error::config(format!("--s1 speaker {s} is not in the manifest")));
                }
            }
            let text = run_table1(&cfg, &mut data, s1.as_deref())?;
            write_file(&out, &text)
        }
        Command::Table2 {
            exp,
            sf1_speakers,
            sf2_speakers,
            out,
        } => {
            let cfg = exp.config(ModelKind::Ae2)?;
            let mut data = Prepared::load(&cfg)?;
            let opts = Table2Options {
                sf1_speakers,
                sf2_speakers,
            };
            let text = run_table2(&cfg, &mut data, &opts)?;
            write_file(&out, &text)
        }
        Command::PlotData { exp, model, utt, out } => plot_data(&exp.config(ModelKind::Ae2)?, &model, &utt, &out),
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("ARTIC_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config(format!("ARTIC_THREADS must be a positive integer, got {v}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::config(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(1);
        }
    };
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
