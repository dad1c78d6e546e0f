use std::fmt::Write as _;

use super::{baseline, run_protocol, ExperimentConfig, InputFeatures, PhoneEncoding, Prepared};
use crate::articulatory::{ArticKind, Provenance};
use crate::error::Result;
use crate::evaluation::{fmt_opt, ScoreReport};
use crate::kv;
use crate::models::ModelKind;

fn cell(rmse: Option<f64>, r: f64) -> String {
    format!("{}\t{}", fmt_opt(rmse), fmt_opt(Some(r)))
}

fn blstm_cfg(base: &ExperimentConfig, inputs: InputFeatures, target: ArticKind) -> ExperimentConfig {
    let mut cfg = base.with_kind(ModelKind::Blstm);
    cfg.inputs = Some(inputs);
    cfg.target = target;
    if inputs.uses_phones() && cfg.phone_encoding.is_none() {
        cfg.phone_encoding = Some(PhoneEncoding::OneHot);
    }
    cfg
}

/// Supervised BLSTM results for every input configuration against both
/// targets, plus an acoustic model trained on the single speaker `s1`.
/// Cells are seed means of normalized RMSE and correlation.
pub fn run_table1(base: &ExperimentConfig, data: &mut Prepared, s1: Option<&str>) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# seeds\t{}", kv::join(&base.seeds));
    let _ = writeln!(out, "# split\t{}", data.plan.kind.as_str());
    out.push_str("inputs\tpt_rmse\tpt_r\tvtv_rmse\tvtv_r\n");
    let mut rows: Vec<(String, ExperimentConfig)> = InputFeatures::ALL
        .iter()
        .map(|&i| (i.label().to_string(), blstm_cfg(base, i, ArticKind::Pellets)))
        .collect();
    if let Some(s) = s1 {
        let mut cfg = blstm_cfg(base, InputFeatures::Mfcc, ArticKind::Pellets);
        cfg.train_speakers = Some(vec![s.to_string()]);
        rows.push(("MFCCs (S1)".to_string(), cfg));
    }
    for (label, cfg) in rows {
        data.use_config_table(&cfg)?;
        let mut line = label;
        for target in [ArticKind::Pellets, ArticKind::TractVariables] {
            let cfg = ExperimentConfig { target, ..cfg.clone() };
            cfg.validate()?;
            let res = run_protocol(&cfg, data)?;
            line.push('\t');
            line.push_str(&cell(res.summary.rmse_mean(), res.summary.r_mean()));
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Speakers behind the single- and two-speaker statistical tables.
#[derive(Debug, Clone, Default)]
pub struct Table2Options {
    pub sf1_speakers: Option<Vec<String>>,
    pub sf2_speakers: Option<Vec<String>>,
}

/// Weakly supervised results: the prior table itself and the three
/// generators, for each prior provenance. Expert-table rows carry no RMSE.
pub fn run_table2(base: &ExperimentConfig, data: &mut Prepared, opts: &Table2Options) -> Result<String> {
    let first = |n: usize| data.plan.train.iter().take(n).cloned().collect::<Vec<_>>();
    let sf1 = opts.sf1_speakers.clone().unwrap_or_else(|| first(1));
    let sf2 = opts.sf2_speakers.clone().unwrap_or_else(|| first(2));
    let rows: [(Provenance, &str, Option<Vec<String>>); 4] = [
        (Provenance::Lf, "LF", None),
        (Provenance::Sf, "SF", base.prior_speakers.clone()),
        (Provenance::Sf1, "SF1", Some(sf1)),
        (Provenance::Sf2, "SF2", Some(sf2)),
    ];
    let kinds = [ModelKind::ResDnn, ModelKind::Ae1, ModelKind::Ae2];
    let mut out = String::new();
    let _ = writeln!(out, "# seeds\t{}", kv::join(&base.seeds));
    let _ = writeln!(out, "# split\t{}", data.plan.kind.as_str());
    out.push_str("priors\tbaseline_rmse\tbaseline_r");
    for k in kinds {
        let _ = write!(out, "\t{0}_rmse\t{0}_r", k.as_str());
    }
    out.push('\n');
    for (provenance, label, speakers) in rows {
        let table = data.prior_table(provenance, speakers.as_deref())?;
        data.use_table(table)?;
        let with_rmse = provenance != Provenance::Lf;
        let rmse = |v: Option<f64>| if with_rmse { v } else { None };
        let b: ScoreReport = baseline(data)?;
        let mut line = format!("{label}\t{}", cell(rmse(b.rmse()), b.r()));
        for kind in kinds {
            let mut cfg = base.with_kind(kind);
            cfg.provenance = provenance;
            cfg.validate()?;
            let res = run_protocol(&cfg, data)?;
            line.push('\t');
            line.push_str(&cell(rmse(res.summary.rmse_mean()), res.summary.r_mean()));
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}
