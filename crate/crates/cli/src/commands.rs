use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use cyclezsl_core::datamodel::{
    generate_synthetic, load_dataset, load_split, make_split, save_dataset, save_split, Dataset, Split, SplitStyle,
    SynthConfig,
};
use cyclezsl_core::evaluation::{evaluate, EvalOptions, EvalReport};
use cyclezsl_core::textfeat::{build_vocab, tfidf, Corpus, TfidfOptions};
use cyclezsl_core::training::{
    checkpoint_dtype, load_checkpoint, save_checkpoint, train as run_training, Ablation, LossRecord, TrainConfig,
    TrainData, TrainState,
};
use cyclezsl_core::{Real, Tensor};

use crate::{AblateArgs, EvalArgs, GzslArgs, ModelArgs, Precision, PrepareArgs, SplitArgs, Style, SynthArgs, SynthesisArgs, TrainArgs};

const HISTORY_FILE: &str = "loss_history.csv";

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read_csv_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(r.records().collect::<Result<_, _>>()?)
}

pub fn prepare(a: &PrepareArgs) -> Result<()> {
    let corpus = Corpus::from_dir(&a.corpus)?;
    let vocab = build_vocab(&corpus, a.min_df)?;
    let options = TfidfOptions { l2_normalize: !a.no_normalize, ..TfidfOptions::default() };
    let semantic = tfidf(&corpus, &vocab, options).matrix;
    let names: Vec<String> = corpus.class_ids().map(str::to_string).collect();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in read_csv_records(&a.features)?.iter().enumerate() {
        let name = rec.get(0).unwrap_or_default().trim();
        let class = *index
            .get(name)
            .with_context(|| format!("features line {}: class {name:?} has no document", line + 1))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("features line {}", line + 1))?;
        labels.push(class);
        rows.push(row);
    }
    ensure!(!rows.is_empty(), "{} holds no feature rows", a.features.display());
    let visual = Tensor::from_rows(&rows)?;

    let super_class = match &a.super_classes {
        None => None,
        Some(p) => {
            let mut ids = vec![None; names.len()];
            for rec in read_csv_records(p)? {
                let name = rec.get(0).unwrap_or_default().trim();
                let class = *index.get(name).with_context(|| format!("super-class file names unknown class {name:?}"))?;
                ids[class] = Some(rec.get(1).unwrap_or_default().trim().parse::<usize>()?);
            }
            let missing: Vec<&str> = names.iter().zip(&ids).filter(|(_, s)| s.is_none()).map(|(n, _)| n.as_str()).collect();
            ensure!(missing.is_empty(), "no super-class for {missing:?}");
            Some(ids.into_iter().flatten().collect())
        }
    };

    let ds = Dataset::new(visual, semantic, labels, names, super_class)?;
    save_dataset(&a.out, &ds)?;
    print_json(&serde_json::json!({
        "out": a.out,
        "samples": ds.num_samples(),
        "classes": ds.num_classes(),
        "d_v": ds.d_v(),
        "d_s": ds.d_s(),
    }))
}

pub fn synth_data(a: &SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => toml::from_str::<SynthConfig>(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(r) = a.relative_noise {
        cfg = cfg.with_relative_noise(r)?;
    }
    let data = generate_synthetic(&cfg)?;
    save_dataset(&a.out, &data.dataset)?;
    save_split(&a.out.join("split.json"), &data.split)?;
    print_json(&serde_json::json!({
        "out": a.out,
        "split": a.out.join("split.json"),
        "config": cfg,
    }))
}

pub fn split(a: &SplitArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let style = match a.style {
        Style::Scs => SplitStyle::Scs,
        Style::Sce => SplitStyle::Sce,
    };
    let split = make_split(&ds, style, a.unseen_fraction, a.seed)?;
    save_split(&a.out, &split)?;
    print_json(&split)
}

fn train_config(m: &ModelArgs, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg = match &m.config {
        Some(p) => TrainConfig::from_toml(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None if m.desk_scale => TrainConfig::desk_scale(),
        None => TrainConfig::default(),
    };
    if let Some(n) = m.iterations {
        cfg.iterations = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_inputs(dataset: &Path, split: &Path) -> Result<(Dataset, Split)> {
    let ds = load_dataset(dataset).with_context(|| format!("loading dataset {}", dataset.display()))?;
    let sp = load_split(split).with_context(|| format!("loading split {}", split.display()))?;
    sp.validate(&ds)?;
    Ok((ds, sp))
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    checkpoint: &'a Path,
    history: std::path::PathBuf,
    iterations: u64,
    config_hash: String,
    last: Option<LossRecord>,
}

fn write_state<F: Real>(state: &TrainState<F>, out: &Path) -> Result<()> {
    save_checkpoint(state, out)?;
    fs::write(out.join(HISTORY_FILE), state.history.to_csv_string()?)?;
    Ok(())
}

fn train_with<F: Real>(a: &TrainArgs, ds: &Dataset, sp: &Split, fresh: Option<TrainConfig>) -> Result<()> {
    let (mut state, target) = match fresh {
        Some(cfg) => {
            let holdout = cfg.holdout(ds, sp)?;
            let data: TrainData<F> = TrainData::new(ds, sp, &holdout)?;
            let target = cfg.iterations;
            (TrainState::new(cfg, &data)?, target)
        }
        None => {
            let mut st: TrainState<F> = load_checkpoint(&a.out)?;
            // The stored config records the total target, so a resumed run hashes like an uninterrupted one.
            if let Some(n) = a.model.iterations {
                st.config.iterations = n;
            }
            let target = st.config.iterations;
            (st, target)
        }
    };
    let holdout = state.config.holdout(ds, sp)?;
    let data: TrainData<F> = TrainData::new(ds, sp, &holdout)?;
    let remaining = (target as u64).saturating_sub(state.iteration) as usize;
    let result = run_training(&mut state, &data, remaining);
    write_state(&state, &a.out)?;
    result.with_context(|| format!("training stopped; last good state saved to {}", a.out.display()))?;
    print_json(&TrainSummary {
        checkpoint: &a.out,
        history: a.out.join(HISTORY_FILE),
        iterations: state.iteration,
        config_hash: state.config.hash(),
        last: state.history.records.last().copied(),
    })
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let (ds, sp) = load_inputs(&a.dataset, &a.split)?;
    if a.resume {
        if a.model.config.is_some() || a.model.desk_scale || a.seed.is_some() {
            bail!("--resume takes the configuration and seed from the checkpoint");
        }
        return match checkpoint_dtype(&a.out)?.as_str() {
            "f32" => train_with::<f32>(a, &ds, &sp, None),
            "f64" => train_with::<f64>(a, &ds, &sp, None),
            other => bail!("unsupported checkpoint dtype {other:?}"),
        };
    }
    let cfg = train_config(&a.model, a.seed)?;
    match a.model.precision {
        Precision::F32 => train_with::<f32>(a, &ds, &sp, Some(cfg)),
        Precision::F64 => train_with::<f64>(a, &ds, &sp, Some(cfg)),
    }
}

fn evaluate_with<F: Real>(s: &SynthesisArgs, ds: &Dataset, sp: &Split, timing: bool) -> Result<EvalReport> {
    let state: TrainState<F> = load_checkpoint(&s.checkpoint)?;
    let holdout = state.config.holdout(ds, sp)?;
    let opts = EvalOptions { n_per_class: s.n_per_class, k: s.k, seed: s.seed, timing };
    Ok(evaluate(&state, ds, sp, &holdout, &opts)?)
}

fn evaluate_checkpoint(s: &SynthesisArgs, timing: bool) -> Result<EvalReport> {
    let (ds, sp) = load_inputs(&s.dataset, &s.split)?;
    match checkpoint_dtype(&s.checkpoint)?.as_str() {
        "f32" => evaluate_with::<f32>(s, &ds, &sp, timing),
        "f64" => evaluate_with::<f64>(s, &ds, &sp, timing),
        other => bail!("unsupported checkpoint dtype {other:?}"),
    }
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let json = evaluate_checkpoint(&a.synthesis, a.timing)?.to_json()?;
    match &a.out {
        Some(p) => fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

pub fn gzsl(a: &GzslArgs) -> Result<()> {
    let report = evaluate_checkpoint(&a.synthesis, false)?;
    fs::write(&a.curve, report.curve.to_csv_string()?).with_context(|| format!("writing {}", a.curve.display()))?;
    print_json(&serde_json::json!({
        "ausuc": report.ausuc,
        "points": report.curve.points.len(),
        "curve": a.curve,
    }))
}

#[derive(Serialize)]
struct AblationRow {
    variant: &'static str,
    seed: u64,
    top1_unseen: f64,
    ausuc: f64,
}

fn ablation_run<F: Real>(ds: &Dataset, sp: &Split, cfg: TrainConfig) -> Result<EvalReport> {
    let holdout = cfg.holdout(ds, sp)?;
    let data: TrainData<F> = TrainData::new(ds, sp, &holdout)?;
    let (iterations, seed) = (cfg.iterations, cfg.seed);
    let mut state = TrainState::new(cfg, &data)?;
    run_training(&mut state, &data, iterations)?;
    Ok(evaluate(&state, ds, sp, &holdout, &EvalOptions { seed, ..EvalOptions::default() })?)
}

pub fn ablate(a: &AblateArgs) -> Result<()> {
    let (ds, sp) = load_inputs(&a.dataset, &a.split)?;
    let base = train_config(&a.model, None)?;
    let mut variants: Vec<(&'static str, TrainConfig)> = Ablation::ALL
        .iter()
        .map(|&ab| (ab.name(), TrainConfig { ablation: ab, ..base.clone() }))
        .collect();
    if a.single_gan {
        variants.push(("single_gan", base.clone().single_gan()));
    }
    let mut rows = Vec::new();
    for (name, cfg) in &variants {
        for &seed in &a.seed {
            let cfg = TrainConfig { seed, ..cfg.clone() };
            let rep = match a.model.precision {
                Precision::F32 => ablation_run::<f32>(&ds, &sp, cfg)?,
                Precision::F64 => ablation_run::<f64>(&ds, &sp, cfg)?,
            };
            eprintln!("{name} seed {seed}: top-1 {:.4}, AUSUC {:.4}", rep.top1_unseen, rep.ausuc);
            rows.push(AblationRow { variant: name, seed, top1_unseen: rep.top1_unseen, ausuc: rep.ausuc });
        }
    }
    if let Some(p) = &a.out {
        let mut w = csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    println!("| variant | mean unseen top-1 | mean AUSUC | seeds |");
    println!("|---|---|---|---|");
    for (name, _) in &variants {
        let mine: Vec<&AblationRow> = rows.iter().filter(|r| r.variant == *name).collect();
        let n = mine.len() as f64;
        println!(
            "| {name} | {:.4} | {:.4} | {} |",
            mine.iter().map(|r| r.top1_unseen).sum::<f64>() / n,
            mine.iter().map(|r| r.ausuc).sum::<f64>() / n,
            mine.len()
        );
    }
    Ok(())
}
