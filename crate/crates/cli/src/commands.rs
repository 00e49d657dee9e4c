use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use tagmine::corpus::{read_jsonl, shuffle_tags, stream_records};
use tagmine::evalkit::{self, PredictionRecord, ScoredPredictions};
use tagmine::losskit::gradcheck::{check_kernel, Kernel, REPORT_HEADER};
use tagmine::losskit::FocusParams;
use tagmine::rerank::{self, GalleryItem, Query};
use tagmine::rng::derive_seed;
use tagmine::semparse::{self, ParseMode, Sidecar};
use tagmine::tagger::{self, FeatureRecord, LinearTagger, TrainConfig};
use tagmine::vocab::{self, BuildOptions, FilterList, StatsAccumulator, SynonymTable, TagFrequencies};
use tagmine::{CaptionRecord, Shard, TagVocabulary};

use crate::io::{check_inputs, load_vocab, read_all, read_labels, sink, subset, TagLine};
use crate::*;

/// Instances per kernel in `gradcheck`.
const GRADCHECK_INSTANCES: usize = 100;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Parse(a) => parse(a),
        Command::Vocab(VocabCommand::Build(a)) => vocab_build(a),
        Command::Vocab(VocabCommand::Overlap(a)) => vocab_overlap(a),
        Command::Stats(a) => stats(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(EvalCommand::Tagging(a)) => eval_tagging(a),
        Command::Eval(EvalCommand::Caption(a)) => eval_caption(a),
        Command::Eval(EvalCommand::Sweep(a)) => eval_sweep(a),
        Command::Rerank(a) => rerank(a),
        Command::Search(a) => search(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Shuffle(a) => shuffle(a),
    }
}

/// Caption records of a shard. Malformed lines are reported and skipped.
fn captions(path: &Path, shard: Shard) -> Result<Vec<(usize, CaptionRecord)>> {
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for item in stream_records(path, shard)? {
        match item {
            Ok(r) => out.push(r),
            Err(e) => {
                eprintln!("warning: {}: {e}", path.display());
                skipped += 1;
            }
        }
    }
    if skipped > 0 {
        eprintln!("{}: skipped {skipped} malformed lines", path.display());
    }
    Ok(out)
}

/// Tag lines of a shard. Malformed lines are reported and skipped.
fn tag_lines(path: &Path, shard: Shard) -> Result<Vec<(usize, TagLine)>> {
    let mut out = Vec::new();
    for item in read_jsonl::<TagLine>(path, shard)? {
        match item {
            Ok(r) => out.push(r),
            Err(e) => eprintln!("warning: {}: {e}", path.display()),
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ParsedLine<'a> {
    image_id: &'a str,
    line: usize,
    text: &'a str,
    heads: &'a [String],
    modifiers: &'a [(String, String)],
    relations: &'a [(String, String, String)],
    entities: &'a [String],
    attributes: &'a [String],
    actions: &'a [String],
}

fn parse(a: ParseArgs) -> Result<()> {
    let sidecar = match (a.mode, &a.sidecar) {
        (Mode::Builtin, _) => None,
        (Mode::External, Some(p)) => Some(p),
        (Mode::External, None) => return Err(Usage("--mode external needs --sidecar".into()).into()),
    };
    check_inputs([a.input.as_path()].into_iter().chain(sidecar.map(|p| p.as_path())))?;
    let sidecar = sidecar.map(|p| Sidecar::load(p)).transpose()?;
    let records = captions(&a.input, a.shard)?;
    let parsed: Vec<_> = records
        .par_iter()
        .map(|(line, rec)| {
            let mode = match &sidecar {
                Some(s) => ParseMode::external(s, *line),
                None => ParseMode::Builtin,
            };
            semparse::parse_caption(&rec.text, mode)
                .with_context(|| format!("image {}", rec.image_id))
                .map(|p| {
                    let tags = semparse::project_tags(&p);
                    (p, tags)
                })
        })
        .collect::<Result<_>>()?;
    let mut out = sink(a.output.as_deref())?;
    for ((line, rec), (p, tags)) in records.iter().zip(&parsed) {
        let row = ParsedLine {
            image_id: &rec.image_id,
            line: *line,
            text: &rec.text,
            heads: &p.heads,
            modifiers: &p.modifiers,
            relations: &p.relations,
            entities: &tags.entities,
            attributes: &tags.attributes,
            actions: &tags.actions,
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    eprintln!("parsed {} captions", records.len());
    Ok(())
}

fn count_file(path: &Path, shard: Shard) -> Result<TagFrequencies> {
    let mut freqs = TagFrequencies::new();
    for (line, t) in tag_lines(path, shard)? {
        match t.parsed() {
            Some(p) => freqs.add_caption(&p),
            None => eprintln!("warning: {}: line {}: no tags or text", path.display(), line + 1),
        }
    }
    Ok(freqs)
}

fn vocab_build(a: VocabBuildArgs) -> Result<()> {
    check_inputs(
        a.input
            .iter()
            .chain(&a.synonyms)
            .chain(&a.allowlist)
            .map(|p| p.as_path()),
    )?;
    let syn = match &a.synonyms {
        Some(p) => SynonymTable::load(p).with_context(|| format!("synonyms {}", p.display()))?,
        None => SynonymTable::new(),
    };
    let filter = match &a.allowlist {
        Some(p) => Some(FilterList::load(p).with_context(|| format!("allowlist {}", p.display()))?),
        None => None,
    };
    let parts: Vec<TagFrequencies> = a
        .input
        .par_iter()
        .map(|p| count_file(p, a.shard))
        .collect::<Result<_>>()?;
    let mut freqs = TagFrequencies::new();
    for part in parts {
        freqs.merge(part);
    }
    let opts = BuildOptions {
        top_k: a.top_k,
        min_freq: a.min_freq,
    };
    let mut v = vocab::build_vocab(&freqs, opts, &syn)?;
    if let Some(f) = &filter {
        v = v.filtered(f);
    }
    let mut out = sink(a.output.as_deref())?;
    v.write_tsv(&mut out)?;
    out.flush()?;
    let [e, at, ac] = v.type_counts();
    eprintln!(
        "{} distinct tags counted, {} kept ({e} entities, {at} attributes, {ac} actions)",
        freqs.len(),
        v.len()
    );
    Ok(())
}

fn vocab_overlap(a: OverlapArgs) -> Result<()> {
    check_inputs([a.vocab.as_path(), a.input.as_path()])?;
    let v = load_vocab(&a.vocab)?;
    let mut names = Vec::new();
    for line in tagmine::corpus::open(&a.input)?.lines() {
        let line = line?;
        let line = line.trim();
        if !line.is_empty() && !line.starts_with('#') {
            names.push(line.to_string());
        }
    }
    let o = vocab::vocab_overlap(&v, &names);
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "overlap\t{}", o.count)?;
    for m in &o.matched {
        writeln!(out, "{m}")?;
    }
    out.flush()?;
    eprintln!("{} of {} categories matched", o.count, names.len());
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    check_inputs([a.input.as_path()])?;
    let mut acc = StatsAccumulator::default();
    for (line, t) in tag_lines(&a.input, a.shard)? {
        match t.parsed() {
            Some(p) => acc.add(&t.image_id, &p),
            None => eprintln!("warning: {}: line {}: no tags or text", a.input.display(), line + 1),
        }
    }
    let s = acc.finish()?;
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "{s}")?;
    out.flush()?;
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    check_inputs([a.input.as_path(), a.labels.as_path(), a.vocab.as_path()])?;
    let v = load_vocab(&a.vocab)?;
    let features: Vec<FeatureRecord> = read_all(&a.input)?;
    let labels = read_labels(&a.labels, &v)?;
    let cfg = TrainConfig {
        focus: FocusParams::new(a.gamma_pos, a.gamma_neg)?,
        lr: a.lr,
        epochs: a.epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    eprintln!(
        "training on {} images, {} classes, dimension {}",
        features.len(),
        v.len(),
        features.first().map_or(0, |f| f.vector.len())
    );
    let outcome = tagger::train(&features, &labels, &v, &cfg)?;
    for (i, l) in outcome.epoch_losses.iter().enumerate() {
        eprintln!("epoch {}\tloss {l:.6}", i + 1);
    }
    let mut out = sink(a.output.as_deref())?;
    outcome.model.write_tsv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    check_inputs([a.input.as_path(), a.model.as_path()].into_iter().chain(a.vocab.as_deref()))?;
    let model = LinearTagger::load(&a.model)?;
    if let Some(p) = &a.vocab {
        model.check_vocab(&load_vocab(p)?)?;
    }
    let features: Vec<FeatureRecord> = read_all(&a.input)?;
    let mut out = sink(a.output.as_deref())?;
    for f in &features {
        let probs = tagger::predict_logits(&model, f).with_context(|| format!("image {}", f.image_id))?;
        let rec = match a.threshold {
            Some(t) => PredictionRecord::Tags {
                image_id: f.image_id.clone(),
                tags: tagger::threshold_tags(&probs, t),
            },
            None => PredictionRecord::Scores {
                image_id: f.image_id.clone(),
                scores: probs,
            },
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    eprintln!("predicted {} images", features.len());
    Ok(())
}

fn scored_predictions(input: &Path, labels: &Path, v: &TagVocabulary) -> Result<ScoredPredictions> {
    let truth = read_labels(labels, v)?;
    let rows = read_all::<PredictionRecord>(input)?
        .into_iter()
        .map(|r| Ok((r.image_id().to_string(), r.dense(v.len())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoredPredictions::new(v.len(), rows, &truth)?)
}

fn eval_tagging(a: EvalTaggingArgs) -> Result<()> {
    check_inputs(
        [a.input.as_path(), a.labels.as_path(), a.vocab.as_path()]
            .into_iter()
            .chain(a.allowlist.as_deref()),
    )?;
    let v = load_vocab(&a.vocab)?;
    let keep = subset(&v, a.allowlist.as_ref())?;
    let preds = scored_predictions(&a.input, &a.labels, &v)?;
    let map = evalkit::mean_ap(&preds, keep.as_ref())?;
    let prf = evalkit::prf_at_threshold(&preds, a.threshold, keep.as_ref());
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "mAP\t{map:.6}")?;
    write!(out, "{prf}")?;
    out.flush()?;
    eprintln!("evaluated {} images over {} classes", preds.len(), preds.classes());
    Ok(())
}

fn eval_caption(a: EvalCaptionArgs) -> Result<()> {
    check_inputs(
        [a.input.as_path(), a.labels.as_path(), a.vocab.as_path()]
            .into_iter()
            .chain(a.allowlist.as_deref()),
    )?;
    let v = load_vocab(&a.vocab)?;
    let keep = subset(&v, a.allowlist.as_ref())?;
    let truth = read_labels(&a.labels, &v)?;
    let caps: Vec<CaptionRecord> = captions(&a.input, Shard::ALL)?.into_iter().map(|(_, r)| r).collect();
    let prf = evalkit::eval_caption_as_tagger(&caps, &truth, &v, keep.as_ref());
    let mut out = sink(a.output.as_deref())?;
    write!(out, "{prf}")?;
    out.flush()?;
    Ok(())
}

fn eval_sweep(a: EvalSweepArgs) -> Result<()> {
    check_inputs([a.input.as_path(), a.labels.as_path(), a.vocab.as_path()])?;
    let v = load_vocab(&a.vocab)?;
    let preds = scored_predictions(&a.input, &a.labels, &v)?;
    let curve = evalkit::threshold_sweep(&preds, &a.sweep.0)?;
    let mut out = sink(a.output.as_deref())?;
    write!(out, "{curve}")?;
    out.flush()?;
    Ok(())
}

fn gallery(path: &Path, v: &TagVocabulary) -> Result<Vec<GalleryItem>> {
    let items: Vec<GalleryItem> = read_all(path)?;
    for it in &items {
        if let Some(t) = it.tags.iter().find(|t| t.index() >= v.len()) {
            bail!("gallery item {}: tag id {t} is not in the vocabulary", it.id);
        }
    }
    Ok(items)
}

fn rerank(a: RerankArgs) -> Result<()> {
    check_inputs([a.input.as_path(), a.vocab.as_path(), a.embedding.as_path()])?;
    let v = load_vocab(&a.vocab)?;
    let items = gallery(&a.input, &v)?;
    let raw = std::fs::read_to_string(&a.embedding)?;
    let embedding: Vec<f64> =
        serde_json::from_str(&raw).with_context(|| format!("embedding {}", a.embedding.display()))?;
    let q = Query::from_text(&a.query, embedding, &v);
    let names: Vec<&str> = q.tags.iter().filter_map(|&t| v.canonical(t)).collect();
    eprintln!("query tags: {}", names.join(", "));
    let list = rerank::rerank(&q, &items, a.alpha, a.topk)?;
    let mut out = sink(a.output.as_deref())?;
    out.write_all(list.to_tsv().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn search(a: SearchArgs) -> Result<()> {
    check_inputs([a.input.as_path(), a.vocab.as_path()])?;
    let v = load_vocab(&a.vocab)?;
    let items = gallery(&a.input, &v)?;
    let mut keywords = BTreeSet::new();
    for k in a.query.split(',').map(str::trim).filter(|k| !k.is_empty()) {
        match v.resolve(k) {
            Some(id) => {
                keywords.insert(id);
            }
            None => eprintln!("warning: keyword {k:?} is not in the vocabulary"),
        }
    }
    let list = rerank::keyword_search(&keywords, &items, a.topk)?;
    let mut out = sink(a.output.as_deref())?;
    out.write_all(list.to_tsv().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<()> {
    let kernels = match a.loss {
        Some(k) => vec![k],
        None => Kernel::ALL.to_vec(),
    };
    let reports: Vec<_> = kernels
        .par_iter()
        .map(|&k| check_kernel(k, GRADCHECK_INSTANCES, a.seed))
        .collect();
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "{REPORT_HEADER}")?;
    for r in &reports {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.kernel.to_string()).collect();
    if !failed.is_empty() {
        bail!("gradient check failed for {}", failed.join(", "));
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(untagged)]
enum Shuffled {
    Ids(Vec<tagmine::TagId>),
    Names(Vec<String>),
}

#[derive(Serialize)]
struct ShuffledLine<'a> {
    image_id: &'a str,
    tags: Shuffled,
}

fn shuffle(a: ShuffleArgs) -> Result<()> {
    check_inputs([a.input.as_path()])?;
    let mut out = sink(a.output.as_deref())?;
    for (line, t) in tag_lines(&a.input, Shard::ALL)? {
        let seed = derive_seed(a.seed, line as u64);
        let tags = if let Some(ids) = &t.tags {
            Shuffled::Ids(shuffle_tags(ids, seed))
        } else if let Some(p) = t.parsed() {
            let names: Vec<String> = p.iter().map(|(_, s)| s.to_string()).collect();
            Shuffled::Names(shuffle_tags(&names, seed))
        } else {
            eprintln!("warning: {}: line {}: no tags or text", a.input.display(), line + 1);
            continue;
        };
        serde_json::to_writer(
            &mut out,
            &ShuffledLine {
                image_id: &t.image_id,
                tags,
            },
        )?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
