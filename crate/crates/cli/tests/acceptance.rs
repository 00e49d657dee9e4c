//! Acceptance criteria, one pass/fail line each. Exits non-zero when any
//! criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagmine::evalkit::{mean_ap, recall_at_k, ScoredPredictions};
use tagmine::losskit::{asl_loss, bce_loss, FocusParams, LabelMatrix, ProbMatrix};
use tagmine::rerank::{rerank, Query};
use tagmine::synth::{self, FeatureCorpus, FeatureCorpusConfig};
use tagmine::{ImageTagSet, TagVocabulary};

type Check = Result<String, String>;

fn tagmine(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tagmine"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run tagmine")
}

/// Run and require exit 0; returns stdout.
fn ok(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = tagmine(dir, args);
    if !out.status.success() {
        return Err(format!(
            "`tagmine {}` exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(&r).unwrap());
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

fn ac1(dir: &Path) -> Check {
    let text = "A red alarm clock is on a wooden desk";
    write_jsonl(&dir.join("ex.jsonl"), [serde_json::json!({"image_id": "ex", "text": text})]);
    ok(dir, &["parse", "--input", "ex.jsonl", "--output", "ex.out"])?;
    let line: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("ex.out")).unwrap()).unwrap();
    let set = |v: &serde_json::Value, pick: &dyn Fn(&serde_json::Value) -> String| -> BTreeSet<String> {
        v.as_array().unwrap().iter().map(pick).collect()
    };
    let heads = set(&line["heads"], &|h| h.as_str().unwrap().to_string());
    let mods = set(&line["modifiers"], &|m| m[0].as_str().unwrap().to_string());
    let rels = set(&line["relations"], &|r| r[1].as_str().unwrap().to_string());
    let want = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    ensure(heads == want(&["alarm clock", "desk"]), || format!("heads {heads:?}"))?;
    ensure(mods == want(&["red", "wooden"]), || format!("modifiers {mods:?}"))?;
    ensure(rels == want(&["on"]), || format!("relations {rels:?}"))?;
    Ok("heads {alarm clock, desk}, modifiers {red, wooden}, relations {on}".into())
}

fn ac2(dir: &Path) -> Check {
    let report = ok(dir, &["gradcheck", "--seed", "7"])?;
    let mut worst = String::new();
    let mut kernels = 0;
    for line in report.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let instances: usize = f[1].parse().unwrap();
        let err: f64 = f[2].parse().unwrap();
        ensure(instances >= 100, || format!("{} ran {instances} instances", f[0]))?;
        ensure(err < 1e-4 && f[3] == "pass", || format!("{} max relative error {err:e}", f[0]))?;
        worst.push_str(&format!("{} {err:.1e} ", f[0]));
        kernels += 1;
    }
    ensure(kernels == 5, || format!("{kernels} kernels reported"))?;

    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut gap: f64 = 0.0;
    for _ in 0..1000 {
        let (b, c) = (r.random_range(1..6), r.random_range(1..8));
        let p: Vec<Vec<f64>> = (0..b).map(|_| (0..c).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let mut y: Vec<Vec<i8>> = (0..b).map(|_| (0..c).map(|_| r.random_range(-1..=1)).collect()).collect();
        y[0][0] = 1;
        let rows: Vec<&[f64]> = p.iter().map(Vec::as_slice).collect();
        let labels: Vec<&[i8]> = y.iter().map(Vec::as_slice).collect();
        let (pm, lm) = (ProbMatrix::from_rows(&rows).unwrap(), LabelMatrix::from_rows(&labels).unwrap());
        let a = asl_loss(&lm, &pm, FocusParams::new(0.0, 0.0).unwrap()).unwrap();
        let e = bce_loss(&lm, &pm).unwrap();
        gap = gap.max((a.loss - e.loss).abs());
        for (x, z) in a.grad.iter().zip(e.grad.iter()) {
            gap = gap.max((x - z).abs());
        }
    }
    ensure(gap <= 1e-12, || format!("ASL(0, 0) differs from BCE by {gap:e}"))?;
    Ok(format!("{}| ASL(0,0) vs BCE max gap {gap:e}", worst))
}

fn rank(s: &[f64], i: usize) -> usize {
    1 + (0..s.len()).filter(|&j| s[j] > s[i] || (s[j] == s[i] && j < i)).count()
}

/// Precision at each positive's rank, counted directly.
fn brute_ap(s: &[f64], t: &[bool]) -> Option<f64> {
    let mut ranks: Vec<usize> = (0..s.len()).filter(|&i| t[i]).map(|i| rank(s, i)).collect();
    if ranks.is_empty() {
        return None;
    }
    ranks.sort_unstable();
    let sum: f64 = ranks
        .iter()
        .map(|&k| (0..s.len()).filter(|&j| t[j] && rank(s, j) <= k).count() as f64 / k as f64)
        .sum();
    Some(sum / ranks.len() as f64)
}

fn ac3(_: &Path) -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    let mut tied = 0;
    for _ in 0..2000 {
        let (n, c) = (r.random_range(1..=8), r.random_range(1..=3));
        let levels = r.random_range(1..=4);
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..c).map(|_| r.random_range(0..levels) as f64 / 4.0).collect())
            .collect();
        let truth: Vec<Vec<bool>> = (0..n).map(|_| (0..c).map(|_| r.random_bool(0.4)).collect()).collect();
        let aps: Vec<f64> = (0..c)
            .filter_map(|k| {
                let s: Vec<f64> = scores.iter().map(|row| row[k]).collect();
                let t: Vec<bool> = truth.iter().map(|row| row[k]).collect();
                brute_ap(&s, &t)
            })
            .collect();
        let want = (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64);
        let has_tie = scores.iter().enumerate().any(|(i, a)| scores[..i].iter().any(|b| a.iter().zip(b).any(|(x, y)| x == y)));
        let got = mean_ap(&ScoredPredictions::from_dense(scores.clone(), truth.clone()).unwrap(), None).ok();
        ensure(got == want, || format!("mAP {got:?} vs oracle {want:?} on {scores:?} {truth:?}"))?;
        compared += 1;
        tied += has_tie as usize;
    }
    Ok(format!("{compared} instances equal, {tied} with tied scores"))
}

struct TagWorld {
    dir: PathBuf,
    corpus: FeatureCorpus,
}

fn build_world(dir: &Path) -> TagWorld {
    let corpus = FeatureCorpus::generate(&FeatureCorpusConfig::default());
    let (train_caps, train_feats) = corpus.train();
    let (_, test_feats) = corpus.test();
    write_jsonl(&dir.join("captions.jsonl"), train_caps.iter().map(|c| &c.record));
    write_jsonl(&dir.join("train_features.jsonl"), train_feats);
    write_jsonl(&dir.join("test_features.jsonl"), test_feats);
    TagWorld {
        dir: dir.to_path_buf(),
        corpus,
    }
}

/// Generator truth for the held-out split, as tag ids of `vocab`.
fn held_out_truth(w: &TagWorld, vocab: &TagVocabulary) -> Vec<ImageTagSet> {
    w.corpus
        .test()
        .0
        .iter()
        .map(|c| ImageTagSet::new(c.record.image_id.clone(), c.tags.iter().map(|t| vocab.lookup(t).unwrap())))
        .collect()
}

fn map_of(report: &str) -> f64 {
    report.lines().next().unwrap().split('\t').nth(1).unwrap().parse().unwrap()
}

fn ac4(w: &TagWorld) -> Check {
    let d = &w.dir;
    ok(d, &["parse", "--input", "captions.jsonl", "--output", "parsed.jsonl"])?;
    ok(d, &["vocab", "build", "--input", "parsed.jsonl", "--output", "vocab.tsv"])?;
    let vocab = TagVocabulary::load(&d.join("vocab.tsv")).unwrap();
    ensure(vocab.len() == 32, || format!("vocabulary has {} tags", vocab.len()))?;
    let truth = held_out_truth(w, &vocab);
    write_jsonl(&d.join("truth.jsonl"), &truth);

    let train = |epochs: &str, out: &str| {
        let args = [
            "train", "--input", "train_features.jsonl", "--labels", "parsed.jsonl", "--vocab", "vocab.tsv",
            "--epochs", epochs, "--seed", "0", "--output", out,
        ];
        let o = tagmine(d, &args);
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned()).map(|_| o)
    };
    let trained = train("20", "model.tsv")?;
    train("20", "model_again.tsv")?;
    train("0", "untrained.tsv")?;
    ensure(fs::read(d.join("model.tsv")).unwrap() == fs::read(d.join("model_again.tsv")).unwrap(), || {
        "models differ across identical runs".into()
    })?;

    let losses: Vec<f64> = String::from_utf8_lossy(&trained.stderr)
        .lines()
        .filter_map(|l| l.split_once("loss ").map(|(_, v)| v.parse().unwrap()))
        .collect();
    ensure(losses.len() == 20, || format!("{} epoch losses logged", losses.len()))?;
    for win in losses.windows(5) {
        ensure(win[4] <= win[0], || format!("loss rose across a 5-epoch window: {win:?}"))?;
    }

    let eval = |model: &str| -> Result<f64, String> {
        ok(d, &["predict", "--input", "test_features.jsonl", "--model", model, "--vocab", "vocab.tsv", "--output", "p.jsonl"])?;
        let report = ok(d, &["eval", "tagging", "--input", "p.jsonl", "--labels", "truth.jsonl", "--vocab", "vocab.tsv"])?;
        Ok(map_of(&report))
    };
    let map = eval("model.tsv")?;
    let untrained = eval("untrained.tsv")?;
    let n = truth.len() as f64;
    let chance = (0..vocab.len())
        .map(|c| truth.iter().filter(|t| t.tags.iter().any(|id| id.index() == c)).count() as f64 / n)
        .sum::<f64>()
        / vocab.len() as f64;
    ensure(map >= 0.95, || format!("held-out mAP {map:.4} < 0.95"))?;
    ensure((untrained - chance).abs() <= 0.1, || {
        format!("untrained mAP {untrained:.4} is not near chance {chance:.4}")
    })?;
    Ok(format!(
        "held-out mAP {map:.4}; untrained {untrained:.4} vs chance {chance:.4}; final loss {:.4}",
        losses[19]
    ))
}

fn ac5(w: &TagWorld) -> Check {
    let d = &w.dir;
    ok(d, &["predict", "--input", "test_features.jsonl", "--model", "model.tsv", "--output", "p.jsonl"])?;
    let curve = ok(
        d,
        &["eval", "sweep", "--input", "p.jsonl", "--labels", "truth.jsonl", "--vocab", "vocab.tsv", "--sweep", "0.1:0.9:0.1"],
    )?;
    let rows: Vec<Vec<f64>> = curve
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(|x| x.parse().unwrap()).collect())
        .collect();
    ensure(rows.len() == 9, || format!("{} sweep points", rows.len()))?;
    for p in rows.windows(2) {
        ensure(p[1][2] <= p[0][2], || format!("recall rose from {} to {} at {}", p[0][2], p[1][2], p[1][0]))?;
    }
    let (lo, hi) = (&rows[0], &rows[8]);
    ensure(hi[4] < lo[4], || format!("{} tags at 0.9 vs {} at 0.1", hi[4], lo[4]))?;
    Ok(format!(
        "recall {:.4} -> {:.4}, precision {:.4} -> {:.4}, tags {} -> {}",
        lo[2], hi[2], lo[1], hi[1], lo[4], hi[4]
    ))
}

fn ac6(_: &Path) -> Check {
    let trials = 100;
    let mut wins = 0;
    let (mut base_sum, mut tag_sum) = (0.0, 0.0);
    for seed in 0..trials {
        let g = synth::gallery(1000, 100, 32, 16, 0.3, seed);
        let r1 = |alpha: f64| {
            let (ranked, relevant): (Vec<Vec<String>>, Vec<Vec<String>>) = g
                .queries
                .iter()
                .map(|(e, tags, k)| {
                    let q = Query {
                        embedding: e.clone(),
                        tags: tags.clone(),
                    };
                    let top = rerank(&q, &g.items, alpha, 1).unwrap();
                    (top.items.into_iter().map(|r| r.id).collect(), vec![g.items[*k].id.clone()])
                })
                .unzip();
            recall_at_k(&ranked, &relevant, 1).unwrap()
        };
        let (base, tagged) = (r1(1.0), r1(0.8));
        base_sum += base;
        tag_sum += tagged;
        wins += (tagged >= base) as usize;
    }
    let frac = wins as f64 / trials as f64;
    ensure(frac >= 0.95, || format!("alpha 0.8 matched the baseline in only {wins}/{trials} trials"))?;
    Ok(format!(
        "{wins}/{trials} trials; mean R@1 {:.3} (alpha 1) vs {:.3} (alpha 0.8)",
        base_sum / trials as f64,
        tag_sum / trials as f64
    ))
}

fn ac7(dir: &Path) -> Check {
    write_jsonl(&dir.join("big.jsonl"), synth::captions(50_000, 7).iter().map(|c| &c.record));
    let mut outputs = Vec::new();
    for n in [1usize, 2, 8] {
        let mut args = vec!["vocab".to_string(), "build".into()];
        for i in 0..n {
            let part = format!("big_{i}of{n}.jsonl");
            ok(dir, &["parse", "--input", "big.jsonl", "--shard", &format!("{i}/{n}"), "--output", &part])?;
            args.extend(["--input".into(), part]);
        }
        let out = format!("vocab_{n}.tsv");
        args.extend(["--output".into(), out.clone()]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(dir, &argv)?;
        outputs.push(fs::read(dir.join(out)).unwrap());
    }
    ensure(outputs.iter().all(|o| o == &outputs[0]), || "vocabulary files differ across shard counts".into())?;
    Ok(format!("1, 2 and 8 shards give identical {}-byte vocabularies", outputs[0].len()))
}

/// Optional: needs the published tag list and a category list, given as
/// `TAGMINE_TAG_LIST` and `TAGMINE_CATEGORY_LIST`, with the expected count in
/// `TAGMINE_EXPECTED_OVERLAP` (73 for COCO).
fn ac8(dir: &Path) -> Option<Check> {
    let tags = std::env::var("TAGMINE_TAG_LIST").ok()?;
    let cats = std::env::var("TAGMINE_CATEGORY_LIST").ok()?;
    let expected: usize = std::env::var("TAGMINE_EXPECTED_OVERLAP").ok()?.parse().ok()?;
    Some((|| {
        let names = fs::read_to_string(&tags).map_err(|e| e.to_string())?;
        let rows = names
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::json!({"image_id": "list", "entities": [l]}));
        write_jsonl(&dir.join("taglist.jsonl"), rows);
        ok(dir, &["vocab", "build", "--input", "taglist.jsonl", "--top-k", "100000", "--output", "published.tsv"])?;
        let out = ok(dir, &["vocab", "overlap", "--vocab", "published.tsv", "--input", &cats])?;
        let got: usize = out.lines().next().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
        ensure(got == expected, || format!("overlap {got}, expected {expected}"))?;
        Ok(format!("overlap {got}"))
    })())
}

fn report(id: &str, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let took = start.elapsed();
    let result = match (result, limit) {
        (Ok(_), Some(l)) if took > l => Err(format!("took {:.1}s, limit {}s", took.as_secs_f64(), l.as_secs())),
        (r, _) => r,
    };
    let passed = result.is_ok();
    let (tag, detail) = match result {
        Ok(d) => ("PASS", d),
        Err(e) => ("FAIL", e),
    };
    println!("[{tag}] {id} {name} ({:.2}s): {detail}", took.as_secs_f64());
    passed
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path();
    let secs = |s| Some(Duration::from_secs(s));
    let mut all = true;

    all &= report("AC1", "worked example parse", secs(1), || ac1(dir));
    all &= report("AC2", "gradient suite", secs(30), || ac2(dir));
    all &= report("AC3", "mAP oracle equivalence", secs(30), || ac3(dir));
    let world = build_world(dir);
    all &= report("AC4", "parsed-tag supervision", secs(60), || ac4(&world));
    all &= report("AC5", "threshold controllability", None, || ac5(&world));
    all &= report("AC6", "tag-guided retrieval", secs(60), || ac6(dir));
    all &= report("AC7", "shard determinism", secs(60), || ac7(dir));
    match ac8(dir) {
        Some(check) => all &= report("AC8", "published overlap fixture", None, || check),
        None => println!(
            "[SKIP] AC8 published overlap fixture: set TAGMINE_TAG_LIST, TAGMINE_CATEGORY_LIST and \
             TAGMINE_EXPECTED_OVERLAP to run it; full-scale benchmark numbers are out of reach by design"
        ),
    }

    if !all {
        std::process::exit(1);
    }
}
