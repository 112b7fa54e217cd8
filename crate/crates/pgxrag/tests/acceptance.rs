//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without a test harness so the lines print in order.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pgxrag::files;
use pgxrag_core::eval::metrics::f1_from_counts;
use pgxrag_core::eval::wilcoxon::Method;
use pgxrag_core::eval::{
    aggregate_group, compute_f1, compute_precision, compute_recall, score_quiz, validate_dataset, wilcoxon_signed_rank,
    Alternative, AnnotationRecord, GroupAggregate, QueryRecord,
};
use pgxrag_core::index::IndexEntry;
use pgxrag_core::{EmbeddingVector, GuidelineLexicon, PromptSet, TemplateId, VectorIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn asset(rel: &str) -> PathBuf {
    root().join(rel)
}

// 1 -------------------------------------------------------------------------

/// Counts outcomes item by item: every true positive is both relevant and
/// returned, every false negative relevant only, every false positive
/// returned only.
fn counting_oracle(tp: u64, fp: u64, fn_: u64) -> (Option<f64>, Option<f64>, Option<f64>) {
    let mut items: Vec<(bool, bool)> = Vec::new();
    items.extend((0..tp).map(|_| (true, true)));
    items.extend((0..fn_).map(|_| (true, false)));
    items.extend((0..fp).map(|_| (false, true)));
    let hits = items.iter().filter(|(rel, ret)| *rel && *ret).count() as u64;
    let relevant = items.iter().filter(|(rel, _)| *rel).count() as u64;
    let returned = items.iter().filter(|(_, ret)| *ret).count() as u64;
    let frac = |n: u64, d: u64| (d > 0).then(|| n as f64 / d as f64);
    let f1 = (relevant > 0 && returned > 0 && hits > 0).then(|| (2 * hits) as f64 / (relevant + returned) as f64);
    (frac(hits, relevant), frac(hits, returned), f1)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut f1_checked = 0;
    for _ in 0..10_000 {
        let max = if rng.random_bool(0.2) { 4 } else { 500 };
        let (tp, fp, fn_) = (rng.random_range(0..max), rng.random_range(0..max), rng.random_range(0..max));
        let (r, p, f) = counting_oracle(tp, fp, fn_);
        ensure!(compute_recall(tp, fn_).ok() == r, "recall({tp}, {fn_})");
        ensure!(compute_precision(tp, fp).ok() == p, "precision({tp}, {fp})");
        ensure!(f1_from_counts(tp, fp, fn_).ok() == f, "f1 counts ({tp}, {fp}, {fn_})");
        if let (Some(p), Some(r)) = (p, r) {
            match compute_f1(p, r) {
                Ok(f1) => {
                    ensure!(p.min(r) <= f1 && f1 <= p.max(r), "bound fails for p={p} r={r}: {f1}");
                    let oracle = f.expect("defined when tp > 0");
                    ensure!((f1 - oracle).abs() <= 4.0 * f64::EPSILON * oracle, "f1({p}, {r}) = {f1}, oracle {oracle}");
                    f1_checked += 1;
                }
                Err(_) => ensure!(tp == 0 && f.is_none(), "f1 undefined for ({tp}, {fp}, {fn_})"),
            }
        }
    }
    Ok(format!("10000 triples, {f1_checked} with defined F1"))
}

// 2 -------------------------------------------------------------------------

fn group(file: &str, name: &str) -> Result<GroupAggregate, String> {
    let records: Vec<AnnotationRecord> = files::load_annotations(&asset(file)).map_err(|e| e.to_string())?;
    aggregate_group(&records, name).map_err(|e| e.to_string())
}

fn two_dp(x: f64) -> String {
    format!("{x:.2}")
}

fn criterion_2() -> Outcome {
    let p1 = group("fixtures/phase1_260.jsonl", "phase1")?;
    let recall = |g: &GroupAggregate| g.recall.mean.map_or("n/a".into(), two_dp);
    let got = [
        p1.n.to_string(),
        two_dp(p1.accuracy),
        two_dp(p1.relevance),
        two_dp(p1.clarity),
        two_dp(p1.completeness),
        recall(&p1),
    ];
    // accuracy, relevance, clarity, completeness, recall for N=260
    let want = ["260", "4.90", "5.00", "5.00", "4.80", "0.99"];
    ensure!(got == want, "phase1 N=260: got {got:?}, want {want:?}");

    let subset = [
        group("fixtures/subset20_phase1.jsonl", "phase1")?,
        group("fixtures/subset20_phase2.jsonl", "phase2")?,
        group("fixtures/subset20_gpt4omini.jsonl", "gpt4omini")?,
    ];
    let acc: Vec<String> = subset.iter().map(|g| two_dp(g.accuracy)).collect();
    let comp: Vec<String> = subset.iter().map(|g| two_dp(g.completeness)).collect();
    let rec: Vec<String> = subset.iter().map(recall).collect();
    ensure!(subset.iter().all(|g| g.n == 20), "subset groups must hold 20 records");
    ensure!(acc == ["4.40", "4.60", "3.90"], "subset accuracy {acc:?}");
    ensure!(comp == ["4.80", "5.00", "4.20"], "subset completeness {comp:?}");
    ensure!(rec == ["0.97", "0.99", "0.85"], "subset recall {rec:?}");
    Ok("N=260 4.90/5.00/5.00/4.80/0.99; accuracy 4.40/4.60/3.90; completeness 4.80/5.00/4.20; recall 0.97/0.99/0.85".into())
}

// 3 -------------------------------------------------------------------------

/// Enumerates all 2^n sign assignments over average ranks computed by
/// counting smaller and equal magnitudes.
fn brute_force_p(diffs: &[f64], alt: Alternative) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    let ranks: Vec<f64> = nz
        .iter()
        .map(|d| {
            let less = nz.iter().filter(|x| x.abs() < d.abs()).count() as f64;
            let eq = nz.iter().filter(|x| x.abs() == d.abs()).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect();
    // the statistic whose small values favour the alternative
    let stat = |positive: &dyn Fn(usize) -> bool| -> f64 {
        (0..n)
            .filter(|&i| match alt {
                Alternative::Greater => !positive(i),
                Alternative::Less => positive(i),
            })
            .map(|i| ranks[i])
            .sum()
    };
    let observed = stat(&|i| nz[i] > 0.0);
    let hits = (0u32..1 << n).filter(|m| stat(&|i| m & (1 << i) != 0) <= observed).count();
    hits as f64 / (1u64 << n) as f64
}

#[derive(Deserialize)]
struct PairsFile {
    a: String,
    b: String,
    alternative: String,
    pairs: Vec<PairRow>,
}

#[derive(Deserialize)]
struct PairRow {
    a: f64,
    b: f64,
}

/// Runs the test a fixture declares: baseline `a`, comparison `b`, alternative.
fn fixture_test(file: &str, a: &str, b: &str) -> Result<pgxrag_core::eval::WilcoxonResult, String> {
    let f: PairsFile = files::read_json(&asset(file)).map_err(|e| e.to_string())?;
    ensure!(f.a == a && f.b == b, "{file} compares {} with {}", f.a, f.b);
    let alt = Alternative::parse(&f.alternative).ok_or_else(|| format!("alternative {:?}", f.alternative))?;
    let pairs: Vec<(f64, f64)> = f.pairs.iter().map(|p| (p.a, p.b)).collect();
    wilcoxon_signed_rank(&pairs, alt).map_err(|e| e.to_string())
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.random_range(1..=12);
        let pairs: Vec<(f64, f64)> =
            (0..n).map(|_| (rng.random_range(1..=5) as f64, rng.random_range(1..=5) as f64)).collect();
        let diffs: Vec<f64> = pairs.iter().map(|(a, b)| b - a).collect();
        let n_eff = diffs.iter().filter(|d| **d != 0.0).count();
        if n_eff == 0 || n_eff > 10 {
            continue;
        }
        let alt = if rng.random_bool(0.5) { Alternative::Greater } else { Alternative::Less };
        let r = wilcoxon_signed_rank(&pairs, alt).map_err(|e| e.to_string())?;
        ensure!(r.method == Method::ExactEnumeration, "n_eff {n_eff} not exact");
        let want = brute_force_p(&diffs, alt);
        ensure!(r.p_value == want, "{pairs:?} {alt:?}: p {} vs brute force {want}", r.p_value);
        let m = n_eff as f64;
        ensure!(r.w_plus + r.w_minus == m * (m + 1.0) / 2.0, "rank sum identity fails for {pairs:?}");
        checked += 1;
    }

    let r = wilcoxon_signed_rank(&[(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)], Alternative::Greater).map_err(|e| e.to_string())?;
    ensure!(r.p_value == 0.125, "d=[1,2,3] greater gave p={}", r.p_value);

    let p1p2 = fixture_test("fixtures/wilcoxon_p1p2.json", "phase1", "phase2")?;
    ensure!(p1p2.w_statistic == 10.5, "phase1 vs phase2 W = {}", p1p2.w_statistic);
    ensure!(p1p2.p_value > 0.05, "phase1 vs phase2 p = {}", p1p2.p_value);
    let p2gpt = fixture_test("fixtures/wilcoxon_p2gpt.json", "gpt4omini", "phase2")?;
    ensure!(p2gpt.significant(0.05), "phase2 vs gpt4omini p = {}", p2gpt.p_value);
    Ok(format!(
        "200 exact p-values; p=0.125; phase1 vs phase2 W=10.5 p={:.4}; phase2 vs gpt4omini p={:.4}",
        p1p2.p_value, p2gpt.p_value
    ))
}

// 4 -------------------------------------------------------------------------

fn criterion_4() -> Outcome {
    const N: usize = 200;
    const DIM: usize = 64;
    const K: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tie_instances = 0;
    for round in 0..1000 {
        let mut vectors: Vec<Vec<f32>> = Vec::with_capacity(N);
        while vectors.len() < N {
            if !vectors.is_empty() && rng.random_bool(0.3) {
                let dup = vectors[rng.random_range(0..vectors.len())].clone();
                vectors.push(dup);
            } else {
                let raw: Vec<f64> = (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
                let v = EmbeddingVector::normalize(raw).map_err(|e| e.to_string())?;
                vectors.push(v.values().iter().map(|x| *x as f32).collect());
            }
        }
        let mut entries: Vec<IndexEntry> = vectors
            .into_iter()
            .enumerate()
            .map(|(i, vector)| IndexEntry {
                chunk_id: format!("doc{:03}#{}", rng.random_range(0..N), i),
                vector,
            })
            .collect();
        entries.shuffle(&mut rng);
        let query = if round % 4 == 0 {
            // query equal to a stored vector: its duplicates tie at the top
            let v = &entries[rng.random_range(0..N)].vector;
            EmbeddingVector::normalize(v.iter().map(|x| f64::from(*x)).collect())
        } else {
            EmbeddingVector::normalize((0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect())
        }
        .map_err(|e| e.to_string())?;
        let index = VectorIndex::from_entries(DIM, "acceptance".into(), entries.clone()).map_err(|e| e.to_string())?;
        let got: Vec<(String, f64)> = index
            .search_top_k(&query, K)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|h| (h.chunk_id, h.score))
            .collect();

        // argsort: full score list, ids ascending, then a stable descending sort
        let mut all: Vec<(String, f64)> = entries
            .iter()
            .map(|e| {
                let mut s = 0.0f64;
                for (x, q) in e.vector.iter().zip(query.values()) {
                    s += f64::from(*x) * q;
                }
                (e.chunk_id.clone(), s.clamp(-1.0, 1.0))
            })
            .collect();
        all.sort_by(|a, b| a.0.cmp(&b.0));
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        if all[..=K].windows(2).any(|w| w[0].1 == w[1].1) {
            tie_instances += 1;
        }
        all.truncate(K);
        ensure!(got == all, "instance {round}: {got:?} vs {all:?}");
    }
    Ok(format!("1000 instances (n={N}, dim={DIM}, k={K}), {tie_instances} with tied scores in the top {}", K + 1))
}

// 5 -------------------------------------------------------------------------

fn pgxrag(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pgxrag"))
        .current_dir(root())
        .env_remove("PGXRAG_API_KEY")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim());
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let index = p("phase1.idx");
    pgxrag(&["ingest", "--corpus", "corpus/sample_corpus.jsonl", "--sources", "CPIC", "--out", &index])?;
    let kb = pgxrag::kb::open_knowledge_base(Path::new(&index)).map_err(|e| e.to_string())?;
    ensure!(kb.index().len() >= 4, "index holds only {} chunks", kb.index().len());
    let dataset: Vec<QueryRecord> = files::load_dataset(&asset("data/dataset_260.jsonl")).map_err(|e| e.to_string())?;
    ensure!(validate_dataset(&dataset, &GuidelineLexicon::cpic26()).conformant, "dataset not conformant");

    let mut outputs = Vec::new();
    for run in ["a.jsonl", "b.jsonl"] {
        let out = p(run);
        pgxrag(&[
            "eval", "run", "--dataset", "data/dataset_260.jsonl", "--phase", "1", "--index", &index, "--out", &out,
            "--backend", "offline",
        ])?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let elapsed = start.elapsed();
    ensure!(outputs[0] == outputs[1], "the two runs differ");
    let text = String::from_utf8(outputs.swap_remove(0)).map_err(|e| e.to_string())?;
    let mut n = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let s = v["summaries"].as_array().map_or(0, Vec::len);
        ensure!(s == 4, "{} has {s} summaries", v["query_id"]);
        n += 1;
    }
    ensure!(n == 260, "{n} responses");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("260 responses x 2 runs byte-identical, 4 summaries each, {:.1}s", elapsed.as_secs_f64()))
}

// 6 -------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let bindings: BTreeMap<String, String> =
        files::read_json(&asset("fixtures/golden/bindings.json")).map_err(|e| e.to_string())?;
    let prompts = PromptSet::builtin();
    let mut checked = Vec::new();
    for id in TemplateId::ALL {
        let t = prompts.get(id);
        let b: BTreeMap<&str, &str> = t
            .placeholders()
            .into_iter()
            .map(|p| (p, bindings.get(p).map(String::as_str).unwrap_or_else(|| panic!("no binding for {p}"))))
            .collect();
        let rendered = t.render(&b).map_err(|e| e.to_string())?;
        let golden = std::fs::read(asset(&format!("fixtures/golden/{}", id.file_name()))).map_err(|e| e.to_string())?;
        ensure!(rendered.as_bytes() == golden.as_slice(), "{} differs from its golden file", id.file_name());
        checked.push(id.file_name());
    }
    Ok(format!("{} byte-equal", checked.join(", ")))
}

// 7 -------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let items = files::load_quiz(&asset("data/quiz20.json")).map_err(|e| e.to_string())?;
    let mut ladder = Vec::new();
    for (label, correct, pct) in [
        ("phase3", 18, 90.0),
        ("claude37", 17, 85.0),
        ("gemini20", 16, 80.0),
        ("gpt4omini", 14, 70.0),
    ] {
        let sheet = files::load_answers(&asset(&format!("fixtures/quiz/answers_{label}.json"))).map_err(|e| e.to_string())?;
        let r = score_quiz(&sheet.0, &items).map_err(|e| e.to_string())?;
        ensure!(r.correct == correct && r.total == 20, "{label}: {}/{}", r.correct, r.total);
        ensure!(r.accuracy * 100.0 == pct, "{label}: {}%", r.accuracy * 100.0);
        ladder.push(format!("{}/{}={pct}%", r.correct, r.total));
    }
    let multi: Vec<_> = items.iter().filter(|i| i.correct.len() > 1).collect();
    ensure!(!multi.is_empty(), "no multi-correct item in the quiz key");
    for item in &multi {
        for &choice in &item.correct {
            let r = score_quiz(&[(item.item_id.clone(), choice)], &items).map_err(|e| e.to_string())?;
            ensure!(r.correct == 1, "{} choice {choice} not scored correct", item.item_id);
        }
        let wrong = (0..item.choices.len()).find(|c| !item.correct.contains(c)).unwrap();
        let r = score_quiz(&[(item.item_id.clone(), wrong)], &items).map_err(|e| e.to_string())?;
        ensure!(r.correct == 0, "{} choice {wrong} scored correct", item.item_id);
    }
    Ok(format!("{}; {} multi-correct item(s) accept every keyed choice", ladder.join(" "), multi.len()))
}

// 8 -------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let lexicon = GuidelineLexicon::cpic26();
    let base: Vec<QueryRecord> = files::load_dataset(&asset("data/dataset_260.jsonl")).map_err(|e| e.to_string())?;
    let report = validate_dataset(&base, &lexicon);
    ensure!(report.conformant && report.violations.is_empty(), "shipped dataset rejected: {:?}", report.violations);
    ensure!(report.total == 260 && report.counts.len() == 26, "shape {}x{}", report.counts.len(), report.total);

    let keys: Vec<String> = lexicon.keys().map(str::to_string).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..500 {
        let mut records = base.clone();
        for _ in 0..rng.random_range(1..=3) {
            match rng.random_range(0..4) {
                0 => {
                    records.remove(rng.random_range(0..records.len()));
                }
                1 => {
                    let mut extra = records[rng.random_range(0..records.len())].clone();
                    extra.query_id = format!("extra-{round}-{}", records.len());
                    records.push(extra);
                }
                2 => {
                    let i = rng.random_range(0..records.len());
                    records[i].guideline_key = keys[rng.random_range(0..keys.len())].clone();
                }
                _ => {
                    let i = rng.random_range(0..records.len());
                    records[i].guideline_key = format!("unknown-{}", rng.random_range(0..3));
                }
            }
        }
        // oracle: count per key over the mutated records
        let mut counts: BTreeMap<&str, usize> = keys.iter().map(|k| (k.as_str(), 0)).collect();
        let mut expected: BTreeSet<&str> = BTreeSet::new();
        for r in &records {
            match counts.get_mut(r.guideline_key.as_str()) {
                Some(c) => *c += 1,
                None => {
                    expected.insert(r.guideline_key.as_str());
                }
            }
        }
        expected.extend(counts.iter().filter(|(_, c)| **c != 10).map(|(k, _)| *k));
        let report = validate_dataset(&records, &lexicon);
        let named: BTreeSet<&str> = report.violating_guidelines().into_iter().collect();
        ensure!(named == expected, "round {round}: named {named:?}, expected {expected:?}");
        ensure!(report.conformant == expected.is_empty(), "round {round}: conformant flag");
    }
    Ok("shipped 26x10 dataset accepted; 500 mutated datasets name exactly the violating guidelines".into())
}

fn main() {
    let criteria: [(u8, &str, fn() -> Outcome, Duration); 8] = [
        (1, "metric oracle equivalence", criterion_1, Duration::from_secs(5)),
        (2, "published-aggregate reproduction", criterion_2, Duration::from_secs(1)),
        (3, "wilcoxon correctness", criterion_3, Duration::from_secs(10)),
        (4, "retrieval exactness", criterion_4, Duration::from_secs(10)),
        (5, "end-to-end offline determinism", criterion_5, Duration::from_secs(60)),
        (6, "template fidelity", criterion_6, Duration::from_secs(5)),
        (7, "quiz scoring", criterion_7, Duration::from_secs(5)),
        (8, "dataset conformance", criterion_8, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (n, name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {why} [{elapsed:.2?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
