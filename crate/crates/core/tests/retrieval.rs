use pgxrag_core::embed::{Embedder, EmbeddingVector, HashedBagOfWords};
use pgxrag_core::index::{cosine_similarity, IndexEntry, ScoredHit, VectorIndex};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Independent embedding oracle: FNV-1a written out byte by byte, counts,
// then division by the Euclidean norm.
fn oracle_embed(text: &str, dim: usize) -> Vec<f64> {
    let mut counts = vec![0f64; dim];
    let lower = text.to_lowercase();
    for tok in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let mut h: u64 = 14695981039346656037;
        for b in tok.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(1099511628211);
        }
        counts[(h % dim as u64) as usize] += 1.0;
    }
    let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
    counts.iter().map(|c| c / norm).collect()
}

fn brute_force(entries: &[IndexEntry], q: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = entries
        .iter()
        .map(|e| {
            let mut s = 0.0;
            for i in 0..q.len() {
                s += e.vector[i] as f64 * q[i];
            }
            (e.chunk_id.clone(), s.clamp(-1.0, 1.0))
        })
        .collect();
    // full stable sort: ids first, then stable by descending score
    all.sort_by(|a, b| a.0.cmp(&b.0));
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    all.truncate(k);
    all
}

fn unit_f32(v: &[f64]) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / n) as f32).collect()
}

// Vectors drawn from a small palette of directions so equal scores are common.
fn random_index(rng: &mut ChaCha8Rng, dim: usize) -> (VectorIndex, Vec<IndexEntry>) {
    let palette: Vec<Vec<f32>> = (0..4)
        .map(|_| {
            let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-3i32..=3) as f64 + 0.5).collect();
            unit_f32(&raw)
        })
        .collect();
    let n = rng.random_range(1..40);
    let mut entries: Vec<IndexEntry> = (0..n)
        .map(|i| IndexEntry {
            chunk_id: format!("doc{:02}#{}", rng.random_range(0..50), i),
            vector: palette[rng.random_range(0..palette.len())].clone(),
        })
        .collect();
    entries.shuffle(rng);
    let idx = VectorIndex::from_entries(dim, "test".into(), entries.clone()).unwrap();
    (idx, entries)
}

#[test]
fn top_k_matches_brute_force_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let dim = rng.random_range(2..8);
        let (idx, entries) = random_index(&mut rng, dim);
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let Ok(q) = EmbeddingVector::normalize(raw) else { continue };
        let k = rng.random_range(1..50);
        let got: Vec<(String, f64)> = idx
            .search_top_k(&q, k)
            .unwrap()
            .into_iter()
            .map(|h| (h.chunk_id, h.score))
            .collect();
        assert_eq!(got, brute_force(&entries, q.values(), k));
    }
}

#[test]
fn results_monotone_in_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let dim = rng.random_range(2..6);
        let (idx, _) = random_index(&mut rng, dim);
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let Ok(q) = EmbeddingVector::normalize(raw) else { continue };
        let mut prev: Vec<ScoredHit> = Vec::new();
        for k in 1..=idx.len() + 2 {
            let hits = idx.search_top_k(&q, k).unwrap();
            assert_eq!(hits.len(), k.min(idx.len()));
            assert_eq!(&hits[..prev.len()], &prev[..]);
            prev = hits;
        }
    }
}

fn token_list() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-zA-Z0-9]{1,6}", 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn bag_of_words_ignores_order(tokens in token_list(), seed in any::<u64>()) {
        let e = HashedBagOfWords::new(64);
        let mut shuffled = tokens.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(e.embed(&tokens.join(" ")).unwrap(), e.embed(&shuffled.join("  ")).unwrap());
    }

    #[test]
    fn embedding_matches_oracle(tokens in token_list(), dim in 1usize..200) {
        let text = tokens.join(" ");
        let got = HashedBagOfWords::new(dim).embed(&text).unwrap();
        let want = oracle_embed(&text, dim);
        prop_assert_eq!(got.dim(), dim);
        prop_assert!((got.norm() - 1.0).abs() < 1e-12);
        for (g, w) in got.values().iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_equals_explicit_sum(a in prop::collection::vec(-10.0f64..10.0, 16), b in prop::collection::vec(-10.0f64..10.0, 16)) {
        let (Ok(va), Ok(vb)) = (EmbeddingVector::normalize(a), EmbeddingVector::normalize(b)) else {
            return Ok(());
        };
        let mut sum = 0.0;
        for i in 0..16 {
            sum += va.values()[i] * vb.values()[i];
        }
        prop_assert!((cosine_similarity(&va, &vb).unwrap() - sum).abs() < 1e-12);
    }
}
