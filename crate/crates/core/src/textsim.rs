//! Text similarity: TF-IDF cosine between reviewer profiles and
//! submissions, the similarity transform used by the objective, and
//! add-one smoothed unigram language models for KL divergence.
//!
//! Tokens are lowercased runs of alphanumeric characters of length at least
//! two, without stemming. Term frequency is the raw count and
//! `idf(t) = ln(N / df(t))`, with `N` counting every reviewer profile (both
//! pools) and every submission.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use log::warn;
use thiserror::Error;

use crate::model::{ConferenceInstance, SimilarityMatrix, COI};

/// Value of the transform at similarity 1.
pub const F_AT_ONE: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum TextSimError {
    #[error("similarity {0} outside [0,1]")]
    Domain(f64),
    #[error("term `{0}` has zero probability in the reference model")]
    ZeroProbability(String),
    #[error("language models do not share a vocabulary")]
    VocabularyMismatch,
    #[error("csv: {0}")]
    Csv(String),
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

/// Sparse TF-IDF vectors over a pooled corpus.
#[derive(Debug, Clone)]
pub struct TfIdfModel {
    pub vocabulary: HashMap<String, u32>,
    pub idf: Vec<f64>,
    pub doc_vectors: Vec<Vec<(u32, f64)>>,
}

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let mut vocabulary: HashMap<String, u32> = HashMap::new();
        let mut df: Vec<u32> = Vec::new();
        let mut counts: Vec<BTreeMap<u32, u32>> = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
            for tok in tokenize(doc.as_ref()) {
                let next = vocabulary.len() as u32;
                let id = *vocabulary.entry(tok).or_insert(next);
                if id as usize == df.len() {
                    df.push(0);
                }
                *tf.entry(id).or_insert(0) += 1;
            }
            for &t in tf.keys() {
                df[t as usize] += 1;
            }
            counts.push(tf);
        }
        let n = docs.len() as f64;
        let idf: Vec<f64> = df.iter().map(|&d| (n / f64::from(d)).ln()).collect();
        let doc_vectors = counts
            .into_iter()
            .map(|tf| {
                tf.into_iter()
                    .map(|(t, c)| (t, f64::from(c) * idf[t as usize]))
                    .filter(|(_, w)| *w > 0.0)
                    .collect()
            })
            .collect();
        TfIdfModel {
            vocabulary,
            idf,
            doc_vectors,
        }
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        cosine(&self.doc_vectors[a], &self.doc_vectors[b])
    }
}

fn norm(v: &[(u32, f64)]) -> f64 {
    v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
}

/// Cosine of two sparse vectors sorted by term id; 0 if either is zero.
pub fn cosine(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let (mut i, mut k, mut dot) = (0, 0, 0.0);
    while i < a.len() && k < b.len() {
        match a[i].0.cmp(&b[k].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => k += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[k].1;
                i += 1;
                k += 1;
            }
        }
    }
    let c = dot / (na * nb);
    if c > 1.0 - 1e-12 {
        1.0
    } else {
        c.max(0.0)
    }
}

/// TF-IDF cosine similarities for the committee and the candidate pool.
///
/// COI sentinels already present in the instance matrices are kept, and
/// author-based conflicts are applied on top.
pub fn build_similarity(instance: &ConferenceInstance) -> (SimilarityMatrix, SimilarityMatrix) {
    let m = instance.submissions.len();
    let mut docs: Vec<&str> = Vec::with_capacity(instance.pc.len() + instance.erc.len() + m);
    docs.extend(instance.pc.iter().map(|r| r.profile_text.as_str()));
    docs.extend(instance.erc.iter().map(|r| r.profile_text.as_str()));
    docs.extend(instance.submissions.iter().map(|s| s.text.as_str()));
    let model = TfIdfModel::fit(&docs);
    let offset = instance.pc.len() + instance.erc.len();

    let build = |reviewers: &[crate::model::Reviewer], base: usize, prev: &SimilarityMatrix| {
        let mut sim = SimilarityMatrix::zeros(reviewers.len(), m);
        let keep = prev.rows() == reviewers.len() && prev.cols() == m;
        for (i, r) in reviewers.iter().enumerate() {
            if model.doc_vectors[base + i].is_empty() {
                warn!("profile of reviewer `{}` has no informative terms", r.id);
            }
            for j in 0..m {
                let v = if keep && prev.is_coi(i, j) {
                    COI
                } else {
                    model.cosine(base + i, offset + j)
                };
                sim.set(i, j, v);
            }
        }
        sim
    };
    let mut pc = build(&instance.pc, 0, &instance.sim_pc);
    let mut erc = build(&instance.erc, instance.pc.len(), &instance.sim_erc);
    for (j, s) in instance.submissions.iter().enumerate() {
        for (i, r) in instance.pc.iter().enumerate() {
            if s.author_ids.contains(&r.id) {
                pc.set(i, j, COI);
            }
        }
        for (i, r) in instance.erc.iter().enumerate() {
            if s.author_ids.contains(&r.id) {
                erc.set(i, j, COI);
            }
        }
    }
    (pc, erc)
}

/// Marks `S_ij = -1` wherever reviewer `i` authored submission `j`.
pub fn apply_author_coi(instance: &mut ConferenceInstance) {
    for j in 0..instance.submissions.len() {
        for i in 0..instance.pc.len() {
            if instance.submissions[j]
                .author_ids
                .contains(&instance.pc[i].id)
            {
                instance.sim_pc.set(i, j, COI);
            }
        }
        for i in 0..instance.erc.len() {
            if instance.submissions[j]
                .author_ids
                .contains(&instance.erc[i].id)
            {
                instance.sim_erc.set(i, j, COI);
            }
        }
    }
}

/// `f(s) = 1/(1-s)` for `s < 1` and `1e6` at `s = 1`.
pub fn transform_f(s: f64) -> Result<f64, TextSimError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(TextSimError::Domain(s));
    }
    Ok(if s < 1.0 { 1.0 / (1.0 - s) } else { F_AT_ONE })
}

/// Raw term counts of one text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermCounts {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TermCounts {
    pub fn from_text(text: &str) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for t in tokenize(text) {
            *counts.entry(t).or_insert(0) += 1;
            total += 1;
        }
        TermCounts { counts, total }
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Smoothed unigram distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramLm {
    distribution: BTreeMap<String, f64>,
}

impl UnigramLm {
    /// Builds a model from explicit probabilities; they are renormalised.
    pub fn from_probabilities(probs: impl IntoIterator<Item = (String, f64)>) -> Self {
        let distribution: BTreeMap<String, f64> = probs.into_iter().collect();
        let z: f64 = distribution.values().sum();
        UnigramLm {
            distribution: distribution.into_iter().map(|(k, v)| (k, v / z)).collect(),
        }
    }

    /// Add-one smoothing of both count vectors over their union vocabulary.
    pub fn smoothed_pair(a: &TermCounts, b: &TermCounts) -> (UnigramLm, UnigramLm) {
        let vocab: std::collections::BTreeSet<&String> =
            a.counts.keys().chain(b.counts.keys()).collect();
        let v = vocab.len() as f64;
        let smooth = |c: &TermCounts| {
            let denom = c.total as f64 + v;
            UnigramLm {
                distribution: vocab
                    .iter()
                    .map(|&t| {
                        let n = c.counts.get(t).copied().unwrap_or(0) as f64;
                        (t.clone(), (n + 1.0) / denom)
                    })
                    .collect(),
            }
        };
        (smooth(a), smooth(b))
    }

    pub fn probability(&self, term: &str) -> f64 {
        self.distribution.get(term).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.distribution.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distribution.is_empty()
    }
}

/// Directed KL divergence `KL(p || q)` in nats.
pub fn kl_divergence(p: &UnigramLm, q: &UnigramLm) -> Result<f64, TextSimError> {
    if p.distribution.len() != q.distribution.len() {
        return Err(TextSimError::VocabularyMismatch);
    }
    let mut kl = 0.0;
    for ((tp, &pp), (tq, &qq)) in p.distribution.iter().zip(&q.distribution) {
        if tp != tq {
            return Err(TextSimError::VocabularyMismatch);
        }
        if qq <= 0.0 {
            return Err(TextSimError::ZeroProbability(tq.clone()));
        }
        if pp > 0.0 {
            kl += pp * (pp / qq).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// `(KL(a||b) + KL(b||a)) / 2` on the add-one smoothed pair.
pub fn symmetric_kl(a: &TermCounts, b: &TermCounts) -> f64 {
    let (p, q) = UnigramLm::smoothed_pair(a, b);
    let forward = kl_divergence(&p, &q).expect("smoothed models share a vocabulary");
    let backward = kl_divergence(&q, &p).expect("smoothed models share a vocabulary");
    0.5 * (forward + backward)
}

/// Reads a precomputed similarity matrix: the header row holds a label cell
/// followed by submission ids, every other row a reviewer id followed by
/// its similarities. Rows and columns are reordered to match the given ids.
pub fn similarity_from_csv<R: Read>(
    reader: R,
    reviewer_ids: &[String],
    submission_ids: &[String],
) -> Result<SimilarityMatrix, TextSimError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| TextSimError::Csv(e.to_string()))?
        .clone();
    let col_of: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, id)| (id, c))
        .collect();
    let cols: Vec<usize> = submission_ids
        .iter()
        .map(|id| {
            col_of
                .get(id.as_str())
                .copied()
                .ok_or_else(|| TextSimError::Csv(format!("missing submission column `{id}`")))
        })
        .collect::<Result<_, _>>()?;
    let mut rows: HashMap<String, Vec<f64>> = HashMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| TextSimError::Csv(e.to_string()))?;
        let id = rec.get(0).unwrap_or_default().to_owned();
        let mut row = Vec::with_capacity(cols.len());
        for &c in &cols {
            let cell = rec.get(c).unwrap_or_default().trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| TextSimError::Csv(format!("row {}: bad value `{cell}`", line + 2)))?;
            if !crate::model::valid_similarity(v) {
                return Err(TextSimError::Csv(format!(
                    "row {}: similarity {v} outside [0,1] and not -1",
                    line + 2
                )));
            }
            row.push(v);
        }
        rows.insert(id, row);
    }
    let ordered: Vec<Vec<f64>> = reviewer_ids
        .iter()
        .map(|id| {
            rows.remove(id)
                .ok_or_else(|| TextSimError::Csv(format!("missing reviewer row `{id}`")))
        })
        .collect::<Result<_, _>>()?;
    SimilarityMatrix::from_rows(ordered, submission_ids.len())
        .map_err(|e| TextSimError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn tokenizer_rules() {
        assert_eq!(
            tokenize("Flow-Networks, a b2 IR! x"),
            vec!["flow", "networks", "b2", "ir"]
        );
    }

    #[test]
    fn identical_texts_have_similarity_one() {
        let m = TfIdfModel::fit(&[
            "reviewer assignment flows",
            "reviewer assignment flows",
            "other words",
        ]);
        assert_abs_diff_eq!(m.cosine(0, 1), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn disjoint_vocabularies_are_orthogonal() {
        let m = TfIdfModel::fit(&["alpha beta", "gamma delta", "epsilon"]);
        assert_eq!(m.cosine(0, 1), 0.0);
    }

    #[test]
    fn three_doc_toy_corpus_matches_hand_computation() {
        // d0 = "apple banana", d1 = "apple cherry cherry", d2 = "date"
        // idf(apple) = ln(3/2), idf(banana) = idf(cherry) = idf(date) = ln 3
        // d0 = (a, b), d1 = (a, 2c) with a = ln 1.5, b = c = ln 3
        // cos = a^2 / (sqrt(a^2 + b^2) * sqrt(a^2 + 4 b^2))
        let m = TfIdfModel::fit(&["apple banana", "apple cherry cherry", "date"]);
        let a = 1.5f64.ln();
        let b = 3f64.ln();
        let expected = a * a / ((a * a + b * b).sqrt() * (a * a + 4.0 * b * b).sqrt());
        assert_abs_diff_eq!(m.cosine(0, 1), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.06283, epsilon = 1e-4);
    }

    #[test]
    fn transform_values() {
        assert_eq!(transform_f(0.5).unwrap(), 2.0);
        assert_eq!(transform_f(0.0).unwrap(), 1.0);
        assert_eq!(transform_f(1.0).unwrap(), 1e6);
        assert_eq!(transform_f(-1.0), Err(TextSimError::Domain(-1.0)));
        assert!(transform_f(1.2).is_err());
    }

    #[test]
    fn kl_of_identical_models_is_zero() {
        let p = UnigramLm::from_probabilities([("a".to_string(), 0.3), ("b".to_string(), 0.7)]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn two_term_closed_form() {
        let p = UnigramLm::from_probabilities([("a".to_string(), 0.9), ("b".to_string(), 0.1)]);
        let q = UnigramLm::from_probabilities([("a".to_string(), 0.5), ("b".to_string(), 0.5)]);
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.3681, epsilon = 1e-4);
    }

    #[test]
    fn zero_reference_probability_is_an_error() {
        let p = UnigramLm::from_probabilities([("a".to_string(), 0.5), ("b".to_string(), 0.5)]);
        let q = UnigramLm::from_probabilities([("a".to_string(), 1.0), ("b".to_string(), 0.0)]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(TextSimError::ZeroProbability(_))
        ));
        let r = UnigramLm::from_probabilities([("a".to_string(), 1.0)]);
        assert_eq!(kl_divergence(&p, &r), Err(TextSimError::VocabularyMismatch));
    }

    #[test]
    fn smoothing_sums_to_one() {
        let a = TermCounts::from_text("ab ab cd");
        let b = TermCounts::from_text("ef");
        let (p, q) = UnigramLm::smoothed_pair(&a, &b);
        for lm in [&p, &q] {
            let s: f64 = lm.distribution.values().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-9);
            assert!(lm.distribution.values().all(|&v| v > 0.0));
        }
        assert_abs_diff_eq!(p.probability("ab"), 3.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn csv_ingestion_reorders() {
        let data = "reviewer,p2,p1\nr1,0.5,0.25\nr0,-1,1\n";
        let m = similarity_from_csv(
            data.as_bytes(),
            &["r0".into(), "r1".into()],
            &["p1".into(), "p2".into()],
        )
        .unwrap();
        assert_eq!(m.row(0), &[1.0, -1.0]);
        assert_eq!(m.row(1), &[0.25, 0.5]);
        assert!(
            similarity_from_csv("r,p1\nr0,1.5\n".as_bytes(), &["r0".into()], &["p1".into()])
                .is_err()
        );
    }

    fn arb_lm(n: usize) -> impl Strategy<Value = UnigramLm> {
        prop::collection::vec(1e-6f64..1.0, n).prop_map(|w| {
            UnigramLm::from_probabilities(
                w.into_iter().enumerate().map(|(i, v)| (format!("t{i}"), v)),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn gibbs_inequality((p, q) in (2usize..8).prop_flat_map(|n| (arb_lm(n), arb_lm(n)))) {
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        }
    }

    proptest! {
        #[test]
        fn transform_strictly_increasing(a in 0.0f64..0.999, b in 0.0f64..0.999) {
            prop_assume!(a < b);
            prop_assert!(transform_f(a).unwrap() < transform_f(b).unwrap());
        }

        #[test]
        fn cosine_symmetric_and_bounded(
            x in prop::collection::vec("[a-e]{2}", 1..10),
            y in prop::collection::vec("[a-e]{2}", 1..10),
        ) {
            let m = TfIdfModel::fit(&[x.join(" "), y.join(" "), "zz qq".to_string()]);
            let (ab, ba) = (m.cosine(0, 1), m.cosine(1, 0));
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            if !m.doc_vectors[0].is_empty() {
                prop_assert!((m.cosine(0, 0) - 1.0).abs() < 1e-9);
            }
        }
    }
}
