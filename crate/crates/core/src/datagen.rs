//! Synthetic conferences built from word-bag topics.
//!
//! Every topic owns a block of pseudo-words; all documents also draw from a
//! shared background vocabulary. Papers and reviewers get one or two topics.
//! Planted problem papers use a topic that no committee member holds but
//! some candidates in the extended pool do. Conflicts are expressed through
//! authorship, so the usual author-based conflict rule derives them.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ConferenceInstance, Continent, DependencyMatrix, Origin, ProfBg, Reviewer, Seniority,
    SimilarityMatrix, Submission,
};
use crate::rng::{stream_rng, DATAGEN};
use crate::textsim::build_similarity;

/// Upper limit on distinct topic words.
pub const MAX_TOPIC_WORDS: usize = 1 << 20;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DatagenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("unknown preset {0:?}; available: ictir19-like, ictir20-like, tiny-oracle")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeMarginals {
    /// Weights for industry, academia, both.
    pub prof_bg: [f64; 3],
    /// Weights for senior, advanced, junior.
    pub seniority: [f64; 3],
    /// Weights in continent order (South America first, Europe last).
    pub continents: [f64; 7],
    /// Probability of listing a second continent.
    pub second_location_rate: f64,
}

impl Default for AttributeMarginals {
    fn default() -> Self {
        AttributeMarginals {
            prof_bg: [0.2, 0.65, 0.15],
            seniority: [0.35, 0.35, 0.3],
            continents: [0.04, 0.03, 0.01, 0.15, 0.07, 0.25, 0.45],
            second_location_rate: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_papers: usize,
    pub n_pc: usize,
    pub n_erc: usize,
    pub n_topics: usize,
    pub topic_vocab_size: usize,
    pub background_vocab_size: usize,
    pub words_per_doc: usize,
    /// Share of each document drawn from its topics rather than background.
    pub topic_word_share: f64,
    pub lambda: usize,
    pub mu_upper: u32,
    pub attribute_marginals: AttributeMarginals,
    pub coi_rate: f64,
    pub erc_coi_rate: f64,
    pub dep_rate: f64,
    pub planted_problem_papers: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_papers: 20,
            n_pc: 20,
            n_erc: 100,
            n_topics: 8,
            topic_vocab_size: 60,
            background_vocab_size: 200,
            words_per_doc: 120,
            topic_word_share: 0.6,
            lambda: 3,
            mu_upper: 6,
            attribute_marginals: AttributeMarginals::default(),
            coi_rate: 0.03,
            erc_coi_rate: 0.005,
            dep_rate: 0.02,
            planted_problem_papers: 0,
            seed: 0,
        }
    }
}

const PRESETS: [(&str, &str); 3] = [
    ("ictir19-like", include_str!("../presets/ictir19-like.toml")),
    ("ictir20-like", include_str!("../presets/ictir20-like.toml")),
    ("tiny-oracle", include_str!("../presets/tiny-oracle.toml")),
];

impl GenConfig {
    /// One of the bundled presets.
    pub fn preset(name: &str) -> Result<Self, DatagenError> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| DatagenError::UnknownPreset(name.to_owned()))?;
        toml::from_str(text).map_err(|e| DatagenError::Config(e.to_string()))
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |m: &str| Err(DatagenError::Config(m.to_owned()));
        if self.n_papers == 0 || self.n_pc == 0 {
            return bad("n_papers and n_pc must be positive");
        }
        if self.n_topics == 0 || self.topic_vocab_size == 0 {
            return bad("n_topics and topic_vocab_size must be positive");
        }
        if self.n_topics > MAX_TOPIC_WORDS / self.topic_vocab_size {
            return bad("n_topics exceeds the vocabulary capacity");
        }
        if self.lambda == 0 || self.mu_upper == 0 || self.words_per_doc == 0 {
            return bad("lambda, mu_upper and words_per_doc must be positive");
        }
        for (name, r) in [
            ("coi_rate", self.coi_rate),
            ("erc_coi_rate", self.erc_coi_rate),
            ("dep_rate", self.dep_rate),
            ("topic_word_share", self.topic_word_share),
            (
                "second_location_rate",
                self.attribute_marginals.second_location_rate,
            ),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.planted_problem_papers > self.n_papers {
            return bad("planted_problem_papers exceeds n_papers");
        }
        if self.planted_problem_papers > 0 && (self.n_topics < 2 || self.n_erc == 0) {
            return bad("planting needs at least two topics and a non-empty extended pool");
        }
        if self.topic_word_share < 1.0 && self.background_vocab_size == 0 {
            return bad("background vocabulary is empty");
        }
        let m = &self.attribute_marginals;
        for (name, w) in [
            ("prof_bg", &m.prof_bg[..]),
            ("seniority", &m.seniority[..]),
            ("continents", &m.continents[..]),
        ] {
            if w.iter().any(|&x| x < 0.0 || !x.is_finite()) || w.iter().sum::<f64>() <= 0.0 {
                return bad(&format!(
                    "{name} weights must be non-negative with a positive sum"
                ));
            }
        }
        Ok(())
    }

    /// The topic reserved for planted papers, if any.
    pub fn isolated_topic(&self) -> Option<usize> {
        (self.planted_problem_papers > 0).then(|| self.n_topics - 1)
    }
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if x < w {
            return k;
        }
        x -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

struct Writer<'a> {
    cfg: &'a GenConfig,
}

impl Writer<'_> {
    fn text(&self, rng: &mut ChaCha8Rng, topics: &[usize]) -> String {
        let mut words = Vec::with_capacity(self.cfg.words_per_doc);
        for _ in 0..self.cfg.words_per_doc {
            if rng.gen::<f64>() < self.cfg.topic_word_share || self.cfg.background_vocab_size == 0 {
                let t = topics[rng.gen_range(0..topics.len())];
                // Skewed towards the head of the topic block.
                let w = ((rng.gen::<f64>().powi(2)) * self.cfg.topic_vocab_size as f64) as usize;
                words.push(format!("t{t}w{w}"));
            } else {
                words.push(format!(
                    "bg{}",
                    rng.gen_range(0..self.cfg.background_vocab_size)
                ));
            }
        }
        words.join(" ")
    }

    fn reviewer(&self, rng: &mut ChaCha8Rng, id: String, origin: Origin) -> Reviewer {
        let m = &self.cfg.attribute_marginals;
        let mut locations = BTreeSet::new();
        locations.insert(Continent::ALL[pick(rng, &m.continents)]);
        if rng.gen::<f64>() < m.second_location_rate {
            locations.insert(Continent::ALL[pick(rng, &m.continents)]);
        }
        Reviewer {
            name: format!("Reviewer {id}"),
            id,
            prof_bg: ProfBg::ALL[pick(rng, &m.prof_bg)],
            locations,
            seniority: Seniority::ALL[pick(rng, &m.seniority)],
            mu_lower: 0,
            mu_upper: self.cfg.mu_upper,
            profile_text: String::new(),
            origin,
        }
    }
}

fn topics_from(rng: &mut ChaCha8Rng, first: usize, pool: &[usize]) -> Vec<usize> {
    let mut out = vec![first];
    if rng.gen_bool(0.3) {
        let second = pool[rng.gen_range(0..pool.len())];
        if second != first {
            out.push(second);
        }
    }
    out
}

/// Builds an instance; identical configs give identical instances.
pub fn generate(cfg: &GenConfig) -> Result<ConferenceInstance, DatagenError> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, DATAGEN, 0);
    let writer = Writer { cfg };
    let isolated = cfg.isolated_topic();
    let regular: Vec<usize> = (0..cfg.n_topics).filter(|&t| Some(t) != isolated).collect();
    let all_topics: Vec<usize> = (0..cfg.n_topics).collect();

    let mut pc = Vec::with_capacity(cfg.n_pc);
    for k in 0..cfg.n_pc {
        let mut r = writer.reviewer(&mut rng, format!("pc-{k:03}"), Origin::OriginalPc);
        let topics = topics_from(&mut rng, regular[k % regular.len()], &regular);
        r.profile_text = writer.text(&mut rng, &topics);
        pc.push(r);
    }
    let forced_isolated = isolated.map_or(0, |_| (cfg.lambda + 2).min(cfg.n_erc));
    let mut erc = Vec::with_capacity(cfg.n_erc);
    for k in 0..cfg.n_erc {
        let mut r = writer.reviewer(&mut rng, format!("erc-{k:04}"), Origin::Erc);
        let first = match isolated {
            Some(t) if k < forced_isolated => t,
            _ => all_topics[rng.gen_range(0..all_topics.len())],
        };
        let topics = topics_from(&mut rng, first, &all_topics);
        r.profile_text = writer.text(&mut rng, &topics);
        erc.push(r);
    }

    let mut order: Vec<usize> = (0..cfg.n_papers).collect();
    order.shuffle(&mut rng);
    let planted: BTreeSet<usize> = order[..cfg.planted_problem_papers]
        .iter()
        .copied()
        .collect();
    let mut submissions = Vec::with_capacity(cfg.n_papers);
    for j in 0..cfg.n_papers {
        let topics = match isolated {
            Some(t) if planted.contains(&j) => vec![t],
            _ => {
                let first = regular[rng.gen_range(0..regular.len())];
                topics_from(&mut rng, first, &regular)
            }
        };
        let mut authors = BTreeSet::new();
        authors.insert(format!("author-{j:03}"));
        if !planted.contains(&j) {
            for r in &pc {
                if rng.gen::<f64>() < cfg.coi_rate {
                    authors.insert(r.id.clone());
                }
            }
        }
        for r in &erc {
            if rng.gen::<f64>() < cfg.erc_coi_rate {
                authors.insert(r.id.clone());
            }
        }
        submissions.push(Submission {
            id: format!("sub-{j:03}"),
            text: writer.text(&mut rng, &topics),
            author_ids: authors,
        });
    }

    let mut dep = DependencyMatrix::new();
    for a in 0..pc.len() {
        for b in a + 1..pc.len() {
            if rng.gen::<f64>() < cfg.dep_rate {
                dep.add(&pc[a].id, &pc[b].id).expect("distinct ids");
            }
        }
    }
    for r in &erc {
        if rng.gen::<f64>() < cfg.dep_rate {
            let other = &pc[rng.gen_range(0..pc.len())];
            dep.add(&r.id, &other.id).expect("distinct ids");
        }
    }

    let (n_pc, n_erc, m) = (pc.len(), erc.len(), submissions.len());
    let mut instance = ConferenceInstance {
        lambda: cfg.lambda,
        submissions,
        pc,
        erc,
        sim_pc: SimilarityMatrix::zeros(n_pc, m),
        sim_erc: SimilarityMatrix::zeros(n_erc, m),
        dep,
    };
    let (sim_pc, sim_erc) = build_similarity(&instance);
    instance.sim_pc = sim_pc;
    instance.sim_erc = sim_erc;
    Ok(instance)
}

/// Indices of the planted papers of an instance produced by [`generate`].
pub fn planted_papers(cfg: &GenConfig) -> Vec<usize> {
    let mut rng = stream_rng(cfg.seed, DATAGEN, 0);
    // Replays the draws that precede the planting shuffle.
    let writer = Writer { cfg };
    let isolated = cfg.isolated_topic();
    let regular: Vec<usize> = (0..cfg.n_topics).filter(|&t| Some(t) != isolated).collect();
    let all_topics: Vec<usize> = (0..cfg.n_topics).collect();
    for k in 0..cfg.n_pc {
        writer.reviewer(&mut rng, String::new(), Origin::OriginalPc);
        let topics = topics_from(&mut rng, regular[k % regular.len()], &regular);
        writer.text(&mut rng, &topics);
    }
    let forced_isolated = isolated.map_or(0, |_| (cfg.lambda + 2).min(cfg.n_erc));
    for k in 0..cfg.n_erc {
        writer.reviewer(&mut rng, String::new(), Origin::Erc);
        let first = match isolated {
            Some(t) if k < forced_isolated => t,
            _ => all_topics[rng.gen_range(0..all_topics.len())],
        };
        let topics = topics_from(&mut rng, first, &all_topics);
        writer.text(&mut rng, &topics);
    }
    let mut order: Vec<usize> = (0..cfg.n_papers).collect();
    order.shuffle(&mut rng);
    let mut out = order[..cfg.planted_problem_papers].to_vec();
    out.sort_unstable();
    out
}
