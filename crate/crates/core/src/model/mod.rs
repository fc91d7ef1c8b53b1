//! Domain types shared by every other module: reviewers, submissions,
//! similarity and dependency matrices, assignments and the conference
//! instance container.

pub(crate) mod feasibility;
mod io;

pub use feasibility::{is_feasible, FeasibilityReport, Violation};
pub(crate) use io::write_atomic;
pub use io::{
    assignment_from_json, instance_from_json, instance_to_json, load_assignment, load_instance,
    save_assignment, save_instance, AssignmentFile, RunMeta,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reviewers per submission used when nothing else is configured.
pub const DEFAULT_LAMBDA: usize = 3;

/// Similarity sentinel marking a conflict of interest.
pub const COI: f64 = -1.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        what: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown reviewer `{0}`")]
    UnknownReviewer(String),
    #[error("unknown submission `{0}`")]
    UnknownSubmission(String),
    #[error("lambda must be at least 1")]
    InvalidLambda,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Professional background. The numeric value is the one used by the
/// background diversity score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfBg {
    Industry,
    Academia,
    Both,
}

impl ProfBg {
    pub const ALL: [ProfBg; 3] = [ProfBg::Industry, ProfBg::Academia, ProfBg::Both];

    /// -1 industry, +1 academia, 0 both.
    pub fn value(self) -> i32 {
        match self {
            ProfBg::Industry => -1,
            ProfBg::Academia => 1,
            ProfBg::Both => 0,
        }
    }

    /// Index of the matching background node `a_0..a_2`.
    pub fn node_index(self) -> usize {
        match self {
            ProfBg::Industry => 0,
            ProfBg::Academia => 1,
            ProfBg::Both => 2,
        }
    }

    pub fn industry_capable(self) -> bool {
        matches!(self, ProfBg::Industry | ProfBg::Both)
    }

    pub fn academia_capable(self) -> bool {
        matches!(self, ProfBg::Academia | ProfBg::Both)
    }
}

impl fmt::Display for ProfBg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfBg::Industry => "industry",
            ProfBg::Academia => "academia",
            ProfBg::Both => "industry and academia",
        })
    }
}

/// Continents in the order of the location nodes `l_0..l_6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continent {
    SouthAmerica,
    Africa,
    Antarctica,
    Asia,
    Oceania,
    NorthAmerica,
    Europe,
}

impl Continent {
    pub const ALL: [Continent; 7] = [
        Continent::SouthAmerica,
        Continent::Africa,
        Continent::Antarctica,
        Continent::Asia,
        Continent::Oceania,
        Continent::NorthAmerica,
        Continent::Europe,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Continent::SouthAmerica => "South America",
            Continent::Africa => "Africa",
            Continent::Antarctica => "Antarctica",
            Continent::Asia => "Asia",
            Continent::Oceania => "Oceania",
            Continent::NorthAmerica => "North America",
            Continent::Europe => "Europe",
        }
    }
}

impl fmt::Display for Continent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seniority {
    Senior,
    Advanced,
    Junior,
}

impl Seniority {
    pub const ALL: [Seniority; 3] = [Seniority::Senior, Seniority::Advanced, Seniority::Junior];

    /// 0 senior, 1 advanced, 2 junior; also the index of node `s_x`.
    pub fn level(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Seniority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seniority::Senior => "senior",
            Seniority::Advanced => "advanced",
            Seniority::Junior => "junior",
        })
    }
}

/// Where a reviewer in the active committee came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    OriginalPc,
    Erc,
    Inserted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reviewer {
    pub id: String,
    pub name: String,
    pub prof_bg: ProfBg,
    pub locations: BTreeSet<Continent>,
    pub seniority: Seniority,
    /// Minimum number of papers this reviewer must receive.
    pub mu_lower: u32,
    /// Maximum number of papers this reviewer may receive.
    pub mu_upper: u32,
    pub profile_text: String,
    pub origin: Origin,
}

impl Reviewer {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("id must not be empty".into());
        }
        if self.locations.is_empty() {
            return Err("locations must not be empty".into());
        }
        if self.mu_upper == 0 {
            return Err("mu_upper must be positive".into());
        }
        if self.mu_lower > self.mu_upper {
            return Err(format!(
                "mu_lower {} exceeds mu_upper {}",
                self.mu_lower, self.mu_upper
            ));
        }
        Ok(())
    }

    pub fn is_senior(&self) -> bool {
        self.seniority == Seniority::Senior
    }

    /// Short attribute summary used in reports.
    pub fn attribute_summary(&self) -> String {
        let locs: Vec<&str> = self.locations.iter().map(|c| c.name()).collect();
        format!(
            "{} background, {}, located in {}",
            self.prof_bg,
            self.seniority,
            locs.join(" / ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub text: String,
    pub author_ids: BTreeSet<String>,
}

impl Submission {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("id must not be empty".into());
        }
        if self.text.trim().is_empty() {
            return Err("text must not be empty".into());
        }
        if self.author_ids.is_empty() {
            return Err("authors must not be empty".into());
        }
        Ok(())
    }
}

/// Dense reviewer-by-submission similarities in `[0,1]`, with `-1` marking
/// a conflict of interest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

pub(crate) fn valid_similarity(v: f64) -> bool {
    v == COI || (0.0..=1.0).contains(&v)
}

impl SimilarityMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SimilarityMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(ModelError::DimensionMismatch {
                    what: format!("similarity row {r}"),
                    expected: (1, cols),
                    got: (1, row.len()),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if !valid_similarity(*v) {
                    return Err(ModelError::schema(
                        format!("[{r}][{c}]"),
                        format!("similarity {v} outside [0,1] and not -1"),
                    ));
                }
            }
            values.extend(row);
        }
        Ok(SimilarityMatrix {
            rows: n,
            cols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Panics if `value` is not a similarity or the COI sentinel.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(valid_similarity(value), "invalid similarity {value}");
        self.values[row * self.cols + col] = value;
    }

    pub fn is_coi(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == COI
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols);
        self.values.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn remove_row(&mut self, row: usize) -> Vec<f64> {
        let out: Vec<f64> = self.row(row).to_vec();
        self.values.drain(row * self.cols..(row + 1) * self.cols);
        self.rows -= 1;
        out
    }

    /// Keeps only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        SimilarityMatrix {
            rows: rows.len(),
            cols: self.cols,
            values,
        }
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        SimilarityMatrix {
            rows: self.rows,
            cols: cols.len(),
            values,
        }
    }

    /// Largest non-COI similarity in a column, `None` if every entry is a COI.
    pub fn column_max(&self, col: usize) -> Option<f64> {
        (0..self.rows)
            .map(|r| self.get(r, col))
            .filter(|v| *v != COI)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Symmetric reviewer-reviewer dependency relation with an empty diagonal,
/// stored sparsely by reviewer id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DependencyMatrix {
    adj: BTreeMap<String, BTreeSet<String>>,
}

impl DependencyMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks `a` and `b` as dependent. Self-dependencies are rejected.
    pub fn add(&mut self, a: &str, b: &str) -> Result<(), ModelError> {
        if a == b {
            return Err(ModelError::schema(
                "dep",
                format!("reviewer `{a}` cannot depend on itself"),
            ));
        }
        self.adj
            .entry(a.to_owned())
            .or_default()
            .insert(b.to_owned());
        self.adj
            .entry(b.to_owned())
            .or_default()
            .insert(a.to_owned());
        Ok(())
    }

    pub fn remove(&mut self, a: &str, b: &str) {
        if let Some(s) = self.adj.get_mut(a) {
            s.remove(b);
        }
        if let Some(s) = self.adj.get_mut(b) {
            s.remove(a);
        }
    }

    pub fn depends(&self, a: &str, b: &str) -> bool {
        self.adj.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn neighbours(&self, a: &str) -> impl Iterator<Item = &str> {
        self.adj.get(a).into_iter().flatten().map(String::as_str)
    }

    /// Unordered pairs `(a, b)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (a, set) in &self.adj {
            for b in set {
                if a < b {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which tries/iteration produced an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub iteration: usize,
    /// `None` for the solve over the full pair set.
    pub try_index: Option<usize>,
}

/// Reviewer sets per submission id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub lambda: usize,
    pub sets: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Assignment {
    pub fn new(lambda: usize) -> Self {
        Assignment {
            lambda,
            sets: BTreeMap::new(),
            provenance: None,
        }
    }

    pub fn insert(&mut self, paper: impl Into<String>, reviewers: Vec<String>) {
        self.sets.insert(paper.into(), reviewers);
    }

    pub fn reviewers(&self, paper: &str) -> Option<&[String]> {
        self.sets.get(paper).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.sets.iter()
    }

    /// Number of papers per reviewer, for reviewers appearing at least once.
    pub fn loads(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for set in self.sets.values() {
            for r in set {
                *out.entry(r.as_str()).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Which reviewer pool a reviewer belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pool {
    Pc,
    Erc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConferenceInstance {
    pub lambda: usize,
    pub submissions: Vec<Submission>,
    pub pc: Vec<Reviewer>,
    pub erc: Vec<Reviewer>,
    pub sim_pc: SimilarityMatrix,
    pub sim_erc: SimilarityMatrix,
    pub dep: DependencyMatrix,
}

impl ConferenceInstance {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.lambda == 0 {
            return Err(ModelError::InvalidLambda);
        }
        let m = self.submissions.len();
        for (what, sim, n) in [
            ("sim_pc", &self.sim_pc, self.pc.len()),
            ("sim_erc", &self.sim_erc, self.erc.len()),
        ] {
            if sim.rows() != n || sim.cols() != m {
                return Err(ModelError::DimensionMismatch {
                    what: what.into(),
                    expected: (n, m),
                    got: (sim.rows(), sim.cols()),
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (j, s) in self.submissions.iter().enumerate() {
            s.validate()
                .map_err(|e| ModelError::schema(format!("$.submissions[{j}]"), e))?;
            if !seen.insert(s.id.as_str()) {
                return Err(ModelError::DuplicateId(s.id.clone()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (pool, list) in [("pc", &self.pc), ("erc", &self.erc)] {
            for (i, r) in list.iter().enumerate() {
                r.validate()
                    .map_err(|e| ModelError::schema(format!("$.{pool}[{i}]"), e))?;
                if !seen.insert(r.id.as_str()) {
                    return Err(ModelError::DuplicateId(r.id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn submission_index(&self, id: &str) -> Option<usize> {
        self.submissions.iter().position(|s| s.id == id)
    }

    /// Id lookup over both reviewer pools.
    pub fn reviewer_index(&self) -> HashMap<&str, (Pool, usize)> {
        let mut out = HashMap::with_capacity(self.pc.len() + self.erc.len());
        for (i, r) in self.pc.iter().enumerate() {
            out.insert(r.id.as_str(), (Pool::Pc, i));
        }
        for (i, r) in self.erc.iter().enumerate() {
            out.entry(r.id.as_str()).or_insert((Pool::Erc, i));
        }
        out
    }

    pub fn reviewer(&self, pool: Pool, index: usize) -> &Reviewer {
        match pool {
            Pool::Pc => &self.pc[index],
            Pool::Erc => &self.erc[index],
        }
    }

    pub fn similarity(&self, pool: Pool, reviewer: usize, paper: usize) -> f64 {
        match pool {
            Pool::Pc => self.sim_pc.get(reviewer, paper),
            Pool::Erc => self.sim_erc.get(reviewer, paper),
        }
    }

    /// Restricts the instance to the given submissions, in the given order.
    pub fn with_submissions(&self, keep: &[usize]) -> ConferenceInstance {
        ConferenceInstance {
            lambda: self.lambda,
            submissions: keep.iter().map(|&j| self.submissions[j].clone()).collect(),
            pc: self.pc.clone(),
            erc: self.erc.clone(),
            sim_pc: self.sim_pc.select_columns(keep),
            sim_erc: self.sim_erc.select_columns(keep),
            dep: self.dep.clone(),
        }
    }

    /// Moves ERC reviewer `erc_index` into the committee, tagging it as inserted.
    /// Returns its new committee index.
    pub fn promote_erc(&mut self, erc_index: usize) -> usize {
        let mut reviewer = self.erc.remove(erc_index);
        let row = self.sim_erc.remove_row(erc_index);
        reviewer.origin = Origin::Inserted;
        reviewer.mu_lower = 0;
        self.pc.push(reviewer);
        self.sim_pc.push_row(&row);
        self.pc.len() - 1
    }

    /// Sum of upper bounds of committee members matching `pred`.
    pub fn pc_capacity(&self, pred: impl Fn(&Reviewer) -> bool) -> u64 {
        self.pc
            .iter()
            .filter(|r| pred(r))
            .map(|r| u64::from(r.mu_upper))
            .sum()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn reviewer(
        id: &str,
        bg: ProfBg,
        sen: Seniority,
        locs: &[Continent],
        mu_upper: u32,
    ) -> Reviewer {
        Reviewer {
            id: id.into(),
            name: id.to_uppercase(),
            prof_bg: bg,
            locations: locs.iter().copied().collect(),
            seniority: sen,
            mu_lower: 0,
            mu_upper,
            profile_text: format!("profile of {id}"),
            origin: Origin::OriginalPc,
        }
    }

    pub fn submission(id: &str) -> Submission {
        Submission {
            id: id.into(),
            text: format!("text of {id}"),
            author_ids: [format!("author-{id}")].into_iter().collect(),
        }
    }

    pub fn instance(
        pc: Vec<Reviewer>,
        papers: usize,
        sim: f64,
        lambda: usize,
    ) -> ConferenceInstance {
        let submissions: Vec<Submission> =
            (0..papers).map(|j| submission(&format!("p{j}"))).collect();
        let mut sim_pc = SimilarityMatrix::zeros(pc.len(), papers);
        for i in 0..pc.len() {
            for j in 0..papers {
                sim_pc.set(i, j, sim);
            }
        }
        ConferenceInstance {
            lambda,
            submissions,
            sim_pc,
            sim_erc: SimilarityMatrix::zeros(0, papers),
            pc,
            erc: Vec::new(),
            dep: DependencyMatrix::new(),
        }
    }
}
