//! JSON instance and assignment files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    valid_similarity, Assignment, ConferenceInstance, Continent, DependencyMatrix, ModelError,
    Origin, ProfBg, Provenance, Reviewer, Seniority, SimilarityMatrix, Submission,
};
use crate::textsim;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    lambda: usize,
    submissions: Vec<SubmissionRecord>,
    pc: Vec<ReviewerRecord>,
    #[serde(default)]
    erc: Vec<ReviewerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sim_pc: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sim_erc: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    dep: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmissionRecord {
    id: String,
    text: String,
    authors: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviewerRecord {
    id: String,
    #[serde(default)]
    name: Option<String>,
    prof_bg: ProfBg,
    locations: Vec<Continent>,
    seniority: Seniority,
    #[serde(default)]
    mu_lower: u32,
    mu_upper: u32,
    profile_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<Origin>,
}

fn reviewer_from_record(
    rec: ReviewerRecord,
    pool: &str,
    i: usize,
    default_origin: Origin,
) -> Result<Reviewer, ModelError> {
    let r = Reviewer {
        name: rec.name.unwrap_or_else(|| rec.id.clone()),
        id: rec.id,
        prof_bg: rec.prof_bg,
        locations: rec.locations.into_iter().collect(),
        seniority: rec.seniority,
        mu_lower: rec.mu_lower,
        mu_upper: rec.mu_upper,
        profile_text: rec.profile_text,
        origin: rec.origin.unwrap_or(default_origin),
    };
    if r.locations.is_empty() {
        return Err(ModelError::schema(
            format!("$.{pool}[{i}].locations"),
            "must list at least one continent",
        ));
    }
    if r.mu_upper == 0 {
        return Err(ModelError::schema(
            format!("$.{pool}[{i}].mu_upper"),
            "must be positive",
        ));
    }
    if r.mu_lower > r.mu_upper {
        return Err(ModelError::schema(
            format!("$.{pool}[{i}].mu_lower"),
            format!("{} exceeds mu_upper {}", r.mu_lower, r.mu_upper),
        ));
    }
    Ok(r)
}

fn record_from_reviewer(r: &Reviewer, default_origin: Origin) -> ReviewerRecord {
    ReviewerRecord {
        id: r.id.clone(),
        name: Some(r.name.clone()),
        prof_bg: r.prof_bg,
        locations: r.locations.iter().copied().collect(),
        seniority: r.seniority,
        mu_lower: r.mu_lower,
        mu_upper: r.mu_upper,
        profile_text: r.profile_text.clone(),
        origin: (r.origin != default_origin).then_some(r.origin),
    }
}

fn matrix_from_rows(
    rows: Vec<Vec<f64>>,
    key: &str,
    n_rows: usize,
    n_cols: usize,
) -> Result<SimilarityMatrix, ModelError> {
    if rows.len() != n_rows {
        return Err(ModelError::schema(
            format!("$.{key}"),
            format!("expected {n_rows} rows, found {}", rows.len()),
        ));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n_cols {
            return Err(ModelError::schema(
                format!("$.{key}[{r}]"),
                format!("expected {n_cols} columns, found {}", row.len()),
            ));
        }
        for (c, v) in row.iter().enumerate() {
            if !valid_similarity(*v) {
                return Err(ModelError::schema(
                    format!("$.{key}[{r}][{c}]"),
                    format!("similarity {v} outside [0,1] and not -1"),
                ));
            }
        }
    }
    SimilarityMatrix::from_rows(rows, n_cols)
}

/// Parses and validates an instance. Missing similarity matrices are
/// computed from the texts; author-based conflicts are always applied.
pub fn instance_from_json(text: &str) -> Result<ConferenceInstance, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ModelError::schema(format!("$.{path}"), e.into_inner().to_string())
    })?;
    if file.lambda == 0 {
        return Err(ModelError::schema("$.lambda", "must be at least 1"));
    }
    let mut submissions = Vec::with_capacity(file.submissions.len());
    for (j, s) in file.submissions.into_iter().enumerate() {
        let sub = Submission {
            id: s.id,
            text: s.text,
            author_ids: s.authors.into_iter().collect::<BTreeSet<_>>(),
        };
        sub.validate()
            .map_err(|e| ModelError::schema(format!("$.submissions[{j}]"), e))?;
        submissions.push(sub);
    }
    let pc = file
        .pc
        .into_iter()
        .enumerate()
        .map(|(i, r)| reviewer_from_record(r, "pc", i, Origin::OriginalPc))
        .collect::<Result<Vec<_>, _>>()?;
    let erc = file
        .erc
        .into_iter()
        .enumerate()
        .map(|(i, r)| reviewer_from_record(r, "erc", i, Origin::Erc))
        .collect::<Result<Vec<_>, _>>()?;
    let m = submissions.len();
    let mut dep = DependencyMatrix::new();
    for (k, (a, b)) in file.dep.iter().enumerate() {
        dep.add(a, b)
            .map_err(|_| ModelError::schema(format!("$.dep[{k}]"), "self-dependency"))?;
    }
    let sim_pc = file
        .sim_pc
        .map(|rows| matrix_from_rows(rows, "sim_pc", pc.len(), m))
        .transpose()?;
    let sim_erc = file
        .sim_erc
        .map(|rows| matrix_from_rows(rows, "sim_erc", erc.len(), m))
        .transpose()?;
    let mut inst = ConferenceInstance {
        lambda: file.lambda,
        sim_pc: sim_pc
            .clone()
            .unwrap_or_else(|| SimilarityMatrix::zeros(pc.len(), m)),
        sim_erc: sim_erc
            .clone()
            .unwrap_or_else(|| SimilarityMatrix::zeros(erc.len(), m)),
        submissions,
        pc,
        erc,
        dep,
    };
    if sim_pc.is_none() || sim_erc.is_none() {
        let (p, e) = textsim::build_similarity(&inst);
        if sim_pc.is_none() {
            inst.sim_pc = p;
        }
        if sim_erc.is_none() {
            inst.sim_erc = e;
        }
    }
    textsim::apply_author_coi(&mut inst);
    for (a, b) in inst.dep.pairs() {
        let idx = inst.reviewer_index();
        for id in [&a, &b] {
            if !idx.contains_key(id.as_str()) {
                return Err(ModelError::schema(
                    "$.dep",
                    format!("unknown reviewer `{id}`"),
                ));
            }
        }
    }
    inst.validate()?;
    Ok(inst)
}

pub fn instance_to_json(instance: &ConferenceInstance) -> String {
    let file = InstanceFile {
        lambda: instance.lambda,
        submissions: instance
            .submissions
            .iter()
            .map(|s| SubmissionRecord {
                id: s.id.clone(),
                text: s.text.clone(),
                authors: s.author_ids.iter().cloned().collect(),
            })
            .collect(),
        pc: instance
            .pc
            .iter()
            .map(|r| record_from_reviewer(r, Origin::OriginalPc))
            .collect(),
        erc: instance
            .erc
            .iter()
            .map(|r| record_from_reviewer(r, Origin::Erc))
            .collect(),
        sim_pc: Some(instance.sim_pc.to_rows()),
        sim_erc: Some(instance.sim_erc.to_rows()),
        dep: instance.dep.pairs(),
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ConferenceInstance, ModelError> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn save_instance(
    instance: &ConferenceInstance,
    path: impl AsRef<Path>,
) -> Result<(), ModelError> {
    write_atomic(path.as_ref(), instance_to_json(instance).as_bytes())?;
    Ok(())
}

/// Run parameters recorded next to an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunMeta {
    pub method: String,
    pub mode: String,
    pub lambda: usize,
    pub seed: u64,
    pub theta: f64,
    pub kappa: usize,
    pub tries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentFile {
    pub assignment: BTreeMap<String, Vec<String>>,
    pub meta: RunMeta,
}

pub fn save_assignment(
    assignment: &Assignment,
    meta: &RunMeta,
    path: impl AsRef<Path>,
) -> Result<(), ModelError> {
    let mut meta = meta.clone();
    meta.lambda = assignment.lambda;
    if meta.provenance.is_none() {
        meta.provenance = assignment.provenance;
    }
    let file = AssignmentFile {
        assignment: assignment.sets.clone(),
        meta,
    };
    let text = serde_json::to_string_pretty(&file).expect("assignment serialization cannot fail");
    write_atomic(path.as_ref(), text.as_bytes())?;
    Ok(())
}

pub fn load_assignment(path: impl AsRef<Path>) -> Result<(Assignment, RunMeta), ModelError> {
    assignment_from_json(&fs::read_to_string(path)?)
}

/// Parses an assignment file held in memory.
pub fn assignment_from_json(text: &str) -> Result<(Assignment, RunMeta), ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: AssignmentFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ModelError::schema(format!("$.{path}"), e.into_inner().to_string())
    })?;
    let assignment = Assignment {
        lambda: file.meta.lambda,
        sets: file.assignment,
        provenance: file.meta.provenance,
    };
    Ok((assignment, file.meta))
}

/// Writes to a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
      "lambda": 3,
      "submissions": [{"id": "p1", "text": "flow networks for reviewer assignment", "authors": ["x"]}],
      "pc": [
        {"id": "a", "prof_bg": "both", "locations": ["europe"], "seniority": "senior", "mu_upper": 2, "profile_text": "flow networks"},
        {"id": "b", "prof_bg": "academia", "locations": ["asia"], "seniority": "advanced", "mu_upper": 2, "profile_text": "reviewer assignment"},
        {"id": "c", "prof_bg": "industry", "locations": ["north_america", "europe"], "seniority": "junior", "mu_upper": 2, "profile_text": "ranking"}
      ],
      "dep": [["a", "c"]]
    }"#;

    #[test]
    fn loads_minimal_fixture() {
        let inst = instance_from_json(MINIMAL).unwrap();
        assert_eq!(inst.submissions.len(), 1);
        assert_eq!(inst.pc.len(), 3);
        assert_eq!(inst.sim_pc.rows(), 3);
        assert!(inst.dep.depends("c", "a"));
        assert_eq!(inst.pc[2].locations.len(), 2);
        assert_eq!(inst.pc[0].name, "a");
    }

    #[test]
    fn out_of_range_similarity_reports_path() {
        let text = MINIMAL.replace(
            r#""dep": [["a", "c"]]"#,
            r#""dep": [], "sim_pc": [[0.2], [1.5], [0.1]]"#,
        );
        match instance_from_json(&text) {
            Err(ModelError::Schema { path, .. }) => assert_eq!(path, "$.sim_pc[1][0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_enum_reports_path() {
        let text = MINIMAL.replace("\"asia\"", "\"atlantis\"");
        match instance_from_json(&text) {
            Err(ModelError::Schema { path, .. }) => assert_eq!(path, "$.pc[1].locations[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn author_coi_becomes_sentinel() {
        let text = MINIMAL.replace(r#""authors": ["x"]"#, r#""authors": ["b"]"#);
        let inst = instance_from_json(&text).unwrap();
        assert!(inst.sim_pc.is_coi(1, 0));
    }

    #[test]
    fn assignment_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let mut a = Assignment::new(3);
        a.insert("p1", vec!["a".into(), "b".into(), "c".into()]);
        let meta = RunMeta {
            method: "divers".into(),
            seed: 7,
            ..RunMeta::default()
        };
        save_assignment(&a, &meta, &path).unwrap();
        let (back, m) = load_assignment(&path).unwrap();
        assert_eq!(back, a);
        assert_eq!(m.seed, 7);
        assert_eq!(m.lambda, 3);
    }
}
