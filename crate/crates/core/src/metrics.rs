//! Evaluation measures for a finished assignment.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Assignment, ConferenceInstance, DependencyMatrix, Origin, Reviewer};
use crate::textsim::{symmetric_kl, transform_f, TermCounts, F_AT_ONE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("assignment is empty")]
    EmptyAssignment,
    #[error("unknown reviewer {0}")]
    UnknownReviewer(String),
    #[error("unknown submission {0}")]
    UnknownSubmission(String),
    #[error("location diversity needs at least two reviewers per set (paper {0})")]
    SetTooSmall(String),
    #[error("empty relevance list")]
    EmptyRanking,
}

/// `f(s)` with conflicts and out-of-range values clamped into `[0, 1]`.
pub fn transformed(s: f64) -> f64 {
    transform_f(s.clamp(0.0, 1.0)).unwrap_or(F_AT_ONE)
}

fn paper_sums(
    assignment: &Assignment,
    instance: &ConferenceInstance,
) -> Result<Vec<f64>, MetricsError> {
    let index = instance.reviewer_index();
    let mut out = Vec::with_capacity(assignment.len());
    for (paper, set) in assignment.iter() {
        let j = instance
            .submission_index(paper)
            .ok_or_else(|| MetricsError::UnknownSubmission(paper.clone()))?;
        let mut sum = 0.0;
        for r in set {
            let &(pool, i) = index
                .get(r.as_str())
                .ok_or_else(|| MetricsError::UnknownReviewer(r.clone()))?;
            sum += transformed(instance.similarity(pool, i, j));
        }
        out.push(sum);
    }
    Ok(out)
}

/// Total transformed similarity `J`.
pub fn similarity_objective(
    assignment: &Assignment,
    instance: &ConferenceInstance,
) -> Result<f64, MetricsError> {
    Ok(paper_sums(assignment, instance)?.iter().sum())
}

/// Minimum over papers of the summed transformed similarity.
pub fn fairness(
    assignment: &Assignment,
    instance: &ConferenceInstance,
) -> Result<f64, MetricsError> {
    paper_sums(assignment, instance)?
        .into_iter()
        .reduce(f64::min)
        .ok_or(MetricsError::EmptyAssignment)
}

/// Mean over papers of the mean symmetrised KL divergence between the
/// profile language models of each pair of assigned reviewers.
pub fn avg_textual_diversity(
    assignment: &Assignment,
    profiles: &HashMap<String, TermCounts>,
) -> Result<f64, MetricsError> {
    if assignment.is_empty() {
        return Err(MetricsError::EmptyAssignment);
    }
    let mut total = 0.0;
    let mut papers = 0usize;
    let mut pairless = false;
    for (_, set) in assignment.iter() {
        let lms: Vec<&TermCounts> = set
            .iter()
            .map(|r| {
                profiles
                    .get(r)
                    .ok_or_else(|| MetricsError::UnknownReviewer(r.clone()))
            })
            .collect::<Result<_, _>>()?;
        papers += 1;
        if lms.len() < 2 {
            pairless = true;
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for a in 0..lms.len() {
            for b in a + 1..lms.len() {
                sum += symmetric_kl(lms[a], lms[b]);
                pairs += 1;
            }
        }
        total += sum / pairs as f64;
    }
    if pairless {
        log::warn!("reviewer sets without pairs contribute 0 to the KL average");
    }
    Ok(total / papers as f64)
}

/// Term counts of every reviewer in `assignment`.
pub fn assigned_profiles(
    assignment: &Assignment,
    instance: &ConferenceInstance,
) -> Result<HashMap<String, TermCounts>, MetricsError> {
    let index = instance.reviewer_index();
    let mut out = HashMap::new();
    for (_, set) in assignment.iter() {
        for r in set {
            if out.contains_key(r) {
                continue;
            }
            let &(pool, i) = index
                .get(r.as_str())
                .ok_or_else(|| MetricsError::UnknownReviewer(r.clone()))?;
            out.insert(
                r.clone(),
                TermCounts::from_text(&instance.reviewer(pool, i).profile_text),
            );
        }
    }
    Ok(out)
}

/// The three diversity components of one reviewer set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiversityParts {
    pub background: f64,
    pub location: f64,
    pub seniority: f64,
}

impl DiversityParts {
    pub fn total(&self) -> f64 {
        self.background + self.location + self.seniority
    }
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Diversity of one reviewer set.
pub fn set_diversity(paper: &str, members: &[&Reviewer]) -> Result<DiversityParts, MetricsError> {
    let lambda = members.len();
    if lambda < 2 {
        return Err(MetricsError::SetTooSmall(paper.to_owned()));
    }
    let bg_sum: i32 = members.iter().map(|r| r.prof_bg.value()).sum();
    let background = 1.0 - f64::from(bg_sum.abs()) / lambda as f64;
    let mut jac = 0.0;
    for a in 0..lambda {
        for b in a + 1..lambda {
            jac += jaccard(&members[a].locations, &members[b].locations);
        }
    }
    let pairs = (lambda * (lambda - 1) / 2) as f64;
    let location = 1.0 - jac / pairs;
    let levels: BTreeSet<usize> = members.iter().map(|r| r.seniority.level()).collect();
    let seniority = levels.len() as f64 / 3.0;
    Ok(DiversityParts {
        background,
        location,
        seniority,
    })
}

/// Mean over papers of the summed diversity components, in `[0, 3]`.
pub fn diversity(
    assignment: &Assignment,
    instance: &ConferenceInstance,
) -> Result<f64, MetricsError> {
    if assignment.is_empty() {
        return Err(MetricsError::EmptyAssignment);
    }
    let index = instance.reviewer_index();
    let mut total = 0.0;
    for (paper, set) in assignment.iter() {
        let members: Vec<&Reviewer> = set
            .iter()
            .map(|r| {
                index
                    .get(r.as_str())
                    .map(|&(pool, i)| instance.reviewer(pool, i))
                    .ok_or_else(|| MetricsError::UnknownReviewer(r.clone()))
            })
            .collect::<Result<_, _>>()?;
        total += set_diversity(paper, &members)?.total();
    }
    Ok(total / assignment.len() as f64)
}

/// Percentage of reviewer sets that contain a dependent pair.
pub fn dependency_pct(assignment: &Assignment, dep: &DependencyMatrix) -> f64 {
    if assignment.is_empty() {
        return 0.0;
    }
    let violated = assignment
        .iter()
        .filter(|(_, set)| {
            set.iter()
                .enumerate()
                .any(|(a, x)| set[a + 1..].iter().any(|y| dep.depends(x, y)))
        })
        .count();
    100.0 * violated as f64 / assignment.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkloadStats {
    /// Assignments per reviewer that received at least one paper.
    pub mean_per_used_reviewer: f64,
    /// Assignments per original committee member.
    pub mean_per_pc_member: f64,
    /// Original committee members without any paper.
    pub unused_pc: usize,
}

/// Workload over `pc`; only members of origin `OriginalPc` count towards
/// the committee mean and the unused count.
pub fn workload_stats(assignment: &Assignment, pc: &[Reviewer]) -> WorkloadStats {
    let loads = assignment.loads();
    let total: usize = loads.values().sum();
    let used = loads.values().filter(|&&l| l > 0).count();
    let original: Vec<&Reviewer> = pc
        .iter()
        .filter(|r| r.origin == Origin::OriginalPc)
        .collect();
    let unused = original
        .iter()
        .filter(|r| loads.get(r.id.as_str()).copied().unwrap_or(0) == 0)
        .count();
    let ratio = |n: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    WorkloadStats {
        mean_per_used_reviewer: ratio(used),
        mean_per_pc_member: ratio(original.len()),
        unused_pc: unused,
    }
}

/// NDCG with linear gains and `log2(rank + 1)` discounts.
pub fn ndcg(relevance: &[f64]) -> Result<f64, MetricsError> {
    if relevance.is_empty() {
        return Err(MetricsError::EmptyRanking);
    }
    let dcg = |xs: &[f64]| -> f64 {
        xs.iter()
            .enumerate()
            .map(|(k, &g)| g / ((k + 2) as f64).log2())
            .sum()
    };
    let mut ideal = relevance.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg(&ideal);
    if best <= 0.0 {
        log::warn!("all relevance grades are zero; NDCG defined as 0");
        return Ok(0.0);
    }
    Ok(dcg(relevance) / best)
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentReport {
    pub method: String,
    pub mean_workload_per_used_reviewer: f64,
    pub mean_workload_per_pc_member: f64,
    pub unused_pc_count: usize,
    pub dep_pct: f64,
    pub fairness: f64,
    pub avg_kl: f64,
    /// `None` when sets are too small for the location component.
    pub div: Option<f64>,
    #[serde(rename = "J")]
    pub j: f64,
}

/// All measures of `assignment`. `instance` must contain every assigned
/// reviewer; `original_pc` is the committee before any extension.
pub fn report(
    method: &str,
    assignment: &Assignment,
    instance: &ConferenceInstance,
    original_pc: &[Reviewer],
) -> Result<AssignmentReport, MetricsError> {
    let work = workload_stats(assignment, original_pc);
    let div = match diversity(assignment, instance) {
        Ok(d) => Some(d),
        Err(MetricsError::SetTooSmall(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(AssignmentReport {
        method: method.to_owned(),
        mean_workload_per_used_reviewer: work.mean_per_used_reviewer,
        mean_workload_per_pc_member: work.mean_per_pc_member,
        unused_pc_count: work.unused_pc,
        dep_pct: dependency_pct(assignment, &instance.dep),
        fairness: fairness(assignment, instance)?,
        avg_kl: avg_textual_diversity(assignment, &assigned_profiles(assignment, instance)?)?,
        div,
        j: similarity_objective(assignment, instance)?,
    })
}

const HEADERS: [&str; 8] = ["Method", "mW/R (/PC)", "U", "Dep", "Γ", "KL", "Div", "J"];

fn cells(r: &AssignmentReport) -> [String; 8] {
    [
        r.method.clone(),
        format!(
            "{:.2} ({:.2})",
            r.mean_workload_per_used_reviewer, r.mean_workload_per_pc_member
        ),
        r.unused_pc_count.to_string(),
        format!("{:.2}", r.dep_pct),
        format!("{:.2}", r.fairness),
        format!("{:.3}", r.avg_kl),
        r.div.map_or_else(|| "n/a".into(), |d| format!("{d:.3}")),
        format!("{:.2}", r.j),
    ]
}

/// Aligned plain-text table.
pub fn render_table(reports: &[AssignmentReport]) -> String {
    let rows: Vec<[String; 8]> = reports.iter().map(cells).collect();
    let mut width: Vec<usize> = HEADERS.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String]| -> String {
        let mut s = String::new();
        for (k, (c, w)) in row.iter().zip(&width).enumerate() {
            if k > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            if k == 0 {
                let _ = write!(s, "{c}{}", " ".repeat(pad));
            } else {
                let _ = write!(s, "{}{c}", " ".repeat(pad));
            }
        }
        s.trim_end().to_owned() + "\n"
    };
    let header: Vec<String> = HEADERS.iter().map(|h| h.to_string()).collect();
    let mut out = line(&header);
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (width.len() - 1)));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row));
    }
    out
}

pub fn render_markdown(reports: &[AssignmentReport]) -> String {
    let mut out = format!("| {} |\n", HEADERS.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(HEADERS.len())));
    for r in reports {
        out.push_str(&format!("| {} |\n", cells(r).join(" | ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{instance, reviewer};
    use crate::model::{Continent, ProfBg, Seniority};
    use approx::assert_abs_diff_eq;
    use Continent::*;

    fn members() -> Vec<Reviewer> {
        vec![
            reviewer("i", ProfBg::Both, Seniority::Senior, &[Europe], 1),
            reviewer("k", ProfBg::Academia, Seniority::Senior, &[Asia], 1),
        ]
    }

    #[test]
    fn worked_example_components() {
        let m = members();
        let parts = set_diversity("j", &[&m[0], &m[1]]).unwrap();
        assert_eq!(parts.background, 0.5);
        assert_eq!(parts.location, 1.0);
        assert_abs_diff_eq!(parts.seniority, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(parts.total(), 11.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn diversity_extremes() {
        let low = [
            reviewer("a", ProfBg::Industry, Seniority::Senior, &[Europe], 1),
            reviewer("b", ProfBg::Industry, Seniority::Senior, &[Europe], 1),
            reviewer("c", ProfBg::Industry, Seniority::Senior, &[Europe], 1),
        ];
        let d = set_diversity("p", &low.iter().collect::<Vec<_>>()).unwrap();
        assert_abs_diff_eq!(d.total(), 1.0 / 3.0, epsilon = 1e-15);
        let high = [
            reviewer("a", ProfBg::Both, Seniority::Senior, &[Europe], 1),
            reviewer("b", ProfBg::Both, Seniority::Advanced, &[Asia], 1),
            reviewer("c", ProfBg::Both, Seniority::Junior, &[Africa], 1),
        ];
        let d = set_diversity("p", &high.iter().collect::<Vec<_>>()).unwrap();
        assert_abs_diff_eq!(d.total(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn single_member_sets_are_rejected() {
        let m = members();
        assert!(matches!(
            set_diversity("p", &[&m[0]]),
            Err(MetricsError::SetTooSmall(_))
        ));
    }

    #[test]
    fn fairness_is_minimum_paper_sum() {
        let pc = vec![
            reviewer("a", ProfBg::Both, Seniority::Senior, &[Europe], 2),
            reviewer("b", ProfBg::Both, Seniority::Senior, &[Asia], 2),
            reviewer("c", ProfBg::Both, Seniority::Senior, &[Africa], 2),
        ];
        let mut inst = instance(pc, 2, 0.5, 3);
        let mut a = Assignment::new(3);
        a.insert("p0", vec!["a".into(), "b".into(), "c".into()]);
        assert_abs_diff_eq!(fairness(&a, &inst).unwrap(), 6.0, epsilon = 1e-12);
        inst.sim_pc.set(0, 1, 0.0);
        inst.sim_pc.set(1, 1, 0.0);
        inst.sim_pc.set(2, 1, 0.6);
        a.insert("p1", vec!["a".into(), "b".into(), "c".into()]);
        assert_abs_diff_eq!(fairness(&a, &inst).unwrap(), 4.5, epsilon = 1e-12);
        assert!(fairness(&Assignment::new(3), &inst).is_err());
    }

    #[test]
    fn dependency_percentage() {
        let mut dep = DependencyMatrix::new();
        dep.add("a", "b").unwrap();
        let mut a = Assignment::new(2);
        a.insert("p0", vec!["a".into(), "b".into()]);
        a.insert("p1", vec!["a".into(), "c".into()]);
        assert_eq!(dependency_pct(&a, &dep), 50.0);
        dep.remove("a", "b");
        assert_eq!(dependency_pct(&a, &dep), 0.0);
    }

    #[test]
    fn workload_counts_original_members_only() {
        let mut pc = vec![
            reviewer("a", ProfBg::Both, Seniority::Senior, &[Europe], 3),
            reviewer("b", ProfBg::Both, Seniority::Senior, &[Asia], 3),
            reviewer("x", ProfBg::Both, Seniority::Senior, &[Asia], 3),
        ];
        pc[2].origin = Origin::Inserted;
        let mut a = Assignment::new(1);
        for p in ["p0", "p1", "p2"] {
            a.insert(p, vec!["a".into()]);
        }
        let w = workload_stats(&a, &pc);
        assert_eq!(w.mean_per_used_reviewer, 3.0);
        assert_eq!(w.mean_per_pc_member, 1.5);
        assert_eq!(w.unused_pc, 1);
    }

    #[test]
    fn kl_average_of_identical_profiles_is_zero() {
        let mut profiles = HashMap::new();
        for r in ["a", "b", "c"] {
            profiles.insert(r.to_string(), TermCounts::from_text("graph flow network"));
        }
        let mut a = Assignment::new(3);
        a.insert("p0", vec!["a".into(), "b".into(), "c".into()]);
        assert_eq!(avg_textual_diversity(&a, &profiles).unwrap(), 0.0);
    }

    #[test]
    fn kl_two_term_closed_form() {
        // counts (3,1) vs (1,3) over {x, y}; smoothed to (4/6, 2/6) and (2/6, 4/6)
        let mut profiles = HashMap::new();
        profiles.insert("a".to_string(), TermCounts::from_text("xx xx xx yy"));
        profiles.insert("b".to_string(), TermCounts::from_text("xx yy yy yy"));
        let mut a = Assignment::new(2);
        a.insert("p0", vec!["a".into(), "b".into()]);
        let (p, q) = (2.0f64 / 3.0, 1.0f64 / 3.0);
        let one_way = p * (p / q).ln() + q * (q / p).ln();
        let got = avg_textual_diversity(&a, &profiles).unwrap();
        assert_abs_diff_eq!(got, one_way, epsilon = 1e-12);
        let mut swapped = Assignment::new(2);
        swapped.insert("p0", vec!["b".into(), "a".into()]);
        assert_eq!(avg_textual_diversity(&swapped, &profiles).unwrap(), got);
    }

    #[test]
    fn ndcg_values() {
        assert_eq!(ndcg(&[3.0, 2.0, 1.0]).unwrap(), 1.0);
        assert_eq!(ndcg(&[5.0]).unwrap(), 1.0);
        let dcg = |a: f64, b: f64, c: f64| a + b / 3f64.log2() + c / 2.0;
        assert_abs_diff_eq!(
            ndcg(&[1.0, 2.0, 3.0]).unwrap(),
            dcg(1.0, 2.0, 3.0) / dcg(3.0, 2.0, 1.0),
            epsilon = 1e-12
        );
        assert_eq!(ndcg(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(ndcg(&[]).is_err());
    }

    #[test]
    fn table_has_column_order() {
        let r = AssignmentReport {
            method: "greedy".into(),
            mean_workload_per_used_reviewer: 3.0,
            mean_workload_per_pc_member: 2.5,
            unused_pc_count: 4,
            dep_pct: 12.5,
            fairness: 4.2,
            avg_kl: 1.25,
            div: Some(1.5),
            j: 30.0,
        };
        let t = render_table(std::slice::from_ref(&r));
        let header = t.lines().next().unwrap();
        let pos: Vec<usize> = ["mW/R", "U", "Dep", "Γ", "KL", "Div"]
            .iter()
            .map(|h| header.find(h).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(render_markdown(&[r]).contains("| greedy | 3.00 (2.50) | 4 |"));
    }
}
