use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{Assignment, ConferenceInstance, Continent, ModelError, Reviewer, COI};

/// One failed clause of the feasibility predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingSubmission {
        paper: String,
    },
    WrongSetSize {
        paper: String,
        expected: usize,
        got: usize,
    },
    DuplicateReviewer {
        paper: String,
        reviewer: String,
    },
    ConflictOfInterest {
        paper: String,
        reviewer: String,
    },
    BelowThreshold {
        paper: String,
        reviewer: String,
        similarity: f64,
        theta: f64,
    },
    OverCapacity {
        reviewer: String,
        load: usize,
        upper: u32,
    },
    UnderLoaded {
        reviewer: String,
        load: usize,
        lower: u32,
    },
    Dependency {
        paper: String,
        first: String,
        second: String,
    },
    NoIndustry {
        paper: String,
    },
    NoAcademia {
        paper: String,
    },
    NoSenior {
        paper: String,
    },
    SharedLocation {
        paper: String,
        continent: Continent,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            MissingSubmission { paper } => write!(f, "{paper}: no reviewer set"),
            WrongSetSize {
                paper,
                expected,
                got,
            } => {
                write!(f, "{paper}: set size {got}, expected {expected}")
            }
            DuplicateReviewer { paper, reviewer } => {
                write!(f, "{paper}: reviewer {reviewer} listed twice")
            }
            ConflictOfInterest { paper, reviewer } => {
                write!(f, "{paper}: conflict of interest with {reviewer}")
            }
            BelowThreshold {
                paper,
                reviewer,
                similarity,
                theta,
            } => write!(
                f,
                "{paper}: similarity of {reviewer} is {similarity:.4} < theta {theta}"
            ),
            OverCapacity {
                reviewer,
                load,
                upper,
            } => write!(f, "{reviewer}: load {load} exceeds upper bound {upper}"),
            UnderLoaded {
                reviewer,
                load,
                lower,
            } => write!(f, "{reviewer}: load {load} below lower bound {lower}"),
            Dependency {
                paper,
                first,
                second,
            } => write!(f, "{paper}: dependency in set ({first}, {second})"),
            NoIndustry { paper } => write!(f, "{paper}: background: no industry-capable member"),
            NoAcademia { paper } => write!(f, "{paper}: background: no academia-capable member"),
            NoSenior { paper } => write!(f, "{paper}: seniority: no senior member"),
            SharedLocation { paper, continent } => {
                write!(f, "{paper}: location: all share {continent}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every clause of the feasibility predicate: set sizes, COI and
/// threshold, reviewer load bounds, reviewer independence and the three
/// diversity requirements.
///
/// Reviewers may come from either pool of `instance`; load bounds are
/// checked for every committee member and for any pool reviewer that
/// appears in the assignment.
pub fn is_feasible(
    assignment: &Assignment,
    instance: &ConferenceInstance,
    enforce_lower: bool,
    theta: f64,
) -> Result<FeasibilityReport, ModelError> {
    instance.validate()?;
    let index = instance.reviewer_index();
    let papers: BTreeMap<&str, usize> = instance
        .submissions
        .iter()
        .enumerate()
        .map(|(j, s)| (s.id.as_str(), j))
        .collect();
    for (paper, set) in assignment.iter() {
        if !papers.contains_key(paper.as_str()) {
            return Err(ModelError::UnknownSubmission(paper.clone()));
        }
        for r in set {
            if !index.contains_key(r.as_str()) {
                return Err(ModelError::UnknownReviewer(r.clone()));
            }
        }
    }

    let lambda = instance.lambda;
    let mut violations = Vec::new();
    for sub in &instance.submissions {
        let paper = sub.id.clone();
        let j = papers[sub.id.as_str()];
        let Some(set) = assignment.reviewers(&sub.id) else {
            violations.push(Violation::MissingSubmission { paper });
            continue;
        };
        if set.len() != lambda {
            violations.push(Violation::WrongSetSize {
                paper: paper.clone(),
                expected: lambda,
                got: set.len(),
            });
        }
        let mut seen = HashSet::new();
        for r in set {
            if !seen.insert(r.as_str()) {
                violations.push(Violation::DuplicateReviewer {
                    paper: paper.clone(),
                    reviewer: r.clone(),
                });
            }
        }
        let members: Vec<&Reviewer> = set
            .iter()
            .map(|r| {
                let (pool, i) = index[r.as_str()];
                instance.reviewer(pool, i)
            })
            .collect();
        for r in set {
            let (pool, i) = index[r.as_str()];
            let s = instance.similarity(pool, i, j);
            if s == COI {
                violations.push(Violation::ConflictOfInterest {
                    paper: paper.clone(),
                    reviewer: r.clone(),
                });
            } else if s < theta {
                violations.push(Violation::BelowThreshold {
                    paper: paper.clone(),
                    reviewer: r.clone(),
                    similarity: s,
                    theta,
                });
            }
        }
        for (a, ra) in set.iter().enumerate() {
            for rb in &set[a + 1..] {
                if ra != rb && instance.dep.depends(ra, rb) {
                    violations.push(Violation::Dependency {
                        paper: paper.clone(),
                        first: ra.clone(),
                        second: rb.clone(),
                    });
                }
            }
        }
        violations.extend(diversity_violations(&paper, &members));
    }

    let loads = assignment.loads();
    let mut checked = HashSet::new();
    for r in &instance.pc {
        checked.insert(r.id.as_str());
        let load = loads.get(r.id.as_str()).copied().unwrap_or(0);
        load_violations(r, load, enforce_lower, &mut violations);
    }
    for (&id, &load) in &loads {
        if checked.contains(id) {
            continue;
        }
        let (pool, i) = index[id];
        load_violations(
            instance.reviewer(pool, i),
            load,
            enforce_lower,
            &mut violations,
        );
    }
    Ok(FeasibilityReport { violations })
}

fn load_violations(r: &Reviewer, load: usize, enforce_lower: bool, out: &mut Vec<Violation>) {
    if load > r.mu_upper as usize {
        out.push(Violation::OverCapacity {
            reviewer: r.id.clone(),
            load,
            upper: r.mu_upper,
        });
    }
    if enforce_lower && load < r.mu_lower as usize {
        out.push(Violation::UnderLoaded {
            reviewer: r.id.clone(),
            load,
            lower: r.mu_lower,
        });
    }
}

/// Diversity clauses for one reviewer set.
pub(crate) fn diversity_violations(paper: &str, members: &[&Reviewer]) -> Vec<Violation> {
    let mut out = Vec::new();
    if !members.iter().any(|r| r.prof_bg.industry_capable()) {
        out.push(Violation::NoIndustry {
            paper: paper.to_owned(),
        });
    }
    if !members.iter().any(|r| r.prof_bg.academia_capable()) {
        out.push(Violation::NoAcademia {
            paper: paper.to_owned(),
        });
    }
    if !members.iter().any(|r| r.is_senior()) {
        out.push(Violation::NoSenior {
            paper: paper.to_owned(),
        });
    }
    for c in Continent::ALL {
        if !members.is_empty() && members.iter().all(|r| r.locations.contains(&c)) {
            out.push(Violation::SharedLocation {
                paper: paper.to_owned(),
                continent: c,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::*;
    use super::*;
    use proptest::prelude::*;

    fn base() -> (ConferenceInstance, Assignment) {
        let pc = vec![
            reviewer(
                "i",
                ProfBg::Both,
                Seniority::Senior,
                &[Continent::Europe],
                3,
            ),
            reviewer(
                "k",
                ProfBg::Academia,
                Seniority::Senior,
                &[Continent::Asia],
                3,
            ),
            reviewer(
                "r",
                ProfBg::Industry,
                Seniority::Junior,
                &[Continent::NorthAmerica],
                3,
            ),
        ];
        let inst = instance(pc, 1, 0.5, 3);
        let mut a = Assignment::new(3);
        a.insert("p0", vec!["i".into(), "k".into(), "r".into()]);
        (inst, a)
    }

    #[test]
    fn diverse_independent_set_is_feasible() {
        let (inst, a) = base();
        let rep = is_feasible(&a, &inst, true, 0.0).unwrap();
        assert!(rep.is_feasible(), "{:?}", rep.violations);
    }

    #[test]
    fn dependency_violates() {
        let (mut inst, a) = base();
        inst.dep.add("i", "k").unwrap();
        let rep = is_feasible(&a, &inst, false, 0.0).unwrap();
        assert!(!rep.is_feasible());
        assert!(rep.violations[0].to_string().contains("dependency in set"));
    }

    #[test]
    fn shared_continent_violates() {
        let (mut inst, a) = base();
        for r in &mut inst.pc {
            r.locations = [Continent::Europe].into_iter().collect();
        }
        let rep = is_feasible(&a, &inst, false, 0.0).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(
            rep.violations[0].to_string(),
            "p0: location: all share Europe"
        );
    }

    #[test]
    fn reports_every_failed_clause() {
        let (mut inst, mut a) = base();
        for r in &mut inst.pc {
            r.prof_bg = ProfBg::Industry;
            r.seniority = Seniority::Junior;
            r.mu_lower = 2;
        }
        inst.sim_pc.set(2, 0, COI);
        inst.sim_pc.set(1, 0, 0.1);
        a.insert("p0", vec!["i".into(), "k".into(), "r".into()]);
        let rep = is_feasible(&a, &inst, true, 0.2).unwrap();
        let kinds: Vec<String> = rep.violations.iter().map(|v| v.to_string()).collect();
        assert!(kinds.iter().any(|s| s.contains("conflict of interest")));
        assert!(kinds.iter().any(|s| s.contains("< theta")));
        assert!(kinds.iter().any(|s| s.contains("no academia")));
        assert!(kinds.iter().any(|s| s.contains("no senior")));
        assert_eq!(
            rep.violations
                .iter()
                .filter(|v| matches!(v, Violation::UnderLoaded { .. }))
                .count(),
            3
        );
    }

    #[test]
    fn capacity_and_size_clauses() {
        let (mut inst, _) = base();
        inst.pc[0].mu_upper = 1;
        let inst2 = {
            let mut x = instance(inst.pc.clone(), 2, 0.5, 3);
            x.pc = inst.pc.clone();
            x
        };
        let mut a = Assignment::new(3);
        a.insert("p0", vec!["i".into(), "k".into(), "r".into()]);
        a.insert("p1", vec!["i".into(), "k".into()]);
        let rep = is_feasible(&a, &inst2, false, 0.0).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::OverCapacity { load: 2, .. })));
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::WrongSetSize { got: 2, .. })));
    }

    #[test]
    fn unknown_ids_are_structural_errors() {
        let (inst, _) = base();
        let mut a = Assignment::new(3);
        a.insert("p0", vec!["i".into(), "k".into(), "zz".into()]);
        assert!(matches!(
            is_feasible(&a, &inst, false, 0.0),
            Err(ModelError::UnknownReviewer(_))
        ));
        let mut a = Assignment::new(3);
        a.insert("nope", vec![]);
        assert!(matches!(
            is_feasible(&a, &inst, false, 0.0),
            Err(ModelError::UnknownSubmission(_))
        ));
    }

    fn arb_case() -> impl Strategy<Value = (ConferenceInstance, Assignment, f64, f64)> {
        let rev = (0usize..3, 0usize..3, 1u8..128u8, 1u32..3);
        (
            prop::collection::vec(rev, 4..7),
            prop::collection::vec(0.0f64..1.0, 12),
            prop::collection::vec(any::<bool>(), 6),
            0.0f64..0.6,
            0.0f64..0.6,
        )
            .prop_map(|(revs, sims, deps, t1, t2)| {
                let pc: Vec<Reviewer> = revs
                    .iter()
                    .enumerate()
                    .map(|(i, &(bg, sen, locmask, up))| {
                        let locs: Vec<Continent> = Continent::ALL
                            .iter()
                            .copied()
                            .filter(|c| locmask & (1 << c.index()) != 0)
                            .collect();
                        reviewer(
                            &format!("r{i}"),
                            ProfBg::ALL[bg],
                            Seniority::ALL[sen],
                            &locs,
                            up,
                        )
                    })
                    .collect();
                let n = pc.len();
                let mut inst = instance(pc, 2, 0.5, 3);
                for i in 0..n {
                    for j in 0..2 {
                        inst.sim_pc.set(i, j, sims[(i * 2 + j) % sims.len()]);
                    }
                }
                for (d, flag) in deps.iter().enumerate() {
                    if *flag {
                        let (a, b) = (d % n, (d + 1 + d / n) % n);
                        if a != b {
                            inst.dep.add(&format!("r{a}"), &format!("r{b}")).unwrap();
                        }
                    }
                }
                let mut a = Assignment::new(3);
                a.insert("p0", vec!["r0".into(), "r1".into(), "r2".into()]);
                a.insert("p1", vec!["r1".into(), "r2".into(), "r3".into()]);
                (inst, a, t1.min(t2), t1.max(t2))
            })
    }

    proptest! {
        #[test]
        fn pure_and_monotone_in_theta((inst, a, lo, hi) in arb_case()) {
            let at_hi = is_feasible(&a, &inst, true, hi).unwrap();
            prop_assert_eq!(&at_hi, &is_feasible(&a, &inst, true, hi).unwrap());
            if at_hi.is_feasible() {
                prop_assert!(is_feasible(&a, &inst, true, lo).unwrap().is_feasible());
            }
        }

        #[test]
        fn removing_dependency_never_breaks((inst, a, lo, _hi) in arb_case()) {
            let before = is_feasible(&a, &inst, false, lo).unwrap().is_feasible();
            for (x, y) in inst.dep.pairs() {
                let mut relaxed = inst.clone();
                relaxed.dep.remove(&x, &y);
                let after = is_feasible(&a, &relaxed, false, lo).unwrap().is_feasible();
                prop_assert!(!before || after);
            }
        }
    }
}
