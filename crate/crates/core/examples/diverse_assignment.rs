// One call to the assignment subroutine: similarity-optimal reviewer
// sets that are also diverse and free of dependencies.

use std::error::Error;

use revcover::assign::{sub, SubroutineConfig};
use revcover::datagen::{generate, GenConfig};
use revcover::model::is_feasible;
use revcover::network::PairSet;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = generate(&GenConfig::preset("tiny-oracle")?)?;
    let pairs = PairSet::from_instance(&inst, 0.0);
    let lower = vec![0; inst.pc.len()];
    let upper: Vec<u32> = inst.pc.iter().map(|r| r.mu_upper).collect();

    let out = sub(&inst, &pairs, &lower, &upper, &SubroutineConfig::default())?;
    println!(
        "objective {:.3}, {} nodes, optimal: {}",
        out.objective, out.nodes_explored, out.proven_optimal
    );
    for (paper, reviewers) in &out.assignment.sets {
        println!("  {paper}: {}", reviewers.join(", "));
    }
    let check = is_feasible(&out.assignment, &inst, true, 0.0)?;
    assert!(check.is_feasible(), "{:?}", check.violations);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
