// The assignment network of a small instance, rendered as DOT.

use std::error::Error;

use revcover::datagen::{generate, GenConfig};
use revcover::flow::min_cost_feasible_flow;
use revcover::network::{build_network, extract_assignment, PairSet};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = generate(&GenConfig::preset("tiny-oracle")?)?;
    let pairs = PairSet::from_instance(&inst, 0.0);
    let lower = vec![0; inst.pc.len()];
    let upper: Vec<u32> = inst.pc.iter().map(|r| r.mu_upper).collect();
    let (net, layout) = build_network(&inst, &pairs, &lower, &upper, true)?;
    println!(
        "{} nodes, {} edges, {} decision arcs",
        net.node_count(),
        net.edges().len(),
        pairs.len()
    );

    // The relaxation may split a paper's units over several reviewers;
    // the printed DOT shows whatever the LP optimum chose.
    let result = min_cost_feasible_flow(&net)?;
    let dot = layout.to_dot(&net, Some(&result));
    println!("{}", dot.lines().take(12).collect::<Vec<_>>().join("\n"));
    assert!(dot.starts_with("digraph"));

    match extract_assignment(&result.flow, &layout) {
        Ok(a) => println!(
            "relaxation happened to be integral: {} papers",
            a.sets.len()
        ),
        Err(e) => println!("relaxation is fractional: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
