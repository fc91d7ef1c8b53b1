// Feasible and cheapest flows on a network with lower bounds.

use std::error::Error;

use revcover::flow::{feasible_flow, min_cost_feasible_flow, BoundedFlowNetwork, FlowError};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // s -> {a, b} -> t, and a must carry at least 2 units.
    let mut net = BoundedFlowNetwork::new(4, 0, 3);
    let sa = net.add_edge(0, 1, 2, 3, 0);
    net.add_edge(0, 2, 0, 3, 0);
    net.add_edge(1, 3, 0, 3, 5);
    net.add_edge(2, 3, 0, 3, 1);
    net.set_required_value(Some(4));

    let any = feasible_flow(&net)?;
    println!(
        "feasible flow value {} (s->a carries {})",
        any.value, any.flow[sa]
    );

    let best = min_cost_feasible_flow(&net)?;
    println!("cheapest: cost {} with s->a = {}", best.cost, best.flow[sa]);
    assert_eq!(best.flow[sa], 2);
    assert_eq!(best.cost, 2 * 5 + 2);

    // Demanding more than the cut allows yields a certificate.
    net.set_required_value(Some(7));
    match min_cost_feasible_flow(&net) {
        Err(FlowError::Infeasible(cert)) => println!("value 7 infeasible: {cert:?}"),
        other => return Err(format!("expected infeasibility, got {other:?}").into()),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
