//! Every example must run to completion.

mod similarity_scores {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/similarity_scores.rs"
    ));
}

#[test]
fn similarity_scores_runs() {
    similarity_scores::run_example().expect("similarity_scores example should run");
}

mod bounded_flow {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/bounded_flow.rs"
    ));
}

#[test]
fn bounded_flow_runs() {
    bounded_flow::run_example().expect("bounded_flow example should run");
}

mod assignment_network {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/assignment_network.rs"
    ));
}

#[test]
fn assignment_network_runs() {
    assignment_network::run_example().expect("assignment_network example should run");
}

mod diverse_assignment {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/diverse_assignment.rs"
    ));
}

#[test]
fn diverse_assignment_runs() {
    diverse_assignment::run_example().expect("diverse_assignment example should run");
}

mod committee_extension {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/committee_extension.rs"
    ));
}

#[test]
fn committee_extension_runs() {
    committee_extension::run_example().expect("committee_extension example should run");
}

mod baseline_comparison {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/baseline_comparison.rs"
    ));
}

#[test]
fn baseline_comparison_runs() {
    baseline_comparison::run_example().expect("baseline_comparison example should run");
}

mod synthetic_conference {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/synthetic_conference.rs"
    ));
}

#[test]
fn synthetic_conference_runs() {
    synthetic_conference::run_example().expect("synthetic_conference example should run");
}

mod command_line {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/command_line.rs"
    ));
}

#[test]
fn command_line_runs() {
    command_line::run_example().expect("command_line example should run");
}
