// Growing the committee until every submission has diverse expert
// reviewers. Two submissions come from a topic nobody on the committee
// works on, so candidates from the external pool have to be invited.

use std::error::Error;

use revcover::datagen::{generate, planted_papers, GenConfig};
use revcover::divers::{run, MainConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let gen = GenConfig {
        n_papers: 16,
        n_pc: 14,
        n_erc: 40,
        n_topics: 5,
        words_per_doc: 60,
        planted_problem_papers: 2,
        seed: 11,
        ..GenConfig::default()
    };
    let inst = generate(&gen)?;
    let planted: Vec<&str> = planted_papers(&gen)
        .into_iter()
        .map(|j| inst.submissions[j].id.as_str())
        .collect();
    println!("off-topic submissions: {}", planted.join(", "));

    let cfg = MainConfig {
        theta: 0.1,
        tries: 3,
        sample_runs: 4,
        ..MainConfig::default()
    };
    let out = run(&inst, &cfg)?;
    println!(
        "{} rounds, {} invited reviewers used, Div {:.3}",
        out.iterations,
        out.suggestions.len(),
        out.div
    );
    print!("{}", out.suggestions.to_markdown());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
