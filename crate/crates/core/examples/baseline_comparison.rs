// Similarity-only baselines next to the diversity-aware routine.

use std::error::Error;

use revcover::baselines::{greedy_assign, iterative_worst_off};
use revcover::datagen::{generate, GenConfig};
use revcover::divers::{run, MainConfig};
use revcover::metrics::{render_table, report};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = generate(&GenConfig {
        n_papers: 12,
        n_pc: 12,
        n_erc: 24,
        words_per_doc: 60,
        seed: 5,
        ..GenConfig::default()
    })?;
    let upper: Vec<u32> = inst.pc.iter().map(|r| r.mu_upper).collect();

    let greedy = greedy_assign(&inst, &upper)?;
    let worst_off = iterative_worst_off(&inst, &upper, 5, 1)?;
    let divers = run(
        &inst,
        &MainConfig {
            tries: 3,
            ..MainConfig::default()
        },
    )?;

    let rows = vec![
        report("greedy", &greedy, &inst, &inst.pc)?,
        report(
            "iterative-worst-off",
            &worst_off.assignment,
            &inst,
            &inst.pc,
        )?,
        report(
            "D θ=0",
            &divers.assignment,
            &divers.effective_instance,
            &inst.pc,
        )?,
    ];
    print!("{}", render_table(&rows));
    println!("worst-off trace: {:?}", worst_off.trace);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
