// Seeded synthetic instances and their JSON form.

use std::error::Error;

use revcover::datagen::{generate, GenConfig};
use revcover::model::{instance_from_json, instance_to_json};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for name in GenConfig::preset_names() {
        let cfg = GenConfig::preset(name)?;
        println!(
            "{name}: {} submissions, {} committee, {} candidates",
            cfg.n_papers, cfg.n_pc, cfg.n_erc
        );
    }

    let cfg = GenConfig::preset("tiny-oracle")?.with_seed(42);
    let a = instance_to_json(&generate(&cfg)?);
    let b = instance_to_json(&generate(&cfg)?);
    assert_eq!(a, b, "same seed, same bytes");

    let back = instance_from_json(&a)?;
    assert_eq!(instance_to_json(&back), a);
    println!("seed 42 instance: {} bytes of JSON", a.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
