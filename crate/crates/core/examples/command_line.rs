// Driving the command-line front end in-process.

use std::error::Error;

use revcover::cli::{run_cli, EXIT_OK};

fn call(args: &[&str]) -> Result<String, Box<dyn Error>> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(
        std::iter::once("revcover").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    if code != EXIT_OK {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&err)).into());
    }
    Ok(String::from_utf8(out)?)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("revcover-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let inst = dir.join("instance.json");
    let assignment = dir.join("assignment.json");
    let (inst_s, assignment_s) = (inst.to_str().unwrap(), assignment.to_str().unwrap());

    print!(
        "{}",
        call(&["generate", "--preset", "tiny-oracle", "--out", inst_s])?
    );
    print!(
        "{}",
        call(&["assign", inst_s, "--tries", "3", "--out", assignment_s])?
    );
    print!(
        "{}",
        call(&["evaluate", inst_s, assignment_s, "--format", "markdown"])?
    );
    assert!(dir.join("assignment.json.manifest.json").exists());

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
