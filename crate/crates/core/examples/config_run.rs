//! Drive the config-based runner in-process and print the record summary.

use brickwork::io::{run, RunConfig};

const CONFIG: &str = r#"
command = "lightcone"
seed = 17

[gate]
family = "lossless7"
params = [0.4, 0.3, -0.2, 0.1, 0.5, -0.6]

[chain]
sites = 1
t_max = 50

[encoding]
kind = "lossy7"
lambda0 = 0.3
"#;

fn main() -> brickwork::Result<()> {
    let config: RunConfig = CONFIG.parse()?;
    let out = run(&config, std::path::Path::new("."))?;
    println!("{}", out.record.summary());
    for (name, text) in &out.files {
        println!("{}: {} lines", name.display(), text.lines().count());
    }
    Ok(())
}
