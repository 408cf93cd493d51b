//! Sweeps (k1, k2) over smooth data through the batch front end.

use muchlab::cli::run_config;
use muchlab::config::{Mode, RunConfig};

const CONFIG: &str = r#"
n = 128
t_end = 0.5

[initial]
kind = "sine"
offset = 0.5
amplitude = 0.1

[sweep]
k1 = [0.0, 0.5, 1.0]
k2 = [0.5, 1.0]

[output]
snapshots = false
plot_script = false
"#;

fn main() -> muchlab::Result<()> {
    let dir = std::env::temp_dir().join("muchlab-sweep-example");
    let mut cfg = RunConfig::from_toml(CONFIG, None)?;
    cfg.output.dir = dir.clone();
    cfg.validate(Mode::Sweep)?;
    let status = run_config(Mode::Sweep, &cfg, std::env::var("MUCHLAB_THREADS").ok().as_deref())?;
    println!("exit code {}", status.code());
    print!("{}", std::fs::read_to_string(dir.join("sweep.csv")).map_err(|e| muchlab::Error::Io(e.to_string()))?);
    Ok(())
}
