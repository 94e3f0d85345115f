//! Run a bundled scenario config and list the files it wrote.
//!
//! `cargo run --example run_scenario -- examples/configs/triple_well_window.toml`

use std::path::PathBuf;

use esqpt_thermo::scenario::{run_scenario, RunOptions, Scenario, ToleranceProfile};

fn main() -> esqpt_thermo::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("examples/configs/well_and_oscillators.toml")
        });
    let scenario = Scenario::from_path(&path)?;
    let out = std::env::temp_dir().join("esqpt-thermo-example");
    let report = run_scenario(
        &scenario,
        &RunOptions {
            out_dir: out,
            threads: None,
            profile: ToleranceProfile::Fast,
        },
    )?;
    println!("{}", report.directory.display());
    for f in &report.files {
        println!("  {}", f.file_name().unwrap_or_default().to_string_lossy());
    }
    for (output, err) in &report.failures {
        println!("failed: {output}: {err}");
    }
    Ok(())
}
