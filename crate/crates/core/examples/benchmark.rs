// A small scenario run through the harness, printed as CSV.

use statlens::harness::{run_scenario, Scenario};

const SCENARIO: &str = r#"
name = "target-low-density"
trials = 4
base_seed = 7

[input]
shape = "sphere-cap"
points = 256

[noise]
kind = "subsample"
count = 128
applied_to = "target"

[[pipelines]]
descriptor = "none"

[[pipelines]]
metric = "euclidean"
descriptor = "eigen"

[[pipelines]]
metric = "mahalanobis"
descriptor = "eigen"
"#;

pub fn run() -> statlens::Result<()> {
    let scenario = Scenario::from_toml(SCENARIO)?;
    let report = run_scenario(&scenario)?;
    print!("{}", report.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() -> statlens::Result<()> {
    run()
}
