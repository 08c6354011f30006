//! Local study: leave-one-out over a synthetic cohort with population
//! characteristics from the remaining local patients.
//!
//! `cargo run --release --example study_local -- [n] [--fast]`

use rtimpute::report::summarize;
use rtimpute::simulation::{default_scenarios, run_loocv_simulation, SimulationConfig, Study};
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.iter().find_map(|a| a.parse().ok()).unwrap_or(1000);
    let fast = args.iter().any(|a| a == "--fast");

    let spec = SyntheticCohortSpec {
        n_local: n,
        n_external: 100,
        ..SyntheticCohortSpec::default()
    };
    let cohorts = generate_synthetic_cohorts(&spec, 1)?;
    let mut config = SimulationConfig::new(Study::Local);
    config.scenarios = default_scenarios().into_iter().filter(|s| [1, 2, 5].contains(&s.id)).collect();
    config.fast_loocv = fast;

    let rows = run_loocv_simulation(&cohorts.local, None, &config)?;
    print!("{}", summarize(&rows, &default_scenarios())?.render_table(Some(4)));
    Ok(())
}
