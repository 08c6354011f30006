//! External study: the model is refitted leave-one-out on the local cohort,
//! but imputation uses characteristics of a different population.

use rtimpute::metrics::membership_c;
use rtimpute::report::summarize;
use rtimpute::simulation::{default_scenarios, run_loocv_simulation, SimulationConfig, Study};
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 1500,
        n_external: 1500,
        ..SyntheticCohortSpec::default()
    };
    let c = generate_synthetic_cohorts(&spec, 2)?;
    let common: Vec<String> = c
        .external
        .schema()
        .covariates()
        .into_iter()
        .filter(|v| c.local.schema().get(v).is_some())
        .collect();
    let m = membership_c(&c.local, &c.external, &common)?;
    println!("membership c = {:.3}\n", m.c);

    let mut config = SimulationConfig::new(Study::External);
    config.scenarios = default_scenarios().into_iter().filter(|s| [2, 5].contains(&s.id)).collect();
    config.fast_loocv = true;
    let rows = run_loocv_simulation(&c.local, Some(&c.external), &config)?;
    print!("{}", summarize(&rows, &default_scenarios())?.render_table(Some(4)));
    Ok(())
}
