//! External-model study: a model developed elsewhere is applied to every
//! local patient, with imputation from the external population. No
//! leave-one-out refitting.

use rtimpute::report::summarize;
use rtimpute::simulation::{default_scenarios, run_external_model_simulation, SimulationConfig, Study};
use rtimpute::survival::fit_cox;
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 3000,
        n_external: 3000,
        ..SyntheticCohortSpec::default()
    };
    let c = generate_synthetic_cohorts(&spec, 4)?;
    let model = fit_cox(&c.external, &c.local.schema().predictors())?;

    let config = SimulationConfig::new(Study::ExternalModel);
    let rows = run_external_model_simulation(&c.local, &c.external, &model, &config)?;
    print!("{}", summarize(&rows, &default_scenarios())?.render_table(Some(4)));
    Ok(())
}
