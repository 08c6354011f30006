//! Enriched study: external characteristics pooled with a growing sample of
//! local patients. Sampled patients are left out of the evaluation.

use rtimpute::imputation::ImputationMethod;
use rtimpute::simulation::{default_scenarios, evaluate, run_loocv_simulation, SimulationConfig, Study};
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 4000,
        n_external: 3000,
        ..SyntheticCohortSpec::default()
    };
    let c = generate_synthetic_cohorts(&spec, 3)?;
    let scenario = default_scenarios().into_iter().find(|s| s.id == 5).expect("scenario 5");

    println!("{:>6}  {:>8}  {:>8}  {:>8}", "m", "M-Imp", "JMI", "JMI-aux");
    for m in [100, 300, 750, 1500, 3000] {
        let mut config = SimulationConfig::new(Study::Enriched);
        config.scenarios = vec![scenario.clone()];
        config.enrichment_m = m;
        config.fast_loocv = true;
        let rows = run_loocv_simulation(&c.local, Some(&c.external), &config)?;
        let mse: Vec<f64> = ImputationMethod::ALL
            .iter()
            .map(|&method| evaluate(&rows, method, 5).map(|r| r.mse_lp))
            .collect::<Result<_, _>>()?;
        println!("{m:>6}  {:>8.4}  {:>8.4}  {:>8.4}", mse[0], mse[1], mse[2]);
    }
    Ok(())
}
