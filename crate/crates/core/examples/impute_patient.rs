//! Estimate population characteristics from a synthetic cohort and impute a
//! patient with only age, gender and LDL cholesterol recorded.

use std::sync::Arc;

use rtimpute::imputation::{impute, ImputationMethod, PatientRecord};
use rtimpute::population::estimate_characteristics;
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 2000,
        n_external: 200,
        ..SyntheticCohortSpec::default()
    };
    let cohorts = generate_synthetic_cohorts(&spec, 11)?;
    let data = &cohorts.local;
    let schema = Arc::new(data.schema().clone());
    let pc = estimate_characteristics(data, &schema.covariates())?;

    let record = PatientRecord::new(
        schema,
        [("age", Some(67.0)), ("gender", Some(1.0)), ("ldl", Some(4.6))],
    )?;

    for method in ImputationMethod::ALL {
        let r = impute(&record, &pc, method)?;
        println!("{}:", method.label());
        for name in &r.imputed_names {
            let note = if r.probability_like.contains(name) { " (probability-like)" } else { "" };
            println!(
                "  {name:<9} {:>9.3}  sd {:>7.3}{note}",
                r.completed[name], r.conditional_sd[name]
            );
        }
    }
    Ok(())
}
