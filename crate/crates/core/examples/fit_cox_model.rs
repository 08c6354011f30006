//! Fit a Cox model on a synthetic cohort and predict 10-year risk for a few
//! patients.

use std::collections::BTreeMap;

use rtimpute::survival::{fit_cox_detailed, predict, TEN_YEARS_DAYS};
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 3000,
        n_external: 100,
        ..SyntheticCohortSpec::default()
    };
    let cohorts = generate_synthetic_cohorts(&spec, 5)?;
    let data = &cohorts.local;
    let predictors = data.schema().predictors();
    let fit = fit_cox_detailed(data, &predictors)?;

    println!("converged after {} iterations, loglik {:.4}", fit.iterations, fit.loglik);
    println!("{:<8} {:>9} {:>9}", "", "fitted", "true");
    for (name, b) in predictors.iter().zip(fit.model.beta()) {
        println!("{name:<8} {b:>9.4} {:>9.4}", spec.beta.get(name).copied().unwrap_or(0.0));
    }

    let names = data.schema().names();
    for row in 0..3 {
        let values: BTreeMap<String, f64> = names
            .iter()
            .zip(data.row(row))
            .map(|(n, v)| (n.clone(), *v))
            .collect();
        let p = predict(&fit.model, &values, TEN_YEARS_DAYS)?;
        println!("patient {row}: lp {:.3}, 10-year risk {:.3}", p.lp, p.risk_10y);
    }
    Ok(())
}
