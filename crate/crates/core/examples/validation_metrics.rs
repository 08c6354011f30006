//! Apparent performance of a fitted Cox model: C-index, calibration in the
//! large, calibration slope, E/O, grouped Kaplan-Meier calibration and a
//! decision curve.

use rtimpute::metrics::{
    calibration_in_the_large, calibration_slope, concordance, decision_curve, default_thresholds,
    grouped_km_calibration, oe_ratio,
};
use rtimpute::survival::{expected_from_lp, fit_cox, ten_year_risk, TEN_YEARS_DAYS};
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 4000,
        n_external: 100,
        ..SyntheticCohortSpec::default()
    };
    let data = generate_synthetic_cohorts(&spec, 21)?.local;
    let predictors = data.schema().predictors();
    let model = fit_cox(&data, &predictors)?;

    let cols: Vec<usize> = predictors.iter().map(|p| data.column_index(p)).collect::<Result<_, _>>()?;
    let lp: Vec<f64> = (0..data.n_rows())
        .map(|i| model.lp_aligned(&cols.iter().map(|&c| data.value(i, c)).collect::<Vec<_>>()))
        .collect();
    let time = data.times();
    let status = data.statuses();
    let expected: Vec<f64> = lp.iter().zip(&time).map(|(l, t)| expected_from_lp(&model, *l, *t)).collect();

    println!("C-index   {:.4}", concordance(&lp, &time, &status)?);
    println!("CITL      {:.4}", calibration_in_the_large(&expected, &status)?);
    println!("slope     {:.4}", calibration_slope(&lp, &expected, &status)?);
    println!("E/O       {:.4}", oe_ratio(&expected, &status)?);

    let risk: Vec<f64> = lp.iter().map(|l| ten_year_risk(&model, *l)).collect::<Result<_, _>>()?;
    let groups = grouped_km_calibration(&risk, &time, &status, 10, TEN_YEARS_DAYS)?;
    println!("\ndecile  predicted  observed");
    for (k, g) in groups.groups.iter().enumerate() {
        println!("{:>6}  {:>9.3}  {:>8.3}", k + 1, g.mean_predicted_risk, g.km_observed_risk);
    }

    let dca = decision_curve(&risk, &time, &status, &default_thresholds(), TEN_YEARS_DAYS)?;
    println!("\nthreshold  NB model  NB treat-all");
    for i in (4..dca.thresholds.len()).step_by(5) {
        println!("{:>9.2}  {:>8.4}  {:>12.4}", dca.thresholds[i], dca.nb_model[i], dca.nb_all[i]);
    }
    Ok(())
}
