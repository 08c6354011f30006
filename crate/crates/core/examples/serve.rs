//! Start the service on an ephemeral port, load a schema, population
//! characteristics and model into it, and request a prediction.

use std::sync::Arc;

use rtimpute::population::estimate_characteristics;
use rtimpute::service::{handle_predict, EntityKind, PredictRequest, Store};
use rtimpute::survival::fit_cox;
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 2000,
        n_external: 100,
        ..SyntheticCohortSpec::default()
    };
    let data = generate_synthetic_cohorts(&spec, 9)?.local;
    let pc = estimate_characteristics(&data, &data.schema().covariates())?;
    let model = fit_cox(&data, &data.schema().predictors())?;

    let dir = std::env::temp_dir().join(format!("rtimpute-serve-{}", std::process::id()));
    let store = Arc::new(Store::open(&dir)?);
    store.put(EntityKind::Schema, "cvd", serde_json::to_string(data.schema())?.as_bytes())?;
    store.put(EntityKind::Popchar, "local", pc.to_json().as_bytes())?;
    store.put(EntityKind::Model, "cox", model.to_json().as_bytes())?;
    store.put(
        EntityKind::Binding,
        "default",
        br#"{"schema_id":"cvd","popchar_id":"local","model_id":"cox"}"#,
    )?;

    let req: PredictRequest = serde_json::from_str(
        r#"{"model_id":"cox","popchar_id":"local","method":"jmi_aux",
            "record":{"age":63,"gender":1,"sbp":150,"ldl":4.1}}"#,
    )?;
    let direct = handle_predict(&store, &req)?;
    println!("in-process: risk {:.4}, imputed {:?}", direct.risk, direct.imputed_names);

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let server = tokio::spawn(rtimpute::service::serve(listener, store.clone()));
        println!("listening on http://{addr}");

        let reply = reqwest::Client::new()
            .post(format!("http://{addr}/v1/predict"))
            .json(&req)
            .send()
            .await?
            .text()
            .await?;
        println!("over HTTP: {reply}");
        server.abort();
        Ok::<(), Box<dyn std::error::Error>>(())
    })?;
    let _ = std::fs::remove_dir_all(dir);
    Ok(())
}
