//! HTTP JSON service for real-time imputation and risk prediction.
//!
//! Schemas, population characteristics, models and bindings live in a
//! file-backed store under `data_dir/{schemas,popchars,models,bindings}`, one
//! JSON document per entity, replaced atomically on write. Requests never
//! persist patient data.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::imputation::{impute, ImputationMethod, ImputationResult, PatientRecord};
use crate::population::{
    write_atomic, PopcharDocument, PopulationCharacteristics, PopulationError, Variable,
    VariableSchema,
};
use crate::survival::{linear_predictor, risk_at_horizon, CoxModel, ModelDocument, SurvivalError, TEN_YEARS_DAYS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityKind {
    Schema,
    Popchar,
    Model,
    Binding,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [Self::Schema, Self::Popchar, Self::Model, Self::Binding];

    pub fn dir_name(self) -> &'static str {
        match self {
            Self::Schema => "schemas",
            Self::Popchar => "popchars",
            Self::Model => "models",
            Self::Binding => "bindings",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Schema => "schema",
            Self::Popchar => "popchar",
            Self::Model => "model",
            Self::Binding => "binding",
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("invalid id `{0}`")]
    InvalidId(String),
    #[error("unknown {} `{id}`", .kind.label())]
    NotFound { kind: EntityKind, id: String },
    #[error("{0}")]
    Conflict(String),
    #[error("{message}")]
    Unprocessable { code: &'static str, message: String },
    #[error("storage error: {0}")]
    Storage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::BadRequest(_) | Self::Validation(_) | Self::InvalidId(_) => StatusCode::BAD_REQUEST,
            Self::NotFound { .. } => StatusCode::NOT_FOUND,
            Self::Conflict(_) => StatusCode::CONFLICT,
            Self::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            Self::Storage(_) | Self::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::BadRequest(_) => "BadRequest",
            Self::Validation(_) => "ValidationFailed",
            Self::InvalidId(_) => "InvalidId",
            Self::NotFound { .. } => "NotFound",
            Self::Conflict(_) => "BindingConflict",
            Self::Unprocessable { code, .. } => code,
            Self::Storage(_) => "StorageError",
            Self::Io(_) => "Io",
        }
    }

    fn body(&self) -> Value {
        let mut err = json!({ "code": self.code(), "message": self.to_string() });
        if let Self::Validation(v) = self {
            err["violations"] = json!(v);
        }
        json!({ "error": err })
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        json_response(self.status(), &self.body())
    }
}

impl From<crate::imputation::ImputationError> for ServiceError {
    fn from(e: crate::imputation::ImputationError) -> Self {
        Self::Unprocessable {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<SurvivalError> for ServiceError {
    fn from(e: SurvivalError) -> Self {
        Self::Unprocessable {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, ServiceError>;

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let text = serde_json::to_string(body).expect("serializable");
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

/// Active combination of schema, population characteristics and model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binding {
    pub schema_id: String,
    pub popchar_id: String,
    pub model_id: String,
}

#[derive(Default, Clone)]
struct Entities {
    schemas: BTreeMap<String, Arc<VariableSchema>>,
    popchars: BTreeMap<String, Arc<PopulationCharacteristics>>,
    models: BTreeMap<String, Arc<CoxModel>>,
    bindings: BTreeMap<String, Binding>,
}

impl Entities {
    fn contains(&self, kind: EntityKind, id: &str) -> bool {
        match kind {
            EntityKind::Schema => self.schemas.contains_key(id),
            EntityKind::Popchar => self.popchars.contains_key(id),
            EntityKind::Model => self.models.contains_key(id),
            EntityKind::Binding => self.bindings.contains_key(id),
        }
    }

    fn document(&self, kind: EntityKind, id: &str) -> Option<String> {
        match kind {
            EntityKind::Schema => self.schemas.get(id).map(|s| to_json(&**s)),
            EntityKind::Popchar => self.popchars.get(id).map(|p| to_json(&PopcharDocument::from(&**p))),
            EntityKind::Model => self.models.get(id).map(|m| to_json(&ModelDocument::from(&**m))),
            EntityKind::Binding => self.bindings.get(id).map(to_json),
        }
    }

    fn insert(&mut self, id: String, entity: Entity) {
        match entity {
            Entity::Schema(s) => {
                self.schemas.insert(id, s);
            }
            Entity::Popchar(p) => {
                self.popchars.insert(id, p);
            }
            Entity::Model(m) => {
                self.models.insert(id, m);
            }
            Entity::Binding(b) => {
                self.bindings.insert(id, b);
            }
        }
    }

    fn remove(&mut self, kind: EntityKind, id: &str) {
        match kind {
            EntityKind::Schema => drop(self.schemas.remove(id)),
            EntityKind::Popchar => drop(self.popchars.remove(id)),
            EntityKind::Model => drop(self.models.remove(id)),
            EntityKind::Binding => drop(self.bindings.remove(id)),
        }
    }

    /// Invariant violations of one binding against the current entities.
    fn binding_violations(&self, b: &Binding) -> Vec<String> {
        let mut out = Vec::new();
        let schema = self.schemas.get(&b.schema_id);
        let popchar = self.popchars.get(&b.popchar_id);
        let model = self.models.get(&b.model_id);
        if schema.is_none() {
            out.push(format!("binding_references: unknown schema `{}`", b.schema_id));
        }
        if popchar.is_none() {
            out.push(format!("binding_references: unknown popchar `{}`", b.popchar_id));
        }
        if model.is_none() {
            out.push(format!("binding_references: unknown model `{}`", b.model_id));
        }
        if let (Some(pc), Some(m)) = (popchar, model) {
            for p in m.predictors() {
                if pc.index_of(p).is_none() {
                    out.push(format!(
                        "popchar_covers_model: popchar `{}` lacks model predictor `{p}`",
                        b.popchar_id
                    ));
                }
            }
        }
        if let (Some(s), Some(m)) = (schema, model) {
            if let Err(e) = m.check_against(s) {
                out.push(format!("model_matches_schema: {e}"));
            }
        }
        if let (Some(s), Some(pc)) = (schema, popchar) {
            for v in pc.variables() {
                match s.get(v) {
                    Some(var) if !var.role.is_outcome() => {}
                    _ => out.push(format!(
                        "popchar_matches_schema: `{v}` is not a schema covariate"
                    )),
                }
            }
        }
        out
    }

    fn broken_bindings(&self) -> Vec<String> {
        self.bindings
            .iter()
            .filter(|(_, b)| !self.binding_violations(b).is_empty())
            .map(|(id, _)| id.clone())
            .collect()
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

enum Entity {
    Schema(Arc<VariableSchema>),
    Popchar(Arc<PopulationCharacteristics>),
    Model(Arc<CoxModel>),
    Binding(Binding),
}

fn format_err(e: serde_json::Error) -> ServiceError {
    ServiceError::BadRequest(e.to_string())
}

/// Parses and validates a PUT body. Invariant failures list every violation.
fn parse_entity(kind: EntityKind, body: &[u8]) -> Result<Entity> {
    match kind {
        EntityKind::Schema => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Raw {
                variables: Vec<Variable>,
            }
            let raw: Raw = serde_json::from_slice(body).map_err(format_err)?;
            let v = VariableSchema::violations(&raw.variables);
            if !v.is_empty() {
                return Err(ServiceError::Validation(v));
            }
            let schema = VariableSchema::new(raw.variables)
                .map_err(|e| ServiceError::Validation(vec![e.to_string()]))?;
            Ok(Entity::Schema(Arc::new(schema)))
        }
        EntityKind::Popchar => {
            let doc: PopcharDocument = serde_json::from_slice(body).map_err(format_err)?;
            let pc = PopulationCharacteristics::try_from(doc).map_err(|e| match e {
                PopulationError::Invalid(v) => ServiceError::Validation(v),
                other => ServiceError::Validation(vec![other.to_string()]),
            })?;
            Ok(Entity::Popchar(Arc::new(pc)))
        }
        EntityKind::Model => {
            let doc: ModelDocument = serde_json::from_slice(body).map_err(format_err)?;
            let baseline = doc
                .baseline
                .iter()
                .map(|&(time, cumhaz)| crate::survival::BaselinePoint { time, cumhaz })
                .collect();
            let model = CoxModel::new(doc.predictors, doc.beta, baseline, doc.trained_on_n, doc.converged)
                .map_err(|e| match e {
                    SurvivalError::InvalidModel(v) => ServiceError::Validation(v),
                    other => ServiceError::Validation(vec![other.to_string()]),
                })?;
            if model.baseline().is_empty() {
                return Err(ServiceError::Validation(vec![
                    "baseline_nonempty: baseline table is empty".to_string(),
                ]));
            }
            Ok(Entity::Model(Arc::new(model)))
        }
        EntityKind::Binding => {
            let b: Binding = serde_json::from_slice(body).map_err(format_err)?;
            Ok(Entity::Binding(b))
        }
    }
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ServiceError::InvalidId(id.to_string()))
    }
}

/// File-backed entity store with an in-memory cache. Reads take a snapshot of
/// the entities they need; writes are serialized.
pub struct Store {
    root: PathBuf,
    entities: RwLock<Entities>,
    write_lock: Mutex<()>,
}

impl Store {
    /// Opens (creating if needed) the store rooted at `root` and loads every
    /// document.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let mut entities = Entities::default();
        for kind in EntityKind::ALL {
            let dir = root.join(kind.dir_name());
            fs::create_dir_all(&dir).map_err(|e| ServiceError::Storage(format!("{}: {e}", dir.display())))?;
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| ServiceError::Storage(e.to_string()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension().is_some_and(|x| x == "json")
                        && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'))
                })
                .collect();
            paths.sort();
            for path in paths {
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let bytes = fs::read(&path).map_err(|e| ServiceError::Storage(e.to_string()))?;
                let entity = parse_entity(kind, &bytes)
                    .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
                entities.insert(id, entity);
            }
        }
        Ok(Self {
            root,
            entities: RwLock::new(entities),
            write_lock: Mutex::new(()),
        })
    }

    fn path(&self, kind: EntityKind, id: &str) -> PathBuf {
        self.root.join(kind.dir_name()).join(format!("{id}.json"))
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Entities> {
        self.entities.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Validates and stores `body` under `id`, returning the canonical
    /// document.
    pub fn put(&self, kind: EntityKind, id: &str, body: &[u8]) -> Result<String> {
        check_id(id)?;
        let entity = parse_entity(kind, body)?;
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = self.read().clone();
        next.insert(id.to_string(), entity);
        if kind == EntityKind::Binding {
            let b = &next.bindings[id];
            let v = next.binding_violations(b);
            if !v.is_empty() {
                return Err(ServiceError::Validation(v));
            }
        } else {
            let broken = next.broken_bindings();
            if !broken.is_empty() {
                return Err(ServiceError::Conflict(format!(
                    "replacing {} `{id}` would break binding(s) {}",
                    kind.label(),
                    broken.join(", ")
                )));
            }
        }
        let doc = next.document(kind, id).expect("just inserted");
        write_atomic(&self.path(kind, id), doc.as_bytes())
            .map_err(|e| ServiceError::Storage(e.to_string()))?;
        *self.entities.write().unwrap_or_else(|e| e.into_inner()) = next;
        Ok(doc)
    }

    pub fn get(&self, kind: EntityKind, id: &str) -> Result<String> {
        check_id(id)?;
        self.read().document(kind, id).ok_or_else(|| ServiceError::NotFound {
            kind,
            id: id.to_string(),
        })
    }

    /// Deletes an entity. Entities referenced by a binding cannot be deleted.
    pub fn delete(&self, kind: EntityKind, id: &str) -> Result<()> {
        check_id(id)?;
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = self.read().clone();
        if !next.contains(kind, id) {
            return Err(ServiceError::NotFound {
                kind,
                id: id.to_string(),
            });
        }
        let users: Vec<String> = next
            .bindings
            .iter()
            .filter(|(_, b)| match kind {
                EntityKind::Schema => b.schema_id == id,
                EntityKind::Popchar => b.popchar_id == id,
                EntityKind::Model => b.model_id == id,
                EntityKind::Binding => false,
            })
            .map(|(bid, _)| bid.clone())
            .collect();
        if !users.is_empty() {
            return Err(ServiceError::Conflict(format!(
                "{} `{id}` is used by binding(s) {}",
                kind.label(),
                users.join(", ")
            )));
        }
        next.remove(kind, id);
        fs::remove_file(self.path(kind, id)).map_err(|e| ServiceError::Storage(e.to_string()))?;
        *self.entities.write().unwrap_or_else(|e| e.into_inner()) = next;
        Ok(())
    }

    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        let e = self.read();
        BTreeMap::from([
            ("schemas", e.schemas.len()),
            ("popchars", e.popchars.len()),
            ("models", e.models.len()),
            ("bindings", e.bindings.len()),
        ])
    }

    fn schema(&self, id: &str) -> Result<Arc<VariableSchema>> {
        self.read().schemas.get(id).cloned().ok_or_else(|| ServiceError::NotFound {
            kind: EntityKind::Schema,
            id: id.to_string(),
        })
    }

    fn popchar(&self, id: &str) -> Result<Arc<PopulationCharacteristics>> {
        self.read().popchars.get(id).cloned().ok_or_else(|| ServiceError::NotFound {
            kind: EntityKind::Popchar,
            id: id.to_string(),
        })
    }

    fn model(&self, id: &str) -> Result<Arc<CoxModel>> {
        self.read().models.get(id).cloned().ok_or_else(|| ServiceError::NotFound {
            kind: EntityKind::Model,
            id: id.to_string(),
        })
    }

    /// Schema id of the first binding (by id) joining `model_id` and
    /// `popchar_id`.
    fn bound_schema(&self, model_id: &str, popchar_id: &str) -> Option<String> {
        self.read()
            .bindings
            .values()
            .find(|b| b.model_id == model_id && b.popchar_id == popchar_id)
            .map(|b| b.schema_id.clone())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ImputeRequest {
    pub schema_id: String,
    pub popchar_id: String,
    pub method: String,
    /// Covariate values; `null` or an absent key means MISSING.
    pub record: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub model_id: String,
    pub popchar_id: String,
    /// Defaults to the schema of a binding that joins the model and popchar.
    #[serde(default)]
    pub schema_id: Option<String>,
    pub method: String,
    pub record: BTreeMap<String, Option<f64>>,
    #[serde(default = "default_horizon")]
    pub horizon_days: f64,
}

fn default_horizon() -> f64 {
    TEN_YEARS_DAYS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub popchar_id: String,
    pub popchar_n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_trained_on_n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeResponse {
    #[serde(flatten)]
    pub result: ImputationResult,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub lp: f64,
    pub risk: f64,
    pub horizon_days: f64,
    pub method: ImputationMethod,
    pub completed: BTreeMap<String, f64>,
    pub imputed_names: Vec<String>,
    pub conditional_sd: BTreeMap<String, f64>,
    pub probability_like: Vec<String>,
    pub provenance: Provenance,
}

fn parse_method(s: &str) -> Result<ImputationMethod> {
    s.parse().map_err(|m: String| ServiceError::Unprocessable {
        code: "UnknownMethod",
        message: m,
    })
}

fn run_imputation(
    schema: Arc<VariableSchema>,
    pc: &PopulationCharacteristics,
    method: &str,
    record: &BTreeMap<String, Option<f64>>,
) -> Result<ImputationResult> {
    let method = parse_method(method)?;
    let record = PatientRecord::new(schema, record.iter().map(|(k, v)| (k.as_str(), *v)))?;
    Ok(impute(&record, pc, method)?)
}

/// Imputes one record. A pure function of the stored entities and the request.
pub fn handle_impute(store: &Store, req: &ImputeRequest) -> Result<ImputeResponse> {
    let schema = store.schema(&req.schema_id)?;
    let pc = store.popchar(&req.popchar_id)?;
    let result = run_imputation(schema, &pc, &req.method, &req.record)?;
    Ok(ImputeResponse {
        result,
        provenance: Provenance {
            popchar_id: req.popchar_id.clone(),
            popchar_n: pc.n(),
            model_id: None,
            model_trained_on_n: None,
        },
    })
}

/// Imputes, then computes the linear predictor and the absolute risk at the
/// requested horizon.
pub fn handle_predict(store: &Store, req: &PredictRequest) -> Result<PredictResponse> {
    if !(req.horizon_days.is_finite() && req.horizon_days > 0.0) {
        return Err(ServiceError::BadRequest("horizon_days must be positive".to_string()));
    }
    let model = store.model(&req.model_id)?;
    let pc = store.popchar(&req.popchar_id)?;
    let schema_id = match &req.schema_id {
        Some(s) => s.clone(),
        None => store
            .bound_schema(&req.model_id, &req.popchar_id)
            .ok_or_else(|| ServiceError::Unprocessable {
                code: "NoBinding",
                message: format!(
                    "no schema_id given and no binding joins model `{}` with popchar `{}`",
                    req.model_id, req.popchar_id
                ),
            })?,
    };
    let schema = store.schema(&schema_id)?;
    model.check_against(&schema)?;
    let result = run_imputation(schema, &pc, &req.method, &req.record)?;
    let lp = linear_predictor(&model, &result.completed)?;
    let risk = risk_at_horizon(&model, lp, req.horizon_days)?;
    Ok(PredictResponse {
        lp,
        risk,
        horizon_days: req.horizon_days,
        method: result.method,
        completed: result.completed,
        imputed_names: result.imputed_names,
        conditional_sd: result.conditional_sd,
        probability_like: result.probability_like,
        provenance: Provenance {
            popchar_id: req.popchar_id.clone(),
            popchar_n: pc.n(),
            model_id: Some(req.model_id.clone()),
            model_trained_on_n: Some(model.trained_on_n()),
        },
    })
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(format_err)
}

fn respond<T: Serialize>(r: Result<T>) -> Response {
    match r {
        Ok(v) => json_response(StatusCode::OK, &v),
        Err(e) => e.into_response(),
    }
}

fn document_response(r: Result<String>) -> Response {
    match r {
        Ok(doc) => (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], doc).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn impute_handler(State(store): State<Arc<Store>>, body: Bytes) -> Response {
    respond(parse_body(&body).and_then(|req| handle_impute(&store, &req)))
}

async fn predict_handler(State(store): State<Arc<Store>>, body: Bytes) -> Response {
    respond(parse_body(&body).and_then(|req| handle_predict(&store, &req)))
}

async fn health_handler(State(store): State<Arc<Store>>) -> Response {
    json_response(StatusCode::OK, &json!({ "status": "ok", "counts": store.counts() }))
}

fn entity_routes(kind: EntityKind) -> Router<Arc<Store>> {
    let path = format!("/v1/{}/{{id}}", kind.dir_name());
    Router::new().route(
        &path,
        get(move |State(s): State<Arc<Store>>, UrlPath(id): UrlPath<String>| async move {
            document_response(s.get(kind, &id))
        })
        .put(
            move |State(s): State<Arc<Store>>, UrlPath(id): UrlPath<String>, body: Bytes| async move {
                document_response(s.put(kind, &id, &body))
            },
        )
        .delete(move |State(s): State<Arc<Store>>, UrlPath(id): UrlPath<String>| async move {
            match s.delete(kind, &id) {
                Ok(()) => StatusCode::NO_CONTENT.into_response(),
                Err(e) => e.into_response(),
            }
        }),
    )
}

pub fn router(store: Arc<Store>) -> Router {
    let mut r = Router::new()
        .route("/v1/impute", post(impute_handler))
        .route("/v1/predict", post(predict_handler))
        .route("/v1/healthz", get(health_handler));
    for kind in EntityKind::ALL {
        r = r.merge(entity_routes(kind));
    }
    r.with_state(store)
}

/// Serves on an already bound listener until the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener, store: Arc<Store>) -> std::io::Result<()> {
    axum::serve(listener, router(store)).await
}

/// Blocking entry point: opens the store, binds `addr` and serves until
/// Ctrl-C.
pub fn run(addr: SocketAddr, data_dir: &Path) -> Result<()> {
    let store = Arc::new(Store::open(data_dir)?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!(
            "{}",
            json!({ "event": "listening", "addr": listener.local_addr()?.to_string(), "data_dir": data_dir.display().to_string() })
        );
        axum::serve(listener, router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok::<(), ServiceError>(())
    })
}
