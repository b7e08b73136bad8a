//! HTTP service: scan a photo, get detections with grouped augmentation
//! suggestions, and browse the taxonomy and dictionary.
//!
//! Scans are persisted one directory per scan id and can be fetched back
//! verbatim. Dictionary reads go through a snapshot pointer that can be
//! swapped without blocking requests.

pub mod config;
pub mod error;
mod scan;
pub mod schema;
pub mod store;

use std::future::Future;
use std::sync::Arc;

use accesslens::catalog::Dictionary;
use accesslens::detector::{Detector, DetectorMode};
use accesslens::recommender::IcObjectMapping;
use accesslens::taxonomy::{export_taxonomy, Category};
use arc_swap::ArcSwap;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

pub use config::ServiceConfig;
pub use error::ApiError;
pub use scan::{ImageMeta, ScanResult};
pub use store::ScanStore;

/// Dictionary plus the class-to-object mapping, replaced as a unit.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub dictionary: Dictionary,
    pub mapping: IcObjectMapping,
}

impl Catalog {
    pub fn new(dictionary: Dictionary, mapping: IcObjectMapping) -> accesslens::Result<Self> {
        mapping.check_against(&dictionary)?;
        Ok(Self { dictionary, mapping })
    }

    pub fn bundled() -> Self {
        Self::new(Dictionary::bundled(), IcObjectMapping::default()).expect("bundled data is consistent")
    }

    pub fn from_config(cfg: &ServiceConfig) -> accesslens::Result<Self> {
        let dictionary = match &cfg.dictionary {
            Some(p) => Dictionary::load(p)?,
            None => Dictionary::bundled(),
        };
        let mapping = match &cfg.mapping {
            Some(p) => IcObjectMapping::load(p)?,
            None => IcObjectMapping::default(),
        };
        Self::new(dictionary, mapping)
    }
}

pub struct AppState {
    catalog: ArcSwap<Catalog>,
    detector: Arc<dyn Detector>,
    mode: DetectorMode,
    score_threshold: f64,
    nms_iou: Option<f64>,
    store: ScanStore,
    max_upload_bytes: usize,
}

impl AppState {
    /// Loads everything the config names. Blocking; with the remote
    /// detector this must run outside an async context.
    pub fn from_config(cfg: &ServiceConfig) -> accesslens::Result<Self> {
        cfg.validate()?;
        let catalog = Catalog::from_config(cfg)?;
        let detector: Arc<dyn Detector> = cfg.detector.build()?.into();
        let store = ScanStore::open(&cfg.storage_dir).map_err(|e| accesslens::Error::Io {
            path: cfg.storage_dir.clone(),
            source: e,
        })?;
        Ok(Self::new(catalog, detector, cfg, store))
    }

    pub fn new(catalog: Catalog, detector: Arc<dyn Detector>, cfg: &ServiceConfig, store: ScanStore) -> Self {
        Self {
            catalog: ArcSwap::from_pointee(catalog),
            detector,
            mode: cfg.detector.mode,
            score_threshold: cfg.detector.score_threshold,
            nms_iou: cfg.detector.nms_iou,
            store,
            max_upload_bytes: cfg.max_upload_bytes,
        }
    }

    pub fn catalog(&self) -> Arc<Catalog> {
        self.catalog.load_full()
    }

    /// Swap in a new catalog. In-flight requests keep the one they started with.
    pub fn replace_catalog(&self, catalog: Catalog) {
        self.catalog.store(Arc::new(catalog));
    }

    pub fn store(&self) -> &ScanStore {
        &self.store
    }
}

fn json_bytes(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn post_scan(State(state): State<Arc<AppState>>, form: Multipart) -> Result<Response, ApiError> {
    let bytes = scan::scan(state, form).await?;
    Ok(json_bytes(StatusCode::CREATED, bytes))
}

async fn get_scan(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let loaded = {
        let store = state.store.clone();
        let id = id.clone();
        tokio::task::spawn_blocking(move || store.load(&id))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))?
    };
    match loaded {
        Ok(Some(bytes)) => Ok(json_bytes(StatusCode::OK, bytes)),
        Ok(None) => Err(ApiError::NotFound(id)),
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}

async fn get_taxonomy() -> Response {
    Json(export_taxonomy()).into_response()
}

async fn get_dictionary(State(state): State<Arc<AppState>>) -> Response {
    json_bytes(StatusCode::OK, state.catalog().dictionary.to_json().into_bytes())
}

#[derive(Debug, Deserialize)]
struct DesignParams {
    object: Option<String>,
    category: Option<String>,
}

#[derive(Debug, Serialize)]
struct DesignPage<'a> {
    object: Option<&'a str>,
    category: Option<Category>,
    count: usize,
    designs: Vec<&'a accesslens::catalog::AugmentationDesign>,
}

async fn get_designs(State(state): State<Arc<AppState>>, Query(q): Query<DesignParams>) -> Result<Response, ApiError> {
    let category = match q.category.as_deref().filter(|c| !c.is_empty()) {
        Some(c) => Some(c.parse::<Category>()?),
        None => None,
    };
    let catalog = state.catalog();
    let dict = &catalog.dictionary;
    let (object, designs) = match q.object.as_deref().filter(|o| !o.is_empty()) {
        Some(o) => (Some(dict.object(o)?.name.as_str()), dict.query(o, category)?),
        None => (
            None,
            dict.designs()
                .iter()
                .filter(|d| category.is_none_or(|c| d.has_category(c)))
                .collect(),
        ),
    };
    let page = DesignPage {
        object,
        category,
        count: designs.len(),
        designs,
    };
    Ok(Json(page).into_response())
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    version: &'static str,
    detector: String,
    dictionary_version: String,
    designs: usize,
}

async fn get_health(State(state): State<Arc<AppState>>) -> Response {
    let catalog = state.catalog();
    Json(Health {
        status: "ok",
        version: env!("CARGO_PKG_VERSION"),
        detector: state.mode.to_string(),
        dictionary_version: catalog.dictionary.version().to_string(),
        designs: catalog.dictionary.designs().len(),
    })
    .into_response()
}

async fn get_schema(Path(name): Path<String>) -> Result<Response, ApiError> {
    let name = name.strip_suffix(".json").unwrap_or(&name);
    schema::get(name)
        .map(|s| json_bytes(StatusCode::OK, s.as_bytes().to_vec()))
        .ok_or_else(|| ApiError::NotFound(name.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    // Multipart framing adds a little on top of the image itself.
    let body_limit = state.max_upload_bytes.saturating_add(64 * 1024);
    Router::new()
        .route("/api/scans", axum::routing::post(post_scan))
        .route("/api/scans/{id}", get(get_scan))
        .route("/api/taxonomy", get(get_taxonomy))
        .route("/api/dictionary", get(get_dictionary))
        .route("/api/designs", get(get_designs))
        .route("/api/health", get(get_health))
        .route("/api/schemas/{name}", get(get_schema))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

/// Serve until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn ctrl_c() {
    let _ = tokio::signal::ctrl_c().await;
}

/// Load the config's state, bind, and serve until Ctrl-C. Blocks the
/// calling thread.
pub fn run(cfg: &ServiceConfig) -> Result<(), RunError> {
    let addr = cfg.socket_addr()?;
    let state = Arc::new(AppState::from_config(cfg)?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = TcpListener::bind(addr).await?;
        tracing::info!("listening on http://{}", listener.local_addr()?);
        serve_on(listener, state, ctrl_c()).await
    })?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Setup(#[from] accesslens::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
