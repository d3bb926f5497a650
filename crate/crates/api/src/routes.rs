use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{get, post};
use axum::{Json, Router};
use fluentkb::indexer::{self, Association, AssociationStatus, IndexConfig, Transcription};
use fluentkb::kres::{self, Correspondence, EntityMatch, KnowledgeEntity, ResourceDescriptor, TermEntry};
use fluentkb::rules::{self, SaturationReport, WritingTimeReport, DEFAULT_MAX_ROUNDS};
use fluentkb::store::{node_from_str, QuadPattern};
use fluentkb::temporal::{Instant, Interval};
use fluentkb::vocab::model;
use fluentkb::{Dataset, Term};
use serde::{Deserialize, Serialize};

use crate::{AppState, ApiError};

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/resources", get(list_resources))
        .route("/resources/{id}/entities", get(resource_entities))
        .route("/concepts", get(find_concepts))
        .route("/concepts/{iri}", get(concept))
        .route("/transcriptions", get(list_transcriptions))
        .route("/transcriptions/{id}", get(transcription))
        .route("/associations", get(list_associations))
        .route("/associations/{id}/decision", post(decide))
        .route("/actions/index", post(index))
        .route("/actions/saturate", post(saturate))
        .route("/manuscripts/{id}/timeline", get(timeline))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token))
        .route("/health", get(health))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

async fn require_token(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Result<Response, ApiError> {
    if let Some(token) = &state.config().token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token"));
        }
    }
    Ok(next.run(req).await)
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    quads: usize,
    snapshot_sha256: String,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let ds = state.current();
    Json(Health {
        status: "ok",
        quads: ds.len(),
        snapshot_sha256: fluentkb::rdf_io::snapshot_hash(&ds),
    })
}

#[derive(Deserialize)]
struct Page {
    limit: Option<usize>,
    offset: Option<usize>,
}

fn paginate<T>(items: Vec<T>, page: &Page) -> Vec<T> {
    let offset = page.offset.unwrap_or(0);
    items.into_iter().skip(offset).take(page.limit.unwrap_or(usize::MAX)).collect()
}

async fn list_resources(State(state): State<Arc<AppState>>) -> Json<Vec<ResourceDescriptor>> {
    Json(kres::resources(&state.current()))
}

async fn resource_entities(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    page: Result<Query<Page>, QueryRejection>,
) -> ApiResult<Vec<KnowledgeEntity>> {
    let Query(page) = page?;
    let ds = state.current();
    if !kres::resources(&ds).iter().any(|r| r.id == id) {
        return Err(ApiError::not_found(format!("unknown resource {id}")));
    }
    Ok(Json(paginate(kres::resource_entities(&ds, &id), &page)))
}

#[derive(Deserialize)]
struct LexicalQuery {
    lexical: String,
}

async fn find_concepts(
    State(state): State<Arc<AppState>>,
    q: Result<Query<LexicalQuery>, QueryRejection>,
) -> ApiResult<Vec<EntityMatch>> {
    let Query(q) = q?;
    Ok(Json(kres::find_entities(&state.current(), &q.lexical)))
}

#[derive(Serialize)]
struct ConceptDetail {
    entity: KnowledgeEntity,
    #[serde(skip_serializing_if = "Option::is_none")]
    term: Option<TermEntry>,
    correspondences: Vec<Correspondence>,
    /// Entities of other resources sharing a lexical form or label.
    siblings: Vec<KnowledgeEntity>,
}

async fn concept(State(state): State<Arc<AppState>>, Path(iri): Path<String>) -> ApiResult<ConceptDetail> {
    let ds = state.current();
    let entity = kres::entity(&ds, &iri).ok_or_else(|| ApiError::not_found(format!("unknown concept {iri}")))?;
    let mut siblings: Vec<KnowledgeEntity> = Vec::new();
    for label in &entity.labels {
        for m in kres::find_entities(&ds, &label.value) {
            if m.entity.resource != entity.resource && !siblings.contains(&m.entity) {
                siblings.push(m.entity);
            }
        }
    }
    siblings.sort_by(|a, b| (&a.resource, &a.iri).cmp(&(&b.resource, &b.iri)));
    Ok(Json(ConceptDetail {
        term: kres::term_entry(&ds, &iri),
        correspondences: kres::correspondences(&ds)
            .into_iter()
            .filter(|c| c.entity1 == iri || c.entity2 == iri)
            .collect(),
        siblings,
        entity,
    }))
}

async fn list_transcriptions(State(state): State<Arc<AppState>>) -> Json<Vec<Transcription>> {
    Json(indexer::transcriptions(&state.current()))
}

#[derive(Serialize)]
struct TranscriptionView {
    #[serde(flatten)]
    transcription: Transcription,
    associations: Vec<Association>,
}

async fn transcription(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<TranscriptionView> {
    let ds = state.current();
    let t = indexer::transcription(&ds, &id).ok_or_else(|| ApiError::not_found(format!("unknown transcription {id}")))?;
    Ok(Json(TranscriptionView {
        associations: indexer::associations_for(&ds, &id),
        transcription: t,
    }))
}

#[derive(Deserialize)]
struct AssociationQuery {
    status: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn list_associations(
    State(state): State<Arc<AppState>>,
    q: Result<Query<AssociationQuery>, QueryRejection>,
) -> ApiResult<Vec<Association>> {
    let Query(q) = q?;
    let status = match q.status.as_deref() {
        None => None,
        Some(s) => Some(s.parse::<AssociationStatus>().map_err(|_| ApiError::invalid(format!("unknown status {s:?}")))?),
    };
    let page = Page {
        limit: q.limit,
        offset: q.offset,
    };
    Ok(Json(paginate(indexer::associations(&state.current(), status), &page)))
}

#[derive(Deserialize)]
struct DecisionRequest {
    verdict: String,
    decider: String,
}

async fn decide(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<DecisionRequest>, JsonRejection>,
) -> ApiResult<Association> {
    let Json(req) = body?;
    let verdict = match req.verdict.as_str() {
        "accepted" => AssociationStatus::Accepted,
        "rejected" => AssociationStatus::Rejected,
        other => return Err(ApiError::invalid(format!("verdict must be accepted or rejected, got {other:?}"))),
    };
    if req.decider.trim().is_empty() {
        return Err(ApiError::invalid("decider must not be empty"));
    }
    let a = state
        .mutate(move |ds| Ok(indexer::decide(ds, &id, verdict, req.decider.trim())?))
        .await?;
    Ok(Json(a))
}

fn parse_optional_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(e.to_string()))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct IndexRequest {
    transcription: Option<String>,
    theta: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Serialize)]
struct IndexResponse {
    associations: Vec<Association>,
}

async fn index(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<IndexResponse> {
    let req: IndexRequest = parse_optional_body(&body)?;
    let mut config = IndexConfig::default();
    if let Some(t) = req.theta {
        config.theta = t;
    }
    if let Some(l) = req.lambda {
        config.lambda = l;
    }
    config.validate()?;
    let associations = state
        .mutate(move |ds| {
            Ok(match &req.transcription {
                Some(id) => indexer::index_transcription(ds, id, &config)?,
                None => indexer::index_all(ds, &config)?,
            })
        })
        .await?;
    Ok(Json(IndexResponse { associations }))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SaturateRequest {
    /// Rule text; replaces the stored rule set when given.
    rules: Option<String>,
    max_rounds: Option<usize>,
}

#[derive(Serialize)]
struct SaturateResponse {
    report: SaturationReport,
    writing_times: WritingTimeReport,
}

async fn saturate(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<SaturateResponse> {
    let req: SaturateRequest = parse_optional_body(&body)?;
    let given = match &req.rules {
        Some(text) => Some(rules::compile_rules(text).map_err(|d| ApiError::invalid(format!("rules: {d}")))?),
        None => None,
    };
    let max_rounds = req.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS);
    if max_rounds == 0 {
        return Err(ApiError::invalid("max_rounds must be at least 1"));
    }
    let out = state
        .mutate(move |ds| {
            let rule_set = match given {
                Some(r) => {
                    rules::store_rules(ds, &r).map_err(|e| ApiError::internal(e.to_string()))?;
                    r
                }
                None => rules::stored_rules(ds)?,
            };
            let report = rules::saturate(ds, &rule_set, max_rounds)?;
            let writing_times = rules::infer_writing_times(ds).map_err(|e| ApiError::internal(e.to_string()))?;
            Ok(SaturateResponse { report, writing_times })
        })
        .await?;
    Ok(Json(out))
}

#[derive(Serialize)]
struct Bound {
    kind: &'static str,
    instant: Instant,
    /// Ids of the rules that derived the bound; empty when asserted.
    rules: Vec<String>,
}

#[derive(Serialize)]
struct Timeline {
    manuscript: String,
    writing_time: Option<Interval>,
    inferred_writing_time: Option<Interval>,
    bounds: Vec<Bound>,
    contradictory: bool,
}

fn timeline_of(ds: &Dataset, id: &str) -> Option<Timeline> {
    let m = node_from_str(id);
    if ds.iter_matching(&QuadPattern::any().subject(m.clone())).next().is_none() {
        return None;
    }
    let interval_at = |p: &str| ds.object(&m, p).and_then(|n| rules::read_interval(ds, &n));
    let mut bounds = Vec::new();
    for (kind, p) in [("not_before", model::NOT_BEFORE), ("not_after", model::NOT_AFTER)] {
        for o in ds.objects(&m, p) {
            if let Some(instant) = Instant::from_term(ds, &o) {
                bounds.push(Bound {
                    kind,
                    instant,
                    rules: rules::derived_by(ds, &m, &Term::iri(p), &o),
                });
            }
        }
    }
    bounds.sort_by(|a, b| (a.kind, a.instant).cmp(&(b.kind, b.instant)));
    Some(Timeline {
        manuscript: id.to_string(),
        writing_time: interval_at(model::WRITING_TIME),
        inferred_writing_time: interval_at(model::INFERRED_WRITING_TIME),
        contradictory: matches!(rules::writing_time_bounds(ds, &m), Some(Err(_))),
        bounds,
    })
}

async fn timeline(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Timeline> {
    timeline_of(&state.current(), &id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("unknown manuscript {id}")))
}
