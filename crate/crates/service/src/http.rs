use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rayon::prelude::*;
use serde::de::DeserializeOwned;

use crate::api::*;
use crate::campaign::{token_digest, AnnotatorEntry, Campaign, CampaignSpec, Event, WordSpec, WordState, WordStatus};
use crate::error::{Result, ServiceError};
use crate::store::Store;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::Invalid(_) | ServiceError::Core(_) => StatusCode::BAD_REQUEST,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Forbidden(_) => StatusCode::FORBIDDEN,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) | ServiceError::RoundIncomplete { .. } => StatusCode::CONFLICT,
            ServiceError::Storage(_) | ServiceError::CorruptLog { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self, "request failed");
        }
        let body = ErrorBody {
            api_version: API_VERSION,
            error: ErrorDetail { code: self.code().to_owned(), message: self.to_string() },
        };
        (status, Json(body)).into_response()
    }
}

struct Shared {
    store: RwLock<Store>,
    operator_token: String,
}

/// Shared service state. Writes to the store are serialized by the lock;
/// expensive staging (clustering) runs under the read lock and is committed
/// only if no other event landed on the campaign in between.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Shared>,
}

impl AppState {
    pub fn new(store: Store, operator_token: impl Into<String>) -> Self {
        AppState { inner: Arc::new(Shared { store: RwLock::new(store), operator_token: operator_token.into() }) }
    }

    pub fn read<T>(&self, f: impl FnOnce(&Store) -> Result<T>) -> Result<T> {
        f(&self.inner.store.read().expect("store lock poisoned"))
    }

    fn write<T>(&self, f: impl FnOnce(&mut Store) -> Result<T>) -> Result<T> {
        f(&mut self.inner.store.write().expect("store lock poisoned"))
    }

    /// Applies one event and renders a response from the updated campaign.
    pub fn apply<T>(&self, id: &str, event: Event, render: impl Fn(&Campaign) -> T) -> Result<T> {
        loop {
            let (staged, seq) = self.read(|s| {
                let c = s.get(id)?;
                Ok((c.stage(event.clone())?, c.seq))
            })?;
            let done = self.write(|s| {
                if s.get(id)?.seq != seq {
                    return Ok(None);
                }
                Ok(Some(render(s.commit(id, staged)?)))
            })?;
            if let Some(out) = done {
                return Ok(out);
            }
        }
    }

    fn operator(&self, headers: &HeaderMap) -> Result<()> {
        match bearer(headers) {
            Some(t) if t == self.inner.operator_token => Ok(()),
            Some(_) => Err(ServiceError::Forbidden("operator token required".into())),
            None => Err(ServiceError::Unauthorized),
        }
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers.get(header::AUTHORIZATION)?.to_str().ok()?.strip_prefix("Bearer ").map(str::trim)
}

fn annotator_of(c: &Campaign, headers: &HeaderMap) -> Result<String> {
    let token = bearer(headers).ok_or(ServiceError::Unauthorized)?;
    c.authenticate(token).map(str::to_owned).ok_or(ServiceError::Unauthorized)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Invalid(format!("malformed body: {e}")))
}

fn check_version(v: Option<u32>) -> Result<()> {
    match v {
        Some(v) if v != API_VERSION => Err(ServiceError::Invalid(format!("unsupported api_version {v}"))),
        _ => Ok(()),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f).await.expect("handler task panicked")
}

fn summary(word: &str, w: &WordState) -> WordSummary {
    WordSummary {
        word: word.to_owned(),
        status: w.status(),
        round: w.run.round(),
        assigned: w.assigned(),
        judged: w.judged(),
        pending: w.pending(),
    }
}

fn status_body(c: &Campaign) -> CampaignStatus {
    CampaignStatus {
        api_version: API_VERSION,
        id: c.id().to_owned(),
        annotators: c.spec.roster(),
        words: c.words.iter().map(|(w, s)| summary(w, s)).collect(),
    }
}

fn scores_body(w: &WordState) -> Option<ScoresBody> {
    w.scores().map(|s| ScoresBody { binary: s.binary, graded: s.graded, thresholds: s.thresholds })
}

fn advance_body(word: &str, w: &WordState) -> AdvanceResult {
    AdvanceResult {
        api_version: API_VERSION,
        word: word.to_owned(),
        status: w.status(),
        round: w.run.round(),
        assigned: w.assigned(),
        scores: scores_body(w),
    }
}

async fn create_campaign(State(app): State<AppState>, headers: HeaderMap, body: Bytes) -> Result<Response> {
    app.operator(&headers)?;
    let req: CreateCampaign = parse(&body)?;
    check_version(req.api_version)?;
    let spec = CampaignSpec {
        id: req.id,
        seed: req.seed,
        annotators: req
            .annotators
            .iter()
            .map(|a| AnnotatorEntry { id: a.id.clone(), token_sha256: token_digest(&a.token) })
            .collect(),
        config: req.config,
        words: req.words.into_iter().map(|w| WordSpec { word: w.word, uses: w.uses, senses: w.senses }).collect(),
    };
    let mut tokens = std::collections::BTreeSet::new();
    if req.annotators.iter().any(|a| a.token.is_empty() || !tokens.insert(&a.token)) {
        return Err(ServiceError::Invalid("annotator tokens must be non-empty and distinct".into()));
    }
    let body = blocking(move || app.write(|s| Ok(status_body(s.create(spec)?)))).await?;
    tracing::info!(campaign = %body.id, "campaign created");
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn campaign_status(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> Result<Json<CampaignStatus>> {
    app.operator(&headers)?;
    Ok(Json(app.read(|s| Ok(status_body(s.get(&id)?)))?))
}

async fn next_item(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path((id, aid)): Path<(String, String)>,
) -> Result<Json<NextItem>> {
    let body = app.read(|s| {
        let c = s.get(&id)?;
        let who = annotator_of(c, &headers)?;
        if who != aid {
            return Err(ServiceError::Forbidden(format!("token does not belong to `{aid}`")));
        }
        let remaining = c.queue(&aid).len();
        Ok(NextItem { api_version: API_VERSION, item: c.next_item(&aid)?, remaining })
    })?;
    Ok(Json(body))
}

async fn submit_judgment(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response> {
    let req: SubmitJudgment = parse(&body)?;
    check_version(req.api_version)?;
    let annotator = app.read(|s| annotator_of(s.get(&id)?, &headers))?;
    let event = Event::Judged { word: req.word.clone(), pair: req.pair.clone(), annotator, value: req.value };
    let ack = blocking(move || {
        app.apply(&id, event, |c| {
            let w = &c.words[&req.word];
            JudgmentAck {
                api_version: API_VERSION,
                word: req.word.clone(),
                pair: req.pair.clone(),
                round: w.run.round(),
                weight: w.run.graph().edge(&req.pair).and_then(|e| e.weight()),
            }
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(ack)).into_response())
}

async fn advance_word(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path((id, word)): Path<(String, String)>,
) -> Result<Json<AdvanceResult>> {
    app.operator(&headers)?;
    let event = Event::Advanced { word: word.clone() };
    let body = blocking(move || app.apply(&id, event, |c| advance_body(&word, &c.words[&word]))).await?;
    tracing::info!(word = %body.word, round = body.round, status = ?body.status, "word advanced");
    Ok(Json(body))
}

/// Advances every word whose round is complete; their clustering runs in
/// parallel.
async fn advance_campaign(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> Result<Json<CampaignAdvance>> {
    app.operator(&headers)?;
    let body = blocking(move || loop {
        let (staged, skipped, seq) = app.read(|s| {
            let c = s.get(&id)?;
            let (mut ready, mut skipped) = (Vec::new(), Vec::new());
            for (w, st) in &c.words {
                if st.status() == WordStatus::RoundComplete { ready.push(w) } else { skipped.push(w.clone()) }
            }
            let staged = ready
                .par_iter()
                .map(|w| c.stage(Event::Advanced { word: (*w).clone() }))
                .collect::<Result<Vec<_>>>()?;
            Ok((staged, skipped, c.seq))
        })?;
        let out = app.write(|s| {
            if s.get(&id)?.seq != seq {
                return Ok(None);
            }
            let mut advanced = Vec::new();
            for st in staged {
                let Event::Advanced { word } = st.event.clone() else { unreachable!("only advances are staged") };
                let c = s.commit(&id, st)?;
                advanced.push(advance_body(&word, &c.words[&word]));
            }
            Ok(Some(CampaignAdvance { api_version: API_VERSION, advanced, skipped: skipped.clone() }))
        })?;
        if let Some(out) = out {
            return Ok(out);
        }
    })
    .await?;
    Ok(Json(body))
}

async fn word_graph(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path((id, word)): Path<(String, String)>,
) -> Result<Json<GraphBody>> {
    app.operator(&headers)?;
    let body = app.read(|s| {
        let w = s.get(&id)?.word(&word)?;
        let g = w.run.graph();
        Ok(GraphBody {
            api_version: API_VERSION,
            word: word.clone(),
            round: w.run.round(),
            nodes: g.nodes().cloned().collect(),
            edges: g
                .edges()
                .filter_map(|e| e.weight().map(|weight| EdgeBody { pair: e.pair().clone(), weight, judgments: e.judgments().len() }))
                .collect(),
            clusters: w.clustering().map(|c| c.clusters()),
        })
    })?;
    Ok(Json(body))
}

async fn word_scores(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path((id, word)): Path<(String, String)>,
) -> Result<Json<WordScores>> {
    app.operator(&headers)?;
    let body = app.read(|s| {
        let w = s.get(&id)?.word(&word)?;
        let scores = scores_body(w).ok_or_else(|| ServiceError::Conflict(format!("word `{word}` is not finished")))?;
        Ok(WordScores { api_version: API_VERSION, word: word.clone(), scores })
    })?;
    Ok(Json(body))
}

async fn reassign(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<String>, body: Bytes) -> Result<Json<ReassignResult>> {
    app.operator(&headers)?;
    let req: Reassign = parse(&body)?;
    check_version(req.api_version)?;
    let event = match &req.to {
        Some(to) => Event::Reassigned { word: req.word.clone(), pair: req.pair.clone(), from: req.annotator.clone(), to: to.clone() },
        None => Event::Expired { word: req.word.clone(), pair: req.pair.clone(), annotator: req.annotator.clone() },
    };
    let body = blocking(move || {
        app.apply(&id, event, |c| ReassignResult {
            api_version: API_VERSION,
            word: req.word.clone(),
            pair: req.pair.clone(),
            annotator: req.annotator.clone(),
            status: c.words[&req.word].assignments[&req.pair][&req.annotator],
            to: req.to.clone(),
        })
    })
    .await?;
    Ok(Json(body))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/campaigns", post(create_campaign))
        .route("/campaigns/{id}", get(campaign_status))
        .route("/campaigns/{id}/annotators/{aid}/next", get(next_item))
        .route("/campaigns/{id}/judgments", post(submit_judgment))
        .route("/campaigns/{id}/advance", post(advance_campaign))
        .route("/campaigns/{id}/words/{word}/advance", post(advance_word))
        .route("/campaigns/{id}/words/{word}/graph", get(word_graph))
        .route("/campaigns/{id}/words/{word}/scores", get(word_scores))
        .route("/campaigns/{id}/reassign", post(reassign))
        .with_state(state)
}
