use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use semchange_core::graph::{Epoch, Judgment, UsageGraph, UseNode};
use semchange_core::pipeline::{self, PipelineConfig, Step, WordRun};
use semchange_service::campaign::Campaign;
use semchange_service::http::{router, AppState};
use semchange_service::store::{read_log, stored_snapshots, Store};

const OPERATOR: &str = "op-secret";

fn app(dir: &Path) -> Router {
    router(AppState::new(Store::open(dir).unwrap(), OPERATOR))
}

async fn call(app: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() })
}

/// Hidden sense of a use: the first seven uses of each epoch share sense 0.
fn sense(id: &str) -> usize {
    let i: usize = id.rsplit('-').next().unwrap().parse().unwrap();
    usize::from(i >= 7)
}

fn uses(word: &str, n: usize) -> Vec<UseNode> {
    (0..n)
        .map(|i| {
            let epoch = if i < n / 2 { Epoch::C1 } else { Epoch::C2 };
            let k = if i < n / 2 { i } else { i - n / 2 };
            let id = format!("{word}-{}-{k:02}", epoch.as_str().to_lowercase());
            UseNode::new(id, epoch, word, vec!["a".into(), word.into(), "b".into()], 1).unwrap()
        })
        .collect()
}

fn create_body(id: &str, seed: u64, n_uses: usize) -> Value {
    json!({
        "api_version": 1,
        "id": id,
        "seed": seed,
        "annotators": [{"id": "ann1", "token": "t1"}, {"id": "ann2", "token": "t2"}],
        "words": [{"word": "bank", "uses": uses("bank", n_uses)}],
    })
}

fn value_for(pair: &Value) -> u8 {
    let (a, b) = (pair[0].as_str().unwrap(), pair[1].as_str().unwrap());
    if sense(a) == sense(b) { 4 } else { 1 }
}

async fn judge_everything(app: &Router, id: &str) -> usize {
    let mut count = 0;
    for (aid, token) in [("ann1", "t1"), ("ann2", "t2")] {
        loop {
            let (s, next) = call(app, "GET", &format!("/campaigns/{id}/annotators/{aid}/next"), Some(token), None).await;
            assert_eq!(s, StatusCode::OK);
            if next["item"].is_null() {
                break;
            }
            let item = &next["item"];
            let body = json!({"word": item["word"], "pair": item["pair"], "value": value_for(&item["pair"])});
            let (s, _) = call(app, "POST", &format!("/campaigns/{id}/judgments"), Some(token), Some(body)).await;
            assert_eq!(s, StatusCode::CREATED);
            count += 1;
        }
    }
    count
}

async fn run_to_done(app: &Router, id: &str) -> Value {
    for _ in 0..20 {
        judge_everything(app, id).await;
        let (s, adv) = call(app, "POST", &format!("/campaigns/{id}/words/bank/advance"), Some(OPERATOR), None).await;
        assert_eq!(s, StatusCode::OK, "{adv}");
        if adv["status"] == "done" {
            return adv;
        }
    }
    panic!("campaign did not finish");
}

#[tokio::test]
async fn create_and_authorize() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, body) = call(&app, "POST", "/campaigns", Some(OPERATOR), Some(create_body("c1", 3, 20))).await;
    assert_eq!(s, StatusCode::CREATED, "{body}");
    assert_eq!(body["api_version"], 1);
    assert!(body["words"][0]["assigned"].as_u64().unwrap() >= 1);
    assert_eq!(body["words"][0]["status"], "collecting");

    let (s, _) = call(&app, "POST", "/campaigns", None, Some(create_body("c2", 3, 20))).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, _) = call(&app, "POST", "/campaigns", Some("nope"), Some(create_body("c2", 3, 20))).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let (s, _) = call(&app, "POST", "/campaigns", Some(OPERATOR), Some(create_body("c1", 3, 20))).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let mut empty = create_body("c3", 3, 20);
    empty["annotators"] = json!([]);
    let (s, body) = call(&app, "POST", "/campaigns", Some(OPERATOR), Some(empty)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "invalid");

    let mut future = create_body("c4", 3, 20);
    future["api_version"] = json!(2);
    let (s, _) = call(&app, "POST", "/campaigns", Some(OPERATOR), Some(future)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, _) = call(&app, "GET", "/campaigns/c1/annotators/ann1/next", Some("t2"), None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let (s, _) = call(&app, "GET", "/campaigns/c1/annotators/ann1/next", None, None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, _) = call(&app, "GET", "/campaigns/missing/annotators/ann1/next", Some("t1"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn serving_and_judging_rules() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    call(&app, "POST", "/campaigns", Some(OPERATOR), Some(create_body("c", 5, 20))).await;

    let (_, first) = call(&app, "GET", "/campaigns/c/annotators/ann1/next", Some("t1"), None).await;
    let (_, again) = call(&app, "GET", "/campaigns/c/annotators/ann1/next", Some("t1"), None).await;
    assert_eq!(first, again);
    let item = &first["item"];
    assert_eq!(item["round"], 1);
    assert_eq!(item["nodes"][0]["type"], "use");

    let bad = json!({"word": "bank", "pair": item["pair"], "value": 5});
    let (s, _) = call(&app, "POST", "/campaigns/c/judgments", Some("t1"), Some(bad)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let ok = json!({"word": "bank", "pair": item["pair"], "value": 3});
    let (s, ack) = call(&app, "POST", "/campaigns/c/judgments", Some("t1"), Some(ok.clone())).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(ack["weight"], 3.0);
    let (s, body) = call(&app, "POST", "/campaigns/c/judgments", Some("t1"), Some(ok)).await;
    assert_eq!(s, StatusCode::CONFLICT, "{body}");

    let (_, next) = call(&app, "GET", "/campaigns/c/annotators/ann1/next", Some("t1"), None).await;
    assert_ne!(next["item"]["pair"], item["pair"]);

    let (s, body) = call(&app, "POST", "/campaigns/c/words/bank/advance", Some(OPERATOR), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "round_incomplete");

    let (s, _) = call(&app, "GET", "/campaigns/c/words/bank/scores", Some(OPERATOR), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn reassignment_moves_pending_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    call(&app, "POST", "/campaigns", Some(OPERATOR), Some(create_body("c", 5, 20))).await;
    let (_, status) = call(&app, "GET", "/campaigns/c", Some(OPERATOR), None).await;
    let pending_before = status["words"][0]["pending"].as_u64().unwrap();

    // Find a pair only ann1 holds and hand it to ann2.
    let moved = loop {
        let (_, next) = call(&app, "GET", "/campaigns/c/annotators/ann1/next", Some("t1"), None).await;
        let item = next["item"].clone();
        assert!(!item.is_null(), "no single-annotator pair found");
        let body = json!({"word": "bank", "pair": item["pair"], "annotator": "ann1", "to": "ann2"});
        let (s, res) = call(&app, "POST", "/campaigns/c/reassign", Some(OPERATOR), Some(body)).await;
        if s == StatusCode::OK {
            assert_eq!(res["status"], "expired");
            break item["pair"].clone();
        }
        assert_eq!(s, StatusCode::CONFLICT);
        let j = json!({"word": "bank", "pair": item["pair"], "value": 2});
        call(&app, "POST", "/campaigns/c/judgments", Some("t1"), Some(j)).await;
    };
    let j = json!({"word": "bank", "pair": moved, "value": 4});
    let (s, _) = call(&app, "POST", "/campaigns/c/judgments", Some("t1"), Some(j.clone())).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "POST", "/campaigns/c/judgments", Some("t2"), Some(j)).await;
    assert_eq!(s, StatusCode::CREATED);

    let (_, next) = call(&app, "GET", "/campaigns/c/annotators/ann1/next", Some("t1"), None).await;
    let expire = json!({"word": "bank", "pair": next["item"]["pair"], "annotator": "ann1"});
    let (s, res) = call(&app, "POST", "/campaigns/c/reassign", Some(OPERATOR), Some(expire)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(res["status"], "expired");
    let (_, status) = call(&app, "GET", "/campaigns/c", Some(OPERATOR), None).await;
    assert!(status["words"][0]["pending"].as_u64().unwrap() < pending_before);
}

#[tokio::test]
async fn judgments_survive_restart_and_torn_writes() {
    let dir = tempfile::tempdir().unwrap();
    let pair;
    {
        let app = app(dir.path());
        call(&app, "POST", "/campaigns", Some(OPERATOR), Some(create_body("c", 9, 20))).await;
        let (_, next) = call(&app, "GET", "/campaigns/c/annotators/ann2/next", Some("t2"), None).await;
        pair = next["item"]["pair"].clone();
        let j = json!({"word": "bank", "pair": pair, "value": 1});
        let (s, _) = call(&app, "POST", "/campaigns/c/judgments", Some("t2"), Some(j)).await;
        assert_eq!(s, StatusCode::CREATED);
    }
    // Simulate a crash in the middle of the next append.
    let log = dir.path().join("campaigns/c/events.jsonl");
    let mut bytes = std::fs::read(&log).unwrap();
    let intact = bytes.len();
    bytes.extend_from_slice(b"{\"v\":1,\"seq\":3,\"event\":\"jud");
    std::fs::write(&log, bytes).unwrap();

    let app = app(dir.path());
    assert_eq!(std::fs::metadata(&log).unwrap().len() as usize, intact);
    let (_, graph) = call(&app, "GET", "/campaigns/c/words/bank/graph", Some(OPERATOR), None).await;
    let edges = graph["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 1);
    assert_eq!(edges[0]["pair"], pair);
    assert_eq!(edges[0]["weight"], 1.0);
    assert!(graph["clusters"].is_null());
    let j = json!({"word": "bank", "pair": pair, "value": 1});
    let (s, _) = call(&app, "POST", "/campaigns/c/judgments", Some("t2"), Some(j)).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn full_campaign_matches_library_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    call(&app, "POST", "/campaigns", Some(OPERATOR), Some(create_body("c", 21, 28))).await;
    let done = run_to_done(&app, "c").await;
    let (s, scores) = call(&app, "GET", "/campaigns/c/words/bank/scores", Some(OPERATOR), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(scores["binary"], done["scores"]["binary"]);
    let (_, graph) = call(&app, "GET", "/campaigns/c/words/bank/graph", Some(OPERATOR), None).await;
    assert_eq!(graph["clusters"].as_array().unwrap().len(), 2);

    // The same judgments fed straight into the library pipeline.
    let cfg = PipelineConfig {
        sampler: semchange_core::sampling::SamplerConfig { annotators: vec!["ann1".into(), "ann2".into()], ..Default::default() },
        ..Default::default()
    };
    let graph = UsageGraph::with_nodes("bank", uses("bank", 28).into_iter().map(Into::into)).unwrap();
    let mut run = WordRun::start(graph, &cfg, pipeline::word_seed(21, "bank")).unwrap();
    let outcome = loop {
        let plan = run.plan().unwrap().clone();
        for item in &plan.items {
            let same = sense(item.pair.first().as_str()) == sense(item.pair.second().as_str());
            for a in &item.annotators {
                run.record(Judgment::new(item.pair.clone(), a.clone(), if same { 4 } else { 1 }, plan.round).unwrap()).unwrap();
            }
        }
        if let Step::Done(o) = run.advance(&cfg).unwrap() {
            break o.clone();
        }
    };
    assert_eq!(scores["binary"].as_u64().unwrap(), u64::from(outcome.scores.binary));
    assert_eq!(scores["graded"].as_f64().unwrap(), outcome.scores.graded);

    // Replaying the log reproduces every stored snapshot byte for byte.
    let replayed = Campaign::replay(read_log(&dir.path().join("campaigns/c/events.jsonl")).unwrap()).unwrap();
    let word = &replayed.words["bank"];
    let stored = stored_snapshots(&dir.path().join("campaigns/c"), word.index).unwrap();
    assert!(!stored.is_empty());
    assert_eq!(stored, word.snapshots);
    assert_eq!(word.scores().unwrap().graded, outcome.scores.graded);

    let (s, _) = call(&app, "POST", "/campaigns/c/words/bank/advance", Some(OPERATOR), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn campaign_wide_advance_skips_busy_words() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut body = create_body("c", 4, 20);
    body["words"] = json!([
        {"word": "bank", "uses": uses("bank", 20)},
        {"word": "cell", "uses": uses("cell", 20)},
    ]);
    let (s, _) = call(&app, "POST", "/campaigns", Some(OPERATOR), Some(body)).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, res) = call(&app, "POST", "/campaigns/c/advance", Some(OPERATOR), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(res["advanced"].as_array().unwrap().len(), 0);
    assert_eq!(res["skipped"].as_array().unwrap().len(), 2);

    // Clear every queue, then both words advance together.
    for (aid, token) in [("ann1", "t1"), ("ann2", "t2")] {
        loop {
            let (_, next) = call(&app, "GET", &format!("/campaigns/c/annotators/{aid}/next"), Some(token), None).await;
            if next["item"].is_null() {
                break;
            }
            let j = json!({"word": next["item"]["word"], "pair": next["item"]["pair"], "value": 4});
            call(&app, "POST", "/campaigns/c/judgments", Some(token), Some(j)).await;
        }
    }
    let (_, res) = call(&app, "POST", "/campaigns/c/advance", Some(OPERATOR), None).await;
    assert_eq!(res["advanced"].as_array().unwrap().len(), 2);
}
