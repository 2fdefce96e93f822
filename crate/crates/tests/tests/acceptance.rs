//! Acceptance checks, one per criterion. Runs without the libtest harness so
//! that every check prints its PASS/FAIL line even when output is captured.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use semchange_core::clustering::{self, brute_force_cluster, ClusterConfig};
use semchange_core::corpus::{self, Corpus};
use semchange_core::evaluation::{self, AnswerSet};
use semchange_core::graph::{Epoch, Judgment, Pair, UsageGraph, UseNode};
use semchange_core::measures::{binary_change, graded_change, Thresholds};
use semchange_core::pipeline;
use semchange_core::seed;
use semchange_core::simulation::{self, SimulationConfig};
use semchange_core::Error;
use semchange_service::campaign::Campaign;
use semchange_service::http::{router, AppState};
use semchange_service::store::{read_log, stored_snapshots, Store};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_published_change_scores() -> Check {
    let large = Thresholds { k: 2, n: 5 };
    let g1 = graded_change(&[58, 0, 4, 0], &[52, 14, 5, 1]).map_err(|e| e.to_string())?;
    let g2 = graded_change(&[12, 45, 0, 1], &[85, 6, 1, 1]).map_err(|e| e.to_string())?;
    let b1 = binary_change(&[58, 0, 4, 0], &[52, 14, 5, 1], large).map_err(|e| e.to_string())?;
    let b2 = binary_change(&[12, 45, 0, 1], &[85, 6, 1, 1], large).map_err(|e| e.to_string())?;
    ensure((g1 - 0.34).abs() <= 0.005, || format!("ledning G={g1:.4}, expected 0.34"))?;
    ensure((g2 - 0.66).abs() <= 0.005, || format!("Eintagsfliege G={g2:.4}, expected 0.66"))?;
    ensure(b1 == 1 && b2 == 0, || format!("B=({b1},{b2}), expected (1,0)"))?;
    Ok(format!("G=({g1:.4}, {g2:.4}) B=({b1}, {b2})"))
}

fn c2_binary_fixture() -> Check {
    let (d, e) = ([12, 18, 0], [4, 11, 18]);
    let large = binary_change(&d, &e, Thresholds::LARGE_SAMPLE).map_err(|e| e.to_string())?;
    let small = binary_change(&d, &e, Thresholds::SMALL_SAMPLE).map_err(|e| e.to_string())?;
    ensure(large == 1 && small == 1, || format!("B=(k2n5: {large}, k0n1: {small}), expected 1 under both"))?;
    Ok("B=1 under (2,5) and (0,1)".into())
}

fn c3_corpus_ttr() -> Check {
    // (row, tokens, types, printed TTR)
    let rows = [
        ("English C1", 6.5e6, 87e3, 13.38),
        ("English C2", 6.7e6, 150e3, 22.38),
        ("German C1", 70.2e6, 1.0e6, 14.25),
        ("German C2", 72.3e6, 2.3e6, 31.81),
        ("Latin C1", 1.7e6, 65e3, 38.24),
        ("Latin C2", 9.4e6, 253e3, 26.91),
        ("Swedish C1", 71.0e6, 1.9e6, 47.88),
        ("Swedish C2", 110.0e6, 3.4e6, 17.27),
    ];
    let mut bad = Vec::new();
    for (row, tokens, types, printed) in rows {
        let ttr = corpus::ttr_from_counts(types, tokens).map_err(|e| e.to_string())?;
        if (ttr - printed).abs() > 0.5 {
            bad.push(format!("{row}: computed {ttr:.2}, printed {printed}"));
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok("all 8 rows within 0.5".into())
}

fn random_graph(rng: &mut seed::Rng, n: usize) -> UsageGraph {
    let nodes = (0..n).map(|i| {
        UseNode::new(format!("n{i}"), Epoch::C1, "w", vec!["w".into()], 0).expect("valid node").into()
    });
    let mut g = UsageGraph::with_nodes("w", nodes).expect("unique ids");
    let density: f64 = rng.random_range(0.3..=1.0);
    for i in 0..n {
        for j in i + 1..n {
            if !rng.random_bool(density) {
                continue;
            }
            // Median weights 1, 1.5, .., 4, i.e. shifted weights -1.5 .. +1.5.
            let doubled: u8 = rng.random_range(2..=8);
            let values = if doubled.is_multiple_of(2) { vec![doubled / 2] } else { vec![doubled / 2, doubled / 2 + 1] };
            let pair = Pair::new(format!("n{i}"), format!("n{j}")).expect("distinct nodes");
            for (k, v) in values.into_iter().enumerate() {
                g.add_judgment(Judgment::new(pair.clone(), format!("a{k}"), v, 1).expect("valid judgment"))
                    .expect("known nodes");
            }
        }
    }
    g
}

fn c4_clustering_optimality() -> Check {
    let start = Instant::now();
    let mut rng = seed::rng(4);
    let (mut matched, mut lower) = (0, 0);
    for trial in 0..100u64 {
        let n = rng.random_range(2..=10);
        let g = random_graph(&mut rng, n);
        let cfg = ClusterConfig::default().with_seed(trial);
        let sa = clustering::loss(&g, &clustering::cluster(&g, &cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let bf = clustering::loss(&g, &brute_force_cluster(&g).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if (sa - bf).abs() < 1e-9 {
            matched += 1;
        } else if sa < bf {
            lower += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(lower == 0, || format!("{lower} annealing results beat the exhaustive optimum"))?;
    ensure(matched >= 95, || format!("matched {matched}/100"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("matched {matched}/100, never lower, {elapsed:.1?}"))
}

fn c5_simulation_recovery() -> Check {
    let start = Instant::now();
    let cfg = SimulationConfig { n_words: 40, freq_range: (50, 200), sigma: 0.5, ..SimulationConfig::default() };
    let noisy = simulation::run_simulation(&cfg).map_err(|e| e.to_string())?;
    let clean = simulation::run_simulation(&SimulationConfig { sigma: 0.0, ..cfg }).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(noisy.mean_ari >= 0.9, || format!("mean ARI {:.4} < 0.9", noisy.mean_ari))?;
    ensure(noisy.all_converged() && noisy.max_rounds() <= 8, || {
        format!("converged={} max rounds={}", noisy.all_converged(), noisy.max_rounds())
    })?;
    ensure(clean.mean_ari == 1.0, || format!("noiseless mean ARI {}", clean.mean_ari))?;
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "sigma=0.5 mean ARI {:.4}, max rounds {}, {:.0} judgments/annotator; sigma=0 mean ARI {}; {elapsed:.1?}",
        noisy.mean_ari,
        noisy.max_rounds(),
        noisy.mean_judgments_per_annotator,
        clean.mean_ari
    ))
}

fn c6_noise_monotonicity() -> Check {
    let sigmas = [0.0, 0.25, 0.5, 1.0];
    let mut means = Vec::new();
    for sigma in sigmas {
        let mut total = 0.0;
        for master in 0..10 {
            let cfg = SimulationConfig { n_words: 20, freq_range: (50, 200), sigma, seed: master, ..SimulationConfig::default() };
            total += simulation::run_simulation(&cfg).map_err(|e| e.to_string())?.mean_ari;
        }
        means.push(total / 10.0);
    }
    let table: Vec<String> = sigmas.iter().zip(&means).map(|(s, m)| format!("{s}: {m:.4}")).collect();
    ensure(means.windows(2).all(|w| w[1] <= w[0]), || format!("not non-increasing: {}", table.join(", ")))?;
    Ok(table.join(", "))
}

/// Spearman by definition: Pearson correlation of average ranks, with
/// ranks found by counting.
fn reference_spearman(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn c7_metric_oracles() -> Check {
    let mut rng = seed::rng(7);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    while compared < 1000 {
        let n = rng.random_range(3..=40);
        let levels = rng.random_range(2..=6);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels)) / 2.0).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
        let got = evaluation::spearman_vectors(&x, &y);
        if constant(&x) || constant(&y) {
            ensure(matches!(got, Err(Error::ConstantVector(_))), || format!("constant input gave {got:?}"))?;
            continue;
        }
        let got = got.map_err(|e| e.to_string())?;
        worst = worst.max((got - reference_spearman(&x, &y)).abs());
        compared += 1;
    }
    ensure(worst <= 1e-12, || format!("max Spearman deviation {worst:e}"))?;

    let f1 = evaluation::f1(0.432, 1.0).ok_or("F1 undefined")?;
    ensure((f1 - 0.603).abs() < 0.0005, || format!("F1 {f1:.4}, expected .603"))?;

    // Always predicting "no change" leaves precision and F1 undefined.
    let words: Vec<String> = (0..31).map(|i| format!("w{i:02}")).collect();
    let gold = AnswerSet::labels(words.iter().enumerate().map(|(i, w)| (w.clone(), u8::from(i < 8)))).map_err(|e| e.to_string())?;
    let majority = evaluation::majority_baseline(&words);
    let prf = evaluation::precision_recall_f1(&majority, &gold, 1).map_err(|e| e.to_string())?;
    ensure(prf.precision.is_none() && prf.recall == Some(0.0) && prf.f1.is_none(), || format!("majority P/R/F1 {prf:?}"))?;
    let acc = evaluation::accuracy(&majority, &gold).map_err(|e| e.to_string())?;
    ensure((acc - 0.742).abs() < 0.0005, || format!("majority accuracy {acc:.4}, expected .742"))?;
    ensure(evaluation::f1(0.0, 0.0).is_none(), || "F1 of P=R=0 was defined".into())?;
    let flat = AnswerSet::scores(words.iter().map(|w| (w.clone(), 0.5))).map_err(|e| e.to_string())?;
    let graded = AnswerSet::scores(words.iter().enumerate().map(|(i, w)| (w.clone(), i as f64))).map_err(|e| e.to_string())?;
    ensure(matches!(evaluation::spearman(&flat, &graded), Err(Error::ConstantVector(_))), || {
        "Spearman of constant scores did not signal".into()
    })?;
    Ok(format!("1000 vectors, max deviation {worst:.1e}; F1 {f1:.3}; majority P=undefined R=0 F1=undefined, acc {acc:.3}"))
}

fn random_corpus(rng: &mut seed::Rng, vocab: &[&str], sentences: usize) -> Corpus {
    let text: Vec<String> = (0..sentences)
        .map(|_| {
            let len = rng.random_range(1..=12);
            (0..len).map(|_| *vocab.choose(rng).expect("non-empty vocabulary")).collect::<Vec<_>>().join(" ")
        })
        .collect();
    Corpus::parse(&text.join("\n"), None)
}

fn c8_baselines() -> Check {
    let mut rng = seed::rng(8);
    let vocab = ["t", "u", "v", "a", "b", "c", "d", "e", "f", "g"];
    let targets: Vec<String> = ["t", "u", "v"].iter().map(|s| s.to_string()).collect();
    for _ in 0..20 {
        let a = random_corpus(&mut rng, &vocab, 60);
        let b = random_corpus(&mut rng, &vocab[..8], 60);
        let freq_same = evaluation::freq_baseline(&a, &a, &targets).map_err(|e| e.to_string())?;
        ensure(freq_same.values().iter().all(|v| *v == 0.0), || "freq baseline non-zero on identical corpora".into())?;
        let count_same = evaluation::count_baseline(&a, &a, &targets, 4).map_err(|e| e.to_string())?;
        ensure(count_same.answers.values().iter().all(|v| v.abs() < 1e-12), || {
            format!("count baseline non-zero on identical corpora: {:?}", count_same.answers)
        })?;
        let f_ab = evaluation::freq_baseline(&a, &b, &targets).map_err(|e| e.to_string())?;
        let f_ba = evaluation::freq_baseline(&b, &a, &targets).map_err(|e| e.to_string())?;
        ensure(f_ab == f_ba, || "freq baseline not symmetric".into())?;
        let c_ab = evaluation::count_baseline(&a, &b, &targets, 4).map_err(|e| e.to_string())?;
        let c_ba = evaluation::count_baseline(&b, &a, &targets, 4).map_err(|e| e.to_string())?;
        ensure(c_ab.answers == c_ba.answers, || "count baseline not symmetric".into())?;
        let again = evaluation::count_baseline(&a, &b, &targets, 4).map_err(|e| e.to_string())?;
        ensure(again.answers == c_ab.answers, || "count baseline not deterministic".into())?;
    }

    // Four sentences, window 2. `x` occurs only in C1, so its column is
    // dropped. Context counts over columns (a, b, c, d, t):
    //   t: C1 (1,1,1,1,0)  C2 (1,1,1,2,0)  distance 1 - 5/(2 sqrt 7)
    //   d: C1 (0,0,0,0,1)  C2 (1,0,0,2,2)  distance 1 - 2/3
    let c1 = Corpus::parse("a b t c\nt d x", None);
    let c2 = Corpus::parse("b t c\nd d t a", None);
    let out = evaluation::count_baseline(&c1, &c2, &["t".into(), "d".into()], 2).map_err(|e| e.to_string())?;
    let expected = [("t", 1.0 - 5.0 / (2.0 * 7f64.sqrt())), ("d", 1.0 / 3.0)];
    for (w, want) in expected {
        let got = out.answers.get(w).ok_or_else(|| format!("no score for `{w}`"))?;
        ensure((got - want).abs() <= 1e-12, || format!("`{w}`: {got} vs hand-computed {want}"))?;
    }
    Ok("identical corpora give 0, swaps are exact, 4-sentence fixture within 1e-12".into())
}

fn c9_jsd_properties() -> Check {
    let mut rng = seed::rng(9);
    let (mut zeros, mut ones) = (0, 0);
    for i in 0..10_000 {
        let len = rng.random_range(1..=8);
        let draw = |rng: &mut seed::Rng| -> Vec<u64> {
            loop {
                let v: Vec<u64> = (0..len).map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(1..=50) }).collect();
                if v.iter().any(|&c| c > 0) {
                    return v;
                }
            }
        };
        let d = draw(&mut rng);
        let e: Vec<u64> = match i % 3 {
            0 => draw(&mut rng),
            1 => {
                let k = rng.random_range(1..=5);
                d.iter().map(|c| c * k).collect()
            }
            _ => {
                // Move all mass to positions where `d` is zero, when any exist.
                let free: Vec<usize> = (0..len).filter(|&j| d[j] == 0).collect();
                if free.is_empty() {
                    draw(&mut rng)
                } else {
                    let mut v = vec![0; len];
                    for &j in &free {
                        v[j] = rng.random_range(0..=20);
                    }
                    v[free[0]] += 1;
                    v
                }
            }
        };
        let g = graded_change(&d, &e).map_err(|err| err.to_string())?;
        let back = graded_change(&e, &d).map_err(|err| err.to_string())?;
        ensure((g - back).abs() <= 1e-12, || format!("asymmetric for {d:?} {e:?}: {g} vs {back}"))?;
        ensure((0.0..=1.0).contains(&g), || format!("out of bounds for {d:?} {e:?}: {g}"))?;
        let (sd, se) = (d.iter().sum::<u64>(), e.iter().sum::<u64>());
        let identical = d.iter().zip(&e).all(|(a, b)| a * se == b * sd);
        let disjoint = d.iter().zip(&e).all(|(a, b)| *a == 0 || *b == 0);
        ensure(identical == (g <= 1e-9), || format!("zero iff identical fails for {d:?} {e:?}: {g}"))?;
        ensure(disjoint == ((1.0 - g).abs() <= 1e-12), || format!("one iff disjoint fails for {d:?} {e:?}: {g}"))?;
        zeros += usize::from(identical);
        ones += usize::from(disjoint);
    }
    Ok(format!("10000 pairs, {zeros} identical, {ones} disjoint"))
}

async fn call(app: &Router, method: &str, uri: &str, token: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("authorization", format!("Bearer {token}"));
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .expect("valid request");
    let resp = app.clone().oneshot(req).await.expect("infallible service");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    (status, if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).expect("JSON body") })
}

async fn service_campaign() -> Check {
    let cfg = SimulationConfig { n_words: 3, freq_range: (12, 30), sigma: 0.5, annotators: 2, seed: 10, ..SimulationConfig::default() };
    let truths = simulation::generate_ground_truth(&cfg, cfg.seed).map_err(|e| e.to_string())?;
    let campaign_seed = 99;
    let roster = cfg.roster();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let app = router(AppState::new(Store::open(dir.path()).map_err(|e| e.to_string())?, "operator"));

    let body = json!({
        "id": "sim",
        "seed": campaign_seed,
        "annotators": roster.iter().map(|a| json!({"id": a, "token": format!("{a}-token")})).collect::<Vec<_>>(),
        "config": cfg.pipeline(),
        "words": truths.iter().map(|t| json!({"word": t.word, "uses": t.nodes})).collect::<Vec<_>>(),
    });
    let (status, resp) = call(&app, "POST", "/campaigns", "operator", Some(body)).await;
    ensure(status == StatusCode::CREATED, || format!("create: {status} {resp}"))?;

    let by_word: BTreeMap<&str, _> = truths.iter().map(|t| (t.word.as_str(), t)).collect();
    let models: BTreeMap<&str, _> = truths
        .iter()
        .map(|t| {
            let ws = pipeline::word_seed(campaign_seed, &t.word);
            (t.word.as_str(), (ws, simulation::annotator_models(&roster, cfg.sigma, ws).expect("valid sigma")))
        })
        .collect();

    let mut service_scores = BTreeMap::new();
    for _ in 0..50 {
        for a in &roster {
            let token = format!("{a}-token");
            loop {
                let (status, next) = call(&app, "GET", &format!("/campaigns/sim/annotators/{a}/next"), &token, None).await;
                ensure(status == StatusCode::OK, || format!("next: {status} {next}"))?;
                let item = &next["item"];
                if item.is_null() {
                    break;
                }
                let word = item["word"].as_str().ok_or("item without word")?;
                let pair: Pair = serde_json::from_value(item["pair"].clone()).map_err(|e| e.to_string())?;
                let truth = by_word[word];
                let (ws, m) = &models[word];
                let value = simulation::simulate_judgment(
                    &m[a],
                    truth.senses[pair.first()],
                    truth.senses[pair.second()],
                    simulation::judgment_seed(*ws, &pair, a),
                );
                let judged = json!({"word": word, "pair": pair, "value": value});
                let (status, resp) = call(&app, "POST", "/campaigns/sim/judgments", &token, Some(judged)).await;
                ensure(status == StatusCode::CREATED, || format!("judgment: {status} {resp}"))?;
            }
        }
        let (status, resp) = call(&app, "POST", "/campaigns/sim/advance", "operator", None).await;
        ensure(status == StatusCode::OK, || format!("advance: {status} {resp}"))?;
        for r in resp["advanced"].as_array().ok_or("no advanced list")? {
            if r["status"] == "done" {
                let s = &r["scores"];
                service_scores.insert(r["word"].as_str().unwrap_or_default().to_owned(), (s["binary"].as_u64(), s["graded"].as_f64()));
            }
        }
        if service_scores.len() == truths.len() {
            break;
        }
    }
    ensure(service_scores.len() == truths.len(), || format!("only {} words finished", service_scores.len()))?;

    for t in &truths {
        let lib = simulation::simulate_word(t, &cfg, pipeline::word_seed(campaign_seed, &t.word)).map_err(|e| e.to_string())?;
        let got = service_scores[&t.word];
        ensure(got == (Some(u64::from(lib.binary)), Some(lib.graded)), || {
            format!("`{}`: service {got:?}, library ({}, {})", t.word, lib.binary, lib.graded)
        })?;
        let (status, scores) = call(&app, "GET", &format!("/campaigns/sim/words/{}/scores", t.word), "operator", None).await;
        ensure(status == StatusCode::OK && scores["graded"].as_f64() == Some(lib.graded), || format!("scores endpoint: {scores}"))?;
    }

    let records = read_log(&dir.path().join("campaigns/sim/events.jsonl")).map_err(|e| e.to_string())?;
    let events = records.len();
    let replayed = Campaign::replay(records).map_err(|e| e.to_string())?;
    let mut snapshots = 0;
    for (word, state) in &replayed.words {
        let stored = stored_snapshots(&dir.path().join("campaigns/sim"), state.index).map_err(|e| e.to_string())?;
        ensure(!stored.is_empty() && stored == state.snapshots, || format!("`{word}`: replayed snapshots differ from stored files"))?;
        snapshots += stored.len();
        let s = state.scores().ok_or_else(|| format!("`{word}` not done after replay"))?;
        ensure(service_scores[word] == (Some(u64::from(s.binary)), Some(s.graded)), || format!("`{word}`: replayed scores differ"))?;
    }
    Ok(format!(
        "{} words match the library pipeline; replay of {events} events reproduces {snapshots} snapshots byte for byte",
        truths.len()
    ))
}

fn c10_event_sourcing() -> Check {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?
        .block_on(service_campaign())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("published change-score fixtures", c1_published_change_scores),
        ("binary change fixture", c2_binary_fixture),
        ("corpus TTR reproduction", c3_corpus_ttr),
        ("clustering optimality", c4_clustering_optimality),
        ("simulation recovery", c5_simulation_recovery),
        ("noise monotonicity", c6_noise_monotonicity),
        ("metric oracles", c7_metric_oracles),
        ("baseline determinism and symmetry", c8_baselines),
        ("JSD properties", c9_jsd_properties),
        ("event-sourcing equivalence", c10_event_sourcing),
    ];
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for i in 1..=criteria.len() {
            println!("criterion {i}: test");
        }
        return;
    }
    let filter: Vec<String> = args.into_iter().filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS {id} {name}: {detail} [{:.1?}]", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name}: {detail} [{:.1?}]", start.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
