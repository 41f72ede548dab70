mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use common::*;
use shiftbench_core::generator::{expand, GenerationPlan, Lexicon};
use shiftbench_core::scoring::{
    preference, score_sequence, train_ngram, HttpBackend, HttpConfig, ReplayBackend, ScoringBackend, ScoringError,
    Tokenizer,
};
use shiftbench_core::weights::{syllable_count, syllable_ratio, word_ratio, WeightProfile, WeightRatio};
use shiftbench_core::ShiftType;

const CORPUS: [&str; 3] = ["I met the man at the park.", "She met the man.", "The man met her at the station."];

#[test]
fn ngram_matches_brute_force_chain_rule() {
    for order in 1..=3 {
        for delta in [0.1, 0.5, 1.0] {
            let lm = train_ngram(&CORPUS, order, delta).unwrap();
            let brute = BruteNgram::new(&CORPUS, order, delta);
            for text in CORPUS.iter().copied().chain(["I met at the park the man.", "Zebras met the unknown man."]) {
                let got = score_sequence(&lm, text).unwrap().m_score;
                let want = brute.log_prob(text);
                assert!((got - want).abs() < 1e-9, "order {order} delta {delta} {text:?}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn hand_computed_bigram_value() {
    // "she met the man" under the bigram with delta 1. The vocabulary has 9
    // words plus the unknown class, so each denominator adds 10.
    // P(she|<s>) = (1+1)/(3+10), P(met|she) = (1+1)/(1+10),
    // P(the|met) = (2+1)/(3+10), P(man|the) = (3+1)/(5+10)
    let lm = train_ngram(&CORPUS, 2, 1.0).unwrap();
    assert_eq!(lm.vocab_size(), 9);
    let want = (2.0f64 / 13.0).ln() + (2.0f64 / 11.0).ln() + (3.0f64 / 13.0).ln() + (4.0f64 / 15.0).ln();
    let got = score_sequence(&lm, "She met the man.").unwrap().m_score;
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn conditional_distributions_sum_to_one() {
    let lm = train_ngram(&CORPUS, 3, 0.3).unwrap();
    for ctx in [vec![], vec!["the"], vec!["met", "the"], vec!["unseen", "words"]] {
        assert!((lm.total_mass(&ctx) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn preference_is_antisymmetric_on_generated_pairs() {
    let lex = Lexicon::bundled();
    let pairs: Vec<_> = expand(&lex, &GenerationPlan::full(&lex, ShiftType::HeavyNpShift).unwrap())
        .unwrap()
        .take(1000)
        .collect();
    assert_eq!(pairs.len(), 1000);
    let corpus: Vec<&str> = pairs.iter().step_by(3).map(|p| p.unshifted.as_str()).collect();
    let lm = train_ngram(&corpus, 2, 0.5).unwrap();
    for p in &pairs {
        let fwd = preference(&lm, p).unwrap();
        let back = preference(&lm, &p.swapped()).unwrap();
        assert_eq!(fwd.m_preference, -back.m_preference);
        assert_eq!(fwd.m_preference, fwd.m_score_unshifted - fwd.m_score_shifted);
    }
}

#[test]
fn replay_fixture_scores_and_counts() {
    let b = ReplayBackend::from_path(test_data_path("replay_fixture.jsonl")).unwrap();
    assert_eq!(b.backend_id(), "recorded-subword");
    let u = score_sequence(&b, "He sent her a gift for her birthday.").unwrap();
    assert_eq!(u.m_score, -21.875);
    assert_eq!(b.count_tokens("with her grandmother").unwrap(), 4);
    assert_eq!(b.count_tokens("a gift").unwrap(), 2);
    assert!(matches!(b.score("never recorded"), Err(ScoringError::Missing { .. })));
}

#[test]
fn weight_ratio_micro_examples() {
    let measure = |t| WeightProfile::measure(t, &[], None).unwrap();
    let short = measure("with her grandmother");
    let garden = measure("around the garden");
    let long = measure("around the decorated entryway garden with the large fountain");
    assert_eq!(word_ratio(&short, &garden).unwrap(), WeightRatio::new(3, 3));
    assert_eq!(syllable_ratio(&short, &garden).unwrap(), WeightRatio::new(5, 5));
    assert_eq!(word_ratio(&short, &long).unwrap(), WeightRatio::new(1, 3));
    assert_eq!(syllable_ratio(&short, &long).unwrap(), WeightRatio::new(5, 17));
    assert_eq!(syllable_ratio(&short, &long).unwrap().to_string(), "5:17");
}

#[test]
fn syllable_heuristic_on_oracle_list() {
    let list = syllable_oracle();
    assert_eq!(list.len(), 50);
    let misses: Vec<_> = list.iter().filter(|(w, n)| syllable_count(w) != *n).collect();
    let agreement = 1.0 - misses.len() as f64 / list.len() as f64;
    assert!(agreement >= 0.9, "agreement {agreement}, misses {misses:?}");
}

/// Minimal HTTP/1.1 server: answers each POST with one token per
/// whitespace-separated word, each at logprob -1. The first `fail_first`
/// requests get a 503.
struct MockServer {
    url: String,
    hits: Arc<AtomicUsize>,
    auth: Arc<Mutex<Vec<Option<String>>>>,
}

fn mock_server(fail_first: usize, malformed: bool) -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/logprobs", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let auth = Arc::new(Mutex::new(Vec::new()));
    let (h, a) = (hits.clone(), auth.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut bearer = None;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    bearer = Some(line["authorization:".len()..].trim().to_string());
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let n = h.fetch_add(1, Ordering::SeqCst);
            a.lock().unwrap().push(bearer);
            let (status, payload) = if n < fail_first {
                ("503 Service Unavailable", "{}".to_string())
            } else if malformed {
                ("200 OK", "{\"tokens\": 3}".to_string())
            } else {
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let toks: Vec<&str> = req["text"].as_str().unwrap().split_whitespace().collect();
                let lps = vec![-1.0; toks.len()];
                ("200 OK", serde_json::json!({ "tokens": toks, "logprobs": lps }).to_string())
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    MockServer { url, hits, auth }
}

#[test]
fn http_backend_scores_and_caches() {
    let server = mock_server(0, false);
    let mut cfg = HttpConfig::new(&server.url);
    cfg.token = Some("secret".into());
    let b = HttpBackend::new(cfg).unwrap();
    let s = b.score("I met the man at the park.").unwrap();
    assert_eq!(s.m_score, -7.0);
    assert_eq!(b.count_tokens("the tall man").unwrap(), 3);
    b.score("I met the man at the park.").unwrap();
    assert_eq!(b.request_count(), 2);
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
    assert_eq!(server.auth.lock().unwrap()[0].as_deref(), Some("Bearer secret"));
}

#[test]
fn http_retries_server_errors_then_succeeds() {
    let server = mock_server(2, false);
    let b = HttpBackend::new(HttpConfig::new(&server.url)).unwrap();
    assert_eq!(b.score("one two").unwrap().m_score, -2.0);
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn http_gives_up_after_retry_budget() {
    let server = mock_server(usize::MAX, false);
    let mut cfg = HttpConfig::new(&server.url);
    cfg.max_retries = 1;
    let b = HttpBackend::new(cfg).unwrap();
    let err = b.score("one two").unwrap_err();
    assert!(err.is_retryable(), "{err}");
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn http_malformed_body_is_a_protocol_error() {
    let server = mock_server(0, true);
    let b = HttpBackend::new(HttpConfig::new(&server.url)).unwrap();
    assert!(matches!(b.score("x y"), Err(ScoringError::Protocol { .. })));
}

#[test]
fn http_cache_file_replays_without_network() {
    let server = mock_server(0, false);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let mut cfg = HttpConfig::new(&server.url);
    cfg.cache_path = Some(cache.clone());
    let texts = ["a b c", "d e"];
    {
        let b = HttpBackend::new(cfg.clone()).unwrap();
        for t in texts {
            b.score(t).unwrap();
        }
    }
    let again = HttpBackend::new(cfg).unwrap();
    assert_eq!(again.score("a b c").unwrap().m_score, -3.0);
    assert_eq!(again.request_count(), 0);
    let replay = ReplayBackend::from_path(&cache).unwrap();
    assert_eq!(replay.score("d e").unwrap().m_score, -2.0);
}

#[test]
fn http_concurrent_scoring_is_consistent() {
    let server = mock_server(0, false);
    let mut cfg = HttpConfig::new(&server.url);
    cfg.max_in_flight = 2;
    let b = Arc::new(HttpBackend::new(cfg).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let b = b.clone();
            thread::spawn(move || b.score(&"w ".repeat(i + 1)).unwrap().m_score)
        })
        .collect();
    for (i, h) in handles.into_iter().enumerate() {
        assert_eq!(h.join().unwrap(), -((i + 1) as f64));
    }
    assert_eq!(b.cache().len(), 8);
}

#[test]
fn unreachable_endpoint_is_a_retryable_transport_error() {
    let addr = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let mut cfg = HttpConfig::new(format!("http://{addr}/x"));
    cfg.max_retries = 0;
    let err = HttpBackend::new(cfg).unwrap().score("a").unwrap_err();
    assert!(matches!(err, ScoringError::Transport { retryable: true, .. }), "{err}");
}
