//! HTTP client behaviour against a minimal in-process sidecar.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use mspider_core::backend::{
    BackendError, Cached, EntailmentModel, EntailmentRequest, HttpBackend, HttpConfig, ResponseCache,
    TranslationRequest, Translator,
};
use mspider_core::model::Language;
use serde_json::{json, Value};

#[derive(Default)]
struct Stats {
    requests: AtomicUsize,
    flaky: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
}

fn respond(stream: &mut TcpStream, status: u16, body: &Value) {
    let text = body.to_string();
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        429 => "Too Many Requests",
        _ => "Error",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
}

fn handle(mut stream: TcpStream, stats: &Stats) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).is_err() || line.is_empty() {
        return;
    }
    let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).unwrap();
        if h.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    let req: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    stats.requests.fetch_add(1, Ordering::SeqCst);

    match path.as_str() {
        "/healthz" => respond(&mut stream, 200, &json!({"status": "ok", "version": "mini-1"})),
        "/translate" => match req["text"].as_str().unwrap_or("") {
            "head" => respond(&mut stream, 200, &json!({"text": "Kopf", "backend_version": "mini-1"})),
            "flaky" => {
                if stats.flaky.fetch_add(1, Ordering::SeqCst) < 2 {
                    respond(&mut stream, 503, &json!({"error": "warming_up"}));
                } else {
                    respond(&mut stream, 200, &json!({"text": "stable"}));
                }
            }
            "slow" => {
                let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(40));
                stats.in_flight.fetch_sub(1, Ordering::SeqCst);
                respond(&mut stream, 200, &json!({"text": "langsam"}));
            }
            "blank" => respond(&mut stream, 200, &json!({"text": "  "})),
            "bad-pair" => respond(&mut stream, 400, &json!({"error": "unsupported_pair", "message": "en->xx"})),
            other => respond(
                &mut stream,
                404,
                &json!({"error": "fixture_miss", "message": format!("no translation for {other}")}),
            ),
        },
        "/nli" => {
            let (p, h) = (req["premise"].as_str().unwrap_or(""), req["hypothesis"].as_str().unwrap_or(""));
            let score = match (p, h) {
                ("broken", _) => json!(1.7),
                _ if p == h => json!(1.0),
                _ => json!(0.42),
            };
            respond(&mut stream, 200, &json!({"entail": score, "backend_version": "mini-1"}));
        }
        _ => respond(&mut stream, 404, &json!({"error": "not_found"})),
    }
}

fn serve() -> (String, Arc<Stats>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let stats = Arc::new(Stats::default());
    let s = stats.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let s = s.clone();
            std::thread::spawn(move || handle(stream, &s));
        }
    });
    (addr, stats)
}

fn client(addr: &str) -> HttpBackend {
    let mut cfg = HttpConfig::new(addr);
    cfg.initial_backoff_ms = 5;
    cfg.max_in_flight = 2;
    HttpBackend::connect(cfg).unwrap()
}

fn tr(text: &str) -> TranslationRequest {
    TranslationRequest::new(text, Language::En, Language::De).unwrap()
}

#[test]
fn health_reports_version() {
    let (addr, _) = serve();
    let b = client(&addr);
    assert_eq!(b.version(), "mini-1");
    assert_eq!(Translator::identity(&b).version, "mini-1");
}

#[test]
fn translate_and_entail_round_trip() {
    let (addr, _) = serve();
    let b = client(&addr);
    assert_eq!(b.translate(&tr("head")).unwrap(), "Kopf");
    let same = EntailmentRequest::new("x", "x", Language::En).unwrap();
    assert_eq!(b.entail(&same).unwrap(), 1.0);
    let other = EntailmentRequest::new("a", "b", Language::En).unwrap();
    assert_eq!(b.entail(&other).unwrap(), 0.42);
}

#[test]
fn unmapped_request_is_a_fixture_miss() {
    let (addr, _) = serve();
    let err = client(&addr).translate(&tr("tail")).unwrap_err();
    assert!(matches!(err, BackendError::FixtureMiss { .. }), "{err:?}");
    assert!(!err.is_retryable());
}

#[test]
fn protocol_violations_are_reported() {
    let (addr, _) = serve();
    let b = client(&addr);
    let broken = EntailmentRequest::new("broken", "b", Language::En).unwrap();
    assert!(matches!(b.entail(&broken), Err(BackendError::Protocol(_))));
    assert!(matches!(b.translate(&tr("blank")), Err(BackendError::Protocol(_))));
    assert!(matches!(b.translate(&tr("bad-pair")), Err(BackendError::InvalidRequest(_))));
}

#[test]
fn server_errors_are_retried() {
    let (addr, stats) = serve();
    assert_eq!(client(&addr).translate(&tr("flaky")).unwrap(), "stable");
    assert_eq!(stats.flaky.load(Ordering::SeqCst), 3);
}

#[test]
fn unreachable_sidecar_is_retryable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut cfg = HttpConfig::new(format!("http://127.0.0.1:{port}"));
    cfg.max_retries = 1;
    cfg.initial_backoff_ms = 1;
    let err = HttpBackend::connect(cfg).unwrap_err();
    assert!(err.is_retryable(), "{err:?}");
}

#[test]
fn in_flight_requests_are_bounded() {
    let (addr, stats) = serve();
    let b = Arc::new(client(&addr));
    let handles: Vec<_> = (0..6)
        .map(|_| {
            let b = b.clone();
            std::thread::spawn(move || b.translate(&tr("slow")).unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), "langsam");
    }
    assert!(stats.max_in_flight.load(Ordering::SeqCst) <= 2);
}

#[test]
fn cache_serves_repeats_without_network() {
    let (addr, stats) = serve();
    let b = Cached::new(client(&addr), Arc::new(ResponseCache::in_memory()));
    let before = stats.requests.load(Ordering::SeqCst);
    for _ in 0..3 {
        assert_eq!(b.translate(&tr("head")).unwrap(), "Kopf");
    }
    assert_eq!(stats.requests.load(Ordering::SeqCst) - before, 1);
}
