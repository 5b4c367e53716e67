//! Generation endpoint ingestion against an in-process HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use cluefuse::clues::{ingest_from_endpoint, EndpointConfig, IngestError};

struct Seen {
    bodies: Vec<String>,
    auth: Vec<Option<String>>,
}

/// Serves one scripted `(status, body)` per connection.
fn serve(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Seen>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/generate", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Seen { bodies: Vec::new(), auth: Vec::new() }));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = Some(line["authorization:".len()..].trim().to_string());
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            {
                let mut s = log.lock().unwrap();
                s.bodies.push(String::from_utf8(buf).unwrap());
                s.auth.push(auth);
            }
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn config(url: &str) -> EndpointConfig {
    EndpointConfig {
        initial_backoff: Duration::from_millis(10),
        timeout: Duration::from_secs(5),
        token: Some("secret".into()),
        ..EndpointConfig::new(url)
    }
}

#[test]
fn posts_question_and_parses_clues() {
    let (url, seen) = serve(vec![
        (200, r#"{"clues":[{"text":"t","logprob":-0.5}]}"#.into()),
        (200, r#"{"clues":[{"text":"u","logprob":-1.5},{"text":"v","logprob":-2.0}]}"#.into()),
    ]);
    let map = ingest_from_endpoint(&config(&url), [("q1", "who?"), ("q2", "when?")]).unwrap();
    assert_eq!(map.keys().collect::<Vec<_>>(), ["q1", "q2"]);
    assert_eq!(map["q1"].clues.len(), 1);
    assert_eq!(map["q2"].clues.len(), 2);
    let seen = seen.lock().unwrap();
    let first: serde_json::Value = serde_json::from_str(&seen.bodies[0]).unwrap();
    assert_eq!(first, serde_json::json!({"question": "who?", "num_candidates": 100}));
    assert_eq!(seen.auth[0].as_deref(), Some("Bearer secret"));
}

#[test]
fn retries_then_succeeds() {
    let (url, seen) = serve(vec![
        (503, "{}".into()),
        (500, "{}".into()),
        (200, r#"{"clues":[{"text":"t","logprob":-0.5}]}"#.into()),
    ]);
    let map = ingest_from_endpoint(&config(&url), [("q1", "who?")]).unwrap();
    assert_eq!(map["q1"].clues.len(), 1);
    assert_eq!(seen.lock().unwrap().bodies.len(), 3);
}

#[test]
fn gives_up_after_three_attempts() {
    let (url, seen) = serve(vec![(500, "{}".into()), (502, "{}".into()), (404, "{}".into())]);
    let err = ingest_from_endpoint(&config(&url), [("q1", "who?")]).unwrap_err();
    match err {
        IngestError::Http { qid, status, attempts } => {
            assert_eq!((qid.as_str(), status, attempts), ("q1", 404, 3));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(seen.lock().unwrap().bodies.len(), 3);
}

#[test]
fn invalid_clue_in_response_is_schema_error() {
    let (url, _) = serve(vec![(200, r#"{"clues":[{"text":"","logprob":-0.5}]}"#.into())]);
    let err = ingest_from_endpoint(&config(&url), [("q1", "who?")]).unwrap_err();
    assert!(matches!(err, IngestError::Schema { .. }));
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let err = ingest_from_endpoint(&config(&url), [("q1", "who?")]).unwrap_err();
    assert!(matches!(err, IngestError::Transport { attempts: 3, .. }), "{err:?}");
}
