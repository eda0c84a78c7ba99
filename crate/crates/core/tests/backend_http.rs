//! Fault-injection tests for the live backend against a local stub server.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use vlmad::backend::{Backend, BackendConfig, BackendError, LiveBackend};
use vlmad::prompt::{PromptStrategy, PromptTemplate};
use vlmad::types::{CanonicalImage, Provenance};

/// One-shot HTTP/1.1 stub: serves the scripted (status, body) responses in
/// order, one connection each, then exits.
fn stub_server(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = match listener.accept() {
                Ok(conn) => conn,
                Err(_) => return,
            };
            consume_request(&mut stream);
            let reason = match status {
                200 => "OK",
                400 => "Bad Request",
                429 => "Too Many Requests",
                500 => "Internal Server Error",
                503 => "Service Unavailable",
                _ => "Other",
            };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (format!("http://{addr}/v1/chat/completions"), handle)
}

fn consume_request(stream: &mut std::net::TcpStream) {
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        match stream.read(&mut chunk) {
            Ok(0) => return,
            Ok(n) => {
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = find_header_end(&buf) {
                    break pos;
                }
            }
            Err(_) => return,
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_ascii_lowercase();
    let content_length: usize = headers
        .lines()
        .find_map(|l| l.strip_prefix("content-length:"))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0);
    let mut body_read = buf.len() - (header_end + 4);
    while body_read < content_length {
        match stream.read(&mut chunk) {
            Ok(0) | Err(_) => return,
            Ok(n) => body_read += n,
        }
    }
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn config_for(endpoint: &str, max_retries: u32) -> BackendConfig {
    BackendConfig {
        backend_id: "gpt4v".into(),
        endpoint_url: endpoint.into(),
        model_name: "stub-model".into(),
        api_key_env: "VLMAD_STUB_KEY".into(),
        timeout_s: 5.0,
        max_retries,
        rate_limit: 600,
        max_output_tokens: 64,
    }
}

fn naive_bundle() -> vlmad::prompt::PromptBundle {
    let image = CanonicalImage::from_pixels(
        4,
        4,
        vec![33; 48],
        Provenance::Raster { original_width: 4, original_height: 4 },
    );
    PromptTemplate::bundled()
        .build_prompt(PromptStrategy::Naive, image, None, None, None)
        .unwrap()
}

fn ok_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

#[test]
fn two_429s_then_success_takes_three_attempts() {
    std::env::set_var("VLMAD_STUB_KEY", "stub");
    let (endpoint, server) = stub_server(vec![
        (429, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("1, dent on the rim")),
    ]);
    let backend = LiveBackend::new(config_for(&endpoint, 3))
        .unwrap()
        .with_backoff_base(Duration::from_millis(1));
    let response = backend.query(&naive_bundle()).unwrap();
    assert_eq!(response.attempt_count, 3);
    assert_eq!(response.text, "1, dent on the rim");
    assert!(response.latency_ms > 0.0);
    server.join().unwrap();
}

#[test]
fn non_retryable_status_preserves_body() {
    std::env::set_var("VLMAD_STUB_KEY", "stub");
    let (endpoint, server) = stub_server(vec![(400, "{\"error\": \"bad image payload\"}".into())]);
    let backend = LiveBackend::new(config_for(&endpoint, 3))
        .unwrap()
        .with_backoff_base(Duration::from_millis(1));
    match backend.query(&naive_bundle()) {
        Err(BackendError::BadStatus { status, body }) => {
            assert_eq!(status, 400);
            assert!(body.contains("bad image payload"));
        }
        other => panic!("expected BadStatus, got {other:?}"),
    }
    server.join().unwrap();
}

#[test]
fn exhausted_429s_report_rate_limited() {
    std::env::set_var("VLMAD_STUB_KEY", "stub");
    let (endpoint, server) = stub_server(vec![(429, "{}".into()), (429, "{}".into())]);
    let backend = LiveBackend::new(config_for(&endpoint, 1))
        .unwrap()
        .with_backoff_base(Duration::from_millis(1));
    match backend.query(&naive_bundle()) {
        Err(BackendError::RateLimitedExhausted { attempts }) => assert_eq!(attempts, 2),
        other => panic!("expected RateLimitedExhausted, got {other:?}"),
    }
    server.join().unwrap();
}

#[test]
fn server_errors_retry_then_surface_status() {
    std::env::set_var("VLMAD_STUB_KEY", "stub");
    let (endpoint, server) = stub_server(vec![
        (503, "upstream down".into()),
        (200, ok_body("0, all good")),
    ]);
    let backend = LiveBackend::new(config_for(&endpoint, 2))
        .unwrap()
        .with_backoff_base(Duration::from_millis(1));
    let response = backend.query(&naive_bundle()).unwrap();
    assert_eq!(response.attempt_count, 2);
    server.join().unwrap();

    let (endpoint, server) = stub_server(vec![(500, "boom".into()), (500, "boom".into())]);
    let backend = LiveBackend::new(config_for(&endpoint, 1))
        .unwrap()
        .with_backoff_base(Duration::from_millis(1));
    match backend.query(&naive_bundle()) {
        Err(BackendError::BadStatus { status, body }) => {
            assert_eq!(status, 500);
            assert_eq!(body, "boom");
        }
        other => panic!("expected BadStatus after exhausted retries, got {other:?}"),
    }
    server.join().unwrap();
}

#[test]
fn connection_failure_is_transport() {
    std::env::set_var("VLMAD_STUB_KEY", "stub");
    // bind, grab the port, and drop the listener so connects are refused
    let port = {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        listener.local_addr().unwrap().port()
    };
    let backend = LiveBackend::new(config_for(&format!("http://127.0.0.1:{port}/x"), 1))
        .unwrap()
        .with_backoff_base(Duration::from_millis(1));
    match backend.query(&naive_bundle()) {
        Err(BackendError::Transport { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("expected Transport, got {other:?}"),
    }
}

#[test]
fn malformed_success_body_is_reported() {
    std::env::set_var("VLMAD_STUB_KEY", "stub");
    let (endpoint, server) = stub_server(vec![(200, "{\"unexpected\": true}".into())]);
    let backend = LiveBackend::new(config_for(&endpoint, 0))
        .unwrap()
        .with_backoff_base(Duration::from_millis(1));
    match backend.query(&naive_bundle()) {
        Err(BackendError::MalformedResponse { .. }) => {}
        other => panic!("expected MalformedResponse, got {other:?}"),
    }
    server.join().unwrap();
}
