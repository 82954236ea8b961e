mod common;

use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use slopesim::config::{BackendKind, ServiceConfig};
use slopesim::remote::RemoteBackend;
use slopesim::state::AppState;
use slopesim_core::agent::{AgentKind, StepClock};
use slopesim_core::extract::{
    ExtractError, ImageInput, LlmBackend, LlmBackendConfig, LlmReply, LlmRequest, TOOL_NAME,
};
use slopesim_core::model::Target;

const SECRET: &str = "sk-test-4f1c9e0b7a62d5";

#[derive(Default)]
struct Seen {
    auth: Vec<String>,
    bodies: Vec<Value>,
}

type Log = Arc<Mutex<Seen>>;

fn record(log: &Log, headers: &HeaderMap, body: &Value) {
    let mut seen = log.lock().unwrap();
    seen.auth.push(
        headers
            .get("authorization")
            .map(|v| v.to_str().unwrap().to_string())
            .unwrap_or_default(),
    );
    seen.bodies.push(body.clone());
}

fn tool_reply(arguments: Value) -> Value {
    json!({"choices": [{"message": {"role": "assistant", "tool_calls": [{
        "id": "call_1", "type": "function",
        "function": {"name": TOOL_NAME, "arguments": arguments.to_string()}
    }]}}]})
}

async fn ok(State(log): State<Log>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    record(&log, &headers, &body);
    let user = body["messages"][1]["content"][0]["text"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    let mut fields = Vec::new();
    if user.contains("high") {
        fields.push(json!({"field_path": "geometry.height", "value": 10, "unit": "m"}));
        fields.push(json!({"field_path": "geometry.slope_angle", "value": 45, "unit": "deg"}));
    }
    if user.contains("cohesion") {
        fields.push(json!({"field_path": "layers[0].cohesion", "value": 25, "unit": "kPa"}));
        fields.push(json!({"field_path": "layers[0].friction_angle", "value": 20, "unit": "deg"}));
        fields.push(json!({"field_path": "layers[0].unit_weight", "value": 19, "unit": "kN/m3"}));
    }
    Json(tool_reply(
        json!({"fields": fields, "run_intent": user.contains("compute")}),
    ))
}

/// Fails and echoes the credential back, as a misbehaving proxy might.
async fn fail(
    State(log): State<Log>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, String) {
    record(&log, &headers, &body);
    let auth = headers
        .get("authorization")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    (
        StatusCode::INTERNAL_SERVER_ERROR,
        format!("upstream rejected {auth}"),
    )
}

async fn denied(
    State(log): State<Log>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, String) {
    record(&log, &headers, &body);
    (StatusCode::UNAUTHORIZED, format!("bad key {SECRET}"))
}

async fn garbage(State(log): State<Log>, headers: HeaderMap, Json(body): Json<Value>) -> String {
    record(&log, &headers, &body);
    format!("not json {SECRET}")
}

/// Serves the fake endpoints on a background runtime; returns the base URL.
fn fake_server() -> (String, Log) {
    let log: Log = Arc::default();
    let app = Router::new()
        .route("/ok", post(ok))
        .route("/fail", post(fail))
        .route("/denied", post(denied))
        .route("/garbage", post(garbage))
        .with_state(log.clone());
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (format!("http://{addr}"), log)
}

fn backend_config(endpoint: String, env: &str, retries: u32) -> LlmBackendConfig {
    LlmBackendConfig {
        endpoint,
        model: "test-model".into(),
        credential_env: env.into(),
        timeout_secs: 5,
        max_retries: retries,
    }
}

fn backend(endpoint: String, env: &str, retries: u32) -> RemoteBackend {
    std::env::set_var(env, SECRET);
    RemoteBackend::from_env(backend_config(endpoint, env, retries)).unwrap()
}

#[test]
fn tool_call_round_trip() {
    let (base, log) = fake_server();
    let b = backend(format!("{base}/ok"), "SLOPESIM_TEST_KEY_ROUNDTRIP", 0);
    let mut req = LlmRequest::for_text("a 10 m high slope");
    req.images.push(ImageInput {
        media_type: "image/png".into(),
        bytes: vec![0x89, b'P', b'N', b'G'],
    });
    let reply = b.complete(&req).unwrap();
    let LlmReply::ToolCall { name, arguments } = reply else {
        panic!("{reply:?}")
    };
    assert_eq!(name, TOOL_NAME);
    assert_eq!(arguments["fields"][0]["field_path"], "geometry.height");

    let seen = log.lock().unwrap();
    assert_eq!(seen.auth, [format!("Bearer {SECRET}")]);
    let body = &seen.bodies[0];
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["tools"][0]["function"]["name"], TOOL_NAME);
    assert_eq!(body["tool_choice"]["function"]["name"], TOOL_NAME);
    assert_eq!(
        body["messages"][1]["content"][1]["image_url"]["url"],
        "data:image/png;base64,iVBORw=="
    );
    assert!(!body.to_string().contains(SECRET));
}

#[test]
fn errors_never_carry_the_credential() {
    let (base, log) = fake_server();
    let err = backend(format!("{base}/fail"), "SLOPESIM_TEST_KEY_FAIL", 1)
        .complete(&LlmRequest::for_text("x"))
        .unwrap_err();
    assert!(matches!(err, ExtractError::BackendUnavailable(_)));
    assert_eq!(
        log.lock().unwrap().bodies.len(),
        2,
        "one retry after a server error"
    );
    let texts = [
        err.to_string(),
        format!("{err:?}"),
        backend(format!("{base}/denied"), "SLOPESIM_TEST_KEY_DENIED", 3)
            .complete(&LlmRequest::for_text("x"))
            .unwrap_err()
            .to_string(),
        backend(format!("{base}/garbage"), "SLOPESIM_TEST_KEY_GARBAGE", 0)
            .complete(&LlmRequest::for_text("x"))
            .unwrap_err()
            .to_string(),
        backend(
            "http://127.0.0.1:9/closed".into(),
            "SLOPESIM_TEST_KEY_CLOSED",
            0,
        )
        .complete(&LlmRequest::for_text("x"))
        .unwrap_err()
        .to_string(),
        format!(
            "{:?}",
            backend(format!("{base}/ok"), "SLOPESIM_TEST_KEY_DEBUG", 0)
        ),
    ];
    // client errors are not retried
    assert_eq!(log.lock().unwrap().bodies.len(), 4);
    for t in texts {
        assert!(!t.contains(SECRET), "{t}");
    }
}

#[test]
fn missing_credential_names_the_variable_only() {
    let err = RemoteBackend::from_env(backend_config(
        "http://127.0.0.1:9".into(),
        "SLOPESIM_TEST_KEY_UNSET",
        0,
    ))
    .unwrap_err();
    assert!(err.to_string().contains("SLOPESIM_TEST_KEY_UNSET"));
}

fn files_under(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn remote_conversation_keeps_the_credential_out_of_storage() {
    let (base, _) = fake_server();
    let dir = tempfile::tempdir().unwrap();
    let env = "SLOPESIM_TEST_KEY_SESSION";
    std::env::set_var(env, SECRET);
    let cfg = ServiceConfig {
        data_dir: dir.path().into(),
        backend: BackendKind::Remote,
        remote: Some(backend_config(format!("{base}/ok"), env, 0)),
        ..Default::default()
    };
    let backend = slopesim::state::backend_for(&cfg).unwrap();
    assert_eq!(backend.id(), "remote");
    let state = AppState::with_backend(cfg, backend, Arc::new(StepClock::new(0, 1))).unwrap();
    let o = &state.orchestrator;
    let mut s = o
        .create_session("remote1", AgentKind::SlopeStability, Target::HyrcanProfile)
        .unwrap();
    o.handle_turn(&mut s, common::PARTIAL, vec![]).unwrap();
    let reply = o
        .handle_turn(
            &mut s,
            &format!("{} {}", common::COMPLETION, common::RUN),
            vec![],
        )
        .unwrap();
    assert_eq!(reply.artifacts.len(), 3, "{}", reply.text);

    // a failing endpoint falls back to the rules and says so, without the key
    let cfg = ServiceConfig {
        data_dir: dir.path().into(),
        backend: BackendKind::Remote,
        remote: Some(backend_config(format!("{base}/denied"), env, 0)),
        ..Default::default()
    };
    let state = AppState::with_backend(
        cfg.clone(),
        slopesim::state::backend_for(&cfg).unwrap(),
        Arc::new(StepClock::new(0, 1)),
    )
    .unwrap();
    let mut s2 = state
        .orchestrator
        .create_session("remote2", AgentKind::SlopeStability, Target::HyrcanProfile)
        .unwrap();
    let reply = state
        .orchestrator
        .handle_turn(&mut s2, common::PARTIAL, vec![])
        .unwrap();
    assert!(reply.text.contains("HTTP 401"), "{}", reply.text);

    for f in files_under(dir.path()) {
        let bytes = std::fs::read(&f).unwrap();
        assert!(
            !String::from_utf8_lossy(&bytes).contains(SECRET),
            "{}",
            f.display()
        );
    }
    assert!(!serde_json::to_string(&s).unwrap().contains(SECRET));
    assert!(!serde_json::to_string(&s2).unwrap().contains(SECRET));
}
