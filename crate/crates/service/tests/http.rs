use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use faqbot_core::artifact::ModelArtifact;
use faqbot_core::classifiers::ClassifierKind;
use faqbot_core::dialogue::{Bot, DialogueConfig, DEFAULT_FALLBACK};
use faqbot_core::intents::{save_catalog, IntentCatalog};
use faqbot_core::text::PreprocessConfig;
use faqbot_core::training::{train_artifact, TrainOptions};
use faqbot_service::{router, AppState, ChatResponse, ContextStore, RecordingSink, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const TOKEN: &str = "s3cret";

fn artifact() -> &'static ModelArtifact {
    static A: OnceLock<ModelArtifact> = OnceLock::new();
    A.get_or_init(|| {
        let rules = PreprocessConfig::default_rules();
        train_artifact(
            &IntentCatalog::sample(),
            &rules,
            ClassifierKind::Svm,
            &TrainOptions::default(),
            |_| {},
        )
        .unwrap()
        .0
    })
}

fn bot() -> Bot {
    Bot::new(
        artifact().clone(),
        IntentCatalog::sample(),
        PreprocessConfig::default_rules(),
        DialogueConfig::default(),
    )
    .unwrap()
}

fn app() -> Router {
    router(AppState::new(Some(bot()), ContextStore::new(), TOKEN))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, body)
}

fn post(uri: &str, body: impl Into<Body>) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap()
}

async fn chat(app: &Router, user: &str, message: &str) -> ChatResponse {
    let body = json!({ "user_id": user, "message": message }).to_string();
    let (status, bytes) = send(app, post("/chat", body)).await;
    assert_eq!(
        status,
        StatusCode::OK,
        "{}",
        String::from_utf8_lossy(&bytes)
    );
    serde_json::from_slice(&bytes).unwrap()
}

fn verify_uri(mode: &str, token: &str, challenge: &str) -> String {
    format!("/webhook?hub.mode={mode}&hub.verify_token={token}&hub.challenge={challenge}")
}

#[tokio::test]
async fn verification_handshake() {
    let app = app();
    let get = |uri: String| Request::get(uri).body(Body::empty()).unwrap();

    let (status, body) = send(&app, get(verify_uri("subscribe", TOKEN, "12345"))).await;
    assert_eq!(
        (status, body.as_slice()),
        (StatusCode::OK, b"12345".as_slice())
    );

    // percent-encoded spaces and Ethiopic survive untouched
    let (status, body) = send(
        &app,
        get(verify_uri("subscribe", TOKEN, "%20a%20%E1%88%B0%20")),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, " a ሰ ".as_bytes());

    let (status, _) = send(&app, get(verify_uri("subscribe", "wrong", "1"))).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, _) = send(&app, get(verify_uri("unsubscribe", TOKEN, "1"))).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, _) = send(
        &app,
        get(format!(
            "/webhook?hub.mode=subscribe&hub.verify_token={TOKEN}"
        )),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, get("/webhook".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn chat_greeting() {
    let r = chat(&app(), "u1", "ሰላም").await;
    assert_eq!(r.intent.as_deref(), Some("greeting"));
    assert!(!r.fallback);
    assert!(r.confidence > 0.25 && r.confidence <= 1.0);
    let greeting = IntentCatalog::sample()
        .get("greeting")
        .unwrap()
        .responses
        .clone();
    assert!(greeting.contains(&r.reply));
}

#[tokio::test]
async fn chat_context_flow_across_requests() {
    let app = app();
    let before = chat(&app, "u2", "የመጨረሻው ቀን መቼ ነው").await;
    assert_ne!(before.intent.as_deref(), Some("registration_deadline"));

    let first = chat(&app, "u3", "ምዝገባ መቼ ይጀምራል").await;
    assert_eq!(first.intent.as_deref(), Some("registration"));
    assert_eq!(first.context.as_deref(), Some("reg_flow"));
    let second = chat(&app, "u3", "የመጨረሻው ቀን መቼ ነው").await;
    assert_eq!(second.intent.as_deref(), Some("registration_deadline"));
    assert_eq!(second.context, None);
}

#[tokio::test]
async fn chat_bad_requests() {
    let app = app();
    for body in [
        r#"{"user_id":"u"}"#,
        r#"{"message":"ሰላም"}"#,
        r#"{"user_id":"","message":"ሰላም"}"#,
        "not json",
        r#"{"user_id":"u","message":5}"#,
    ] {
        let (status, _) = send(&app, post("/chat", body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    }
    let no_model = router(AppState::new(None, ContextStore::new(), TOKEN));
    let (status, _) = send(
        &no_model,
        post("/chat", r#"{"user_id":"u","message":"ሰላም"}"#),
    )
    .await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn chat_fallback_on_unknown_text() {
    let r = chat(&app(), "u4", "qwerty").await;
    assert!(r.fallback);
    assert_eq!(r.intent, None);
    assert_eq!(r.reply, DEFAULT_FALLBACK);
}

fn envelope(object: &str, messaging: Vec<Value>) -> String {
    json!({ "object": object, "entry": [{ "id": "page", "time": 0, "messaging": messaging }] })
        .to_string()
}

fn text_item(sender: &str, text: &str) -> Value {
    json!({ "sender": { "id": sender }, "recipient": { "id": "page" }, "message": { "mid": "m", "text": text } })
}

#[tokio::test]
async fn webhook_events() {
    let sink = Arc::new(RecordingSink::default());
    let state = AppState::new(Some(bot()), ContextStore::new(), TOKEN).with_sink(sink.clone());
    let app = router(state);

    let (status, body) = send(
        &app,
        post("/webhook", envelope("page", vec![text_item("u1", "ሰላም")])),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["status"], "EVENT_RECEIVED");
    assert_eq!(v["replies"][0]["recipient"], "u1");
    assert_eq!(v["replies"][0]["reply"]["intent"], "greeting");
    assert_eq!(sink.delivered().len(), 1);

    // two items: processed in order, the second sees the first's context
    let items = vec![
        text_item("u2", "ምዝገባ መቼ ይጀምራል"),
        text_item("u2", "የመጨረሻው ቀን መቼ ነው"),
    ];
    let (status, body) = send(&app, post("/webhook", envelope("page", items))).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["replies"][0]["reply"]["intent"], "registration");
    assert_eq!(v["replies"][1]["reply"]["intent"], "registration_deadline");
    let delivered = sink.delivered();
    assert_eq!(delivered.len(), 3);
    assert_eq!(
        delivered[2].1.intent_tag.as_deref(),
        Some("registration_deadline")
    );

    let sticker = json!({ "sender": { "id": "u3" }, "message": { "mid": "m", "attachments": [{ "type": "image" }] } });
    let receipt = json!({ "sender": { "id": "u3" }, "delivery": { "watermark": 1 } });
    let (status, body) = send(
        &app,
        post("/webhook", envelope("page", vec![sticker, receipt])),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["replies"].as_array().unwrap().len(), 1);
    assert_eq!(v["replies"][0]["reply"]["fallback"], true);

    let (status, _) = send(
        &app,
        post("/webhook", envelope("user", vec![text_item("u1", "ሰላም")])),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&app, post("/webhook", "{")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn webhook_plain_acknowledgement_outside_local_mode() {
    let app = router(AppState::new(Some(bot()), ContextStore::new(), TOKEN).with_local_mode(false));
    let (status, body) = send(
        &app,
        post("/webhook", envelope("page", vec![text_item("u1", "ሰላም")])),
    )
    .await;
    assert_eq!(
        (status, body.as_slice()),
        (StatusCode::OK, b"EVENT_RECEIVED".as_slice())
    );
}

#[tokio::test]
async fn health_document() {
    let app = app();
    let get = || Request::get("/health").body(Body::empty()).unwrap();
    let (status, body) = send(&app, get()).await;
    assert_eq!(status, StatusCode::OK);
    let first: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(first["catalog"]["tags"], 12);
    assert_eq!(
        first["model_fingerprint"],
        PreprocessConfig::default_rules().fingerprint()
    );
    assert_eq!(first["classifier"], "svm");
    tokio::time::sleep(std::time::Duration::from_millis(5)).await;
    let (_, body) = send(&app, get()).await;
    let second: Value = serde_json::from_slice(&body).unwrap();
    assert!(second["uptime_seconds"].as_f64().unwrap() > first["uptime_seconds"].as_f64().unwrap());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_lose_no_context_updates() {
    let state = AppState::new(Some(bot()), ContextStore::new(), TOKEN);
    let store = state.store().clone();
    let app = router(state);
    let mut tasks = Vec::new();
    for i in 0..200 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let user = format!("user{}", i % 20);
            let message = if i % 2 == 0 {
                "ምዝገባ መቼ ይጀምራል"
            } else {
                "ሰላም"
            };
            let body = json!({ "user_id": user, "message": message }).to_string();
            send(&app, post("/chat", body)).await.0
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    for u in 0..20 {
        let ctx = store.get(&format!("user{u}")).await.unwrap();
        assert_eq!(ctx.turns, 10, "user{u} lost an update");
        // users with even index only ever asked about registration
        if u % 2 == 0 {
            assert_eq!(ctx.active_context.as_deref(), Some("reg_flow"));
        }
    }
}

fn write_fixtures(dir: &std::path::Path) -> ServiceConfig {
    let artifact_path = dir.join("model.json");
    let catalog_path = dir.join("intents.json");
    artifact().save(&artifact_path).unwrap();
    save_catalog(&IntentCatalog::sample(), &catalog_path).unwrap();
    let mut config = ServiceConfig::new(artifact_path, catalog_path, TOKEN);
    config.snapshot = Some(dir.join("contexts.json"));
    config
}

#[tokio::test]
async fn snapshot_restores_context_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixtures(dir.path());
    {
        let app = router(AppState::from_config(&config).unwrap());
        let r = chat(&app, "u5", "ምዝገባ መቼ ይጀምራል").await;
        assert_eq!(r.context.as_deref(), Some("reg_flow"));
    }
    let app = router(AppState::from_config(&config).unwrap());
    let r = chat(&app, "u5", "የመጨረሻው ቀን መቼ ነው").await;
    assert_eq!(r.intent.as_deref(), Some("registration_deadline"));
}

#[test]
fn startup_errors_before_binding() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = write_fixtures(dir.path());
    config.artifact = dir.path().join("missing.json");
    assert!(AppState::from_config(&config).is_err());
    let mut config = write_fixtures(dir.path());
    config.verify_token.clear();
    assert!(AppState::from_config(&config).is_err());
}

#[tokio::test]
async fn serve_over_tcp_and_flush_on_shutdown() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};

    let dir = tempfile::tempdir().unwrap();
    let config = write_fixtures(dir.path());
    let state = AppState::from_config(&config).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(faqbot_service::serve_with(listener, state, async {
        let _ = stopped.await;
    }));

    let body = json!({ "user_id": "tcp", "message": "ምዝገባ መቼ ይጀምራል" }).to_string();
    let request = format!(
        "POST /chat HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    stream.write_all(request.as_bytes()).await.unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("reg_flow"));

    stop.send(()).unwrap();
    server.await.unwrap().unwrap();
    let snapshot: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("contexts.json")).unwrap()).unwrap();
    assert_eq!(snapshot["tcp"]["active_context"], "reg_flow");
}
