use std::net::SocketAddr;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use futures::StreamExt;
use serde_json::{json, Value};
use warehouse_router::ingest::{FrameClient, FrameServer, Mailbox, StandardDecoder};
use warehouse_router::plc::MockPlcServer;
use warehouse_router::pnm::decode_p6;
use warehouse_router::service::{router, spawn_pipeline, Service};
use warehouse_router::synth::grid_scene;
use warehouse_router_core::wire::{encode_motion, ACK};
use warehouse_router_core::{MotionVector, PipelineConfig};

async fn start(service: Arc<Service>) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(service)).await.unwrap() });
    addr
}

async fn process(svc: &Arc<Service>, frame: warehouse_router_core::Frame) {
    let svc = svc.clone();
    tokio::task::spawn_blocking(move || svc.process_frame(frame).unwrap()).await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn scene_config_and_annotated_frame() {
    let scene = grid_scene(3);
    let svc = Service::new(scene.config.clone(), None).unwrap();
    let addr = start(svc.clone()).await;
    let http = reqwest::Client::new();

    let r = http.get(format!("http://{addr}/scene")).send().await.unwrap();
    assert_eq!(r.status(), 404);
    let r = http.get(format!("http://{addr}/frame/annotated")).send().await.unwrap();
    assert_eq!(r.status(), 404);

    process(&svc, scene.frame.clone()).await;
    let v: Value = http.get(format!("http://{addr}/scene")).send().await.unwrap().json().await.unwrap();
    assert_eq!(v["frame_seq"], 1);
    assert_eq!(v["platforms"][0]["status"], "routed");
    assert!(v["timing"]["total_ms"].as_f64().unwrap() >= 0.0);
    assert!(!v["overlay"]["routes"].as_array().unwrap().is_empty());

    let cfg: PipelineConfig = http.get(format!("http://{addr}/config")).send().await.unwrap().json().await.unwrap();
    assert_eq!(cfg, scene.config);

    let r = http.get(format!("http://{addr}/frame/annotated")).send().await.unwrap();
    assert_eq!(r.headers()["content-type"], "image/x-portable-pixmap");
    let img = decode_p6(&r.bytes().await.unwrap()).unwrap();
    assert_eq!((img.width(), img.height()), (640, 480));
    assert_ne!(img.pixels(), scene.frame.pixels());
}

#[tokio::test(flavor = "multi_thread")]
async fn goals_and_thresholds_apply_on_next_frame() {
    let scene = grid_scene(3);
    let svc = Service::new(scene.config.clone(), None).unwrap();
    let addr = start(svc.clone()).await;
    let http = reqwest::Client::new();
    process(&svc, scene.frame.clone()).await;

    let post = |path: &'static str, body: Value| {
        let http = http.clone();
        async move { http.post(format!("http://{addr}{path}")).json(&body).send().await.unwrap() }
    };
    assert_eq!(post("/goals", json!({"platform_id": 4, "x": 10.0, "y": 10.0})).await.status(), 404);
    assert_eq!(post("/goals", json!({"platform_id": 1, "x": 10.0, "y": 480.0})).await.status(), 400);
    assert!(post("/goals", json!({"platform_id": "one"})).await.status().is_client_error());
    assert_eq!(post("/goals", json!({"platform_id": 1, "x": 600.0, "y": 50.0})).await.status(), 200);

    let before: Value = http.get(format!("http://{addr}/scene")).send().await.unwrap().json().await.unwrap();
    assert_eq!(before["platforms"][0]["goal"], json!([610.0, 240.0]));
    process(&svc, scene.frame.clone()).await;
    let after: Value = http.get(format!("http://{addr}/scene")).send().await.unwrap().json().await.unwrap();
    assert_eq!(after["platforms"][0]["goal"], json!([600.0, 50.0]));

    let objects = |v: &Value| v["objects"].as_array().unwrap().len();
    let n = objects(&after);
    let r = post("/thresholds", json!({"role": "obstacle", "min": [0, 0, 0], "max": [10, 10, 10]})).await;
    assert_eq!(r.status(), 200);
    assert_eq!(post("/thresholds", json!({"role": "obstacle", "min": [9, 0, 0], "max": [1, 10, 10]})).await.status(), 400);
    process(&svc, scene.frame.clone()).await;
    let v: Value = http.get(format!("http://{addr}/scene")).send().await.unwrap().json().await.unwrap();
    assert_eq!(objects(&v), n - 3, "obstacles no longer match the narrowed range");
    assert_eq!(v["frame_seq"], 3);
}

async fn next<S>(ws: &mut tokio_tungstenite::WebSocketStream<S>) -> Value
where
    S: tokio::io::AsyncRead + tokio::io::AsyncWrite + Unpin,
{
    let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
    serde_json::from_str(msg.to_text().unwrap()).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn events_stream_pushes_each_frame() {
    let scene = grid_scene(6);
    let svc = Service::new(scene.config.clone(), None).unwrap();
    let addr = start(svc.clone()).await;
    process(&svc, scene.frame.clone()).await;

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/events")).await.unwrap();
    assert_eq!(next(&mut ws).await["frame_seq"], 1);
    for want in 2..=4 {
        process(&svc, scene.frame.clone()).await;
        assert_eq!(next(&mut ws).await["frame_seq"], want);
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn frames_over_tcp_reach_scene_and_plc() {
    let plc = MockPlcServer::bind("127.0.0.1:0").unwrap();
    let scene = grid_scene(3);
    let svc = Service::new(scene.config.clone(), Some(plc.local_addr().to_string())).unwrap();
    let addr = start(svc.clone()).await;
    let mailbox = Arc::new(Mailbox::new());
    let stop = Arc::new(AtomicBool::new(false));
    let worker = spawn_pipeline(svc.clone(), mailbox.clone(), stop.clone());
    let ingest = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), mailbox.clone()).unwrap();

    let frame = scene.frame.clone();
    let iaddr = ingest.local_addr();
    tokio::task::spawn_blocking(move || {
        let mut c = FrameClient::connect(iaddr, Duration::from_secs(5)).unwrap();
        assert_eq!(c.send_frame(&frame).unwrap(), ACK);
    })
    .await
    .unwrap();

    let http = reqwest::Client::new();
    let mut scene_json = None;
    for _ in 0..100 {
        let r = http.get(format!("http://{addr}/scene")).send().await.unwrap();
        if r.status() == 200 {
            scene_json = Some(r.json::<Value>().await.unwrap());
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let v = scene_json.expect("scene published");
    let motion: Vec<MotionVector> = serde_json::from_value(v["platforms"][0]["motion"].clone()).unwrap();
    let payload = encode_motion(&motion).unwrap();
    assert_eq!(plc.writes(), 1);
    assert_eq!(&plc.block(1).unwrap()[..payload.len()], &payload[..]);

    stop.store(true, std::sync::atomic::Ordering::SeqCst);
    mailbox.close();
    tokio::task::spawn_blocking(move || worker.join().unwrap()).await.unwrap();
}
