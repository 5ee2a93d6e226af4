#![allow(dead_code)]

use std::sync::Arc;
use std::thread::JoinHandle;

use prefer_core::catalog::Catalog;
use prefer_core::corpus::{ingest, sentence_split, ReviewRecord};
use prefer_core::simplex::AspectVector;
use prefer_core::simulation::{synthetic_catalog, SynthConfig};
use prefer_service::{serve, AppState};
use serde::de::DeserializeOwned;
use serde_json::Value;
use ureq::Agent;

pub struct TestServer {
    pub base: String,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(app: AppState) -> Self {
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                serve(listener, Arc::new(app), async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Self {
            base: format!("http://{addr}"),
            stop: Some(stop),
            thread: Some(thread),
        }
    }

    pub fn client(&self) -> Client {
        Client {
            base: self.base.clone(),
            agent: Agent::config_builder().http_status_as_error(false).build().into(),
        }
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            t.join().unwrap();
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

#[derive(Clone)]
pub struct Client {
    pub base: String,
    agent: Agent,
}

impl Client {
    pub fn get(&self, path: &str) -> (u16, Value) {
        let mut resp = self.agent.get(format!("{}{path}", self.base)).call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    pub fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let mut resp = self.agent.post(format!("{}{path}", self.base)).send_json(body).unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    pub fn post_raw(&self, path: &str, body: &str) -> (u16, Value) {
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .send(body)
            .unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    pub fn ok<T: DeserializeOwned>(&self, (status, v): (u16, Value)) -> T {
        assert!((200..300).contains(&status), "status {status}: {v}");
        serde_json::from_value(v).unwrap()
    }

    pub fn create(&self, config: &Value) -> String {
        let (status, v) = self.post("/sessions", config);
        assert_eq!(status, 201, "{v}");
        v["session_id"].as_str().unwrap().to_string()
    }
}

pub fn small_synth() -> SynthConfig {
    SynthConfig {
        k: 4,
        products: 2,
        sentences_per_product: 40,
        dim: 12,
        components: 6,
        users: 6,
        ..SynthConfig::default()
    }
}

pub fn small_catalog() -> Catalog {
    synthetic_catalog(&small_synth()).unwrap().0
}

/// K=3 catalog of one-hot sentences. Product "mixed" cycles through the
/// aspects; product "pure2" only talks about aspect 2. Reduced vectors are
/// orthogonal.
pub fn pure_catalog() -> Catalog {
    let mut records = Vec::new();
    let mut phi = Vec::new();
    let n = 30;
    for i in 0..n {
        let (product, a) = if i < 18 { ("mixed", i % 3) } else { ("pure2", 2) };
        records.push(ReviewRecord {
            user_id: format!("u{i}"),
            product_id: product.into(),
            timestamp: i as i64,
            title: String::new(),
            text: format!("Sentence number {i} about aspect {a}."),
            helpful_votes: 0,
            verified: false,
        });
        phi.push(AspectVector::one_hot(3, a));
    }
    let reduced = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    let (t, _) = ingest(records);
    Catalog::from_parts(sentence_split(t, 3, 20).unwrap(), phi, reduced)
}

pub fn on_simplex(v: &Value) -> bool {
    let xs: Vec<f64> = serde_json::from_value(v.clone()).unwrap();
    xs.iter().all(|&x| x >= 0.0) && (xs.iter().sum::<f64>() - 1.0).abs() < 1e-9
}
