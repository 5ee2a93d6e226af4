//! Blocking client for an external text-generation endpoint.
//!
//! Request: `POST {base_url}/generate` with `{"model", "prompt", "max_tokens"}`.
//! Response: `{"text": ...}`. Empty text counts as a failure.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{RewriteError, TextGenerator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewriterEndpoint {
    pub base_url: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub max_tokens: usize,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
}

impl Default for RewriterEndpoint {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000".into(),
            model: "gemma-3-4b-it".into(),
            timeout_ms: 30_000,
            max_attempts: 3,
            backoff_base_ms: 500,
            max_tokens: 256,
            api_key_env: None,
        }
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

pub struct HttpRewriter {
    endpoint: RewriterEndpoint,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpRewriter {
    pub fn new(endpoint: RewriterEndpoint) -> Result<Self, RewriteError> {
        if endpoint.timeout_ms == 0 {
            return Err(RewriteError::BadEndpoint("timeout must be positive".into()));
        }
        if endpoint.max_attempts == 0 {
            return Err(RewriteError::BadEndpoint("max_attempts must be at least 1".into()));
        }
        let api_key = match &endpoint.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| RewriteError::MissingKey(var.clone()))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
            .build()
            .into();
        Ok(Self {
            endpoint,
            agent,
            api_key,
        })
    }

    fn attempt(&self, prompt: &str) -> Result<String, RewriteError> {
        let url = format!("{}/generate", self.endpoint.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let body = GenerateRequest {
            model: &self.endpoint.model,
            prompt,
            max_tokens: self.endpoint.max_tokens,
        };
        let resp: GenerateResponse = req
            .send_json(&body)
            .map_err(|e| RewriteError::Transport(e.to_string()))?
            .into_body()
            .read_json()
            .map_err(|e| RewriteError::Transport(e.to_string()))?;
        let text = resp.text.trim();
        if text.is_empty() {
            return Err(RewriteError::EmptyText);
        }
        Ok(text.to_string())
    }
}

impl TextGenerator for HttpRewriter {
    fn generate(&self, prompt: &str) -> Result<String, RewriteError> {
        let mut last = RewriteError::EmptyText;
        for attempt in 0..self.endpoint.max_attempts {
            if attempt > 0 {
                let wait = self.endpoint.backoff_base_ms << (attempt - 1).min(16);
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}
