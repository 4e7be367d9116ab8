//! Live HTTP backend speaking the common hosted chat-completion wire
//! protocol, with bounded retry and a max-in-flight limit.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{ChatBackend, ChatRequest, ChatResponse, GatewayError, TokenUsage};

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    /// Maximum concurrent in-flight requests.
    pub max_in_flight: usize,
    /// Total attempts per request (first try included).
    pub max_attempts: u32,
    /// Base backoff delay, doubled per retry.
    pub backoff_ms: u64,
    pub timeout_s: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            max_in_flight: 4,
            max_attempts: 3,
            backoff_ms: 250,
            timeout_s: 120,
        }
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    permits: Mutex<usize>,
    available: Condvar,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s))
            .build()
            .expect("http client");
        let permits = Mutex::new(config.max_in_flight.max(1));
        LiveBackend { config, client, permits, available: Condvar::new() }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut permits = self.permits.lock().expect("permit lock poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("permit wait poisoned");
        }
        *permits -= 1;
        PermitGuard { backend: self }
    }

    fn attempt(&self, request: &ChatRequest) -> Result<ChatResponse, AttemptError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": request.model,
            "messages": request.messages.iter().map(|m| json!({
                "role": m.role.as_str(),
                "content": m.content,
            })).collect::<Vec<_>>(),
            "temperature": request.temperature,
        });
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let started = Instant::now();
        let response = req.send().map_err(|e| AttemptError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| AttemptError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            let excerpt: String = text.chars().take(300).collect();
            return Err(AttemptError::Status(status, excerpt));
        }
        let latency_ms = started.elapsed().as_millis() as u64;
        parse_completion_body(&text, latency_ms).map_err(AttemptError::Malformed)
    }
}

struct PermitGuard<'a> {
    backend: &'a LiveBackend,
}

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.backend.permits.lock().expect("permit lock poisoned");
        *permits += 1;
        self.backend.available.notify_one();
    }
}

enum AttemptError {
    Transport(String),
    Status(u16, String),
    Malformed(String),
}

impl ChatBackend for LiveBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let _permit = self.acquire();
        let attempts = self.config.max_attempts.max(1);
        let mut last: Option<AttemptError> = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.attempt(request) {
                Ok(response) => return Ok(response),
                Err(e) => last = Some(e),
            }
        }
        Err(match last.expect("at least one attempt") {
            AttemptError::Transport(message) => GatewayError::Transport { message, attempts },
            AttemptError::Status(status, body_excerpt) => {
                GatewayError::HttpStatus { status, body_excerpt, attempts }
            }
            AttemptError::Malformed(m) => GatewayError::MalformedBody(m),
        })
    }
}

#[derive(Deserialize)]
struct WireCompletion {
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

/// Parse a chat-completion response body: first choice's message content.
pub fn parse_completion_body(text: &str, latency_ms: u64) -> Result<ChatResponse, String> {
    let wire: WireCompletion = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let first = wire.choices.into_iter().next().ok_or("response has no choices")?;
    let content = first.message.content.ok_or("first choice has no content")?;
    Ok(ChatResponse {
        content,
        usage: wire.usage.map(|u| TokenUsage {
            prompt_tokens: u.prompt_tokens,
            completion_tokens: u.completion_tokens,
        }),
        latency_ms,
    })
}
