//! Minimal chat-completion backend.

use super::{Backend, LabelTask, PromptSet, ProviderConfig, ProviderError};
use crate::http::{HttpClient, HttpError, Request};

/// Sends one user message per vote with temperature 0 and a per-vote seed.
/// Works live, recording, or replay-only depending on the client mode.
pub struct ChatBackend {
    http: HttpClient,
    endpoint: String,
    model: String,
    seed: u64,
    api_key: Option<String>,
    prompts: PromptSet,
}

impl ChatBackend {
    pub fn new(http: HttpClient, cfg: &ProviderConfig, prompts: PromptSet) -> Self {
        ChatBackend {
            http,
            endpoint: cfg.endpoint.clone(),
            model: cfg.model.clone(),
            seed: cfg.seed,
            api_key: std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty()),
            prompts,
        }
    }

    pub fn request(&self, task: &LabelTask, vote: usize) -> Request {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": self.prompts.render(task)}],
            "temperature": 0,
            "seed": self.seed + vote as u64,
        });
        let mut req = Request::post_json(&self.endpoint, body.to_string());
        if let Some(k) = &self.api_key {
            req = req.header("authorization", &format!("Bearer {k}"));
        }
        req
    }
}

/// Maps a free-form reply onto one of `options`: exact match after trimming
/// quotes and punctuation, case-insensitive.
pub(crate) fn match_option(reply: &str, options: &[String]) -> Option<String> {
    let cleaned = reply
        .trim()
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_lowercase();
    options.iter().find(|o| o.to_lowercase() == cleaned).cloned()
}

impl Backend for ChatBackend {
    fn name(&self) -> &str {
        "chat"
    }

    fn answer(&self, task: &LabelTask, vote: usize) -> Result<String, ProviderError> {
        let req = self.request(task, vote);
        let resp = self.http.send(&req)?;
        if !resp.is_success() {
            return Err(HttpError::Status { url: req.url, status: resp.status }.into());
        }
        let v: serde_json::Value = serde_json::from_str(&resp.body)
            .map_err(|e| ProviderError::Malformed(format!("{e}: {}", resp.body.chars().take(120).collect::<String>())))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| ProviderError::Malformed("no choices[0].message.content".into()))?;
        if !task.kind.is_classification() {
            let text = crate::text::collapse_whitespace(content);
            return if text.is_empty() { Err(ProviderError::Malformed("empty answer".into())) } else { Ok(text) };
        }
        match_option(content, &task.options).ok_or_else(|| ProviderError::OffOptions { answer: content.to_string() })
    }
}
