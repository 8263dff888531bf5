//! Completion clients used for query generation and question rewriting.

#[cfg(feature = "http")]
use crate::error::Error;
use crate::error::Result;

use super::prompt::sampled_passage;
use super::stub::stub_generate;

/// A text-completion backend. Implementations must be usable from several
/// threads at once.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

impl<C: LlmClient + ?Sized> LlmClient for &C {
    fn complete(&self, prompt: &str) -> Result<String> {
        (**self).complete(prompt)
    }
}

/// Offline client that answers generation prompts with [`stub_generate`].
///
/// The sampled passage is read back out of the prompt; its first line is
/// the passage context line and is not used for salience.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubClient {
    pub seed: u64,
}

impl StubClient {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl LlmClient for StubClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let snippet = sampled_passage(prompt).unwrap_or(prompt);
        let body = snippet.split_once('\n').map_or(snippet, |(_, b)| b);
        Ok(stub_generate(body, self.seed).as_response().to_owned())
    }
}

/// Client returning a fixed response, for rewriter tests and dry runs.
#[derive(Debug, Clone)]
pub struct FixedClient(pub String);

impl LlmClient for FixedClient {
    fn complete(&self, _prompt: &str) -> Result<String> {
        Ok(self.0.clone())
    }
}

/// OpenAI-style chat completion endpoint.
#[cfg(feature = "http")]
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    pub base_url: String,
    pub model: String,
    token: Option<String>,
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl HttpChatClient {
    pub const DEFAULT_TOKEN_VAR: &'static str = "FINEMBED_LLM_TOKEN";

    pub fn new(base_url: impl Into<String>, model: impl Into<String>, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(120)))
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            model: model.into(),
            token,
            agent,
        }
    }

    /// Reads the bearer token from the environment variable `token_var`, if set.
    pub fn from_env(base_url: impl Into<String>, model: impl Into<String>, token_var: &str) -> Self {
        Self::new(base_url, model, std::env::var(token_var).ok())
    }
}

#[cfg(feature = "http")]
impl LlmClient for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0.0,
        });
        let url = format!("{}/chat/completions", self.base_url);
        let mut req = self.agent.post(&url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let resp = req
            .send_json(&body)
            .map_err(|e| Error::Transport(format!("POST {url}: {e}")))?;
        let value: serde_json::Value = resp
            .into_body()
            .read_json()
            .map_err(|e| Error::Transport(format!("reading response from {url}: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(str::to_owned)
            .ok_or_else(|| Error::Transport(format!("no choices[0].message.content in response from {url}")))
    }
}
