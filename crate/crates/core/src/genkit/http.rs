use std::time::Duration;

use serde_json::{json, Value};

use super::{Provider, ProviderConfig, API_KEY_ENV};
use crate::error::{Error, Result};

/// Chat-completion client. Rate limits (429) and server errors (5xx) are retried
/// with exponential backoff; other HTTP failures surface as transport errors.
pub struct HttpProvider {
    config: ProviderConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpProvider {
    /// Reads the API key from the environment.
    pub fn from_env(config: ProviderConfig) -> Result<Self> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| Error::Transport(format!("{API_KEY_ENV} is not set")))?;
        Self::new(config, api_key)
    }

    pub fn new(config: ProviderConfig, api_key: String) -> Result<Self> {
        config.check()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Ok(HttpProvider {
            config,
            api_key,
            agent,
        })
    }

    fn request(&self, prompt: &str) -> std::result::Result<String, ureq::Error> {
        let body = json!({
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)?;
        let v: Value = resp.body_mut().read_json()?;
        Ok(extract_content(&v).unwrap_or_default())
    }
}

fn extract_content(v: &Value) -> Option<String> {
    v.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

fn is_transient(e: &ureq::Error) -> bool {
    match e {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed => true,
        _ => false,
    }
}

impl Provider for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String> {
        let mut delay = Duration::from_millis(500);
        let mut attempt = 0;
        loop {
            match self.request(prompt) {
                Ok(text) => return Ok(text),
                Err(e) if is_transient(&e) && attempt < self.config.max_retries => {
                    log::warn!("provider call failed ({e}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(Error::Transport(e.to_string())),
            }
        }
    }
}
