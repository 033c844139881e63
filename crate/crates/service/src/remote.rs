//! Provider that talks to a chat-completions style HTTP endpoint.

use std::time::Duration;

use serde_json::{json, Value};
use ureq::Agent;

use critiq_core::perspectives::{
    ChatRequest, CritiqueProvider, ProviderError, ProviderRequest, ProviderResponse,
};

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    /// Base URL up to, but excluding, `/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_ms: u64,
}

impl RemoteConfig {
    /// Reads `CRITIQ_BASE_URL`, `CRITIQ_MODEL`, `CRITIQ_API_KEY` and `CRITIQ_TIMEOUT_MS`.
    pub fn from_env() -> Result<Self, ProviderError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let base_url = var("CRITIQ_BASE_URL")
            .ok_or_else(|| ProviderError::Config("CRITIQ_BASE_URL is not set".into()))?;
        let model = var("CRITIQ_MODEL")
            .ok_or_else(|| ProviderError::Config("CRITIQ_MODEL is not set".into()))?;
        let timeout_ms = match var("CRITIQ_TIMEOUT_MS") {
            Some(v) => v.parse().map_err(|_| {
                ProviderError::Config(format!("CRITIQ_TIMEOUT_MS must be an integer, got {v:?}"))
            })?,
            None => DEFAULT_TIMEOUT_MS,
        };
        Ok(RemoteConfig {
            base_url,
            api_key: var("CRITIQ_API_KEY"),
            model,
            timeout_ms,
        })
    }
}

pub struct RemoteProvider {
    config: RemoteConfig,
    agent: Agent,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteProvider { config, agent }
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }

    fn send(&self, messages: Vec<Value>) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": messages,
        });
        let mut req = self
            .agent
            .post(self.endpoint())
            .header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| self.transport(e))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| self.transport(e))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status {
                status,
                body: text.chars().take(500).collect(),
            });
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Transport(format!("response is not JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                ProviderError::Transport("response has no choices[0].message.content".into())
            })
    }

    fn transport(&self, e: ureq::Error) -> ProviderError {
        match e {
            ureq::Error::Timeout(_) => ProviderError::Timeout(self.config.timeout_ms),
            other => ProviderError::Transport(other.to_string()),
        }
    }
}

fn message(role: &str, content: impl Into<String>) -> Value {
    json!({"role": role, "content": content.into()})
}

fn critique_messages(request: &ProviderRequest) -> Vec<Value> {
    let mut user = format!(
        "Design document:\n{}\n\nProduct context:\n{}\n\nAnswer with a single JSON object in the output format above.",
        request.document, request.context
    );
    if let Some(err) = &request.repair {
        user.push_str(&format!(
            "\n\nYour previous answer was rejected: {err}. Return only the corrected JSON object."
        ));
    }
    let mut messages = vec![message("system", request.system_prompt.clone())];
    for turn in &request.history {
        let role = if turn.author == "user" {
            "user"
        } else {
            "assistant"
        };
        messages.push(message(role, turn.text.clone()));
    }
    messages.push(message("user", user));
    messages
}

fn chat_messages(request: &ChatRequest) -> Vec<Value> {
    let issues = serde_json::to_string(&request.issues).unwrap_or_default();
    let mut grounding = format!(
        "Design document:\n{}\n\nYour issues:\n{issues}",
        request.document
    );
    if let Some(agenda) = &request.agenda {
        grounding.push_str(&format!(
            "\n\nCurrent agenda:\n{}",
            serde_json::to_string(agenda).unwrap_or_default()
        ));
    }
    if let Some(id) = &request.referenced_issue_id {
        grounding.push_str(&format!("\n\nThe user is asking about issue {id}."));
    }
    let mut messages = vec![
        message("system", request.system_prompt.clone()),
        message("system", grounding),
    ];
    for turn in &request.history {
        let role = if turn.author == "user" {
            "user"
        } else {
            "assistant"
        };
        messages.push(message(role, turn.text.clone()));
    }
    messages.push(message("user", request.message.clone()));
    messages
}

impl CritiqueProvider for RemoteProvider {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let text = self.send(critique_messages(request))?;
        Ok(ProviderResponse { text })
    }

    fn chat(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.send(chat_messages(request))
    }

    fn narrates(&self) -> bool {
        true
    }
}
