//! Remote chat-completions backend speaking the common tool-calling wire
//! format (`tools`, `tool_choice`, `choices[0].message.tool_calls`).

use std::fmt;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};
use slopesim_core::extract::{ExtractError, LlmBackend, LlmBackendConfig, LlmReply, LlmRequest};

/// A credential value. Never printed, serialized or included in errors.
#[derive(Clone)]
pub struct Secret(String);

impl Secret {
    fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    config: LlmBackendConfig,
    credential: Secret,
}

impl RemoteBackend {
    /// Reads the credential from the configured environment variable.
    pub fn from_env(config: LlmBackendConfig) -> Result<Self, ExtractError> {
        let value = std::env::var(&config.credential_env).map_err(|_| {
            ExtractError::BackendUnavailable(format!(
                "credential variable {} is not set",
                config.credential_env
            ))
        })?;
        Ok(Self {
            config,
            credential: Secret(value),
        })
    }

    fn body(&self, request: &LlmRequest) -> Value {
        let mut content = vec![json!({"type": "text", "text": request.user})];
        for image in &request.images {
            let data = base64::engine::general_purpose::STANDARD.encode(&image.bytes);
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:{};base64,{data}", image.media_type)}
            }));
        }
        json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": content}
            ],
            "tools": [{
                "type": "function",
                "function": {
                    "name": request.tool_name,
                    "description": "Record the slope stability parameters stated by the user",
                    "parameters": request.tool_schema
                }
            }],
            "tool_choice": {"type": "function", "function": {"name": request.tool_name}}
        })
    }

    fn attempt(&self, client: &reqwest::blocking::Client, body: &Value) -> Result<Value, Attempt> {
        let resp = client
            .post(&self.config.endpoint)
            .bearer_auth(self.credential.expose())
            .json(body)
            .send()
            .map_err(|e| {
                Attempt::Retry(if e.is_timeout() {
                    "request timed out".to_string()
                } else {
                    "connection failed".to_string()
                })
            })?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Retry(format!(
                "backend returned HTTP {}",
                status.as_u16()
            )));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(format!(
                "backend returned HTTP {}",
                status.as_u16()
            )));
        }
        resp.json::<Value>()
            .map_err(|_| Attempt::Malformed("response body is not JSON".into()))
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
    Malformed(String),
}

/// Reads the first tool call, or the text content when there is none.
pub fn reply_from_response(v: &Value) -> Result<LlmReply, ExtractError> {
    let message = &v["choices"][0]["message"];
    if message.is_null() {
        return Err(ExtractError::MalformedBackendReply(
            "no choices[0].message".into(),
        ));
    }
    if let Some(call) = message["tool_calls"].as_array().and_then(|c| c.first()) {
        let name = call["function"]["name"].as_str().ok_or_else(|| {
            ExtractError::MalformedBackendReply("tool call without a name".into())
        })?;
        let arguments = match &call["function"]["arguments"] {
            Value::String(s) => serde_json::from_str(s)
                .map_err(|e| ExtractError::MalformedBackendReply(format!("tool arguments: {e}")))?,
            Value::Object(_) => call["function"]["arguments"].clone(),
            _ => {
                return Err(ExtractError::MalformedBackendReply(
                    "tool call without arguments".into(),
                ))
            }
        };
        return Ok(LlmReply::ToolCall {
            name: name.to_string(),
            arguments,
        });
    }
    Ok(LlmReply::Text {
        text: message["content"].as_str().unwrap_or_default().to_string(),
    })
}

impl LlmBackend for RemoteBackend {
    fn id(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &LlmRequest) -> Result<LlmReply, ExtractError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(self.config.timeout_secs.max(1)))
            .build()
            .map_err(|_| ExtractError::BackendUnavailable("could not build HTTP client".into()))?;
        let body = self.body(request);
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(250 * (1 << attempt.min(4))));
            }
            match self.attempt(&client, &body) {
                Ok(v) => return reply_from_response(&v),
                Err(Attempt::Retry(why)) => last = why,
                Err(Attempt::Fatal(why)) => return Err(ExtractError::BackendUnavailable(why)),
                Err(Attempt::Malformed(why)) => {
                    return Err(ExtractError::MalformedBackendReply(why))
                }
            }
        }
        Err(ExtractError::BackendUnavailable(format!(
            "{last} after {} attempts",
            self.config.max_retries + 1
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secret_is_redacted() {
        let b = RemoteBackend {
            config: LlmBackendConfig {
                endpoint: "http://127.0.0.1:9".into(),
                model: "m".into(),
                credential_env: "X".into(),
                timeout_secs: 1,
                max_retries: 0,
            },
            credential: Secret("sk-very-secret".into()),
        };
        assert!(!format!("{b:?}").contains("sk-very-secret"));
    }

    #[test]
    fn tool_call_arguments_as_string_or_object() {
        let v = json!({"choices": [{"message": {"tool_calls": [{"function": {"name": "t", "arguments": "{\"fields\": []}"}}]}}]});
        assert_eq!(
            reply_from_response(&v).unwrap(),
            LlmReply::ToolCall {
                name: "t".into(),
                arguments: json!({"fields": []})
            }
        );
        let v = json!({"choices": [{"message": {"content": "hello"}}]});
        assert_eq!(
            reply_from_response(&v).unwrap(),
            LlmReply::Text {
                text: "hello".into()
            }
        );
        assert!(reply_from_response(&json!({})).is_err());
    }
}
