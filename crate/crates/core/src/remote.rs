//! Client for completion endpoints speaking a small JSON-over-HTTP protocol.
//!
//! Request: `POST {url}` with `{"prompt", "max_tokens", "logit_bias"?}`.
//! Response: `{"text", "token_ids"?}`. Transport failures, 429 and 5xx
//! responses are retried with bounded exponential backoff; other statuses and
//! malformed bodies fail at once, since repeating the request would not
//! change them.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::TokenId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Total attempts, including the first.
    #[serde(default = "default_attempts")]
    pub attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub initial_backoff_ms: u64,
    #[serde(default = "default_max_backoff_ms")]
    pub max_backoff_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Sent as a bearer token when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
}

fn default_max_tokens() -> u32 {
    2048
}
fn default_attempts() -> u32 {
    4
}
fn default_backoff_ms() -> u64 {
    250
}
fn default_max_backoff_ms() -> u64 {
    4000
}
fn default_timeout_ms() -> u64 {
    60_000
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            max_tokens: default_max_tokens(),
            attempts: default_attempts(),
            initial_backoff_ms: default_backoff_ms(),
            max_backoff_ms: default_max_backoff_ms(),
            timeout_ms: default_timeout_ms(),
            api_key: None,
        }
    }

    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms.saturating_mul(1u64 << retry.min(20));
        Duration::from_millis(ms.min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logit_bias: Option<BTreeMap<TokenId, i32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_ids: Option<Vec<TokenId>>,
}

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned status {status} after {attempts} attempt(s): {body}")]
    Status { status: u16, attempts: u32, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl RemoteError {
    pub fn is_transport(&self) -> bool {
        matches!(self, RemoteError::Transport { .. })
    }
}

enum Attempt {
    Done(Completion),
    Retry(RemoteError),
    Fail(RemoteError),
}

pub struct RemoteClient {
    config: EndpointConfig,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        RemoteClient { config, agent }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// Request one completion, retrying per the configured policy.
    pub fn generate(&self, prompt: &str, logit_bias: Option<&BTreeMap<TokenId, i32>>) -> Result<Completion, RemoteError> {
        let req = CompletionRequest {
            prompt: prompt.to_string(),
            max_tokens: self.config.max_tokens,
            logit_bias: logit_bias.filter(|b| !b.is_empty()).cloned(),
        };
        let attempts = self.config.attempts.max(1);
        let mut last = None;
        for n in 1..=attempts {
            match self.attempt(&req, n) {
                Attempt::Done(c) => return Ok(c),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
            if n < attempts {
                std::thread::sleep(self.config.backoff(n - 1));
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn attempt(&self, req: &CompletionRequest, n: u32) -> Attempt {
        let mut call = self.agent.post(&self.config.url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match call.send_json(req) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(RemoteError::Transport { attempts: n, message: e.to_string() }),
        };
        let status = resp.status().as_u16();
        let body = match resp.body_mut().read_to_string() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(RemoteError::Transport { attempts: n, message: e.to_string() }),
        };
        if !(200..300).contains(&status) {
            let err = RemoteError::Status { status, attempts: n, body };
            return if status == 429 || status >= 500 { Attempt::Retry(err) } else { Attempt::Fail(err) };
        }
        match serde_json::from_str::<Completion>(&body) {
            Ok(c) => Attempt::Done(c),
            Err(e) => Attempt::Fail(RemoteError::Malformed(e.to_string())),
        }
    }
}

/// One-shot convenience wrapper around [`RemoteClient::generate`].
pub fn remote_generate(
    config: &EndpointConfig,
    prompt: &str,
    logit_bias: Option<&BTreeMap<TokenId, i32>>,
) -> Result<Completion, RemoteError> {
    RemoteClient::new(config.clone()).generate(prompt, logit_bias)
}

/// A minimal in-process HTTP server standing in for a completion endpoint.
pub mod mock {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{SocketAddr, TcpListener, TcpStream};
    use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::thread::JoinHandle;

    use super::{Completion, CompletionRequest};

    pub struct MockReply {
        pub status: u16,
        pub body: String,
    }

    impl MockReply {
        pub fn completion(c: &Completion) -> Self {
            MockReply { status: 200, body: serde_json::to_string(c).expect("completion serializes") }
        }

        pub fn status(status: u16) -> Self {
            MockReply { status, body: format!("{{\"error\":\"status {status}\"}}") }
        }
    }

    type Handler = dyn Fn(&CompletionRequest) -> MockReply + Send + Sync;

    pub struct MockServer {
        addr: SocketAddr,
        stop: Arc<AtomicBool>,
        hits: Arc<AtomicUsize>,
        thread: Option<JoinHandle<()>>,
    }

    impl MockServer {
        pub fn start(handler: impl Fn(&CompletionRequest) -> MockReply + Send + Sync + 'static) -> std::io::Result<Self> {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let stop = Arc::new(AtomicBool::new(false));
            let hits = Arc::new(AtomicUsize::new(0));
            let handler: Arc<Handler> = Arc::new(handler);
            let (s, h) = (Arc::clone(&stop), Arc::clone(&hits));
            let thread = std::thread::spawn(move || {
                for conn in listener.incoming() {
                    if s.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = conn {
                        h.fetch_add(1, Ordering::SeqCst);
                        let _ = serve(stream, handler.as_ref());
                    }
                }
            });
            Ok(MockServer { addr, stop, hits, thread: Some(thread) })
        }

        /// Replies with the prompt text itself.
        pub fn echo() -> std::io::Result<Self> {
            Self::start(|req| MockReply::completion(&Completion { text: req.prompt.clone(), token_ids: None }))
        }

        pub fn url(&self) -> String {
            format!("http://{}/v1/completions", self.addr)
        }

        /// Requests received so far.
        pub fn hits(&self) -> usize {
            self.hits.load(Ordering::SeqCst)
        }
    }

    impl Drop for MockServer {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect(self.addr);
            if let Some(t) = self.thread.take() {
                let _ = t.join();
            }
        }
    }

    fn serve(stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let mut content_length = 0;
        loop {
            let mut h = String::new();
            if reader.read_line(&mut h)? == 0 || h == "\r\n" || h == "\n" {
                break;
            }
            if let Some((k, v)) = h.split_once(':') {
                if k.trim().eq_ignore_ascii_case("content-length") {
                    content_length = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; content_length];
        reader.read_exact(&mut body)?;
        let reply = match serde_json::from_slice::<CompletionRequest>(&body) {
            Ok(req) => handler(&req),
            Err(e) => MockReply { status: 400, body: format!("{{\"error\":{:?}}}", e.to_string()) },
        };
        let mut out = stream;
        write!(
            out,
            "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            reply.status,
            reply.body.len(),
            reply.body
        )?;
        out.flush()
    }
}
