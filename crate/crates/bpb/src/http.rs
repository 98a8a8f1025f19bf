//! JSON-over-HTTP clients for remote reading-comprehension, question
//! generation and QDMR parsing services.

use std::thread;
use std::time::Duration;

use bpb_core::{BackendError, QdmrParser, QgBackend, RcBackend, RcReply};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ANSWER_PATH: &str = "/v1/answer";
pub const GENERATE_PATH: &str = "/v1/generate_question";
pub const PARSE_PATH: &str = "/v1/parse_qdmr";
pub const HEALTH_PATH: &str = "/healthz";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub id: String,
    pub question: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub id: String,
    pub answer: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub id: String,
    pub decomposition: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub id: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseRequest {
    pub id: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResponse {
    pub id: String,
    pub decomposition: Vec<String>,
}

/// Deterministic request id: the first 8 bytes of SHA-256 over the parts.
pub fn request_id(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            timeout: Duration::from_secs(30),
            retries: 3,
            backoff: Duration::from_millis(200),
        }
    }
}

/// One service base URL, shared by all three endpoint clients.
#[derive(Debug, Clone)]
pub struct HttpClient {
    base: String,
    agent: ureq::Agent,
    config: ClientConfig,
}

impl HttpClient {
    pub fn new(base_url: &str, config: ClientConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        HttpClient {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
            config,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    /// POSTs `body`, retrying transport failures and 5xx replies with linear
    /// backoff. 4xx replies are not retried.
    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp, BackendError> {
        let url = format!("{}{}", self.base, path);
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                thread::sleep(self.config.backoff * attempt);
            }
            match self.agent.post(&url).send_json(body) {
                Ok(resp) => {
                    return resp
                        .into_json::<Resp>()
                        .map_err(|e| BackendError::Malformed(format!("{url}: {e}")));
                }
                Err(ureq::Error::Status(code, resp)) if code < 500 => {
                    let text = resp.into_string().unwrap_or_default();
                    return Err(BackendError::Malformed(format!("{url}: HTTP {code}: {text}")));
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(BackendError::Unavailable(last))
    }

    /// GET `/healthz`; any 2xx is healthy.
    pub fn health(&self) -> Result<(), BackendError> {
        let url = format!("{}{}", self.base, HEALTH_PATH);
        self.agent
            .get(&url)
            .call()
            .map(|_| ())
            .map_err(|e| BackendError::Unavailable(e.to_string()))
    }
}

fn check_id(sent: &str, got: &str) -> Result<(), BackendError> {
    if sent == got {
        Ok(())
    } else {
        Err(BackendError::Malformed(format!(
            "reply id {got:?} does not match request id {sent:?}"
        )))
    }
}

impl RcBackend for HttpClient {
    fn answer(&self, question: &str, context: &str) -> Result<RcReply, BackendError> {
        let req = AnswerRequest {
            id: request_id(&[question, context]),
            question: question.to_string(),
            context: context.to_string(),
        };
        let resp: AnswerResponse = self.post(ANSWER_PATH, &req)?;
        check_id(&req.id, &resp.id)?;
        Ok(RcReply {
            answer: resp.answer,
            score: resp.score,
        })
    }
}

impl QgBackend for HttpClient {
    fn generate_question(&self, steps: &[String]) -> Result<String, BackendError> {
        let parts: Vec<&str> = steps.iter().map(String::as_str).collect();
        let req = GenerateRequest {
            id: request_id(&parts),
            decomposition: steps.to_vec(),
        };
        let resp: GenerateResponse = self.post(GENERATE_PATH, &req)?;
        check_id(&req.id, &resp.id)?;
        Ok(resp.question)
    }
}

impl QdmrParser for HttpClient {
    fn parse_question(&self, question: &str) -> Result<Vec<String>, BackendError> {
        let req = ParseRequest {
            id: request_id(&[question]),
            question: question.to_string(),
        };
        let resp: ParseResponse = self.post(PARSE_PATH, &req)?;
        check_id(&req.id, &resp.id)?;
        if resp.decomposition.is_empty() {
            return Err(BackendError::Malformed("empty decomposition".into()));
        }
        Ok(resp.decomposition)
    }
}
