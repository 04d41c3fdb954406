use serde::{Deserialize, Serialize};

use super::Generator;
use crate::error::{Error, Result};
use crate::http::{HttpSettings, JsonClient};

#[derive(Serialize)]
struct GenerateBody<'a> {
    prompt: &'a str,
    temperature: f64,
}

#[derive(Deserialize)]
struct GenerateReply {
    text: String,
}

/// Remote LLM behind `POST {"prompt", "temperature"} -> {"text"}`.
#[derive(Debug)]
pub struct HttpGenerator {
    client: JsonClient,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, settings: HttpSettings) -> Result<Self> {
        Ok(HttpGenerator {
            client: JsonClient::new(url, settings).map_err(Error::Config)?,
        })
    }
}

impl Generator for HttpGenerator {
    fn name(&self) -> &str {
        "http"
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn generate(&self, prompt: &str, temperature: f64, _sample: u32) -> Result<String> {
        let reply: GenerateReply = self
            .client
            .post(&GenerateBody { prompt, temperature })
            .map_err(Error::Generator)?;
        Ok(reply.text)
    }
}
