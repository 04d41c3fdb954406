//! Blocking JSON-over-HTTP client shared by the remote embedding and
//! generation providers.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub timeout_ms: u64,
    /// Extra attempts after the first failure.
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            timeout_ms: 30_000,
            retries: 2,
            backoff_ms: 200,
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct JsonClient {
    url: String,
    client: reqwest::blocking::Client,
    settings: HttpSettings,
    limiter: Limiter,
}

impl JsonClient {
    pub fn new(url: impl Into<String>, settings: HttpSettings) -> Result<Self, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(settings.timeout_ms))
            .build()
            .map_err(|e| format!("cannot build HTTP client: {e}"))?;
        Ok(JsonClient {
            url: url.into(),
            client,
            limiter: Limiter {
                free: Mutex::new(settings.max_in_flight.max(1)),
                cv: Condvar::new(),
            },
            settings,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// POSTs `body` and decodes the JSON reply. Transport errors, 429 and
    /// 5xx responses are retried; other statuses fail immediately.
    pub fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, String> {
        let _permit = self.limiter.acquire();
        let mut last = String::new();
        for attempt in 0..=self.settings.retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(
                    self.settings.backoff_ms * u64::from(attempt),
                ));
            }
            match self.client.post(&self.url).json(body).send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<R>()
                            .map_err(|e| format!("malformed response from {}: {e}", self.url));
                    }
                    last = format!("{} returned HTTP {status}", self.url);
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(last);
                    }
                }
                Err(e) => last = format!("request to {} failed: {e}", self.url),
            }
            log::debug!("attempt {} of {}: {last}", attempt + 1, self.settings.retries + 1);
        }
        Err(format!(
            "{last} (after {} attempts)",
            self.settings.retries + 1
        ))
    }
}
