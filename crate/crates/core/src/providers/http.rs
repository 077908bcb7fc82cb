//! Thin adapter for a Translator-v3 style REST endpoint.
//!
//! Requests are `POST {endpoint}/translate?api-version=3.0&from=..&to=..`
//! or `POST {endpoint}/transliterate?api-version=3.0&language=..&fromScript=Latn&toScript=Deva`
//! with body `[{"Text": ...}, ...]`.

use serde::Deserialize;
use serde_json::json;

use super::{CallError, Provider, ProviderConfig, Request, Service};

pub struct HttpProvider {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider").field("endpoint", &self.endpoint).finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct TranslateItem {
    translations: Vec<TextItem>,
}

#[derive(Deserialize)]
struct TextItem {
    text: String,
}

/// Base language code: "hi-Latn" becomes "hi".
fn base_lang(code: &str) -> &str {
    code.split('-').next().unwrap_or(code)
}

pub fn parse_translate_response(body: &str, expected: usize) -> Result<Vec<Option<String>>, CallError> {
    let items: Vec<TranslateItem> =
        serde_json::from_str(body).map_err(|e| CallError::Transient(format!("unparseable response: {e}")))?;
    if items.len() != expected {
        return Err(CallError::Transient(format!("expected {expected} results, got {}", items.len())));
    }
    Ok(items.into_iter().map(|it| it.translations.into_iter().next().map(|t| t.text)).collect())
}

pub fn parse_transliterate_response(body: &str, expected: usize) -> Result<Vec<Option<String>>, CallError> {
    let items: Vec<Option<TextItem>> =
        serde_json::from_str(body).map_err(|e| CallError::Transient(format!("unparseable response: {e}")))?;
    if items.len() != expected {
        return Err(CallError::Transient(format!("expected {expected} results, got {}", items.len())));
    }
    Ok(items.into_iter().map(|it| it.map(|t| t.text)).collect())
}

impl HttpProvider {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, super::ProviderError> {
        cfg.validate()?;
        if cfg.endpoint.is_empty() {
            return Err(super::ProviderError::Config("provider endpoint is not set".into()));
        }
        let api_key = cfg
            .api_key
            .clone()
            .ok_or_else(|| super::ProviderError::Config(format!("{} is not set", super::API_KEY_ENV)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout())
            .build()
            .map_err(|e| super::ProviderError::Config(format!("http client: {e}")))?;
        Ok(HttpProvider { endpoint: cfg.endpoint.trim_end_matches('/').to_string(), api_key, client })
    }

    fn url(&self, request: &Request<'_>) -> String {
        match request.service {
            Service::Translate => format!(
                "{}/translate?api-version=3.0&from={}&to={}",
                self.endpoint,
                base_lang(request.source),
                base_lang(request.target)
            ),
            Service::Transliterate => format!(
                "{}/transliterate?api-version=3.0&language={}&fromScript=Latn&toScript=Deva",
                self.endpoint,
                base_lang(request.source)
            ),
        }
    }
}

impl Provider for HttpProvider {
    fn kind(&self) -> &str {
        "http"
    }

    fn call(&self, request: &Request<'_>, inputs: &[String]) -> Result<Vec<Option<String>>, CallError> {
        let body: Vec<_> = inputs.iter().map(|t| json!({ "Text": t })).collect();
        let resp = self
            .client
            .post(self.url(request))
            .header("Ocp-Apim-Subscription-Key", &self.api_key)
            .json(&body)
            .send()
            .map_err(|e| CallError::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| CallError::Transient(e.to_string()))?;
        match status.as_u16() {
            200..=299 => match request.service {
                Service::Translate => parse_translate_response(&text, inputs.len()),
                Service::Transliterate => parse_transliterate_response(&text, inputs.len()),
            },
            401 | 403 => Err(CallError::Auth(format!("HTTP {status}"))),
            408 | 429 | 500..=599 => Err(CallError::Transient(format!("HTTP {status}"))),
            _ => Err(CallError::Rejected(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{Cache, ManualClock, ProviderClient, ProviderError};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves `responses` in order, one per connection, counting requests.
    fn serve(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let Ok((stream, _)) = listener.accept() else { return };
                counter.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream);
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut buf = vec![0; len];
                let _ = reader.read_exact(&mut buf);
                let mut stream = reader.into_inner();
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            }
        });
        (format!("http://{addr}"), hits)
    }

    fn cfg(endpoint: String) -> ProviderConfig {
        ProviderConfig { endpoint, api_key: Some("k".into()), timeout_secs: 5.0, ..ProviderConfig::default() }
    }

    #[test]
    fn response_parsers() {
        let t = parse_translate_response(r#"[{"translations":[{"text":"hello","to":"en"}]},{"translations":[]}]"#, 2).unwrap();
        assert_eq!(t, vec![Some("hello".into()), None]);
        let r = parse_transliterate_response(r#"[{"text":"दिल","script":"Deva"}]"#, 1).unwrap();
        assert_eq!(r, vec![Some("दिल".into())]);
        assert!(parse_translate_response("[]", 1).is_err());
        assert!(parse_transliterate_response("nope", 1).is_err());
    }

    #[test]
    fn missing_key_or_endpoint_is_config_error() {
        assert!(HttpProvider::new(&ProviderConfig { endpoint: "http://x".into(), ..Default::default() }).is_err());
        assert!(HttpProvider::new(&ProviderConfig { api_key: Some("k".into()), ..Default::default() }).is_err());
    }

    #[test]
    fn successful_round_trip() {
        let (endpoint, hits) = serve(vec![(200, r#"[{"text":"दिल","script":"Deva"}]"#.into())]);
        let provider = HttpProvider::new(&cfg(endpoint)).unwrap();
        let cache = Cache::in_memory();
        let clock = ManualClock::new();
        let client = ProviderClient::new(cfg(String::new()), &provider, &cache, &clock).unwrap();
        assert_eq!(client.transliterate_remote(&["dil".into()]).unwrap(), vec!["दिल".to_string()]);
        assert_eq!(client.transliterate_remote(&["dil".into()]).unwrap(), vec!["दिल".to_string()]);
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn unauthorized_is_not_retried() {
        let (endpoint, hits) = serve(vec![(401, "{}".into()), (200, "[]".into())]);
        let provider = HttpProvider::new(&cfg(endpoint)).unwrap();
        let cache = Cache::in_memory();
        let clock = ManualClock::new();
        let client = ProviderClient::new(cfg(String::new()), &provider, &cache, &clock).unwrap();
        let err = client.translate_sentences(&["यह".into()], "hi", "en").unwrap_err();
        assert!(matches!(err, ProviderError::Auth(_)));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn server_errors_are_retried() {
        let ok = r#"[{"translations":[{"text":"this"}]}]"#.to_string();
        let (endpoint, hits) = serve(vec![(503, "{}".into()), (200, ok)]);
        let provider = HttpProvider::new(&cfg(endpoint)).unwrap();
        let cache = Cache::in_memory();
        let clock = ManualClock::new();
        let client = ProviderClient::new(cfg(String::new()), &provider, &cache, &clock).unwrap();
        assert_eq!(client.translate_sentences(&["यह".into()], "hi", "en").unwrap(), vec!["this".to_string()]);
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }
}
