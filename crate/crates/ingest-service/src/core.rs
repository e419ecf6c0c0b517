use std::collections::HashMap;
use std::sync::Arc;

use store_query::{StoreError, TelemetryStore};
use telemetry_model::{decode_payload, AuthToken, PayloadError};

use crate::config::ConfigError;

/// Status and JSON body for one ingest request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostResponse {
    pub status: u16,
    pub body: String,
}

impl PostResponse {
    fn ok() -> Self {
        PostResponse { status: 200, body: r#"{"status":"ok"}"#.to_string() }
    }

    fn error(status: u16, reason: &str) -> Self {
        PostResponse {
            status,
            body: serde_json::json!({ "error": reason }).to_string(),
        }
    }
}

/// Transport-independent request handling: token auth, payload
/// validation and persistence.
pub struct ServiceCore {
    /// token -> authorized device_id; immutable after startup.
    tokens: HashMap<String, String>,
    store: Arc<TelemetryStore>,
}

impl ServiceCore {
    pub fn new(
        store: Arc<TelemetryStore>,
        tokens: impl IntoIterator<Item = AuthToken>,
    ) -> Result<Self, ConfigError> {
        let mut table = HashMap::new();
        for entry in tokens {
            entry
                .validate()
                .map_err(|e| ConfigError::BadToken(e.to_string()))?;
            if table.insert(entry.token.clone(), entry.device_id).is_some() {
                return Err(ConfigError::DuplicateToken(entry.token));
            }
        }
        Ok(ServiceCore { tokens: table, store })
    }

    pub fn store(&self) -> &Arc<TelemetryStore> {
        &self.store
    }

    /// Resolve the bearer token in an Authorization header value to the
    /// device it authorizes.
    pub fn authenticate(&self, authorization: Option<&str>) -> Result<&str, PostResponse> {
        let header = authorization
            .ok_or_else(|| PostResponse::error(401, "missing bearer token"))?;
        let token = header
            .trim()
            .strip_prefix("Bearer ")
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| PostResponse::error(401, "missing bearer token"))?;
        self.tokens
            .get(token)
            .map(String::as_str)
            .ok_or_else(|| PostResponse::error(401, "unknown token"))
    }

    /// Handle one telemetry POST. Any non-200 outcome leaves the store
    /// untouched; a duplicate delivery is acknowledged with 200 without
    /// storing twice, so a node retrying after a lost response converges.
    pub fn handle_post(
        &self,
        authorization: Option<&str>,
        body: &[u8],
        receipt_unix: i64,
    ) -> PostResponse {
        let device_id = match self.authenticate(authorization) {
            Ok(d) => d,
            Err(resp) => return resp,
        };
        let record = match decode_payload(body) {
            Ok(r) => r,
            Err(PayloadError::Validation { field, .. }) => {
                return PostResponse::error(400, field)
            }
            Err(e) => return PostResponse::error(400, &e.to_string()),
        };
        if record.device_id != device_id {
            return PostResponse::error(403, "token does not authorize this device_id");
        }
        match self.store.append(&record, receipt_unix) {
            Ok(_) => PostResponse::ok(),
            Err(StoreError::InvalidRecord(e)) => PostResponse::error(400, &e.to_string()),
            Err(e) => {
                tracing::error!("append failed: {e}");
                PostResponse::error(503, "store unavailable")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use telemetry_model::{encode_payload, TelemetryRecord};

    fn sample_record() -> TelemetryRecord {
        TelemetryRecord::new(
            "CI-205-DDE",
            "C65892",
            2,
            13.705933,
            -89.170845,
            true,
            0.62,
            1652719541,
        )
    }

    fn core() -> (tempfile::TempDir, ServiceCore) {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(TelemetryStore::open(dir.path()).unwrap());
        let core = ServiceCore::new(
            store,
            [AuthToken { token: "tok-205".into(), device_id: "CI-205-DDE".into() }],
        )
        .unwrap();
        (dir, core)
    }

    fn store_bytes(dir: &tempfile::TempDir) -> Vec<u8> {
        let mut all = Vec::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        paths.sort();
        for p in paths {
            all.extend(std::fs::read(&p).unwrap());
        }
        all
    }

    #[test]
    fn bearer_token_maps_to_device() {
        let (_dir, core) = core();
        assert_eq!(core.authenticate(Some("Bearer tok-205")).unwrap(), "CI-205-DDE");
        assert_eq!(core.authenticate(Some("Bearer nope")).unwrap_err().status, 401);
        assert_eq!(core.authenticate(Some("")).unwrap_err().status, 401);
        assert_eq!(core.authenticate(Some("Basic tok-205")).unwrap_err().status, 401);
        assert_eq!(core.authenticate(None).unwrap_err().status, 401);
    }

    #[test]
    fn valid_post_persists_with_receipt() {
        let (_dir, core) = core();
        let body = encode_payload(&sample_record()).unwrap();
        let resp = core.handle_post(Some("Bearer tok-205"), &body, 1652719558);
        assert_eq!(resp.status, 200);
        assert_eq!(resp.body, r#"{"status":"ok"}"#);
        let stored = core.store().latest("CI-205-DDE").unwrap();
        assert_eq!(stored.record, sample_record());
        assert_eq!(stored.receipt_unix, 1652719558);
        assert_eq!(stored.seq, 1);
    }

    #[test]
    fn missing_token_is_401_and_store_untouched() {
        let (dir, core) = core();
        let before = store_bytes(&dir);
        let body = encode_payload(&sample_record()).unwrap();
        assert_eq!(core.handle_post(None, &body, 1).status, 401);
        assert_eq!(store_bytes(&dir), before);
    }

    #[test]
    fn device_mismatch_is_403() {
        let (dir, core) = core();
        let mut other = sample_record();
        other.device_id = "OTHER".into();
        let body = encode_payload(&other).unwrap();
        let before = store_bytes(&dir);
        assert_eq!(core.handle_post(Some("Bearer tok-205"), &body, 1).status, 403);
        assert_eq!(store_bytes(&dir), before);
    }

    #[test]
    fn bad_payloads_are_400_naming_the_problem() {
        let (dir, core) = core();
        let before = store_bytes(&dir);

        let resp = core.handle_post(Some("Bearer tok-205"), b"{nope", 1);
        assert_eq!(resp.status, 400);

        let mut text =
            String::from_utf8(encode_payload(&sample_record()).unwrap()).unwrap();
        text = text.replace("\"latitude\":13.705933", "\"latitude\":91.0");
        let resp = core.handle_post(Some("Bearer tok-205"), text.as_bytes(), 1);
        assert_eq!(resp.status, 400);
        assert_eq!(resp.body, r#"{"error":"latitude"}"#);

        assert_eq!(store_bytes(&dir), before);
    }

    #[test]
    fn duplicate_delivery_stores_once_but_still_acks() {
        let (_dir, core) = core();
        let body = encode_payload(&sample_record()).unwrap();
        assert_eq!(core.handle_post(Some("Bearer tok-205"), &body, 10).status, 200);
        assert_eq!(core.handle_post(Some("Bearer tok-205"), &body, 20).status, 200);
        let page = core
            .store()
            .query(&store_query::QueryRequest::new("CI-205-DDE", 0, i64::MAX))
            .unwrap();
        assert_eq!(page.total, 1);
    }

    #[test]
    fn append_failure_maps_to_503() {
        let (dir, core) = core();
        // occupy the device's file path with a directory so the open fails
        std::fs::create_dir(dir.path().join("CI-205-DDE.ndjson")).unwrap();
        let body = encode_payload(&sample_record()).unwrap();
        let resp = core.handle_post(Some("Bearer tok-205"), &body, 1);
        assert_eq!(resp.status, 503);
    }
}
