use std::collections::HashMap;
use std::path::Path;

use axum::http::{header, HeaderMap};

use crate::ApiError;

/// Maps bearer tokens to helper ids.
#[derive(Debug, Clone)]
pub enum Auth {
    /// Only listed tokens are accepted.
    Registry(HashMap<String, String>),
    /// Any non-empty token is accepted and used as the helper id. For local
    /// use and tests.
    Open,
}

impl Auth {
    /// Reads a `token = "helper-id"` TOML table.
    pub fn load_registry(path: &Path) -> Result<Self, String> {
        let body = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let map: HashMap<String, String> = toml::from_str(&body).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Auth::Registry(map))
    }

    pub fn helper_for(&self, headers: &HeaderMap) -> Result<String, ApiError> {
        let token = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(ApiError::unauthorized)?;
        match self {
            Auth::Open => Ok(token.to_string()),
            Auth::Registry(map) => map.get(token).cloned().ok_or_else(ApiError::unauthorized),
        }
    }
}
