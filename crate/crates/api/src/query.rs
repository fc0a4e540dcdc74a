use std::fmt::Display;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{ApiError, ApiResult};

/// Decoded query string. Repeated keys are kept in order.
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn parse(raw: Option<&str>) -> Self {
        let pairs = raw
            .map(|q| form_urlencoded::parse(q.as_bytes()).into_owned().collect())
            .unwrap_or_default();
        Params(pairs)
    }

    /// Last value given for `key`; empty values count as absent.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .rev()
            .find(|(k, v)| k == key && !v.is_empty())
            .map(|(_, v)| v.as_str())
    }

    pub fn parsed<T>(&self, key: &str, default: T) -> ApiResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| ApiError::bad_request("invalid_parameter", format!("{key}: {e}"))),
        }
    }

    /// All values of a repeatable key; each value may also be comma separated.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.0
            .iter()
            .filter(|(k, _)| k == key)
            .flat_map(|(_, v)| v.split(','))
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect()
    }

    pub fn date(&self, key: &str) -> ApiResult<Option<NaiveDate>> {
        self.get(key)
            .map(|v| {
                NaiveDate::parse_from_str(v, "%Y-%m-%d")
                    .map_err(|_| ApiError::bad_request("invalid_parameter", format!("{key}: expected YYYY-MM-DD, got `{v}`")))
            })
            .transpose()
    }
}
