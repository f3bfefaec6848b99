//! JSON file format.

use serde::Deserialize;

use super::{NetworkTopology, Source};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    parties: Vec<String>,
    sources: Vec<Source>,
}

/// Parses and validates a network file.
///
/// Malformed JSON and schema mismatches (unknown keys, wrong types, unknown
/// resource kinds) are reported with their line and column; semantic problems
/// name the invariant that failed.
pub fn parse_network(text: &[u8]) -> Result<NetworkTopology> {
    let raw: RawNetwork = serde_json::from_slice(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    NetworkTopology::new(raw.parties, raw.sources)
}

/// Pretty-printed JSON accepted by [`parse_network`].
pub fn serialize_network(net: &NetworkTopology) -> String {
    serde_json::to_string_pretty(net).expect("network serialization cannot fail")
}
