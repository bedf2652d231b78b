//! Canonical report serialization shared by the target-decoder trace export
//! and the pipeline sync report.
//!
//! Structured reports are JSON with lexicographically ordered keys (the
//! default map representation), so identical runs serialize byte-identically
//! and golden tests can diff them.

use alloc::string::String;

use serde::Serialize;

/// Envelope tagging the report body with its kind.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub report: &'a str,
    pub body: &'a T,
}

/// Serializes any report body deterministically (pretty-printed, sorted
/// keys).
pub fn to_canonical_json<T: Serialize>(kind: &str, body: &T) -> String {
    let report = Report { report: kind, body };
    serde_json::to_string_pretty(&report).expect("report types serialize infallibly")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    #[test]
    fn identical_bodies_serialize_identically() {
        let mut body = BTreeMap::new();
        body.insert("b", 2);
        body.insert("a", 1);
        let one = to_canonical_json("test", &body);
        let two = to_canonical_json("test", &body);
        assert_eq!(one, two);
        assert!(one.find("\"a\"").unwrap() < one.find("\"b\"").unwrap());
    }
}
