//! Shared result-record plumbing: parameter hashing and the flat summary
//! row every check contributes to the CSV output.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hash of a canonical JSON serialization, truncated to 16 hex characters.
/// Stable across runs and platforms for identical inputs.
pub fn params_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("serializable parameters");
    let digest = Sha256::digest(json.as_bytes());
    let mut out = String::with_capacity(16);
    for b in digest.iter().take(8) {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// One row of the flat CSV summary; the column order is fixed.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub check: String,
    pub variant: String,
    pub d: usize,
    pub n: i32,
    pub t: f64,
    pub samples: usize,
    pub seed: u64,
    pub lhs: f64,
    pub stderr: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub const SUMMARY_HEADER: &str = "check,variant,d,N,t,samples,seed,lhs,stderr,rhs,pass";

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.check,
            self.variant,
            self.d,
            self.n,
            self.t,
            self.samples,
            self.seed,
            self.lhs,
            self.stderr,
            self.rhs,
            self.pass
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_input_sensitive() {
        let a = params_hash(&("x", 1, 2.5));
        let b = params_hash(&("x", 1, 2.5));
        let c = params_hash(&("x", 1, 2.6));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn csv_row_matches_the_header_arity() {
        let row = SummaryRow {
            check: "demo".into(),
            variant: "local".into(),
            d: 1,
            n: 4,
            t: 0.5,
            samples: 10,
            seed: 3,
            lhs: 0.1,
            stderr: 0.01,
            rhs: 0.2,
            pass: true,
        };
        assert_eq!(
            row.to_csv().split(',').count(),
            SUMMARY_HEADER.split(',').count()
        );
    }
}
