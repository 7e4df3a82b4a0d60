//! Run manifest: every emitted file with its content hash.
//!
//! The report file may carry timing lines; those start with `#` and are
//! excluded from its hash so that identical configurations produce
//! identical manifests.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;

pub struct Manifest {
    entries: Vec<(String, String)>,
}

fn hex(digest: &[u8]) -> String {
    let mut s = String::with_capacity(2 * digest.len());
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Hash of the non-comment lines (normalized line endings).
pub fn sha256_filtered(text: &str) -> String {
    let mut hasher = Sha256::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    hex(&hasher.finalize())
}

impl Manifest {
    pub fn new() -> Self {
        Manifest { entries: Vec::new() }
    }

    pub fn add_bytes(&mut self, rel_path: &str, bytes: &[u8]) {
        self.entries.push((rel_path.to_string(), sha256_bytes(bytes)));
    }

    /// Record a report-style file, hashing only its non-`#` lines.
    pub fn add_report(&mut self, rel_path: &str, text: &str) {
        self.entries.push((rel_path.to_string(), sha256_filtered(text)));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("# sha256 per emitted file; *.txt reports are hashed over non-# lines\n");
        let mut entries = self.entries.clone();
        entries.sort();
        for (path, hash) in entries {
            out.push_str(&format!("{hash}  {path}\n"));
        }
        out
    }
}
