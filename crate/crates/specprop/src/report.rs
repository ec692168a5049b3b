//! Artifact emission: CSV tables (comma separator, `.` decimals, mandatory
//! header, LF endings), key=value summary blocks, and atomic file writes.

use crate::error::Result;
use std::path::Path;

/// One CSV table; comment lines carry the config hash and seed.
#[derive(Debug, Clone)]
pub struct Csv {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn stamp(mut self, config_hash: u64, seed: u64) -> Self {
        self.comments.push(format!("config_hash={config_hash:016x} seed={seed}"));
        self
    }

    pub fn comment(mut self, text: &str) -> Self {
        self.comments.push(text.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Deterministic shortest-roundtrip float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// key = value block for human-readable summaries.
pub fn key_value_block(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

/// Write through a temp file then rename, so readers never see partial data.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering_is_deterministic() {
        let mut t = Csv::new(&["gap", "l1"]).stamp(0xabcd, 7);
        t.push(vec![fmt_f64(0.5), fmt_f64(1.0)]);
        t.push(vec![fmt_f64(0.25), fmt_f64(0.125)]);
        let a = t.render();
        assert!(a.starts_with("# config_hash=000000000000abcd seed=7\ngap,l1\n"));
        assert!(a.ends_with("0.25,0.125\n"));
        assert_eq!(a, t.render());
    }

    #[test]
    fn atomic_write_roundtrip() {
        let dir = std::env::temp_dir().join("specprop_report_test");
        let path = dir.join("x/table.csv");
        write_atomic(&path, "header\n1\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "header\n1\n");
        std::fs::remove_dir_all(&dir).ok();
    }
}
