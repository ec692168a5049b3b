//! Line-based experiment configuration: `section.key = value` entries with
//! comma-separated arrays, environment overrides through the SPECPROP_
//! prefix, cross-field validation, and a stable content hash embedded in
//! every artifact.

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::symbol::{SymbolKind, SymbolSpec, TimeProfile};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    /// Built-in defaults: unit-profile fractional Laplacian on the standard
    /// 1-d grid.
    pub fn defaults() -> Self {
        let mut c = Config::default();
        for (k, v) in [
            ("symbol.kind", "fractional-laplacian"),
            ("symbol.gamma", "2.0"),
            ("symbol.nu", "1.0"),
            ("symbol.rho", "0.0"),
            ("symbol.profile", "0:1.0"),
            ("grid.d", "1"),
            ("grid.n", "256"),
            ("grid.l", "16.0"),
            ("time.t_end", "1.0"),
            ("time.steps", "256"),
            ("experiment.name", "reproduce"),
            ("experiment.seed", "7"),
            ("experiment.m", "1.0"),
            ("experiment.p", "inf"),
            ("experiment.alpha", "0.5"),
            ("experiment.holder_n", "0"),
            ("experiment.family", "lipschitz"),
            ("experiment.ensemble_size", "30"),
            ("experiment.a", "0"),
            ("experiment.b", "0.0"),
            ("experiment.gaps", "0.015625,0.03125,0.0625,0.125,0.25,0.5"),
            ("experiment.bands", "2,3"),
            ("output.dir", "out"),
        ] {
            c.entries.insert(k.to_string(), v.to_string());
        }
        c
    }

    /// Parse `section.key = value` lines on top of the defaults; `#` starts
    /// a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::defaults();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: missing '='", lineno + 1)))?;
            let key = key.trim();
            if !key.contains('.') {
                return Err(Error::config(format!(
                    "line {}: key '{key}' must be section.key",
                    lineno + 1
                )));
            }
            c.entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text)
    }

    /// Apply SPECPROP_SECTION_KEY environment overrides; the first
    /// underscore after the prefix separates the section.
    pub fn apply_env(&mut self) {
        for (key, value) in std::env::vars() {
            if let Some(rest) = key.strip_prefix("SPECPROP_") {
                if let Some((section, name)) = rest.split_once('_') {
                    let path = format!("{}.{}", section.to_lowercase(), name.to_lowercase());
                    self.entries.insert(path, value);
                }
            }
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::config(format!("{key}: missing")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::config(format!("{key}: not a number: '{}'", self.get(key).unwrap())))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::config(format!("{key}: not an integer: '{}'", self.get(key).unwrap())))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::config(format!("{key}: not an integer: '{}'", self.get(key).unwrap())))
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.get(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("{key}: bad list entry '{s}'")))
            })
            .collect()
    }

    pub fn get_i32_list(&self, key: &str) -> Result<Vec<i32>> {
        self.get(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("{key}: bad list entry '{s}'")))
            })
            .collect()
    }

    /// Piecewise-constant profile written as `t0:a0,t1:a1,...`.
    pub fn get_profile(&self, key: &str) -> Result<TimeProfile> {
        let mut points = Vec::new();
        for part in self.get(key)?.split(',') {
            let (t, a) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::config(format!("{key}: piece '{part}' must be t:level")))?;
            let t: f64 =
                t.parse().map_err(|_| Error::config(format!("{key}: bad breakpoint '{t}'")))?;
            let a: f64 =
                a.parse().map_err(|_| Error::config(format!("{key}: bad level '{a}'")))?;
            points.push((t, a));
        }
        TimeProfile::new(points).map_err(|e| Error::config(format!("{key}: {e}")))
    }

    pub fn build_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(
            self.get_usize("grid.d")?,
            self.get_usize("grid.n")?,
            self.get_f64("grid.l")?,
        )
        .map_err(|e| Error::config(format!("grid: {e}")))
    }

    pub fn build_symbol(&self) -> Result<SymbolSpec> {
        let d = self.get_usize("grid.d")?;
        let kind = match self.get("symbol.kind")? {
            "fractional-laplacian" => SymbolKind::FractionalLaplacian,
            "complex-rotation" => SymbolKind::ComplexRotation { rho: self.get_f64("symbol.rho")? },
            "anisotropic-sum" => {
                let weights = match self.entries.get("symbol.weights") {
                    Some(_) => self.get_f64_list("symbol.weights")?,
                    None => vec![1.0; d],
                };
                SymbolKind::AnisotropicSum { weights }
            }
            "tabulated" => SymbolKind::Tabulated { callback: None },
            other => {
                return Err(Error::config(format!("symbol.kind: unknown kind '{other}'")))
            }
        };
        SymbolSpec::new(
            kind,
            self.get_f64("symbol.gamma")?,
            self.get_f64("symbol.nu")?,
            self.get_profile("symbol.profile")?,
            d,
        )
        .map_err(|e| Error::config(format!("symbol: {e}")))
    }

    /// Cross-field checks shared by every experiment path.
    pub fn validate(&self) -> Result<()> {
        let grid = self.build_grid()?;
        let symbol = self.build_symbol()?;
        let p = self.get("experiment.p")?;
        if p != "inf" && p != "infinity" {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::config("experiment.p: not a number or 'inf'"))?;
            if !(p > 1.0) {
                return Err(Error::config("experiment.p: must exceed 1"));
            }
        }
        if self.get("experiment.family")? == "holder" {
            let total = symbol.gamma() + self.get_f64("experiment.alpha")?;
            if (total - total.round()).abs() < 1e-9 {
                return Err(Error::config(format!(
                    "experiment.alpha: gamma + alpha = {total} must not be a nonnegative integer"
                )));
            }
        }
        if let Ok(bands) = self.get_i32_list("experiment.bands") {
            for n in bands {
                if 2f64.powi(n + 1) >= grid.nyquist() {
                    return Err(Error::config(format!(
                        "experiment.bands: band {n} exceeds the Nyquist frequency {}",
                        grid.nyquist()
                    )));
                }
            }
        }
        if !(self.get_f64("time.t_end")? > 0.0) {
            return Err(Error::config("time.t_end: must be positive"));
        }
        if self.get_usize("time.steps")? < 2 {
            return Err(Error::config("time.steps: must be at least 2"));
        }
        Ok(())
    }

    /// FNV-1a over the sorted entries; stable across runs and platforms.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for (k, v) in &self.entries {
            for b in k.bytes().chain([b'='].into_iter()).chain(v.bytes()).chain([b'\n']) {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_hash_are_stable() {
        let a = Config::parse("grid.n = 512\nsymbol.gamma = 1.0 # comment\n").unwrap();
        let b = Config::parse("symbol.gamma = 1.0\ngrid.n = 512").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.get_usize("grid.n").unwrap(), 512);
        let c = Config::parse("grid.n = 1024").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bad_lines_are_rejected_with_a_path() {
        assert!(Config::parse("gamma 2.0").is_err());
        assert!(Config::parse("gamma = 2.0").is_err()); // no section
        let c = Config::parse("symbol.gamma = abc").unwrap();
        let err = c.get_f64("symbol.gamma").unwrap_err();
        assert!(err.to_string().contains("symbol.gamma"));
    }

    #[test]
    fn profile_parsing() {
        let c = Config::parse("symbol.profile = 0:1.0, 0.5:0.75").unwrap();
        let p = c.get_profile("symbol.profile").unwrap();
        assert_eq!(p.points(), &[(0.0, 1.0), (0.5, 0.75)]);
    }

    #[test]
    fn validation_rejects_integer_holder_order() {
        let mut c = Config::defaults();
        c.set("experiment.family", "holder");
        c.set("symbol.gamma", "1.5");
        c.set("experiment.alpha", "0.5");
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("alpha"));
        c.set("symbol.gamma", "2.0");
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation_rejects_small_p_and_wide_bands() {
        let mut c = Config::defaults();
        c.set("experiment.p", "0.5");
        assert!(c.validate().is_err());
        let mut c = Config::defaults();
        c.set("experiment.bands", "2,9");
        assert!(c.validate().is_err());
    }

    #[test]
    fn defaults_validate() {
        assert!(Config::defaults().validate().is_ok());
    }
}
