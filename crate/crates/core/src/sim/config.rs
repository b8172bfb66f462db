use serde::Serialize;

use crate::error::{EngnError, Result};

/// Hardware and simulation parameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub rows: usize,
    pub cols: usize,
    pub rf_words: usize,
    pub davc_enabled: bool,
    pub davc_bytes: usize,
    /// Fraction of DAVC lines pinned to the highest in-degree vertices.
    pub rho: f64,
    /// Words per DAVC line; 0 means one aggregated property per line.
    pub davc_line_words: usize,
    pub result_bank_bytes: usize,
    /// Extra aggregate cycles per DAVC miss.
    pub result_bank_penalty_cycles: u64,
    pub dram_bandwidth_bytes_per_cycle: u64,
    pub dram_latency_cycles: u64,
    pub element_bytes: usize,
    pub edge_bytes: usize,
    pub prefetch_enabled: bool,
    pub edge_reorganize: bool,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rows: 128,
            cols: 16,
            rf_words: 64,
            davc_enabled: true,
            davc_bytes: 64 * 1024,
            rho: 1.0,
            davc_line_words: 0,
            result_bank_bytes: 1 << 20,
            result_bank_penalty_cycles: 2,
            dram_bandwidth_bytes_per_cycle: 256,
            dram_latency_cycles: 100,
            element_bytes: 4,
            edge_bytes: 8,
            prefetch_enabled: true,
            edge_reorganize: true,
            trace: false,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "rows",
    "cols",
    "rf_words",
    "davc_enabled",
    "davc_bytes",
    "rho",
    "davc_line_words",
    "result_bank_bytes",
    "result_bank_penalty_cycles",
    "dram_bandwidth_bytes_per_cycle",
    "dram_latency_cycles",
    "element_bytes",
    "edge_bytes",
    "prefetch_enabled",
    "edge_reorganize",
    "trace",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| EngnError::InvalidArgument(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(EngnError::InvalidArgument(format!("bad value {value:?} for {key}"))),
    }
}

impl SimConfig {
    /// Sets one field by name. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "rows" => self.rows = parse(&key, value)?,
            "cols" => self.cols = parse(&key, value)?,
            "rf_words" => self.rf_words = parse(&key, value)?,
            "davc_enabled" => self.davc_enabled = parse_bool(&key, value)?,
            "davc_bytes" => self.davc_bytes = parse(&key, value)?,
            "rho" => self.rho = parse(&key, value)?,
            "davc_line_words" => self.davc_line_words = parse(&key, value)?,
            "result_bank_bytes" => self.result_bank_bytes = parse(&key, value)?,
            "result_bank_penalty_cycles" => self.result_bank_penalty_cycles = parse(&key, value)?,
            "dram_bandwidth_bytes_per_cycle" => self.dram_bandwidth_bytes_per_cycle = parse(&key, value)?,
            "dram_latency_cycles" => self.dram_latency_cycles = parse(&key, value)?,
            "element_bytes" => self.element_bytes = parse(&key, value)?,
            "edge_bytes" => self.edge_bytes = parse(&key, value)?,
            "prefetch_enabled" => self.prefetch_enabled = parse_bool(&key, value)?,
            "edge_reorganize" => self.edge_reorganize = parse_bool(&key, value)?,
            "trace" => self.trace = parse_bool(&key, value)?,
            other => return Err(EngnError::InvalidArgument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rows", self.rows),
            ("cols", self.cols),
            ("rf_words", self.rf_words),
            ("result_bank_bytes", self.result_bank_bytes),
            ("element_bytes", self.element_bytes),
            ("edge_bytes", self.edge_bytes),
            ("dram_bandwidth_bytes_per_cycle", self.dram_bandwidth_bytes_per_cycle as usize),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(EngnError::InvalidArgument(format!("{name} must be positive")));
        }
        if self.davc_enabled && self.davc_bytes == 0 {
            return Err(EngnError::InvalidArgument("davc_bytes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(EngnError::InvalidArgument(format!("rho {} outside [0, 1]", self.rho)));
        }
        Ok(())
    }

    /// Number of DAVC lines for properties of `dim` words.
    pub fn davc_lines(&self, dim: usize) -> usize {
        let words = if self.davc_line_words == 0 {
            dim.max(1)
        } else {
            self.davc_line_words
        };
        self.davc_bytes / (words * self.element_bytes)
    }

    /// Lines pinned to high-degree vertices: `floor(rho * lines)`.
    pub fn davc_static_lines(&self, dim: usize) -> usize {
        (self.rho * self.davc_lines(dim) as f64).floor() as usize
    }

    /// Resolved configuration as `key=value` lines, in `CONFIG_KEYS` order.
    pub fn to_kv(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k}={}\n", v[k]))
            .collect()
    }

    /// Applies a `key=value` text; blank lines and `#` comments are skipped.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| EngnError::Parse {
                line: i + 1,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            self.set(k, v).map_err(|e| EngnError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.davc_lines(16), 1024);
        assert_eq!(c.davc_static_lines(16), 1024);
    }

    #[test]
    fn rho_rounds_down() {
        let mut c = SimConfig::default();
        c.davc_bytes = 10 * 64;
        c.rho = 0.25;
        assert_eq!(c.davc_lines(16), 10);
        assert_eq!(c.davc_static_lines(16), 2);
        c.davc_line_words = 8;
        assert_eq!(c.davc_lines(16), 20);
    }

    #[test]
    fn kv_roundtrip() {
        let mut c = SimConfig::default();
        c.set("davc-bytes", "16384").unwrap();
        c.set("prefetch_enabled", "off").unwrap();
        c.set("rho", "0.5").unwrap();
        let mut d = SimConfig::default();
        d.apply_kv(&c.to_kv()).unwrap();
        assert_eq!(c, d);
        assert!(d.set("bogus", "1").is_err());
        assert!(d.set("rows", "x").is_err());
        assert!(matches!(d.apply_kv("rows 4"), Err(EngnError::Parse { line: 1, .. })));
    }

    #[test]
    fn validation() {
        let mut c = SimConfig::default();
        c.rho = 1.5;
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.cols = 0;
        assert!(c.validate().is_err());
    }
}
