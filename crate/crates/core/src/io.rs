//! Configuration files, report export and run manifests.
//!
//! JSON output is canonical: object keys are sorted and every double is
//! written as the shortest decimal that parses back to the same bits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{validate_config, RawConfig, WeightedConfig};
use crate::optimize::TraceEntry;

/// Serializes `value` with sorted keys, pretty-printed.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's map type is ordered by key unless `preserve_order` is on
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn parse_config(text: &str) -> Result<WeightedConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    validate_config(&raw)
}

pub fn read_config(path: &Path) -> Result<WeightedConfig> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn config_to_json(cfg: &WeightedConfig) -> Result<String> {
    to_canonical_json(&cfg.to_raw())
}

pub fn write_config(path: &Path, cfg: &WeightedConfig) -> Result<()> {
    write_text(path, &config_to_json(cfg)?)
}

/// Writes any report (or array of reports) as canonical JSON.
pub fn export_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_text(path, &to_canonical_json(value)?)
}

/// Flattens an optimizer trace to `iter,epsilon,energy` rows, numbering
/// accepted steps consecutively across smoothing levels.
pub fn trace_to_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from("iter,epsilon,energy\n");
    for (i, e) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{:e},{:e}\n", e.epsilon, e.energy));
    }
    out
}

pub fn export_trace_csv(trace: &[TraceEntry], path: &Path) -> Result<()> {
    fs::write(path, trace_to_csv(trace))?;
    Ok(())
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Everything needed to rerun an invocation that wrote results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command_line: Vec<String>,
    pub seeds: Vec<u64>,
    /// Input path to hex SHA-256 of its contents.
    pub input_digests: BTreeMap<String, String>,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub outputs: Vec<String>,
    pub threads: usize,
}

impl RunManifest {
    pub fn start(command_line: Vec<String>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line,
            seeds: Vec::new(),
            input_digests: BTreeMap::new(),
            started_at: unix_seconds(),
            finished_at: 0.0,
            outputs: Vec::new(),
            threads: rayon::current_num_threads(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = file_digest(path)?;
        self.input_digests.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// `<out>.manifest.json` next to the primary output.
    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    /// Stamps the finish time and writes the manifest next to `out`.
    pub fn finish(mut self, out: &Path) -> Result<PathBuf> {
        self.finished_at = unix_seconds();
        let path = Self::path_for(out);
        export_json(&self, &path)?;
        Ok(path)
    }
}

/// Reads a kernel either inline (text starting with `{`) or from a file.
pub fn read_kernel_arg(arg: &str) -> Result<(crate::kernels::KernelSpec, Option<PathBuf>)> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        Ok((serde_json::from_str(trimmed)?, None))
    } else {
        let path = PathBuf::from(arg);
        let text = fs::read_to_string(&path).map_err(Error::from)?;
        Ok((serde_json::from_str(&text)?, Some(path)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::CertReport;
    use crate::energy::three_point_energy;
    use crate::kernels::KernelSpec;
    use crate::lift::gen_orthonormal_basis;

    #[test]
    fn canonical_keys_sorted() {
        let r = three_point_energy(&gen_orthonormal_basis(4).unwrap(), &KernelSpec::pframe(1.0)).unwrap();
        let s = to_canonical_json(&r).unwrap();
        let (k, n, v) = (s.find("\"kernel\"").unwrap(), s.find("\"n_points\"").unwrap(), s.find("\"value\"").unwrap());
        assert!(k < n && n < v);
        assert!(s.contains("0.0625"));
    }

    #[test]
    fn cert_batch_keeps_order() {
        let batch = vec![CertReport::new("b", 0.0, 1.0, None), CertReport::new("a", 2.0, 1.0, None)];
        let s = to_canonical_json(&batch).unwrap();
        let back: Vec<CertReport> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, batch);
    }

    #[test]
    fn csv_header() {
        let t = vec![TraceEntry { restart: 0, level: 0, epsilon: 0.1, iter: 0, energy: 0.5 }];
        let csv = trace_to_csv(&t);
        assert_eq!(csv.lines().next(), Some("iter,epsilon,energy"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn manifest_path() {
        assert_eq!(RunManifest::path_for(Path::new("a/b.json")), PathBuf::from("a/b.json.manifest.json"));
    }

    #[test]
    fn kernel_inline_or_file() {
        let (k, p) = read_kernel_arg(r#"{"kind":"uvt"}"#).unwrap();
        assert_eq!(k, KernelSpec::triple_product());
        assert!(p.is_none());
        assert!(read_kernel_arg("/nonexistent/kernel.json").is_err());
    }
}
