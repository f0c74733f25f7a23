use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::failure::{Category, Failure};

/// Relative output paths are placed under this directory when it is set.
pub const OUT_DIR_ENV: &str = "LIUSHRINK_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    /// Six significant digits.
    Six,
    /// Shortest representation that round-trips.
    Full,
}

pub fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn fmt_num(v: f64, precision: Precision) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    match precision {
        Precision::Full => format!("{v:?}"),
        Precision::Six => {
            let exp = v.abs().log10().floor() as i32;
            if (-5..6).contains(&exp) {
                let decimals = (5 - exp).max(0) as usize;
                let s = format!("{v:.decimals$}");
                if s.contains('.') {
                    s.trim_end_matches('0').trim_end_matches('.').to_string()
                } else {
                    s
                }
            } else {
                format!("{v:.5e}")
            }
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::new(Category::Io, format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[String]) -> Result<Self, Failure> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).map_err(csv_failure)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<(), Failure> {
        self.writer.write_record(cells).map_err(csv_failure)
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, Failure> {
        self.writer.into_inner().map_err(|e| Failure::new(Category::Io, e.to_string()))
    }
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::new(Category::Io, e.to_string())
}

/// Reproducibility record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize, D: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub config: C,
    pub defaults: D,
    pub outputs: Vec<String>,
    pub jobs: Option<usize>,
    pub wall_clock_seconds: f64,
}

impl<C: Serialize, D: Serialize> RunManifest<C, D> {
    pub fn new(
        command: &'static str,
        seed: ResolvedSeed,
        config: C,
        defaults: D,
        outputs: Vec<String>,
        jobs: Option<usize>,
        started: Instant,
    ) -> Self {
        Self {
            tool: "liushrink",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: seed.value,
            seed_source: seed.source,
            config,
            defaults,
            outputs,
            jobs,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| Failure::new(Category::Io, e.to_string()))?;
        json.push(b'\n');
        write_atomic(path, &json)
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SeedSource {
    Flag,
    Config,
    Generated,
    /// The command draws no random numbers.
    Unused,
}

#[derive(Debug, Clone, Copy)]
pub struct ResolvedSeed {
    pub value: u64,
    pub source: SeedSource,
}

/// `--seed` wins over the config; with neither, a fresh seed is drawn from
/// the clock and recorded.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> ResolvedSeed {
    match (flag, config) {
        (Some(v), _) => ResolvedSeed { value: v, source: SeedSource::Flag },
        (None, Some(v)) => ResolvedSeed { value: v, source: SeedSource::Config },
        (None, None) => {
            let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
            ResolvedSeed { value: liushrink::rng::mix(nanos, &[std::process::id() as u64]), source: SeedSource::Generated }
        }
    }
}

pub fn no_seed() -> ResolvedSeed {
    ResolvedSeed { value: 0, source: SeedSource::Unused }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_num(0.5, Precision::Six), "0.5");
        assert_eq!(fmt_num(0.7334129, Precision::Six), "0.733413");
        assert_eq!(fmt_num(27.80431, Precision::Six), "27.8043");
        assert_eq!(fmt_num(123456.7, Precision::Six), "123457");
        assert_eq!(fmt_num(1234567.0, Precision::Six), "1.23457e6");
        assert_eq!(fmt_num(1.5e-9, Precision::Six), "1.50000e-9");
        assert_eq!(fmt_num(-2.0, Precision::Six), "-2");
        assert_eq!(fmt_num(0.1 + 0.2, Precision::Full), "0.30000000000000004");
    }
}
