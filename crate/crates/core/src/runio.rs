//! Run manifests, deterministic seed splitting, compensated aggregation, and
//! atomic CSV/JSON-lines persistence shared by the CLI subcommands.
//!
//! Every output file is written next to a manifest that records the command,
//! its full configuration, the master seed, and the derived per-task seeds,
//! so any run is reproducible from the manifest alone on the same build.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Stable column order for the order-parameter sweep CSV.
pub const ORDER_PARAM_CSV_HEADER: [&str; 8] =
    ["d", "T", "n_samples", "O_raw", "O_corrected", "stderr", "alpha", "seed"];

/// Stable column order for the decoder-threshold sweep CSV.
pub const DECODE_CSV_HEADER: [&str; 8] =
    ["d", "p", "T_equiv", "n_trials", "fail_rate", "stderr", "method", "seed"];

/// Derive an independent 64-bit seed for task `index` from a master seed
/// (splitmix64 over master xor a golden-ratio stride). Deterministic and
/// collision-free over any practical index range.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Kahan–Babuska compensated accumulator: the reported mean is independent
/// of how work was chunked across workers to well below 1e-12.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    compensation: f64,
    n: u64,
}

impl Kahan {
    pub fn new() -> Self {
        Kahan::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.compensation += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
        self.n += 1;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.sum() / self.n as f64
        }
    }
}

/// Reproducibility record written next to every output file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full configuration snapshot (flags and defaults actually used).
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Seeds handed to each independent task, in task order.
    pub task_seeds: Vec<u64>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, master_seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            task_seeds: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix = unix_now();
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Manifest path paired with an output file: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut os = output.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}

/// Write bytes to `path` atomically: write a temporary sibling, then rename.
/// A crash never leaves a partial file at the final path.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp.{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Render one CSV from a fixed header and pre-formatted rows. Numbers should
/// be formatted with `format_f64` for full-precision round-tripping.
pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Shortest decimal that round-trips the exact f64 value.
pub fn format_f64(x: f64) -> String {
    format!("{x}")
}

/// Write CSV + manifest atomically (results first, then the manifest, so an
/// output without a manifest is detectably incomplete).
pub fn emit_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    manifest: &RunManifest,
) -> Result<()> {
    write_atomic(path, render_csv(header, rows).as_bytes())?;
    write_atomic(&manifest_path(path), serde_json::to_string_pretty(manifest)?.as_bytes())?;
    Ok(())
}

/// Write JSON-lines + manifest atomically.
pub fn emit_jsonl(
    path: &Path,
    records: &[serde_json::Value],
    manifest: &RunManifest,
) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    write_atomic(&manifest_path(path), serde_json::to_string_pretty(manifest)?.as_bytes())?;
    Ok(())
}

/// Bundled JSON-lines reader (round-trip counterpart of [`emit_jsonl`]).
pub fn read_jsonl(path: &Path) -> Result<Vec<serde_json::Value>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(line)?);
        }
    }
    Ok(out)
}
