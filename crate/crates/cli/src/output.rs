//! Atomic file emission, CSV formatting and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use gaborstab::tfcore::Grid2D;

use crate::{CliError, Result};

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    file.write_all(bytes).and_then(|_| file.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Serializes `rows` (the header first) as CSV.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut push = |rec: &[String]| w.write_record(rec).map_err(|e| CliError::Usage(format!("csv: {e}")));
    push(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    for r in rows {
        push(r)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
}

/// Collects output files of one command run and finishes with a manifest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
    started: Instant,
    started_unix_ms: u128,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let probe = root.join(".gaborstab-write-probe");
        fs::write(&probe, b"").and_then(|_| fs::remove_file(&probe)).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            started_unix_ms: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let bytes = csv_bytes(header, rows)?;
        self.write(name, &bytes)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes `manifest.json` and returns every file of the run, manifest last.
    pub fn finish(mut self, command: &str, config: Option<&Path>, grid: Option<&Grid2D>) -> Result<Vec<PathBuf>> {
        let manifest = RunManifest {
            command: command.to_string(),
            config: config.map(|p| p.display().to_string()),
            output_dir: self.root.display().to_string(),
            tool: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            started_unix_ms: self.started_unix_ms,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            grid: grid.map(GridMeta::from),
            files: self
                .files
                .iter()
                .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
                .collect(),
        };
        let path = self.path("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        self.files.push(path);
        Ok(self.files)
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub output_dir: String,
    pub tool: String,
    pub started_unix_ms: u128,
    pub elapsed_seconds: f64,
    pub grid: Option<GridMeta>,
    /// Every file written by the run except the manifest itself.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct GridMeta {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub nxi: usize,
    pub hx: f64,
    pub hxi: f64,
}

impl From<&Grid2D> for GridMeta {
    fn from(g: &Grid2D) -> Self {
        GridMeta {
            x_min: g.x_min,
            x_max: g.x_max,
            nx: g.nx,
            xi_min: g.xi_min,
            xi_max: g.xi_max,
            nxi: g.nxi,
            hx: g.hx(),
            hxi: g.hxi(),
        }
    }
}

/// One test case of a JUnit-style report.
#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
    pub message: String,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// JUnit XML with one `<testsuite>`.
pub fn junit_xml(suite: &str, cases: &[CaseResult]) -> String {
    let failures = cases.iter().filter(|c| !c.passed).count();
    let total: f64 = cases.iter().map(|c| c.seconds).sum();
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s += &format!(
        "<testsuites>\n  <testsuite name=\"{}\" tests=\"{}\" failures=\"{failures}\" time=\"{total:.3}\">\n",
        xml_escape(suite),
        cases.len()
    );
    for c in cases {
        s += &format!("    <testcase classname=\"{}\" name=\"{}\" time=\"{:.3}\"", xml_escape(suite), xml_escape(&c.name), c.seconds);
        if c.passed {
            s += &format!(">\n      <system-out>{}</system-out>\n    </testcase>\n", xml_escape(&c.message));
        } else {
            s += &format!(">\n      <failure message=\"{}\"/>\n    </testcase>\n", xml_escape(&c.message));
        }
    }
    s += "  </testsuite>\n</testsuites>\n";
    s
}
