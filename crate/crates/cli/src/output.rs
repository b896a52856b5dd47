use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Reproducibility stamp written at the top of every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, config_sha256: String, seed: u64) -> Self {
        Meta {
            tool: "qdyn",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256,
            seed,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `dir/name` through `dir/name.partial`, so an
/// interrupted run leaves only the marked file behind.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let target = dir.join(name);
    let partial = dir.join(format!("{name}.partial"));
    let mut f = fs::File::create(&partial).map_err(io_err(&partial))?;
    f.write_all(bytes).map_err(io_err(&partial))?;
    f.sync_all().map_err(io_err(&partial))?;
    fs::rename(&partial, &target).map_err(io_err(&target))?;
    Ok(target)
}

/// CSV with `#`-prefixed metadata lines before the header row.
pub fn csv_bytes<R: Serialize>(meta: &Meta, rows: &[R]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# tool: {} {}", meta.tool, meta.version).expect("vec write");
    writeln!(buf, "# command: {}", meta.command).expect("vec write");
    writeln!(buf, "# config_sha256: {}", meta.config_sha256).expect("vec write");
    writeln!(buf, "# seed: {}", meta.seed).expect("vec write");
    let mut w = csv::Writer::from_writer(buf);
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: PathBuf::from("<csv buffer>"),
        source: e.into_error(),
    })
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json_bytes<T: Serialize>(meta: &Meta, body: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Report { meta, body })?;
    bytes.push(b'\n');
    Ok(bytes)
}
