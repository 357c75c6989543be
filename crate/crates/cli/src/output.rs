use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::CliError;
use crate::GlobalOpts;

/// What a command produced: the main artifact and an optional summary.
pub struct Emission {
    pub main: String,
    pub summary: Option<String>,
}

/// Fixed scientific notation with 12 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("command output serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: Vec<String>,
    config: &'a GlobalOpts,
    enum_limit: Option<usize>,
    version: &'static str,
    wall_time_seconds: f64,
    outputs: Vec<OutputRecord>,
}

#[derive(Serialize)]
struct OutputRecord {
    path: PathBuf,
    bytes: usize,
    sha256: String,
}

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Send the emission to its destinations.
///
/// With `--out` the main artifact goes to the file, a manifest is written
/// beside it and the summary goes to stdout. Without it the artifact goes to
/// stdout and the summary to stderr.
pub fn emit(
    global: &GlobalOpts,
    enum_limit: Option<usize>,
    started: Instant,
    e: &Emission,
) -> Result<(), CliError> {
    match &global.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(e.main.as_bytes())?;
            stdout.flush()?;
            if let Some(s) = &e.summary {
                eprint!("{s}");
            }
        }
        Some(path) => {
            fs::write(path, &e.main)
                .map_err(|err| CliError::Io(format!("{}: {err}", path.display())))?;
            let manifest = Manifest {
                command: std::env::args().collect(),
                config: global,
                enum_limit,
                version: env!("CARGO_PKG_VERSION"),
                wall_time_seconds: started.elapsed().as_secs_f64(),
                outputs: vec![OutputRecord {
                    path: path.clone(),
                    bytes: e.main.len(),
                    sha256: hex_sha256(e.main.as_bytes()),
                }],
            };
            let mpath = manifest_path(path);
            fs::write(&mpath, json(&manifest))
                .map_err(|err| CliError::Io(format!("{}: {err}", mpath.display())))?;
            if let Some(s) = &e.summary {
                print!("{s}");
            }
        }
    }
    Ok(())
}
