use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::error::{CliError, Result};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Fixed-width float text with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub tolerances: nibm::Tolerances,
    /// Every flag of the run, defaults filled in.
    pub command: Command,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if m.schema_version != MANIFEST_SCHEMA {
            return Err(CliError::Usage(format!("manifest schema {} is not supported (expected {MANIFEST_SCHEMA})", m.schema_version)));
        }
        Ok(m)
    }
}

/// Collects the files of one run. Each file is written to a temporary name
/// in the target directory and renamed into place.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<OutputFile>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: vec![] })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.dir.join(name), bytes)?;
        self.written.push(OutputFile { file: name.to_string(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(bytes)) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        self.put(name, &bytes)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(vec![]);
        let fail = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(&r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        self.put(name, &bytes)
    }

    /// Writes the manifest last; it is not listed among its own outputs.
    pub fn finish(self, command: &Command, seed: Option<u64>) -> Result<(PathBuf, RunManifest)> {
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA,
            tool: "nibm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: command.name().into(),
            seed,
            tolerances: nibm::Tolerances::default(),
            command: command.clone(),
            outputs: self.written,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        atomic_write(&path, &bytes)?;
        Ok((path, manifest))
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        for x in [std::f64::consts::PI, 1e-300, -7.25e12] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn writes_replace_atomically_and_record_digests() {
        let tmp = tempfile::tempdir().unwrap();
        let mut d = OutDir::create(&tmp.path().join("a/b")).unwrap();
        d.csv("x.csv", &["k", "v"], [vec!["0".into(), num(1.5)]]).unwrap();
        d.csv("x.csv", &["k", "v"], [vec!["1".into(), num(2.5)]]).unwrap();
        let text = fs::read_to_string(d.path().join("x.csv")).unwrap();
        assert_eq!(text, "k,v\n1,2.5000000000000000e0\n");
        assert_eq!(d.written[1].sha256, digest_file(&d.path().join("x.csv")).unwrap());
        assert_eq!(fs::read_dir(d.path()).unwrap().count(), 1);
    }
}
