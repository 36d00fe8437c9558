use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use perc_chem::estimators::EstimateTable;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Everything one run produces, before it touches the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Outputs {
    pub kind: &'static str,
    /// The resolved configuration, with every default filled in.
    pub config: Value,
    pub files: BTreeMap<String, Vec<u8>>,
    pub summary: BTreeMap<String, Value>,
    /// Set when an inner check failed; the files are still written.
    pub violation: Option<String>,
}

impl Outputs {
    pub fn new(kind: &'static str, config: Value) -> Self {
        Self { kind, config, files: BTreeMap::new(), summary: BTreeMap::new(), violation: None }
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), bytes.into());
    }

    /// Adds `<name>.csv` and `<name>.dat`, and records the table metadata.
    pub fn add_table(&mut self, name: &str, table: &EstimateTable) -> Result<(), CliError> {
        self.add(&format!("{name}.csv"), table_csv(table)?);
        self.add(&format!("{name}.dat"), table_dat(table));
        if !table.meta.is_empty() {
            self.summary.insert(format!("meta.{name}"), json!(table.meta));
        }
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn fail(&mut self, msg: String) {
        if self.violation.is_none() {
            self.violation = Some(msg);
        }
    }

    /// Hash of the experiment kind, code version and resolved configuration.
    pub fn config_digest(&self) -> String {
        let key = json!({ "experiment": self.kind, "version": env!("CARGO_PKG_VERSION"), "config": self.config });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }

    pub fn manifest(&self) -> String {
        let files: BTreeMap<&str, String> = self.files.iter().map(|(k, v)| (k.as_str(), hex::encode(Sha256::digest(v)))).collect();
        let m = json!({
            "tool": "perc-chem",
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": self.kind,
            "config": self.config,
            "config_sha256": self.config_digest(),
            "files": files,
            "summary": self.summary,
            "violation": self.violation,
        });
        let mut s = serde_json::to_string_pretty(&m).unwrap_or_default();
        s.push('\n');
        s
    }

    /// Writes every file plus `manifest.json` into a fresh directory
    /// `<root>/<kind>-<digest>`, adding `-2`, `-3`, … when that name is taken.
    pub fn write(&self, root: &Path) -> Result<PathBuf, CliError> {
        let io = |context: String| move |source| CliError::Io { context, source };
        fs::create_dir_all(root).map_err(io(format!("creating {}", root.display())))?;
        let stem = format!("{}-{}", self.kind, &self.config_digest()[..12]);
        let mut dir = root.join(&stem);
        let mut k = 1;
        loop {
            match fs::create_dir(&dir) {
                Ok(()) => break,
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    k += 1;
                    dir = root.join(format!("{stem}-{k}"));
                }
                Err(e) => return Err(io(format!("creating {}", dir.display()))(e)),
            }
        }
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(format!("writing {}", path.display())))?;
        }
        let path = dir.join("manifest.json");
        fs::write(&path, self.manifest()).map_err(io(format!("writing {}", path.display())))?;
        Ok(dir)
    }
}

/// `param…,estimate,stderr,n,seed_lo,seed_hi`.
pub fn table_csv(table: &EstimateTable) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(table.header()).map_err(err)?;
    for r in &table.rows {
        let mut rec: Vec<String> = r.params.iter().map(f64::to_string).collect();
        rec.extend([r.estimate.to_string(), r.stderr.to_string(), r.n.to_string(), r.seed_lo.to_string(), r.seed_hi.to_string()]);
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Whitespace-separated columns for gnuplot. A blank line separates blocks
/// whenever the leading parameters change, so `index` selects one curve.
pub fn table_dat(table: &EstimateTable) -> String {
    let mut out = format!("# {}\n", table.header()[..table.param_names.len() + 2].join(" "));
    let mut prev: Option<&[f64]> = None;
    for r in &table.rows {
        let lead = &r.params[..r.params.len().saturating_sub(1)];
        if prev.is_some_and(|p| p != lead) {
            out.push_str("\n\n");
        }
        prev = Some(lead);
        let cols: Vec<String> = r.params.iter().chain([&r.estimate, &r.stderr]).map(f64::to_string).collect();
        out.push_str(&cols.join(" "));
        out.push('\n');
    }
    out
}

/// A plain CSV with the given header.
pub fn plain_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Outputs {
        let mut t = EstimateTable::new(&["p", "t"]);
        t.push(vec![0.5, 1.0], 0.25, 0.01, 100, 0..100);
        t.push(vec![0.5, 2.0], 0.125, 0.01, 100, 0..100);
        t.push(vec![0.8, 1.0], 0.0, 0.0, 100, 0..100);
        let mut o = Outputs::new("tail", json!({"p": [0.5, 0.8]}));
        o.add_table("joint", &t).unwrap();
        o
    }

    #[test]
    fn csv_and_dat_layout() {
        let o = sample();
        let csv = String::from_utf8(o.files["joint.csv"].clone()).unwrap();
        assert_eq!(csv.lines().next(), Some("p,t,estimate,stderr,n,seed_lo,seed_hi"));
        assert_eq!(csv.lines().nth(1), Some("0.5,1,0.25,0.01,100,0,100"));
        let dat = String::from_utf8(o.files["joint.dat"].clone()).unwrap();
        assert!(dat.starts_with("# p t estimate stderr\n"));
        assert_eq!(dat.matches("\n\n\n").count(), 1);
    }

    #[test]
    fn runs_never_overwrite() {
        let root = tempfile::tempdir().unwrap();
        let o = sample();
        let a = o.write(root.path()).unwrap();
        let b = o.write(root.path()).unwrap();
        assert_ne!(a, b);
        assert!(b.file_name().unwrap().to_string_lossy().ends_with("-2"));
        for name in ["joint.csv", "joint.dat", "manifest.json"] {
            assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        }
        let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["config"]["p"], json!([0.5, 0.8]));
        assert!(manifest.get("workers").is_none());
    }
}
