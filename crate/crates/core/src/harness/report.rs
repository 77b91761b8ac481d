//! Output layer: summary rows, detail CSVs and the run manifest. Every file
//! embeds the config hash in a leading comment; `verify_outputs` re-reads a
//! run directory and fails loudly on a mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

/// One statistic at one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub point: String,
    pub statistic: String,
    pub value: f64,
    pub se: f64,
    pub replicas: usize,
}

impl SummaryRow {
    pub fn new(
        experiment: &str,
        point: impl Into<String>,
        statistic: impl Into<String>,
        value: f64,
        se: f64,
        replicas: usize,
    ) -> Self {
        SummaryRow {
            experiment: experiment.to_string(),
            point: point.into(),
            statistic: statistic.into(),
            value,
            se,
            replicas,
        }
    }
}

/// Writes the output tree of a run: `summary.csv`, per-experiment detail
/// files and `run-manifest.json` with the verbatim config and file hashes.
pub struct RunWriter {
    out_dir: PathBuf,
    config: ExperimentConfig,
    hash: String,
    files: Vec<String>,
}

impl RunWriter {
    pub fn new(out_dir: &Path, config: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(RunWriter {
            out_dir: out_dir.to_path_buf(),
            config: config.clone(),
            hash: config.hash(),
            files: Vec::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    /// A detail CSV with the config-hash comment prepended.
    pub fn write_detail(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        let mut f = fs::File::create(&path)?;
        writeln!(f, "# config_hash={}", self.hash)?;
        f.write_all(body.as_bytes())?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_summary(&mut self, rows: &[SummaryRow]) -> Result<()> {
        let mut body = String::from("experiment,point,statistic,value,se,replicas\n");
        for r in rows {
            body.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.experiment, r.point, r.statistic, r.value, r.se, r.replicas
            ));
        }
        self.write_detail("summary.csv", &body)
    }

    /// Finish the run: write the manifest and re-verify the embedded hashes.
    pub fn finalize(self) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            crate_version: &'a str,
            config_hash: &'a str,
            config: &'a ExperimentConfig,
            files: &'a [String],
        }
        let manifest = Manifest {
            crate_version: env!("CARGO_PKG_VERSION"),
            config_hash: &self.hash,
            config: &self.config,
            files: &self.files,
        };
        let path = self.out_dir.join("run-manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        verify_outputs(&self.out_dir)
    }
}

/// Check that every file listed in the manifest carries the manifest's
/// config hash.
pub fn verify_outputs(dir: &Path) -> Result<()> {
    let manifest_text = fs::read_to_string(dir.join("run-manifest.json"))?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest_text)?;
    let hash = manifest["config_hash"]
        .as_str()
        .ok_or_else(|| Error::Config("manifest missing config_hash".into()))?;
    let files = manifest["files"]
        .as_array()
        .ok_or_else(|| Error::Config("manifest missing files".into()))?;
    for f in files {
        let name = f
            .as_str()
            .ok_or_else(|| Error::Config("bad file entry".into()))?;
        let text = fs::read_to_string(dir.join(name))?;
        let expected = format!("# config_hash={hash}");
        if text.lines().next() != Some(expected.as_str()) {
            return Err(Error::Config(format!(
                "output {name} does not carry config hash {hash}"
            )));
        }
    }
    Ok(())
}
