//! Run manifests: what was run, on which inputs, producing which files.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Fully resolved description of a CLI job. Paths inside are absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Basis {
        k_max: usize,
        samples: usize,
    },
    Simulate {
        config: RunConfig,
    },
    Optimize {
        problem: Problem,
        m_max: usize,
        k_max: usize,
        omega: f64,
        gamma: f64,
        restarts: usize,
        seed: u64,
        work_target: Option<f64>,
        /// Coefficient file name inside the output directory.
        output: String,
    },
    Analyze {
        trajectory: PathBuf,
        config: RunConfig,
    },
    Validate {
        study: String,
        quick: bool,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// Work pinned, any amplitude.
    Work,
    /// Unit-norm profiles, optionally with pinned work.
    WorkBending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub job: Job,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    /// Files written by the job, relative to the manifest's directory.
    pub outputs: Vec<FileDigest>,
    pub created_unix: u64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(job: Job, seed: u64, inputs: &[PathBuf]) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    sha256: sha256_file(p)?,
                    path: p.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            job,
            seed,
            inputs,
            outputs: Vec::new(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: format!("{}: {}", path.display(), e.path()),
            message: e.into_inner().to_string(),
        })
    }

    /// Records the digests of `names`, relative to `dir`.
    pub fn set_outputs(&mut self, dir: &Path, names: &[String]) -> Result<()> {
        self.outputs = names
            .iter()
            .map(|n| {
                Ok(FileDigest {
                    sha256: sha256_file(&dir.join(n))?,
                    path: PathBuf::from(n),
                })
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Fails if any recorded input has changed since the run.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let found = sha256_file(&input.path)?;
            if found != input.sha256 {
                return Err(Error::DigestMismatch {
                    path: input.path.display().to_string(),
                    expected: input.sha256.clone(),
                    found,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("coeffs.csv");
        std::fs::write(&input, "m,k,a,b\n1,1,0.5,0.5\n").unwrap();
        let job = Job::Validate {
            study: "energy-decay".into(),
            quick: true,
            seed: 7,
        };
        let mut m = RunManifest::new(job, 7, &[input.clone()]).unwrap();
        std::fs::write(dir.path().join("energy_decay.json"), "{}").unwrap();
        m.set_outputs(dir.path(), &["energy_decay.json".into()])
            .unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        m.write(&path).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back, m);
        back.verify_inputs().unwrap();
        std::fs::write(&input, "m,k,a,b\n1,1,0.5,0.25\n").unwrap();
        let e = back.verify_inputs().unwrap_err();
        assert!(matches!(e, Error::DigestMismatch { .. }));
        assert_eq!(e.exit_code(), 2);
    }
}
