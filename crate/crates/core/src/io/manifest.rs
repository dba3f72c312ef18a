//! Output directory bookkeeping: every file written is listed with its checksum.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::product::{ArrayMeta, ArrayProduct};
use super::table::Table;
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductKind {
    Config,
    Array,
    Sidecar,
    Table,
    Contour,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub path: String,
    pub stage: String,
    pub kind: ProductKind,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub kind: String,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub config_digest: String,
    #[serde(default)]
    pub products: Vec<Entry>,
    #[serde(default)]
    pub skipped: Vec<Skipped>,
    pub error: Option<Failure>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {}", path.display(), e.message())))
    }

    pub fn entries<'a>(&'a self, stage: &'a str, kind: ProductKind) -> impl Iterator<Item = &'a Entry> + 'a {
        self.products
            .iter()
            .filter(move |e| e.stage == stage && e.kind == kind)
    }

    pub fn find(&self, path: &str) -> Option<&Entry> {
        self.products.iter().find(|e| e.path == path)
    }

    /// Checks sizes and checksums, and that no unlisted file sits in `dir`.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        let mut listed = BTreeSet::new();
        for e in &self.products {
            let bytes = std::fs::read(dir.join(&e.path))?;
            if bytes.len() as u64 != e.bytes || sha256_hex(&bytes) != e.sha256 {
                return Err(Error::Format(format!("{}: checksum mismatch", e.path)));
            }
            listed.insert(e.path.clone());
        }
        for f in std::fs::read_dir(dir)? {
            let name = f?.file_name().to_string_lossy().into_owned();
            if name != MANIFEST_NAME && !listed.contains(&name) {
                return Err(Error::Format(format!("{name}: not listed in the manifest")));
            }
        }
        Ok(())
    }

    /// Reads an array product and its sidecar, checking the recorded checksum.
    pub fn read_array(&self, dir: &Path, bin_path: &str) -> Result<ArrayProduct> {
        let entry = self
            .find(bin_path)
            .ok_or_else(|| Error::Format(format!("{bin_path}: not in the manifest")))?;
        read_array_checked(dir, bin_path, &entry.sha256)
    }
}

/// Reads `<dir>/<bin_path>` and its sidecar, failing unless the payload hashes to `sha256`.
pub fn read_array_checked(dir: &Path, bin_path: &str, sha256: &str) -> Result<ArrayProduct> {
    let bytes = std::fs::read(dir.join(bin_path))?;
    if sha256_hex(&bytes) != sha256 {
        return Err(Error::Format(format!("{bin_path}: checksum mismatch")));
    }
    let meta_path = dir.join(sidecar_path(bin_path));
    let meta: ArrayMeta = toml::from_str(&std::fs::read_to_string(&meta_path)?)
        .map_err(|e| Error::Format(format!("{}: {}", meta_path.display(), e.message())))?;
    ArrayProduct::from_parts(meta, bytes)
}

fn sidecar_path(bin_path: &str) -> String {
    format!("{}.meta", bin_path.trim_end_matches(".bin"))
}

/// Writes products into one flat directory and records them.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    digits: usize,
    manifest: Manifest,
}

impl OutputDir {
    /// Creates `dir` if needed. A previous run's files (those its manifest
    /// lists) are replaced; any other content makes this fail.
    pub fn create(dir: &Path, config_digest: &str, digits: usize) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let previous = dir.join(MANIFEST_NAME);
        let listed: BTreeSet<String> = if previous.is_file() {
            Manifest::load(&previous)?.products.into_iter().map(|e| e.path).collect()
        } else {
            BTreeSet::new()
        };
        let mut stale = Vec::new();
        for f in std::fs::read_dir(dir)? {
            let name = f?.file_name().to_string_lossy().into_owned();
            if name != MANIFEST_NAME && !listed.contains(&name) {
                return Err(Error::InvalidInput(format!(
                    "output directory {} holds {name}, which no previous run wrote",
                    dir.display()
                )));
            }
            stale.push(name);
        }
        for name in stale {
            std::fs::remove_file(dir.join(name))?;
        }
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            digits,
            manifest: Manifest {
                config_digest: config_digest.into(),
                ..Manifest::default()
            },
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn write_bytes(&mut self, name: &str, stage: &str, kind: ProductKind, bytes: &[u8]) -> Result<()> {
        if self.manifest.find(name).is_some() || name == MANIFEST_NAME {
            return Err(Error::InvalidInput(format!("product {name} written twice")));
        }
        std::fs::write(self.dir.join(name), bytes)?;
        self.manifest.products.push(Entry {
            path: name.into(),
            stage: stage.into(),
            kind,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes `<name>.bin` and `<name>.meta`.
    pub fn write_array(&mut self, stage: &str, mut product: ArrayProduct) -> Result<String> {
        product.meta.config_digest = self.manifest.config_digest.clone();
        let bin = format!("{}.bin", product.meta.name);
        self.write_bytes(&bin, stage, ProductKind::Array, &product.bytes)?;
        self.write_bytes(&sidecar_path(&bin), stage, ProductKind::Sidecar, product.sidecar().as_bytes())?;
        Ok(bin)
    }

    pub fn write_table(&mut self, name: &str, stage: &str, table: &Table) -> Result<()> {
        let mut table = table.clone();
        table.notes.insert(0, ("config_digest".into(), self.manifest.config_digest.clone().into()));
        self.write_bytes(name, stage, ProductKind::Table, table.render(self.digits).as_bytes())
    }

    pub fn skip(&mut self, stage: &str, reason: &str) {
        self.manifest.skipped.push(Skipped {
            stage: stage.into(),
            reason: reason.into(),
        });
    }

    pub fn fail(&mut self, stage: &str, err: &Error) {
        self.manifest.error = Some(Failure {
            stage: stage.into(),
            kind: error_kind(err).into(),
            cause: err.to_string(),
        });
    }

    /// Writes the manifest itself and returns it.
    pub fn finish(self) -> Result<Manifest> {
        let text = toml::to_string(&self.manifest).expect("manifest serializes");
        std::fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(self.manifest)
    }
}

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::InvalidInput(_) => "invalid_input",
        Error::NonConvergence { .. } => "non_convergence",
        Error::SolverSingular { .. } => "solver_singular",
        Error::Aborted { .. } => "aborted",
        Error::WindowTooLarge { .. } => "window_too_large",
        Error::ImagResidue { .. } => "imag_residue",
        Error::EmptyRegion => "empty_region",
        Error::NoBarrier { .. } => "no_barrier",
        Error::MaskedOut { .. } => "masked_out",
        Error::StepUnstable { .. } => "step_unstable",
        Error::NoRoot { .. } => "no_root",
        Error::Config(_) => "config",
        Error::Format(_) => "format",
        Error::Io(_) => "io",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::product::{Axis, Element};

    fn array(name: &str) -> ArrayProduct {
        let axes = vec![Axis {
            name: "i".into(),
            start: 0.0,
            step: 1.0,
            len: 3,
        }];
        ArrayProduct::real(ArrayMeta::new(name, Element::F64, axes), &[1.0, 2.0, 3.0])
    }

    #[test]
    fn lists_everything_and_verifies() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path(), "abc", 17).unwrap();
        let bin = out.write_array("stage", array("x")).unwrap();
        let mut t = Table::new(&["a"]);
        t.push(vec![1.0.into()]);
        out.write_table("t.tsv", "stage", &t).unwrap();
        out.skip("other", "no field");
        let m = out.finish().unwrap();
        assert_eq!(m.products.len(), 3);
        m.verify(tmp.path()).unwrap();
        let back = Manifest::load(&tmp.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(back, m);
        let arr = back.read_array(tmp.path(), &bin).unwrap();
        assert_eq!(arr.to_real().unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(arr.meta.config_digest, "abc");

        std::fs::write(tmp.path().join("stray"), b"x").unwrap();
        assert!(back.verify(tmp.path()).is_err());
        assert!(OutputDir::create(tmp.path(), "abc", 17).is_err());
        std::fs::remove_file(tmp.path().join("stray")).unwrap();
        OutputDir::create(tmp.path(), "abc", 17).unwrap();
        assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
    }

    #[test]
    fn tampering_is_detected() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path(), "abc", 17).unwrap();
        let bin = out.write_array("stage", array("x")).unwrap();
        let m = out.finish().unwrap();
        std::fs::write(tmp.path().join(&bin), [0u8; 24]).unwrap();
        assert!(m.verify(tmp.path()).is_err());
        assert!(m.read_array(tmp.path(), &bin).is_err());
    }

    #[test]
    fn duplicate_names_are_refused() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path(), "abc", 17).unwrap();
        out.write_array("s", array("x")).unwrap();
        assert!(out.write_array("s", array("x")).is_err());
    }
}
