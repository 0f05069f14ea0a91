//! Corpus manifest: one row per image with its condition labels.
//!
//! CSV header: `image_id,path,fluence_class,angle_class,structure`.
//! Relative paths resolve against the manifest's directory.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Which phase of the binarized micrograph is treated as foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Wall,
    Hole,
}

impl Structure {
    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Wall => "wall",
            Structure::Hole => "hole",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Structure::Wall => Structure::Hole,
            Structure::Hole => Structure::Wall,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(Structure::Wall),
            "hole" => Ok(Structure::Hole),
            _ => Err(Error::Manifest(format!("unknown structure `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub path: PathBuf,
    pub fluence_class: u8,
    pub angle_class: u8,
    /// Structure seen as foreground after preprocessing; the extra
    /// inversion pass yields the opposite one.
    pub structure: Structure,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self {
            entries,
            base_dir: base_dir.into(),
        };
        m.validate_labels()?;
        Ok(m)
    }

    fn validate_labels(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.image_id.is_empty() || e.image_id.contains([',', ':', '/', '\\']) {
                return Err(Error::Manifest(format!(
                    "image id `{}` must be non-empty and free of `,:/\\`",
                    e.image_id
                )));
            }
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate image id `{}`", e.image_id)));
            }
            for (name, v) in [("fluence_class", e.fluence_class), ("angle_class", e.angle_class)] {
                if !(1..=3).contains(&v) {
                    return Err(Error::Manifest(format!(
                        "{}: {name} must be 1, 2 or 3, got {v}",
                        e.image_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that every referenced image exists.
    pub fn validate_files(&self) -> Result<()> {
        let missing: Vec<String> = self
            .entries
            .iter()
            .filter(|e| !self.resolve(e).is_file())
            .map(|e| self.resolve(e).display().to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Manifest(format!("missing image files: {}", missing.join(", "))))
        }
    }

    pub fn resolve(&self, e: &ManifestEntry) -> PathBuf {
        if e.path.is_absolute() {
            e.path.clone()
        } else {
            self.base_dir.join(&e.path)
        }
    }

    pub fn get(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,path,fluence_class,angle_class,structure\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.image_id,
                e.path.display(),
                e.fluence_class,
                e.angle_class,
                e.structure
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            Error::Manifest(msg) => Error::Manifest(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let expected = ["image_id", "path", "fluence_class", "angle_class", "structure"];
        let header = reader
            .headers()
            .map_err(|e| Error::Manifest(e.to_string()))?;
        if header.iter().ne(expected) {
            return Err(Error::Manifest(format!(
                "header must be `{}`",
                expected.join(",")
            )));
        }
        let entries = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| Error::Manifest(e.to_string()))?;
        Self::new(entries, base_dir)
    }
}
