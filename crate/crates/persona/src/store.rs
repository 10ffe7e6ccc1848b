// SPDX-License-Identifier: MIT OR Apache-2.0

//! Persistence for persona vectors.
//!
//! Layout: `<dir>/manifest` plus one `<trait>.pvec` file per vector. A
//! `.pvec` file is a single tab-separated UTF-8 header line
//!
//! ```text
//! PVEC1\t<trait>\t<dimension>\t<polarity>\t<layer>\t<dim>\t<model_id>\t<normalization>\t<payload_sha256>\n
//! ```
//!
//! followed by `dim` IEEE-754 binary32 values, little-endian. The manifest is
//! a JSON document listing the files with whole-file SHA-256 checksums, the
//! shared model id and steering layer, extraction metadata, and a creation
//! timestamp. Save then load round-trips float arrays bit-exactly; any
//! flipped byte is caught by a checksum or a header check at load time.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gateway::ModelDescriptor;
use crate::ocean::{Dimension, Polarity, TraitPole};

const MAGIC: &str = "PVEC1";
pub const MANIFEST_FILE: &str = "manifest";

/// Whether a stored vector is raw or unit-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Raw,
    Unit,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::Unit => "unit",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "unit" => Ok(Normalization::Unit),
            other => Err(Error::InvariantViolation(format!(
                "unknown normalization `{other}`"
            ))),
        }
    }
}

/// Counts describing how a vector was extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ExtractionMeta {
    pub question_count: usize,
    pub prompt_pair_count: usize,
    pub positive_responses: usize,
    pub negative_responses: usize,
}

/// A trait-pole direction extracted from one model.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonaVector {
    pub pole: TraitPole,
    pub layer: usize,
    pub vector: Vec<f32>,
    pub model_id: String,
    pub normalization: Normalization,
    pub created_from: ExtractionMeta,
}

impl PersonaVector {
    pub fn dimension(&self) -> Dimension {
        self.pole.dimension()
    }

    pub fn polarity(&self) -> Polarity {
        self.pole.polarity()
    }

    pub fn l2_norm(&self) -> f64 {
        self.vector
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.vector.is_empty() {
            return Err(Error::InvariantViolation("empty vector".into()));
        }
        if self.normalization == Normalization::Unit {
            let norm = self.l2_norm();
            if (norm - 1.0).abs() > 1e-5 {
                return Err(Error::InvariantViolation(format!(
                    "unit-normalized vector has norm {norm}"
                )));
            }
        }
        Ok(())
    }
}

/// What a `.pvec` file stores: a pole vector or a composed steering vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VectorLabel {
    Pole(TraitPole),
    Composite,
}

impl VectorLabel {
    pub fn as_str(&self) -> &str {
        match self {
            VectorLabel::Pole(p) => p.slug(),
            VectorLabel::Composite => "composite",
        }
    }
}

/// Decoded contents of one `.pvec` file.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub label: VectorLabel,
    pub layer: usize,
    pub model_id: String,
    pub normalization: Normalization,
    pub values: Vec<f32>,
}

/// A set of pole vectors sharing one model and one steering layer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorLibrary {
    pub model_id: String,
    pub layer: usize,
    entries: BTreeMap<TraitPole, PersonaVector>,
}

impl VectorLibrary {
    pub fn new(model_id: impl Into<String>, layer: usize) -> Self {
        VectorLibrary {
            model_id: model_id.into(),
            layer,
            entries: BTreeMap::new(),
        }
    }

    /// Insert a vector, enforcing shared model id, layer, and width.
    pub fn insert(&mut self, vector: PersonaVector) -> Result<()> {
        vector.validate()?;
        if vector.model_id != self.model_id {
            return Err(Error::InvariantViolation(format!(
                "entry model `{}` differs from library model `{}`",
                vector.model_id, self.model_id
            )));
        }
        if vector.layer != self.layer {
            return Err(Error::InvariantViolation(format!(
                "entry layer {} differs from library layer {}",
                vector.layer, self.layer
            )));
        }
        if let Some(existing) = self.entries.values().next() {
            if existing.vector.len() != vector.vector.len() {
                return Err(Error::DimensionMismatch {
                    expected: existing.vector.len(),
                    got: vector.vector.len(),
                });
            }
        }
        self.entries.insert(vector.pole, vector);
        Ok(())
    }

    pub fn get(&self, pole: TraitPole) -> Option<&PersonaVector> {
        self.entries.get(&pole)
    }

    /// Entry for `pole`, or a precondition error naming the gap.
    pub fn require(&self, pole: TraitPole) -> Result<&PersonaVector> {
        self.entries
            .get(&pole)
            .ok_or_else(|| Error::Precondition(format!("library has no `{}` vector", pole.slug())))
    }

    pub fn entries(&self) -> impl Iterator<Item = &PersonaVector> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// A complete library carries all ten poles.
    pub fn is_complete(&self) -> bool {
        TraitPole::ALL.iter().all(|p| self.entries.contains_key(p))
    }

    /// Residual width shared by all entries; `None` while empty.
    pub fn hidden_dim(&self) -> Option<usize> {
        self.entries.values().next().map(|v| v.vector.len())
    }
}

/// One mismatch found by [`check_compatibility`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    ModelId { library: String, model: String },
    HiddenDim { library: usize, model: usize },
    Layer { library: usize, num_layers: usize },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::ModelId { library, model } => {
                write!(f, "model id: library `{library}` vs model `{model}`")
            }
            Mismatch::HiddenDim { library, model } => {
                write!(f, "hidden dim: library {library} vs model {model}")
            }
            Mismatch::Layer {
                library,
                num_layers,
            } => write!(
                f,
                "layer: library layer {library} not below model layer count {num_layers}"
            ),
        }
    }
}

/// Library-vs-model compatibility: matching model id, vector width equal to
/// the model's hidden dim, and the steering layer inside the layer range.
pub fn check_compatibility(
    library: &VectorLibrary,
    descriptor: &ModelDescriptor,
) -> std::result::Result<(), Vec<Mismatch>> {
    let mut mismatches = Vec::new();
    if library.model_id != descriptor.model_id {
        mismatches.push(Mismatch::ModelId {
            library: library.model_id.clone(),
            model: descriptor.model_id.clone(),
        });
    }
    if let Some(dim) = library.hidden_dim() {
        if dim != descriptor.hidden_dim {
            mismatches.push(Mismatch::HiddenDim {
                library: dim,
                model: descriptor.hidden_dim,
            });
        }
    }
    if library.layer >= descriptor.num_layers {
        mismatches.push(Mismatch::Layer {
            library: library.layer,
            num_layers: descriptor.num_layers,
        });
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(mismatches)
    }
}

pub(crate) fn compatibility_error(mismatches: &[Mismatch]) -> Error {
    let text = mismatches
        .iter()
        .map(Mismatch::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    Error::IncompatibleLibrary(text)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    model_id: String,
    layer: usize,
    created_at: String,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    trait_id: String,
    sha256: String,
    created_from: ExtractionMeta,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Encode one vector file (header line + little-endian f32 payload).
pub fn encode_vector_file(file: &VectorFile) -> Result<Vec<u8>> {
    if file.model_id.contains(['\t', '\n']) {
        return Err(Error::InvariantViolation(
            "model_id must not contain tabs or newlines".into(),
        ));
    }
    let mut payload = Vec::with_capacity(file.values.len() * 4);
    for v in &file.values {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    let (dimension, polarity) = match &file.label {
        VectorLabel::Pole(p) => (p.dimension().code().to_string(), p.polarity().as_str().into()),
        VectorLabel::Composite => ("-".to_string(), "-".to_string()),
    };
    let header = format!(
        "{MAGIC}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        file.label.as_str(),
        dimension,
        polarity,
        file.layer,
        file.values.len(),
        file.model_id,
        file.normalization.as_str(),
        sha256_hex(&payload),
    );
    let mut bytes = header.into_bytes();
    bytes.extend_from_slice(&payload);
    Ok(bytes)
}

/// Decode one vector file, verifying magic, field consistency, payload length
/// and payload checksum.
pub fn decode_vector_file(bytes: &[u8], origin: &str) -> Result<VectorFile> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvariantViolation(format!("{origin}: missing header line")))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::InvariantViolation(format!("{origin}: header is not UTF-8")))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 9 {
        return Err(Error::InvariantViolation(format!(
            "{origin}: expected 9 header fields, found {}",
            fields.len()
        )));
    }
    if fields[0] != MAGIC {
        return Err(Error::InvariantViolation(format!(
            "{origin}: bad magic `{}`",
            fields[0]
        )));
    }
    let label = if fields[1] == "composite" {
        VectorLabel::Composite
    } else {
        VectorLabel::Pole(fields[1].parse::<TraitPole>().map_err(|_| {
            Error::InvariantViolation(format!("{origin}: unknown trait `{}`", fields[1]))
        })?)
    };
    if let VectorLabel::Pole(pole) = &label {
        let dim_ok = fields[2] == pole.dimension().code().to_string();
        let pol_ok = fields[3] == pole.polarity().as_str();
        if !dim_ok || !pol_ok {
            return Err(Error::InvariantViolation(format!(
                "{origin}: dimension/polarity `{}/{}` inconsistent with trait `{}`",
                fields[2],
                fields[3],
                pole.slug()
            )));
        }
    }
    let layer: usize = fields[4]
        .parse()
        .map_err(|_| Error::InvariantViolation(format!("{origin}: bad layer `{}`", fields[4])))?;
    let dim: usize = fields[5]
        .parse()
        .map_err(|_| Error::InvariantViolation(format!("{origin}: bad dim `{}`", fields[5])))?;
    let model_id = fields[6].to_string();
    let normalization = Normalization::parse(fields[7])?;
    let payload = &bytes[newline + 1..];
    if payload.len() != dim * 4 {
        return Err(Error::InvariantViolation(format!(
            "{origin}: recorded dim {dim} does not match payload of {} bytes",
            payload.len()
        )));
    }
    let checksum = sha256_hex(payload);
    if checksum != fields[8] {
        return Err(Error::ChecksumMismatch {
            path: origin.to_string(),
            expected: fields[8].to_string(),
            got: checksum,
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(VectorFile {
        label,
        layer,
        model_id,
        normalization,
        values,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f =
        fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write a standalone `.pvec` file (used for composites and single vectors).
pub fn save_vector_file(path: &Path, file: &VectorFile) -> Result<()> {
    write_file(path, &encode_vector_file(file)?)
}

/// Read a standalone `.pvec` file.
pub fn load_vector_file(path: &Path) -> Result<VectorFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    decode_vector_file(&bytes, &path.display().to_string())
}

/// Persist a library; returns the manifest path.
pub fn save_library(library: &VectorLibrary, directory: &Path) -> Result<PathBuf> {
    fs::create_dir_all(directory).map_err(|e| Error::io(directory.display().to_string(), e))?;
    let mut entries = Vec::new();
    for vector in library.entries() {
        let file_name = format!("{}.pvec", vector.pole.slug());
        let bytes = encode_vector_file(&VectorFile {
            label: VectorLabel::Pole(vector.pole),
            layer: vector.layer,
            model_id: vector.model_id.clone(),
            normalization: vector.normalization,
            values: vector.vector.clone(),
        })?;
        write_file(&directory.join(&file_name), &bytes)?;
        entries.push(ManifestEntry {
            file: file_name,
            trait_id: vector.pole.slug().to_string(),
            sha256: sha256_hex(&bytes),
            created_from: vector.created_from,
        });
    }
    let manifest = Manifest {
        format: MAGIC.to_string(),
        model_id: library.model_id.clone(),
        layer: library.layer,
        created_at: chrono::Utc::now().to_rfc3339(),
        entries,
    };
    let manifest_path = directory.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    write_file(&manifest_path, json.as_bytes())?;
    Ok(manifest_path)
}

/// Load and validate a library saved by [`save_library`].
pub fn load_library(directory: &Path) -> Result<VectorLibrary> {
    let manifest_path = directory.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::MissingFile(manifest_path.display().to_string()));
    }
    let manifest_bytes =
        fs::read(&manifest_path).map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)?;
    if manifest.format != MAGIC {
        return Err(Error::InvariantViolation(format!(
            "unsupported manifest format `{}`",
            manifest.format
        )));
    }
    let mut library = VectorLibrary::new(manifest.model_id.clone(), manifest.layer);
    for entry in &manifest.entries {
        let path = directory.join(&entry.file);
        if !path.exists() {
            return Err(Error::MissingFile(path.display().to_string()));
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let checksum = sha256_hex(&bytes);
        if checksum != entry.sha256 {
            return Err(Error::ChecksumMismatch {
                path: path.display().to_string(),
                expected: entry.sha256.clone(),
                got: checksum,
            });
        }
        let file = decode_vector_file(&bytes, &path.display().to_string())?;
        let pole = match file.label {
            VectorLabel::Pole(p) => p,
            VectorLabel::Composite => {
                return Err(Error::InvariantViolation(format!(
                    "{}: composite vectors cannot be library entries",
                    path.display()
                )))
            }
        };
        if pole.slug() != entry.trait_id {
            return Err(Error::InvariantViolation(format!(
                "{}: manifest trait `{}` does not match file trait `{}`",
                path.display(),
                entry.trait_id,
                pole.slug()
            )));
        }
        library.insert(PersonaVector {
            pole,
            layer: file.layer,
            vector: file.values,
            model_id: file.model_id,
            normalization: file.normalization,
            created_from: entry.created_from,
        })?;
    }
    Ok(library)
}

/// Manifest rows for `persona vectors ls`.
pub fn list_library(directory: &Path) -> Result<Vec<(String, String, String)>> {
    let manifest_path = directory.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::MissingFile(manifest_path.display().to_string()));
    }
    let manifest_bytes =
        fs::read(&manifest_path).map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)?;
    Ok(manifest
        .entries
        .iter()
        .map(|e| (e.trait_id.clone(), e.file.clone(), e.sha256.clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_library(seed: u64, dim: usize) -> VectorLibrary {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lib = VectorLibrary::new("toy-model", 2);
        for pole in TraitPole::ALL {
            let vector: Vec<f32> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            lib.insert(PersonaVector {
                pole,
                layer: 2,
                vector,
                model_id: "toy-model".into(),
                normalization: Normalization::Raw,
                created_from: ExtractionMeta {
                    question_count: 20,
                    prompt_pair_count: 5,
                    positive_responses: 100,
                    negative_responses: 100,
                },
            })
            .unwrap();
        }
        lib
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let lib = random_library(1, 16);
        let manifest = save_library(&lib, dir.path()).unwrap();
        assert!(manifest.ends_with(MANIFEST_FILE));
        let loaded = load_library(dir.path()).unwrap();
        assert_eq!(loaded.len(), 10);
        for pole in TraitPole::ALL {
            let a = lib.get(pole).unwrap();
            let b = loaded.get(pole).unwrap();
            assert_eq!(a.vector, b.vector, "bit-exact round trip for {pole:?}");
            assert_eq!(a.created_from, b.created_from);
        }
    }

    #[test]
    fn missing_trait_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_library(&random_library(2, 8), dir.path()).unwrap();
        fs::remove_file(dir.path().join("calm.pvec")).unwrap();
        assert!(matches!(
            load_library(dir.path()),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn corrupted_payload_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        save_library(&random_library(3, 8), dir.path()).unwrap();
        let path = dir.path().join("nervous.pvec");
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x01;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_library(dir.path()),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn recorded_dim_must_match_payload() {
        let file = VectorFile {
            label: VectorLabel::Pole(TraitPole::Outgoing),
            layer: 0,
            model_id: "m".into(),
            normalization: Normalization::Raw,
            values: vec![1.0, 2.0],
        };
        let mut bytes = encode_vector_file(&file).unwrap();
        bytes.extend_from_slice(&[0, 0, 0, 0]); // extra value the header does not record
        assert!(matches!(
            decode_vector_file(&bytes, "test"),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("blocker");
        fs::write(&blocker, b"not a directory").unwrap();
        assert!(matches!(
            save_library(&random_library(4, 4), &blocker),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn compatibility_checks_model_dim_and_layer() {
        let lib = random_library(5, 16);
        let ok = ModelDescriptor {
            model_id: "toy-model".into(),
            hidden_dim: 16,
            num_layers: 4,
            tokenizer_id: "t".into(),
        };
        assert!(check_compatibility(&lib, &ok).is_ok());

        let bad_layer = ModelDescriptor {
            num_layers: 2,
            ..ok.clone()
        };
        let mismatches = check_compatibility(&lib, &bad_layer).unwrap_err();
        assert!(matches!(mismatches[0], Mismatch::Layer { .. }));

        let bad_model = ModelDescriptor {
            model_id: "other".into(),
            ..ok.clone()
        };
        let mismatches = check_compatibility(&lib, &bad_model).unwrap_err();
        assert!(matches!(mismatches[0], Mismatch::ModelId { .. }));

        let bad_dim = ModelDescriptor {
            hidden_dim: 8,
            ..ok
        };
        let mismatches = check_compatibility(&lib, &bad_dim).unwrap_err();
        assert!(matches!(mismatches[0], Mismatch::HiddenDim { .. }));
    }

    #[test]
    fn composite_files_round_trip_but_are_not_library_entries() {
        let dir = tempfile::tempdir().unwrap();
        let file = VectorFile {
            label: VectorLabel::Composite,
            layer: 3,
            model_id: "toy-model".into(),
            normalization: Normalization::Raw,
            values: vec![0.25, -1.5, 3.75],
        };
        let path = dir.path().join("comp.pvec");
        save_vector_file(&path, &file).unwrap();
        let loaded = load_vector_file(&path).unwrap();
        assert_eq!(loaded, file);
    }

    #[test]
    fn unit_norm_invariant_is_enforced() {
        let mut lib = VectorLibrary::new("m", 0);
        let err = lib.insert(PersonaVector {
            pole: TraitPole::Calm,
            layer: 0,
            vector: vec![3.0, 4.0],
            model_id: "m".into(),
            normalization: Normalization::Unit,
            created_from: ExtractionMeta::default(),
        });
        assert!(matches!(err, Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn completeness_requires_all_ten_poles() {
        let mut lib = random_library(6, 4);
        assert!(lib.is_complete());
        lib.entries.remove(&TraitPole::Calm);
        assert!(!lib.is_complete());
    }
}
