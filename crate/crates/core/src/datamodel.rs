//! Domain types shared by every metric, plus the JSON manifest formats.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{check_probability, Error, Result};
use crate::tensor::{load_tensor, write_tensor, Tensor};
use crate::vecops;

/// Default stereotype margin when a manifest does not set one.
pub const DEFAULT_MARGIN: f64 = 0.05;

const NORMALIZED_TOL: f64 = 1e-6;

/// `n x d` row-major feature matrix for a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dims: usize,
    data: Vec<f64>,
    normalized: bool,
    sample_ids: Option<Vec<String>>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dims: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || dims == 0 {
            return Err(Error::Degenerate(format!(
                "embedding matrix must be at least 1x1, got {rows}x{dims}"
            )));
        }
        if data.len() != rows * dims {
            return Err(Error::dim("embedding matrix data", rows * dims, data.len()));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(EmbeddingMatrix {
            rows,
            dims,
            data,
            normalized: false,
            sample_ids: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dims = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dims) {
            return Err(Error::dim("embedding matrix row", dims, bad.len()));
        }
        EmbeddingMatrix::new(rows.len(), dims, rows.concat())
    }

    /// Interprets a rank-2 tensor as an embedding matrix.
    pub fn from_tensor(tensor: &Tensor) -> Result<Self> {
        match *tensor.dims() {
            [rows, dims] => EmbeddingMatrix::new(rows, dims, tensor.to_f64()),
            _ => Err(Error::InvalidArgument(format!(
                "embedding tensor must be rank 2, got dims {:?}",
                tensor.dims()
            ))),
        }
    }

    pub fn to_tensor(&self) -> Result<Tensor> {
        Tensor::from_f64(vec![self.rows, self.dims], &self.data)
    }

    /// Marks the rows as unit-norm after checking that they are.
    pub fn with_normalized_flag(mut self, normalized: bool) -> Result<Self> {
        if normalized {
            for i in 0..self.rows {
                let n = vecops::norm(self.row(i));
                if (n - 1.0).abs() > NORMALIZED_TOL {
                    return Err(Error::Degenerate(format!(
                        "row {i} has norm {n}, but matrix is flagged as normalized"
                    )));
                }
            }
        }
        self.normalized = normalized;
        Ok(self)
    }

    pub fn with_sample_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows {
            return Err(Error::dim("sample_ids", self.rows, ids.len()));
        }
        self.sample_ids = Some(ids);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dims)
    }

    pub fn explicit_sample_ids(&self) -> Option<&[String]> {
        self.sample_ids.as_deref()
    }

    /// Identifier of row `i`; the zero-based index when ids were not supplied.
    pub fn sample_id(&self, i: usize) -> String {
        match &self.sample_ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Degenerate("row selection is empty".into()));
        }
        let mut data = Vec::with_capacity(indices.len() * self.dims);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        let mut m = EmbeddingMatrix::new(indices.len(), self.dims, data)?;
        m.normalized = self.normalized;
        if let Some(ids) = &self.sample_ids {
            m.sample_ids = Some(indices.iter().map(|&i| ids[i].clone()).collect());
        }
        Ok(m)
    }

    /// Stacks `self` on top of `other`.
    pub fn concat(&self, other: &EmbeddingMatrix) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::dim("concatenated matrix", self.dims, other.dims));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        let mut m = EmbeddingMatrix::new(self.rows + other.rows, self.dims, data)?;
        m.normalized = self.normalized && other.normalized;
        Ok(m)
    }
}

/// Scales every row to unit L2 norm.
pub fn l2_normalize(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut data = Vec::with_capacity(matrix.data.len());
    for (i, row) in matrix.iter_rows().enumerate() {
        let u = vecops::unit(row).ok_or(Error::ZeroRow(i))?;
        data.extend(u);
    }
    Ok(EmbeddingMatrix {
        data,
        normalized: true,
        ..matrix.clone()
    })
}

/// A candidate stereotype with its description pair and real-world prior.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub desc_pos: String,
    pub desc_neg: String,
    pub embed_pos: Vec<f64>,
    pub embed_neg: Vec<f64>,
    pub prior: f64,
    pub margin: f64,
    /// Optional attribute-aware image features used by supervised PCA.
    pub aware: Option<AwareSets>,
}

/// Image features generated from the positive and negative descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct AwareSets {
    pub positive: EmbeddingMatrix,
    pub negative: EmbeddingMatrix,
}

impl AttributeSpec {
    pub fn new(
        name: impl Into<String>,
        embed_pos: Vec<f64>,
        embed_neg: Vec<f64>,
        prior: f64,
    ) -> Result<Self> {
        let spec = AttributeSpec {
            name: name.into(),
            desc_pos: String::new(),
            desc_neg: String::new(),
            embed_pos,
            embed_neg,
            prior,
            margin: DEFAULT_MARGIN,
            aware: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_descriptions(mut self, pos: impl Into<String>, neg: impl Into<String>) -> Self {
        self.desc_pos = pos.into();
        self.desc_neg = neg.into();
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        check_probability("margin", margin)?;
        self.margin = margin;
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.embed_pos.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(&format!("prior of `{}`", self.name), self.prior)?;
        check_probability(&format!("margin of `{}`", self.name), self.margin)?;
        if self.embed_pos.len() != self.embed_neg.len() {
            return Err(Error::dim(
                format!("embed_neg of `{}`", self.name),
                self.embed_pos.len(),
                self.embed_neg.len(),
            ));
        }
        if self.embed_pos.is_empty() {
            return Err(Error::Degenerate(format!(
                "attribute `{}` has empty embeddings",
                self.name
            )));
        }
        if let Some(aware) = &self.aware {
            for (label, m) in [("aware_pos", &aware.positive), ("aware_neg", &aware.negative)] {
                if m.dims() != self.dims() {
                    return Err(Error::dim(
                        format!("{label} of `{}`", self.name),
                        self.dims(),
                        m.dims(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Everything known about one (concept, generator) audit target.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDataset {
    pub concept: String,
    pub prompt: String,
    pub model_tag: String,
    pub embeddings: EmbeddingMatrix,
    pub attributes: Vec<AttributeSpec>,
}

impl ConceptDataset {
    pub fn new(
        concept: impl Into<String>,
        prompt: impl Into<String>,
        model_tag: impl Into<String>,
        embeddings: EmbeddingMatrix,
        attributes: Vec<AttributeSpec>,
    ) -> Result<Self> {
        let ds = ConceptDataset {
            concept: concept.into(),
            prompt: prompt.into(),
            model_tag: model_tag.into(),
            embeddings,
            attributes,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.embeddings.dims();
        for attr in &self.attributes {
            attr.validate()?;
            if attr.dims() != d {
                return Err(Error::dim(
                    format!("embeddings of attribute `{}`", attr.name),
                    d,
                    attr.dims(),
                ));
            }
        }
        Ok(())
    }

    pub fn attribute(&self, name: &str) -> Result<&AttributeSpec> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// L2-normalizes the image features, the text embeddings and any
    /// attribute-aware sets. Cosine-based scores are unchanged by this.
    pub fn normalized(mut self) -> Result<Self> {
        let unit = |m: &EmbeddingMatrix| -> Result<EmbeddingMatrix> {
            if m.is_normalized() {
                Ok(m.clone())
            } else {
                l2_normalize(m)
            }
        };
        self.embeddings = unit(&self.embeddings)?;
        for attr in &mut self.attributes {
            for (label, v) in [("embed_pos", &mut attr.embed_pos), ("embed_neg", &mut attr.embed_neg)] {
                *v = vecops::unit(v).ok_or_else(|| {
                    Error::ZeroVector(format!("{label} of attribute `{}`", attr.name))
                })?;
            }
            if let Some(sets) = &mut attr.aware {
                sets.positive = unit(&sets.positive)?;
                sets.negative = unit(&sets.negative)?;
            }
        }
        Ok(self)
    }
}

// ---------------------------------------------------------------------------
// Concept manifest

#[derive(Debug, Serialize, Deserialize)]
struct ManifestAttribute {
    name: String,
    desc_pos: String,
    desc_neg: String,
    embed_pos: PathBuf,
    embed_neg: PathBuf,
    prior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aware_pos: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aware_neg: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    concept: String,
    prompt: String,
    model_tag: String,
    embeddings: PathBuf,
    attributes: Vec<ManifestAttribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    normalized: bool,
}

const MANIFEST_KEYS: &[&str] = &["concept", "prompt", "model_tag", "embeddings", "attributes"];
const ATTRIBUTE_KEYS: &[&str] = &["name", "desc_pos", "desc_neg", "embed_pos", "embed_neg", "prior"];

fn require_keys(path: &Path, value: &Value) -> Result<()> {
    let missing = |key: &str| Error::MissingKey {
        path: path.to_path_buf(),
        key: key.to_string(),
    };
    let obj = value.as_object().ok_or_else(|| Error::Manifest {
        path: path.to_path_buf(),
        message: "top level must be a JSON object".into(),
    })?;
    for key in MANIFEST_KEYS {
        if !obj.contains_key(*key) {
            return Err(missing(key));
        }
    }
    if let Some(attrs) = obj["attributes"].as_array() {
        for (i, attr) in attrs.iter().enumerate() {
            for key in ATTRIBUTE_KEYS {
                if attr.get(key).is_none() {
                    return Err(missing(&format!("attributes[{i}].{key}")));
                }
            }
        }
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Loads a tensor holding exactly one vector (shape `[d]` or `[1, d]`).
fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let t = load_tensor(path)?;
    match *t.dims() {
        [_] | [1, _] => Ok(t.to_f64()),
        _ => Err(Error::InvalidArgument(format!(
            "{} must hold a single vector, got dims {:?}",
            path.display(),
            t.dims()
        ))),
    }
}

fn load_matrix(path: &Path) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::from_tensor(&load_tensor(path)?)
}

/// Reads and validates a concept manifest; relative paths resolve against
/// the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<ConceptDataset> {
    let path = path.as_ref();
    let value = read_json(path)?;
    require_keys(path, &value)?;
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = base_dir(path);

    let mut embeddings = load_matrix(&base.join(&manifest.embeddings))?;
    if let Some(ids) = manifest.sample_ids {
        embeddings = embeddings.with_sample_ids(ids)?;
    }
    embeddings = embeddings.with_normalized_flag(manifest.normalized)?;

    let mut attributes = Vec::with_capacity(manifest.attributes.len());
    for a in manifest.attributes {
        let aware = match (&a.aware_pos, &a.aware_neg) {
            (Some(p), Some(n)) => Some(AwareSets {
                positive: load_matrix(&base.join(p))?,
                negative: load_matrix(&base.join(n))?,
            }),
            (None, None) => None,
            _ => {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    message: format!(
                        "attribute `{}` must set both aware_pos and aware_neg or neither",
                        a.name
                    ),
                })
            }
        };
        attributes.push(AttributeSpec {
            embed_pos: load_vector(&base.join(&a.embed_pos))?,
            embed_neg: load_vector(&base.join(&a.embed_neg))?,
            name: a.name,
            desc_pos: a.desc_pos,
            desc_neg: a.desc_neg,
            prior: a.prior,
            margin: a.margin.unwrap_or(DEFAULT_MARGIN),
            aware,
        });
    }

    ConceptDataset::new(
        manifest.concept,
        manifest.prompt,
        manifest.model_tag,
        embeddings,
        attributes,
    )
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Writes `dataset` as `manifest.json` plus OAT1 tensors into `dir`.
///
/// Values pass through f32 on disk, so a reload equals the original only
/// when the inputs were already f32-representable.
pub fn save_manifest(dataset: &ConceptDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_tensor(&dataset.embeddings.to_tensor()?, dir.join("embeddings.oat"))?;

    let mut attributes = Vec::new();
    for (i, a) in dataset.attributes.iter().enumerate() {
        let stem = format!("attr{i}_{}", file_stem(&a.name));
        let pos = PathBuf::from(format!("{stem}_pos.oat"));
        let neg = PathBuf::from(format!("{stem}_neg.oat"));
        write_tensor(&Tensor::from_f64(vec![a.dims()], &a.embed_pos)?, dir.join(&pos))?;
        write_tensor(&Tensor::from_f64(vec![a.dims()], &a.embed_neg)?, dir.join(&neg))?;
        let (aware_pos, aware_neg) = match &a.aware {
            Some(sets) => {
                let p = PathBuf::from(format!("{stem}_aware_pos.oat"));
                let n = PathBuf::from(format!("{stem}_aware_neg.oat"));
                write_tensor(&sets.positive.to_tensor()?, dir.join(&p))?;
                write_tensor(&sets.negative.to_tensor()?, dir.join(&n))?;
                (Some(p), Some(n))
            }
            None => (None, None),
        };
        attributes.push(ManifestAttribute {
            name: a.name.clone(),
            desc_pos: a.desc_pos.clone(),
            desc_neg: a.desc_neg.clone(),
            embed_pos: pos,
            embed_neg: neg,
            prior: a.prior,
            margin: Some(a.margin),
            aware_pos,
            aware_neg,
        });
    }

    let manifest = Manifest {
        concept: dataset.concept.clone(),
        prompt: dataset.prompt.clone(),
        model_tag: dataset.model_tag.clone(),
        embeddings: PathBuf::from("embeddings.oat"),
        attributes,
        sample_ids: dataset.embeddings.explicit_sample_ids().map(<[String]>::to_vec),
        normalized: dataset.embeddings.is_normalized(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Latent trajectories

/// Per-step `(positive, negative)` conditioned velocities of one attribute.
pub type VelocityPairs = Vec<(Vec<f64>, Vec<f64>)>;

/// Per-step latents and velocities of one generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTrajectory {
    pub sample_id: String,
    pub latent_shape: Vec<usize>,
    /// `steps + 1` flattened latents `x_0 ..= x_T`.
    pub latents: Vec<Vec<f64>>,
    /// `steps` flattened velocities `v_0 .. v_{T-1}`.
    pub velocities: Vec<Vec<f64>>,
    /// Attribute name -> per-step (positive, negative) conditioned velocities.
    pub attr_velocity_pairs: Vec<(String, VelocityPairs)>,
}

impl LatentTrajectory {
    pub fn steps(&self) -> usize {
        self.velocities.len()
    }

    pub fn element_count(&self) -> usize {
        self.latent_shape.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.element_count();
        let t = self.steps();
        if t == 0 {
            return Err(Error::Degenerate(format!(
                "trajectory `{}` has no steps",
                self.sample_id
            )));
        }
        if self.latents.len() != t + 1 {
            return Err(Error::dim(
                format!("latent count of `{}`", self.sample_id),
                t + 1,
                self.latents.len(),
            ));
        }
        let check = |what: String, v: &[f64]| {
            if v.len() != len {
                Err(Error::dim(what, len, v.len()))
            } else {
                Ok(())
            }
        };
        for (i, x) in self.latents.iter().enumerate() {
            check(format!("latent {i}"), x)?;
        }
        for (i, v) in self.velocities.iter().enumerate() {
            check(format!("velocity {i}"), v)?;
        }
        for (name, pairs) in &self.attr_velocity_pairs {
            if pairs.len() != t {
                return Err(Error::dim(
                    format!("step count of attribute `{name}`"),
                    t,
                    pairs.len(),
                ));
            }
            for (i, (p, n)) in pairs.iter().enumerate() {
                check(format!("`{name}` positive velocity {i}"), p)?;
                check(format!("`{name}` negative velocity {i}"), n)?;
            }
        }
        Ok(())
    }

    pub fn attribute_pairs(&self, name: &str) -> Result<&[(Vec<f64>, Vec<f64>)]> {
        self.attr_velocity_pairs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p.as_slice())
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attr_velocity_pairs.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryAttribute {
    pos: Vec<PathBuf>,
    neg: Vec<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryManifest {
    sample_id: String,
    steps: usize,
    latent_shape: Vec<usize>,
    latents: Vec<PathBuf>,
    velocities: Vec<PathBuf>,
    // BTreeMap keeps attribute order stable across runs.
    attributes: std::collections::BTreeMap<String, TrajectoryAttribute>,
}

fn load_flat(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let t = load_tensor(path)?;
    if t.len() != expected {
        return Err(Error::dim(path.display().to_string(), expected, t.len()));
    }
    Ok(t.to_f64())
}

/// Reads a trajectory manifest and its OAT1 tensors.
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<LatentTrajectory> {
    let path = path.as_ref();
    let value = read_json(path)?;
    for key in [
        "sample_id",
        "steps",
        "latent_shape",
        "latents",
        "velocities",
        "attributes",
    ] {
        if value.get(key).is_none() {
            return Err(Error::MissingKey {
                path: path.to_path_buf(),
                key: key.to_string(),
            });
        }
    }
    let m: TrajectoryManifest = serde_json::from_value(value).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if m.velocities.len() != m.steps {
        return Err(Error::dim("velocity paths", m.steps, m.velocities.len()));
    }
    let base = base_dir(path);
    let len: usize = m.latent_shape.iter().product();
    let load_all = |paths: &[PathBuf]| -> Result<Vec<Vec<f64>>> {
        paths.iter().map(|p| load_flat(&base.join(p), len)).collect()
    };
    let latents = load_all(&m.latents)?;
    let velocities = load_all(&m.velocities)?;
    let mut attr_velocity_pairs = Vec::with_capacity(m.attributes.len());
    for (name, a) in &m.attributes {
        if a.pos.len() != a.neg.len() {
            return Err(Error::dim(
                format!("negative paths of `{name}`"),
                a.pos.len(),
                a.neg.len(),
            ));
        }
        let pairs = load_all(&a.pos)?.into_iter().zip(load_all(&a.neg)?).collect();
        attr_velocity_pairs.push((name.clone(), pairs));
    }
    let traj = LatentTrajectory {
        sample_id: m.sample_id,
        latent_shape: m.latent_shape,
        latents,
        velocities,
        attr_velocity_pairs,
    };
    traj.validate()?;
    Ok(traj)
}

/// Writes a trajectory manifest plus one OAT1 file per tensor into `dir`.
pub fn save_trajectory(traj: &LatentTrajectory, dir: impl AsRef<Path>) -> Result<PathBuf> {
    traj.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let shape = traj.latent_shape.clone();
    let stem = file_stem(&traj.sample_id);
    let write = |name: String, data: &[f64]| -> Result<PathBuf> {
        let rel = PathBuf::from(name);
        write_tensor(&Tensor::from_f64(shape.clone(), data)?, dir.join(&rel))?;
        Ok(rel)
    };
    let latents = traj
        .latents
        .iter()
        .enumerate()
        .map(|(t, x)| write(format!("{stem}_x{t}.oat"), x))
        .collect::<Result<Vec<_>>>()?;
    let velocities = traj
        .velocities
        .iter()
        .enumerate()
        .map(|(t, v)| write(format!("{stem}_v{t}.oat"), v))
        .collect::<Result<Vec<_>>>()?;
    let mut attributes = std::collections::BTreeMap::new();
    for (name, pairs) in &traj.attr_velocity_pairs {
        let a = file_stem(name);
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (t, (p, n)) in pairs.iter().enumerate() {
            pos.push(write(format!("{stem}_{a}_pos{t}.oat"), p)?);
            neg.push(write(format!("{stem}_{a}_neg{t}.oat"), n)?);
        }
        attributes.insert(name.clone(), TrajectoryAttribute { pos, neg });
    }
    let manifest = TrajectoryManifest {
        sample_id: traj.sample_id.clone(),
        steps: traj.steps(),
        latent_shape: traj.latent_shape.clone(),
        latents,
        velocities,
        attributes,
    };
    let path = dir.join(format!("{stem}_trajectory.json"));
    let text = serde_json::to_string_pretty(&manifest).expect("trajectory manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_vec(dir: &Path, name: &str, v: &[f64]) {
        write_tensor(&Tensor::from_f64(vec![v.len()], v).unwrap(), dir.join(name)).unwrap();
    }

    fn minimal_manifest(dir: &Path, attr_dim: usize, prior: f64) -> PathBuf {
        let m = EmbeddingMatrix::new(3, 8, (0..24).map(|i| i as f64 + 1.0).collect()).unwrap();
        write_tensor(&m.to_tensor().unwrap(), dir.join("z.oat")).unwrap();
        write_vec(dir, "p.oat", &vec![1.0; attr_dim]);
        write_vec(dir, "n.oat", &vec![-1.0; attr_dim]);
        let json = serde_json::json!({
            "concept": "Iranian",
            "prompt": "A photo of Iranian person",
            "model_tag": "toy",
            "embeddings": "z.oat",
            "attributes": [{
                "name": "beard", "desc_pos": "a man with a beard", "desc_neg": "a clean-shaven man",
                "embed_pos": "p.oat", "embed_neg": "n.oat", "prior": prior
            }]
        });
        let path = dir.join("manifest.json");
        fs::write(&path, json.to_string()).unwrap();
        path
    }

    #[test]
    fn minimal_manifest_loads() {
        let dir = tempfile::tempdir().unwrap();
        let ds = load_manifest(minimal_manifest(dir.path(), 8, 0.34)).unwrap();
        assert_eq!(ds.attributes.len(), 1);
        assert_eq!(ds.attributes[0].margin, DEFAULT_MARGIN);
        assert_eq!(ds.embeddings.rows(), 3);
        assert_eq!(ds.embeddings.sample_id(2), "2");
    }

    #[test]
    fn attribute_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_manifest(minimal_manifest(dir.path(), 4, 0.34)).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 8,
                found: 4,
                ..
            }
        ));
    }

    #[test]
    fn prior_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_manifest(minimal_manifest(dir.path(), 8, 1.3)).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { value, .. } if value == 1.3));
    }

    #[test]
    fn missing_key_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"concept":"x","prompt":"y","embeddings":"z.oat","attributes":[]}"#)
            .unwrap();
        match load_manifest(&path).unwrap_err() {
            Error::MissingKey { key, .. } => assert_eq!(key, "model_tag"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn normalize_three_four_five() {
        let m = EmbeddingMatrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let n = l2_normalize(&m).unwrap();
        assert!((n.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((n.row(0)[1] - 0.8).abs() < 1e-15);
        assert!(n.is_normalized());
    }

    #[test]
    fn normalize_zero_row_names_index() {
        let m = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(l2_normalize(&m), Err(Error::ZeroRow(1))));
    }

    #[test]
    fn normalized_flag_is_checked() {
        let m = EmbeddingMatrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert!(m.clone().with_normalized_flag(true).is_err());
        assert!(l2_normalize(&m).unwrap().with_normalized_flag(true).is_ok());
    }

    #[test]
    fn constructor_rejects_non_finite() {
        assert!(matches!(
            EmbeddingMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn manifest_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let z = EmbeddingMatrix::from_rows(&[vec![0.5, -1.0, 2.0], vec![0.25, 0.0, -3.0]])
            .unwrap()
            .with_sample_ids(vec!["a".into(), "b".into()])
            .unwrap();
        let aware = AwareSets {
            positive: EmbeddingMatrix::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap(),
            negative: EmbeddingMatrix::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap(),
        };
        let mut attr = AttributeSpec::new("wearing turban", vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5], 0.002)
            .unwrap()
            .with_descriptions("wearing a turban", "not wearing headwear")
            .with_margin(0.1)
            .unwrap();
        attr.aware = Some(aware);
        let ds = ConceptDataset::new("Iranian", "A photo of Iranian person", "sd3", z, vec![attr]).unwrap();
        let path = save_manifest(&ds, dir.path()).unwrap();
        assert_eq!(load_manifest(path).unwrap(), ds);
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let traj = LatentTrajectory {
            sample_id: "s0".into(),
            latent_shape: vec![1, 2],
            latents: vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![2.0, 1.0]],
            velocities: vec![vec![1.0, 0.5], vec![1.0, 0.5]],
            attr_velocity_pairs: vec![(
                "beard".into(),
                vec![(vec![1.0, 0.0], vec![0.0, 0.0]), (vec![0.5, 0.5], vec![0.0, 0.25])],
            )],
        };
        let path = save_trajectory(&traj, dir.path()).unwrap();
        assert_eq!(load_trajectory(path).unwrap(), traj);
    }

    #[test]
    fn trajectory_step_mismatch() {
        let traj = LatentTrajectory {
            sample_id: "s".into(),
            latent_shape: vec![2],
            latents: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            velocities: vec![vec![1.0, 1.0]],
            attr_velocity_pairs: vec![("a".into(), vec![])],
        };
        assert!(matches!(traj.validate(), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_direction_preserving(
            rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 4), 1..8)
        ) {
            prop_assume!(rows.iter().all(|r| vecops::norm(r) > 1e-6));
            let m = EmbeddingMatrix::from_rows(&rows).unwrap();
            let once = l2_normalize(&m).unwrap();
            let twice = l2_normalize(&once).unwrap();
            for i in 0..m.rows() {
                prop_assert!((vecops::cosine_unchecked(m.row(i), once.row(i)) - 1.0).abs() < 1e-9);
                for (a, b) in once.row(i).iter().zip(twice.row(i)) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
