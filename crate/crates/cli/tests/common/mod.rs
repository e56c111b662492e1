#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oasis_core::datamodel::LatentTrajectory;
use oasis_core::{save_manifest, save_trajectory, AttributeSpec, ConceptDataset, EmbeddingMatrix};
use serde_json::Value;

pub fn oasis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oasis"))
        .args(args)
        .env_remove("OASIS_BRIDGE_CMD")
        .output()
        .expect("spawn oasis")
}

pub fn oasis_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oasis"))
        .args(args)
        .env(key, value)
        .output()
        .expect("spawn oasis")
}

pub fn toy_bridge_cmd(vocab: &Path) -> String {
    format!("'{}' '{}'", env!("CARGO_BIN_EXE_oasis-toy-bridge"), vocab.display())
}

pub fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

pub fn write_dataset(dir: &Path, name: &str, ds: &ConceptDataset) -> String {
    let sub = dir.join(name);
    save_manifest(ds, &sub).unwrap().display().to_string()
}

pub fn write_trajectory(dir: &Path, traj: &LatentTrajectory) -> String {
    save_trajectory(traj, dir).unwrap().display().to_string()
}

pub fn attr(name: &str, pos: Vec<f64>, neg: Vec<f64>, prior: f64) -> AttributeSpec {
    AttributeSpec::new(name, pos, neg, prior).unwrap()
}

pub fn dataset(rows: &[Vec<f64>], attributes: Vec<AttributeSpec>) -> ConceptDataset {
    ConceptDataset::new(
        "person",
        "a photo of a person",
        "toy-model",
        EmbeddingMatrix::from_rows(rows).unwrap(),
        attributes,
    )
    .unwrap()
}

/// Trajectory with `x_{t+1} = x_t + v_t` and one attribute `a`.
pub fn trajectory(
    id: &str,
    x0: Vec<f64>,
    velocities: Vec<Vec<f64>>,
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
) -> LatentTrajectory {
    let mut latents = vec![x0];
    for v in &velocities {
        let last = latents.last().unwrap();
        latents.push(last.iter().zip(v).map(|(a, b)| a + b).collect());
    }
    LatentTrajectory {
        sample_id: id.into(),
        latent_shape: vec![latents[0].len()],
        latents,
        velocities,
        attr_velocity_pairs: vec![("a".into(), pairs)],
    }
}

pub fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn tmp_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
