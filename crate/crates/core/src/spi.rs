//! Stereotype Propagation Index over latent trajectories.
//!
//! At step `t` the attribute direction in latent space is the difference of
//! the velocities conditioned on the positive and negative descriptions;
//! the index is its cosine with the actual velocity `v_t`.

use serde::{Deserialize, Serialize};

use crate::datamodel::LatentTrajectory;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::vecops;

/// Tolerance for `x_{t+1} - x_t == v_t` on 32-bit dumps.
pub const TRAJECTORY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentDelta {
    pub values: Vec<f64>,
    /// True when the two conditioned velocities coincide.
    pub degenerate: bool,
}

pub fn delta_latent(v_pos: &[f64], v_neg: &[f64]) -> Result<LatentDelta> {
    if v_pos.len() != v_neg.len() {
        return Err(Error::dim("conditioned velocity pair", v_pos.len(), v_neg.len()));
    }
    let values = vecops::sub(v_pos, v_neg);
    let degenerate = values.iter().all(|&x| x == 0.0);
    Ok(LatentDelta { values, degenerate })
}

pub fn spi_step(v_t: &[f64], delta: &[f64]) -> Result<f64> {
    if v_t.len() != delta.len() {
        return Err(Error::dim("spi_step", v_t.len(), delta.len()));
    }
    if vecops::norm(v_t) == 0.0 {
        return Err(Error::ZeroVector("velocity".into()));
    }
    if vecops::norm(delta) == 0.0 {
        return Err(Error::ZeroVector("attribute direction".into()));
    }
    Ok(vecops::cosine_unchecked(v_t, delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiSeries {
    pub attribute: String,
    pub sample_id: String,
    /// One value per step `t = 0..T-1`; degenerate steps hold 0.
    pub values: Vec<f64>,
    pub degenerate: Vec<bool>,
}

pub fn spi_series(traj: &LatentTrajectory, attr_name: &str) -> Result<SpiSeries> {
    let pairs = traj.attribute_pairs(attr_name)?;
    if pairs.len() != traj.steps() {
        return Err(Error::dim(
            format!("step count of attribute `{attr_name}`"),
            traj.steps(),
            pairs.len(),
        ));
    }
    let mut values = Vec::with_capacity(pairs.len());
    let mut degenerate = Vec::with_capacity(pairs.len());
    for (v_t, (pos, neg)) in traj.velocities.iter().zip(pairs) {
        let delta = delta_latent(pos, neg)?;
        if v_t.len() != delta.values.len() {
            return Err(Error::dim("velocity length", delta.values.len(), v_t.len()));
        }
        let zero_velocity = v_t.iter().all(|&x| x == 0.0);
        if delta.degenerate || zero_velocity {
            values.push(0.0);
            degenerate.push(true);
        } else {
            values.push(spi_step(v_t, &delta.values)?);
            degenerate.push(false);
        }
    }
    Ok(SpiSeries {
        attribute: attr_name.to_string(),
        sample_id: traj.sample_id.clone(),
        values,
        degenerate,
    })
}

/// [`spi_series`] for many trajectories, in input order.
pub fn spi_series_batch(
    trajectories: &[LatentTrajectory],
    attr_name: &str,
    exec: Execution,
) -> Result<Vec<SpiSeries>> {
    exec.try_map(trajectories, |t| spi_series(t, attr_name))
}

/// Extrapolated final latent `x_t + v_t (T - t)`.
pub fn predisposition_estimate(traj: &LatentTrajectory, t: usize) -> Result<Vec<f64>> {
    let steps = traj.steps();
    if t >= steps {
        return Err(Error::InvalidArgument(format!(
            "step {t} out of range 0..{steps}"
        )));
    }
    let remaining = (steps - t) as f64;
    Ok(traj.latents[t]
        .iter()
        .zip(&traj.velocities[t])
        .map(|(x, v)| x + v * remaining)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyWarning {
    pub sample_id: String,
    pub step: usize,
    pub max_abs_deviation: f64,
}

/// Steps where `x_{t+1} - x_t` deviates from `v_t` by more than `tol`.
pub fn consistency_check(traj: &LatentTrajectory, tol: f64) -> Vec<ConsistencyWarning> {
    traj.velocities
        .iter()
        .enumerate()
        .filter_map(|(t, v)| {
            let dev = traj.latents[t]
                .iter()
                .zip(&traj.latents[t + 1])
                .zip(v)
                .map(|((x0, x1), v)| (x1 - x0 - v).abs())
                .fold(0.0f64, f64::max);
            (dev > tol).then(|| ConsistencyWarning {
                sample_id: traj.sample_id.clone(),
                step: t,
                max_abs_deviation: dev,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiAggregate {
    pub attribute: String,
    pub mean: Vec<f64>,
    /// Unbiased sample variance; zero when only one series is given.
    pub variance: Vec<f64>,
    pub n_samples: usize,
}

/// Per-step mean and variance across samples (Welford's update).
pub fn average_spi(series_set: &[SpiSeries]) -> Result<SpiAggregate> {
    let first = series_set
        .first()
        .ok_or_else(|| Error::Degenerate("no SPI series to aggregate".into()))?;
    let steps = first.values.len();
    let mut mean = vec![0.0; steps];
    let mut m2 = vec![0.0; steps];
    for (n, s) in series_set.iter().enumerate() {
        if s.attribute != first.attribute {
            return Err(Error::InvalidArgument(format!(
                "mixed attributes `{}` and `{}`",
                first.attribute, s.attribute
            )));
        }
        if s.values.len() != steps {
            return Err(Error::dim("SPI series length", steps, s.values.len()));
        }
        let count = (n + 1) as f64;
        for ((m, q), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(&s.values) {
            let d = x - *m;
            *m += d / count;
            *q += d * (x - *m);
        }
    }
    let n = series_set.len();
    let variance = m2
        .iter()
        .map(|q| if n > 1 { (q / (n - 1) as f64).max(0.0) } else { 0.0 })
        .collect();
    Ok(SpiAggregate {
        attribute: first.attribute.clone(),
        mean,
        variance,
        n_samples: n,
    })
}
