use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use oasis_core::spi::{self, SpiAggregate, SpiSeries};
use oasis_core::stereoscore::{audit_dataset, AuditRecord};
use oasis_core::stop::bridge::ExternalBridge;
use oasis_core::stop::{
    beam_optimize, spectral_cluster, Affinity, BeamConfig, ClusterParams, OptimizedPrompts,
    SequenceEmbedder, SyntheticVocab, TokenProposer,
};
use oasis_core::wals::{
    delta_from_text, delta_spca_kernel, delta_spca_linear, svd_structure, wals_score, Bandwidth,
    DeltaDirection, Kernel, LabeledEmbeddings,
};
use oasis_core::{
    load_manifest, load_trajectory, write_tensor, AttributeSpec, ConceptDataset, Execution,
    LatentTrajectory, Tensor,
};

use crate::args::*;
use crate::output::{full, pct, render, Emitter};

pub const BRIDGE_ENV: &str = "OASIS_BRIDGE_CMD";

/// What the process exit status should reflect.
#[derive(Debug, Default)]
pub struct Outcome {
    pub gate_tripped: bool,
}

fn check_margin(margin: Option<f64>) -> Result<()> {
    if let Some(m) = margin {
        ensure!((0.0..=1.0).contains(&m), "--margin must lie in [0, 1], got {m}");
    }
    Ok(())
}

fn check_k(k: Option<usize>) -> Result<()> {
    ensure!(k != Some(0), "--k must be at least 1");
    Ok(())
}

fn load_one(path: &Path, normalize: bool) -> Result<ConceptDataset> {
    let ds = load_manifest(path).with_context(|| format!("loading {}", path.display()))?;
    if normalize {
        Ok(ds.normalized()?)
    } else {
        Ok(ds)
    }
}

fn load_all(data: &DatasetArgs) -> Result<Vec<ConceptDataset>> {
    Execution::default().try_map(&data.manifests, |p| load_one(p, !data.no_normalize))
}

// ---------------------------------------------------------------------------
// score / wals / report

#[derive(Serialize)]
struct Records<'a, T> {
    records: &'a [T],
}

fn audit_all(datasets: &[ConceptDataset], margin: Option<f64>) -> Result<Vec<AuditRecord>> {
    let exec = Execution::default();
    let per_dataset = exec.try_map(datasets, |ds| audit_dataset(ds, margin, exec))?;
    Ok(per_dataset.into_iter().flatten().collect())
}

const SCORE_HEADER: &[&str] = &[
    "concept",
    "model_tag",
    "attribute",
    "prevalence_pct",
    "prior_pct",
    "psi_pct",
    "parity_gap_pct",
    "prevalence",
    "prior",
    "psi",
    "parity_gap",
    "verdict",
];

fn score_row(r: &AuditRecord) -> Vec<String> {
    vec![
        r.concept.clone(),
        r.model_tag.clone(),
        r.attribute.clone(),
        pct(r.prevalence),
        pct(r.prior),
        pct(r.psi),
        pct(r.parity_gap),
        full(r.prevalence),
        full(r.prior),
        full(r.psi),
        full(r.parity_gap),
        r.verdict.to_string(),
    ]
}

pub fn score(args: &ScoreArgs) -> Result<Outcome> {
    check_margin(args.score.margin)?;
    let emitter = Emitter::new("score", args);
    let datasets = load_all(&args.data)?;
    let records = audit_all(&datasets, args.score.margin)?;
    let bytes = render(
        &emitter,
        args.output.format,
        &Records { records: &records },
        SCORE_HEADER,
        || records.iter().map(score_row).collect(),
    )?;
    emitter.emit(&args.output, &bytes)?;
    Ok(Outcome {
        gate_tripped: args.score.gate && records.iter().any(|r| r.verdict),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WalsRecord {
    pub concept: String,
    pub model_tag: String,
    pub attribute: String,
    pub wals: f64,
    pub k_used: usize,
    pub rank: usize,
    pub centered: bool,
    pub delta_method: &'static str,
}

fn attribute_delta(attr: &AttributeSpec, method: DeltaArg) -> Result<DeltaDirection> {
    let labeled = || -> Result<LabeledEmbeddings> {
        let sets = attr.aware.as_ref().ok_or_else(|| {
            anyhow!(
                "attribute `{}` has no aware_pos/aware_neg features for supervised PCA",
                attr.name
            )
        })?;
        Ok(LabeledEmbeddings::from_aware(attr.name.clone(), sets)?)
    };
    Ok(match method {
        DeltaArg::Text => delta_from_text(attr)?,
        DeltaArg::SpcaLinear => delta_spca_linear(&labeled()?)?,
        DeltaArg::SpcaKernel => delta_spca_kernel(&labeled()?, Kernel::Linear)?
            .direction()
            .expect("linear kernel has an explicit direction")?,
    })
}

fn wals_dataset(ds: &ConceptDataset, flags: &WalsFlags) -> Result<Vec<WalsRecord>> {
    let svd = svd_structure(&ds.embeddings, flags.centered())?;
    ensure!(svd.rank > 0, "{}: features have no spread to decompose", ds.concept);
    let k = flags.k.unwrap_or_else(|| svd.default_k());
    ensure!(
        k <= svd.rank,
        "{}: --k {k} exceeds the numerical rank {}",
        ds.concept,
        svd.rank
    );
    Execution::default().try_map(&ds.attributes, |attr| {
        let delta = attribute_delta(attr, flags.delta)
            .with_context(|| format!("{}, attribute `{}`", ds.concept, attr.name))?;
        Ok(WalsRecord {
            concept: ds.concept.clone(),
            model_tag: ds.model_tag.clone(),
            attribute: attr.name.clone(),
            wals: wals_score(&svd, &delta, k)?,
            k_used: k,
            rank: svd.rank,
            centered: svd.centered,
            delta_method: delta.method.as_str(),
        })
    })
}

fn wals_all(datasets: &[ConceptDataset], flags: &WalsFlags) -> Result<Vec<WalsRecord>> {
    let per = Execution::default().try_map(datasets, |ds| wals_dataset(ds, flags))?;
    Ok(per.into_iter().flatten().collect())
}

pub fn wals(args: &WalsArgs) -> Result<Outcome> {
    check_k(args.wals.k)?;
    let emitter = Emitter::new("wals", args);
    let datasets = load_all(&args.data)?;
    let records = wals_all(&datasets, &args.wals)?;
    let header = &[
        "concept",
        "model_tag",
        "attribute",
        "wals",
        "k_used",
        "rank",
        "centered",
        "delta_method",
    ];
    let bytes = render(&emitter, args.output.format, &Records { records: &records }, header, || {
        records
            .iter()
            .map(|r| {
                vec![
                    r.concept.clone(),
                    r.model_tag.clone(),
                    r.attribute.clone(),
                    full(r.wals),
                    r.k_used.to_string(),
                    r.rank.to_string(),
                    r.centered.to_string(),
                    r.delta_method.to_string(),
                ]
            })
            .collect()
    })?;
    emitter.emit(&args.output, &bytes)?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct ReportRecord {
    #[serde(flatten)]
    audit: AuditRecord,
    k_used: usize,
    delta_method: &'static str,
}

pub fn report(args: &ReportArgs) -> Result<Outcome> {
    check_margin(args.score.margin)?;
    check_k(args.wals.k)?;
    let emitter = Emitter::new("report", args);
    let datasets = load_all(&args.data)?;
    let audits = audit_all(&datasets, args.score.margin)?;
    let spectral = wals_all(&datasets, &args.wals)?;
    // Both lists follow dataset order, then manifest attribute order.
    let records: Vec<ReportRecord> = audits
        .into_iter()
        .zip(spectral)
        .map(|(mut audit, w)| {
            debug_assert_eq!(audit.attribute, w.attribute);
            audit.wals = Some(w.wals);
            ReportRecord {
                audit,
                k_used: w.k_used,
                delta_method: w.delta_method,
            }
        })
        .collect();
    let mut header = SCORE_HEADER.to_vec();
    header.extend(["wals", "k_used", "delta_method"]);
    let bytes = render(&emitter, args.output.format, &Records { records: &records }, &header, || {
        records
            .iter()
            .map(|r| {
                let mut row = score_row(&r.audit);
                row.push(full(r.audit.wals.expect("filled above")));
                row.push(r.k_used.to_string());
                row.push(r.delta_method.to_string());
                row
            })
            .collect()
    })?;
    emitter.emit(&args.output, &bytes)?;
    Ok(Outcome {
        gate_tripped: args.score.gate && records.iter().any(|r| r.audit.verdict),
    })
}

// ---------------------------------------------------------------------------
// cluster / optimize

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelRow {
    pub sample_id: String,
    pub label: usize,
}

#[derive(Serialize)]
struct ClusterBody {
    k: usize,
    seed: u64,
    affinity: Affinity,
    sizes: Vec<usize>,
    /// Smallest Laplacian eigenvalues, ascending, for eigengap inspection.
    eigenvalues: Vec<f64>,
    labels: Vec<LabelRow>,
}

pub fn cluster(args: &ClusterArgs) -> Result<Outcome> {
    ensure!(args.clusters >= 1, "--clusters must be at least 1");
    ensure!(args.neighbors >= 1, "--neighbors must be at least 1");
    ensure!(args.n_init >= 1 && args.max_iter >= 1, "--n-init and --max-iter must be at least 1");
    if let Some(b) = args.bandwidth {
        ensure!(b.is_finite() && b > 0.0, "--bandwidth must be positive");
    }
    let emitter = Emitter::new("cluster", args);
    let ds = load_one(&args.manifest, !args.no_normalize)?;
    let affinity = match args.affinity {
        AffinityArg::MutualKnn | AffinityArg::Knn => Affinity::Knn {
            neighbors: args.neighbors,
            mutual: args.affinity == AffinityArg::MutualKnn,
        },
        AffinityArg::Rbf => Affinity::Rbf {
            bandwidth: args.bandwidth.map_or(Bandwidth::Median, Bandwidth::Fixed),
        },
    };
    let params = ClusterParams {
        affinity,
        n_init: args.n_init,
        max_iter: args.max_iter,
    };
    let assignment = spectral_cluster(&ds.embeddings, args.clusters, &params, args.seed)?;
    let labels: Vec<LabelRow> = assignment
        .labels
        .iter()
        .enumerate()
        .map(|(i, &label)| LabelRow {
            sample_id: ds.embeddings.sample_id(i),
            label,
        })
        .collect();
    let body = ClusterBody {
        k: assignment.k,
        seed: assignment.seed,
        affinity: assignment.affinity,
        sizes: assignment.sizes(),
        eigenvalues: assignment.eigenvalues.clone(),
        labels,
    };
    log::info!("laplacian spectrum head: {:?}", body.eigenvalues);
    let bytes = render(&emitter, args.output.format, &body, &["sample_id", "label"], || {
        body.labels
            .iter()
            .map(|r| vec![r.sample_id.clone(), r.label.to_string()])
            .collect()
    })?;
    emitter.emit(&args.output, &bytes)?;
    Ok(Outcome::default())
}

#[derive(Deserialize)]
struct LabelsFile {
    labels: Vec<LabelRow>,
}

fn cluster_rows(ds: &ConceptDataset, labels: Option<&Path>, cluster_id: usize) -> Result<Vec<usize>> {
    let Some(path) = labels else {
        return Ok((0..ds.embeddings.rows()).collect());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: LabelsFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    ensure!(
        file.labels.len() == ds.embeddings.rows(),
        "{} labels {} rows, the dataset has {}",
        path.display(),
        file.labels.len(),
        ds.embeddings.rows()
    );
    for (i, row) in file.labels.iter().enumerate() {
        ensure!(
            row.sample_id == ds.embeddings.sample_id(i),
            "label row {i} is for `{}`, the dataset row is `{}`",
            row.sample_id,
            ds.embeddings.sample_id(i)
        );
    }
    let members: Vec<usize> = file
        .labels
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == cluster_id)
        .map(|(i, _)| i)
        .collect();
    ensure!(!members.is_empty(), "cluster {cluster_id} has no members");
    Ok(members)
}

enum Backend {
    Synthetic(SyntheticVocab),
    Bridge(ExternalBridge),
}

impl Backend {
    fn parts(&self) -> (&dyn SequenceEmbedder, &dyn TokenProposer, &[u32]) {
        match self {
            Backend::Synthetic(v) => (v, v, &v.start),
            Backend::Bridge(b) => (b, b, b.start_tokens()),
        }
    }
}

fn backend(synthetic: Option<&Path>) -> Result<Backend> {
    if let Some(path) = synthetic {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let vocab: SyntheticVocab =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        vocab.validate()?;
        return Ok(Backend::Synthetic(vocab));
    }
    match std::env::var(BRIDGE_ENV) {
        Ok(cmd) if !cmd.trim().is_empty() => Ok(Backend::Bridge(ExternalBridge::spawn(&cmd)?)),
        _ => bail!("no embedder: pass --synthetic PATH or set {BRIDGE_ENV}"),
    }
}

#[derive(Serialize)]
struct OptimizeBody<'a> {
    cluster_id: usize,
    cluster_size: usize,
    start: &'a [u32],
    config: BeamConfig,
    #[serde(flatten)]
    result: &'a OptimizedPrompts,
}

pub fn optimize(args: &OptimizeArgs) -> Result<Outcome> {
    ensure!(
        args.pair_steps >= 1 && args.beam_width >= 1 && args.top_k >= 1,
        "--pair-steps, --beam-width and --top-k must be at least 1"
    );
    ensure!(args.proposal_width >= 1, "--proposal-width must be at least 1");
    let emitter = Emitter::new("optimize", args);
    let ds = load_one(&args.manifest, !args.no_normalize)?;
    let rows = cluster_rows(&ds, args.labels.as_deref(), args.cluster_id)?;
    let cluster = ds.embeddings.select_rows(&rows)?;
    let backend = backend(args.synthetic.as_deref())?;
    let (embedder, proposer, default_start) = backend.parts();
    let start = args.start.as_deref().unwrap_or(default_start);
    let config = BeamConfig {
        pair_steps: args.pair_steps,
        beam_width: args.beam_width,
        top_k: args.top_k,
        proposal_width: args.proposal_width,
    };
    let result = beam_optimize(embedder, proposer, &cluster, start, &config)?;
    log::info!("evaluated {} candidate sequences", result.evaluated);
    let body = OptimizeBody {
        cluster_id: args.cluster_id,
        cluster_size: rows.len(),
        start,
        config,
        result: &result,
    };
    let bytes = render(&emitter, args.output.format, &body, &["rank", "tokens", "score"], || {
        result
            .sequences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let tokens: Vec<String> = s.tokens.iter().map(u32::to_string).collect();
                vec![(i + 1).to_string(), tokens.join(" "), full(s.score)]
            })
            .collect()
    })?;
    emitter.emit(&args.output, &bytes)?;
    Ok(Outcome::default())
}

// ---------------------------------------------------------------------------
// spi

#[derive(Serialize)]
struct SeriesBody<'a> {
    series: &'a [SpiSeries],
}

#[derive(Serialize)]
struct AggregateBody<'a> {
    aggregates: &'a [SpiAggregate],
}

fn safe_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn selected_attributes(args: &SpiArgs, trajs: &[LatentTrajectory]) -> Result<Vec<String>> {
    if !args.attributes.is_empty() {
        let mut seen = BTreeSet::new();
        for a in &args.attributes {
            ensure!(seen.insert(a), "attribute `{a}` given twice");
        }
        return Ok(args.attributes.clone());
    }
    let names: Vec<String> = trajs[0].attribute_names().map(str::to_string).collect();
    ensure!(!names.is_empty(), "trajectory `{}` has no attributes", trajs[0].sample_id);
    Ok(names)
}

pub fn spi(args: &SpiArgs) -> Result<Outcome> {
    ensure!(args.tol.is_finite() && args.tol >= 0.0, "--tol must be non-negative");
    let emitter = Emitter::new("spi", args);
    let exec = Execution::default();
    let trajs = exec.try_map(&args.manifests, |p| {
        load_trajectory(p).with_context(|| format!("loading {}", p.display()))
    })?;
    if let Some(t) = args.estimate {
        for traj in &trajs {
            ensure!(
                t < traj.steps(),
                "--estimate {t} out of range for `{}` with {} steps",
                traj.sample_id,
                traj.steps()
            );
        }
    }
    for traj in &trajs {
        for w in spi::consistency_check(traj, args.tol) {
            log::warn!(
                "{}: x_{} + v_{} differs from x_{} by {:.3e}",
                w.sample_id,
                w.step,
                w.step,
                w.step + 1,
                w.max_abs_deviation
            );
        }
    }
    let attributes = selected_attributes(args, &trajs)?;
    let mut series = Vec::new();
    let mut aggregates = Vec::new();
    for attr in &attributes {
        let batch = spi::spi_series_batch(&trajs, attr, exec)?;
        if args.aggregate.is_some() {
            aggregates.push(spi::average_spi(&batch)?);
        }
        series.extend(batch);
    }

    let header = &["sample_id", "attribute", "t", "spi", "degenerate"];
    let bytes = render(&emitter, args.output.format, &SeriesBody { series: &series }, header, || {
        series
            .iter()
            .flat_map(|s| {
                s.values.iter().zip(&s.degenerate).enumerate().map(move |(t, (v, d))| {
                    vec![
                        s.sample_id.clone(),
                        s.attribute.clone(),
                        t.to_string(),
                        full(*v),
                        d.to_string(),
                    ]
                })
            })
            .collect()
    })?;
    emitter.emit(&args.output, &bytes)?;

    if let Some(path) = &args.aggregate {
        let header = &["attribute", "t", "mean", "variance", "n_samples"];
        let bytes = render(
            &emitter,
            args.output.format,
            &AggregateBody {
                aggregates: &aggregates,
            },
            header,
            || {
                aggregates
                    .iter()
                    .flat_map(|a| {
                        a.mean.iter().zip(&a.variance).enumerate().map(move |(t, (m, v))| {
                            vec![
                                a.attribute.clone(),
                                t.to_string(),
                                full(*m),
                                full(*v),
                                a.n_samples.to_string(),
                            ]
                        })
                    })
                    .collect()
            },
        )?;
        emitter.emit_to(Some(path), &bytes)?;
    }

    if let Some(t) = args.estimate {
        let dir = args.estimate_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for traj in &trajs {
            let xhat = spi::predisposition_estimate(traj, t)?;
            let path = dir.join(format!("{}_xhat_t{t}.oat", safe_stem(&traj.sample_id)));
            write_tensor(&Tensor::from_f64(traj.latent_shape.clone(), &xhat)?, &path)?;
            log::info!("wrote {}", path.display());
        }
    }
    Ok(Outcome::default())
}
