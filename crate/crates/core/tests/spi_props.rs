use oasis_core::datamodel::LatentTrajectory;
use oasis_core::spi::{
    average_spi, consistency_check, delta_latent, predisposition_estimate, spi_series, spi_step,
    SpiSeries,
};
use oasis_testkit::fixtures::{gaussian_vec, rng};
use oasis_testkit::{cosine, two_pass_moments};
use rand::Rng;

#[test]
fn bounds_antisymmetry_and_scale_invariance() {
    let mut r = rng(41);
    for _ in 0..100 {
        let n = r.random_range(1..=64);
        let v = gaussian_vec(&mut r, n);
        let pos = gaussian_vec(&mut r, n);
        let neg = gaussian_vec(&mut r, n);
        let delta = delta_latent(&pos, &neg).unwrap();
        let flipped = delta_latent(&neg, &pos).unwrap();
        let s = spi_step(&v, &delta.values).unwrap();
        assert!((-1.0..=1.0).contains(&s));
        assert!((s + spi_step(&v, &flipped.values).unwrap()).abs() <= 1e-12);
        let (a, b) = (r.random_range(1e-3..1e3), r.random_range(1e-3..1e3));
        let sv: Vec<f64> = v.iter().map(|x| x * a).collect();
        let sd: Vec<f64> = delta.values.iter().map(|x| x * b).collect();
        assert!((s - spi_step(&sv, &sd).unwrap()).abs() <= 1e-12);
        assert!((s - cosine(&v, &delta.values)).abs() <= 1e-12);
    }
}

fn trajectory(id: &str, x0: Vec<f64>, vel: Vec<Vec<f64>>, pairs: Vec<(Vec<f64>, Vec<f64>)>) -> LatentTrajectory {
    let mut latents = vec![x0];
    for v in &vel {
        let last = latents.last().unwrap();
        latents.push(last.iter().zip(v).map(|(a, b)| a + b).collect());
    }
    LatentTrajectory {
        sample_id: id.into(),
        latent_shape: vec![latents[0].len()],
        latents,
        velocities: vel,
        attr_velocity_pairs: vec![("a".into(), pairs)],
    }
}

#[test]
fn hand_trajectory() {
    let traj = trajectory(
        "hand",
        vec![0.0, 0.0],
        vec![vec![1.0, 0.0], vec![3.0, 4.0], vec![0.0, 2.0]],
        vec![
            (vec![2.0, 0.0], vec![1.0, 0.0]),
            (vec![1.0, 1.0], vec![0.0, 1.0]),
            (vec![0.0, 0.0], vec![1.0, 1.0]),
        ],
    );
    let s = spi_series(&traj, "a").unwrap();
    let want = [1.0, 0.6, -std::f64::consts::FRAC_1_SQRT_2];
    for (g, w) in s.values.iter().zip(want) {
        assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
    }
    assert!(consistency_check(&traj, 1e-12).is_empty());
}

#[test]
fn constant_velocity_estimate_is_exact() {
    let mut r = rng(42);
    for _ in 0..20 {
        let n = r.random_range(1..=16);
        // Dyadic values keep every partial sum exact in binary.
        let x0: Vec<f64> = (0..n).map(|_| r.random_range(-64..64) as f64 / 4.0).collect();
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-64..64) as f64 / 8.0).collect();
        let steps = r.random_range(1..=10);
        let pairs = vec![(v.clone(), vec![0.0; n]); steps];
        let traj = trajectory("c", x0, vec![v; steps], pairs);
        assert_eq!(predisposition_estimate(&traj, 0).unwrap(), traj.latents[steps]);
    }
}

#[test]
fn degenerate_steps_are_flagged() {
    let traj = trajectory(
        "d",
        vec![0.0],
        vec![vec![1.0], vec![0.0]],
        vec![(vec![1.0], vec![1.0]), (vec![2.0], vec![1.0])],
    );
    let s = spi_series(&traj, "a").unwrap();
    assert_eq!(s.values, vec![0.0, 0.0]);
    assert_eq!(s.degenerate, vec![true, true]);
}

#[test]
fn aggregate_matches_two_pass_oracle() {
    let mut r = rng(43);
    let steps = 12;
    let series: Vec<SpiSeries> = (0..100)
        .map(|i| SpiSeries {
            attribute: "a".into(),
            sample_id: format!("s{i}"),
            values: (0..steps).map(|_| r.random_range(-1.0..1.0)).collect(),
            degenerate: vec![false; steps],
        })
        .collect();
    let agg = average_spi(&series).unwrap();
    let values: Vec<Vec<f64>> = series.iter().map(|s| s.values.clone()).collect();
    let (mean, var) = two_pass_moments(&values);
    for t in 0..steps {
        assert!((agg.mean[t] - mean[t]).abs() <= 1e-12);
        assert!((agg.variance[t] - var[t]).abs() <= 1e-12);
    }
    assert_eq!(agg.n_samples, 100);
    let single = average_spi(&series[..1]).unwrap();
    assert!(single.variance.iter().all(|&v| v == 0.0));
}
