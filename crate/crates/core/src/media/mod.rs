//! Ground-truth particle motion and material models.

mod directed;
mod fbm;
mod trajectory;
mod viscous;

pub use directed::{inject_directed, DirectedSegmentSpec};
pub use fbm::{simulate_viscoelastic, ViscoelasticModel};
pub use trajectory::{Point3, Trajectory};
pub use viscous::{
    hydrodynamic_radius, stokes_einstein_d, viscosity_at, SlopeSign, ViscousMediumModel,
    GLYCEROL_ETA_21C,
};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// 3D random walk with independent Gaussian steps of variance `2·D·dt` per
/// axis. Returns `n_steps + 1` points starting at the origin.
pub fn simulate_brownian(d: f64, n_steps: usize, dt: f64, seed: u64) -> Result<Trajectory> {
    ensure_finite("D", d)?;
    ensure_finite("dt", dt)?;
    if d < 0.0 {
        return Err(Error::invalid(format!("D must be >= 0, got {d}")));
    }
    if dt <= 0.0 {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be >= 1"));
    }
    let step = (2.0 * d * dt).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(n_steps + 1);
    let mut pos = [0.0; 3];
    points.push(pos);
    for _ in 0..n_steps {
        for c in pos.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c += step * z;
        }
        points.push(pos);
    }
    let mut traj = Trajectory::new(dt, 0.0, points)?;
    traj.set_meta("seed", seed);
    traj.set_meta("medium", "brownian");
    traj.set_meta("D_nm2_per_s", d);
    Ok(traj)
}

/// Generates `count` trajectories in parallel. Member `i` receives the seed
/// `derive_seed(master_seed, "medium", i)`, so the result does not depend on
/// thread scheduling.
pub fn ensemble<F>(count: usize, master_seed: u64, generate: F) -> Result<Vec<Trajectory>>
where
    F: Fn(u64) -> Result<Trajectory> + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|i| generate(derive_seed(master_seed, "medium", i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn zero_diffusion_is_a_fixed_point() {
        let t = simulate_brownian(0.0, 50, 0.01, 1).unwrap();
        assert!(t.points.iter().all(|p| *p == [0.0; 3]));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(simulate_brownian(-1.0, 10, 0.01, 1).is_err());
        assert!(simulate_brownian(f64::NAN, 10, 0.01, 1).is_err());
        assert!(simulate_brownian(1.0, 0, 0.01, 1).is_err());
        assert!(simulate_brownian(1.0, 10, 0.0, 1).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = simulate_brownian(1e4, 200, 0.0096, 42).unwrap();
        let b = simulate_brownian(1e4, 200, 0.0096, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn increments_are_gaussian_and_axis_independent() {
        let n = 1_000_000;
        let dt = 0.01;
        let d = 5.0e3;
        let t = simulate_brownian(d, n, dt, 2024).unwrap();
        let dx = t.increments(0);
        let dy = t.increments(1);
        let var = stats::variance(&dx);
        assert!((var / (2.0 * d * dt) - 1.0).abs() < 0.01, "var {var}");
        let k = stats::excess_kurtosis(&dx);
        assert!(k.abs() < 0.1, "excess kurtosis {k}");
        let mx = stats::mean(&dx);
        let my = stats::mean(&dy);
        let cov: f64 = dx
            .iter()
            .zip(&dy)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / n as f64;
        let corr = cov / (stats::variance(&dx) * stats::variance(&dy)).sqrt();
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn parallel_ensemble_matches_serial() {
        let par = ensemble(8, 99, |s| simulate_brownian(1e3, 100, 0.01, s)).unwrap();
        for (i, t) in par.iter().enumerate() {
            let serial = simulate_brownian(1e3, 100, 0.01, derive_seed(99, "medium", i as u64));
            assert_eq!(t, &serial.unwrap());
        }
    }
}
