//! Window-free samplers built on the nearest-eavesdropper distance law.
//!
//! Given the nearest in-scope eavesdropper at distance `R`, the out-degree
//! of the origin is the number of legitimate nodes in the open disk of radius
//! `R`, i.e. Poisson with mean `λℓ π R²`. In the sectorized case the `L`
//! sectors are independent thinned copies with densities divided by `L`.

use rand::Rng;
use serde_json::json;

use super::{run_experiment, EstimateReport, ExperimentConfig};
use crate::analytics::DensityPair;
use crate::error::{Error, Result};
use crate::point_process::{poisson_count, sample_nearest_eve_distance, sample_sector_nearest_eve_distance};

pub fn exact_baseline_trial<R: Rng + ?Sized>(d: &DensityPair<f64>, rng: &mut R) -> Result<u64> {
    let r: f64 = sample_nearest_eve_distance(d.lambda_e, rng)?;
    Ok(poisson_count(rng, d.lambda_l * std::f64::consts::PI * r * r))
}

pub fn exact_sectorized_trial<R: Rng + ?Sized>(d: &DensityPair<f64>, sectors: u32, rng: &mut R) -> Result<u64> {
    let per_sector = d.lambda_l / sectors as f64;
    let mut total = 0;
    for _ in 0..sectors {
        let r: f64 = sample_sector_nearest_eve_distance(d.lambda_e, sectors, rng)?;
        total += poisson_count(rng, per_sector * std::f64::consts::PI * r * r);
    }
    Ok(total)
}

fn require_eves(d: &DensityPair<f64>) -> Result<()> {
    if d.lambda_e > 0.0 {
        Ok(())
    } else {
        Err(Error::NearestDistanceUndefined)
    }
}

pub fn estimate_baseline_exact(d: &DensityPair<f64>, cfg: &ExperimentConfig) -> Result<EstimateReport> {
    require_eves(d)?;
    let params = json!({ "mode": "none", "lambda_l": d.lambda_l, "lambda_e": d.lambda_e });
    run_experiment("baseline_exact", params, cfg, |rng| exact_baseline_trial(d, rng))
}

pub fn estimate_sectorized_exact(d: &DensityPair<f64>, sectors: u32, cfg: &ExperimentConfig) -> Result<EstimateReport> {
    require_eves(d)?;
    if sectors == 0 {
        return Err(Error::InvalidParameter("sector count must be >= 1".into()));
    }
    let params = json!({ "mode": "sectorized", "lambda_l": d.lambda_l, "lambda_e": d.lambda_e, "sectors": sectors });
    run_experiment("sectorized_exact", params, cfg, |rng| exact_sectorized_trial(d, sectors, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{geometric_pmf, negbin_pmf};
    use crate::montecarlo::{tv_distance, Pmf};

    fn dp(l: f64, e: f64) -> DensityPair<f64> {
        DensityPair::new(l, e).unwrap()
    }

    #[test]
    fn baseline_mean_and_pmf() {
        let cfg = ExperimentConfig::new(200_000, 5);
        let r = estimate_baseline_exact(&dp(1.0, 0.5), &cfg).unwrap();
        assert!(r.ci_contains(2.0), "{r:?}");
        let r = estimate_baseline_exact(&dp(1.0, 1.0), &cfg).unwrap();
        let analytic = Pmf::from_fn(cfg.max_degree_tracked, |n| geometric_pmf(&dp(1.0, 1.0), n));
        assert!(tv_distance(&r.empirical_pmf(), &analytic).unwrap() < 0.01);
    }

    #[test]
    fn no_legit_gives_zero() {
        let r = estimate_baseline_exact(&dp(0.0, 1.0), &ExperimentConfig::new(1000, 1)).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.pmf[0], 1.0);
    }

    #[test]
    fn zero_eve_density_rejected() {
        let cfg = ExperimentConfig::new(10, 1);
        assert!(estimate_baseline_exact(&dp(1.0, 0.0), &cfg).is_err());
        assert!(estimate_sectorized_exact(&dp(1.0, 0.0), 2, &cfg).is_err());
    }

    #[test]
    fn sectorized_mean_and_pmf() {
        let cfg = ExperimentConfig::new(200_000, 6);
        let r = estimate_sectorized_exact(&dp(1.0, 2.0), 4, &cfg).unwrap();
        assert!(r.ci_contains(2.0), "{r:?}");
        let d = dp(1.0, 1.0);
        let r = estimate_sectorized_exact(&d, 3, &cfg).unwrap();
        let analytic = Pmf::from_fn(cfg.max_degree_tracked, |n| negbin_pmf(&d, 3, n));
        assert!(tv_distance(&r.empirical_pmf(), &analytic).unwrap() < 0.01);
    }

    #[test]
    fn single_sector_matches_baseline() {
        let d = dp(2.0, 1.0);
        let a = estimate_sectorized_exact(&d, 1, &ExperimentConfig::new(100_000, 8)).unwrap();
        let b = estimate_baseline_exact(&d, &ExperimentConfig::new(100_000, 9)).unwrap();
        assert!(a.ci_overlaps(&b));
    }
}
