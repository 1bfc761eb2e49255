//! Spatial in-degree estimation with a guard zone.
//!
//! Only legitimate nodes within `R_cut` of the typical node are candidate
//! in-neighbours, with `R_cut` chosen so that the expected number of
//! in-neighbours beyond it is below `1e-6`. A candidate `x` reaches the
//! origin iff no in-scope eavesdropper lies in the closed ball `B_x(|x|)`,
//! which sits inside `B_0(2 R_cut)`; sampling eavesdroppers there (and
//! germs `ρ` further out under neutralization) makes every check exact.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;

use super::window::{check_spatial_model, draw_offset};
use super::{run_experiment, EstimateReport, ExperimentConfig, WindowLimits};
use crate::error::{Error, Result};
use crate::geometry::{Disk, GridIndex, Point2, SectorFrame};
use crate::graph::{Enhancement, NetworkModel};
use crate::point_process::{extend_ppp, Region};

type P = Point2<f64>;

/// Target expected number of missed in-neighbours per trial.
const GUARD_TAIL: f64 = 1e-6;

/// Candidate radius `R_cut` for in-neighbours of the typical node.
pub fn guard_radius(model: &NetworkModel<f64>) -> f64 {
    if model.lambda_l <= 0.0 || model.lambda_e <= 0.0 {
        return 0.0;
    }
    // Expected in-neighbours beyond R: (L λℓ/λe) exp(−π λe R² / L).
    let tail_radius = |lambda_l: f64, lambda_e: f64, sectors: f64| {
        let arg = sectors * lambda_l / (lambda_e * GUARD_TAIL);
        (sectors * arg.max(std::f64::consts::E).ln() / (PI * lambda_e)).sqrt()
    };
    match &model.enhancement {
        Enhancement::None => tail_radius(model.lambda_l, model.lambda_e, 1.0),
        Enhancement::Sectorized { sectors, .. } => tail_radius(model.lambda_l, model.lambda_e, *sectors as f64),
        Enhancement::Neutralization { rho } => {
            // Poisson surrogate for the effective eavesdroppers, with a 1.5x
            // margin on the exponent for the clustering of vacant space.
            let thinned = model.lambda_e * (-model.lambda_l * PI * rho * rho).exp();
            let arg = model.lambda_l / (thinned * GUARD_TAIL);
            rho + (1.5 * arg.max(std::f64::consts::E).ln() / (PI * thinned)).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InTrial {
    pub degree: u64,
    /// Legitimate nodes; the typical node is at index 0.
    pub legit: Vec<P>,
    pub eves: Vec<P>,
    pub guard_radius: f64,
    /// Per-node sector offsets, when sectorized.
    pub offsets: Option<Vec<f64>>,
}

pub fn simulate_in_trial(model: &NetworkModel<f64>, limits: WindowLimits, rng: &mut ChaCha8Rng) -> Result<InTrial> {
    check_spatial_model(model)?;
    let cut = guard_radius(model);
    let rho = model.enhancement.neutralization_radius();
    let expected = (model.lambda_l + model.lambda_e) * PI * (2.0 * cut + rho).powi(2);
    if !(expected <= limits.max_expected_points) {
        return Err(Error::WindowCap { radius: 2.0 * cut + rho, doublings: 0 });
    }
    let disk = |radius: f64| Region::Disk(Disk { center: Point2::origin(), radius });

    let mut legit = vec![Point2::origin()];
    if cut > 0.0 {
        extend_ppp(&mut legit, model.lambda_l, &disk(2.0 * cut + rho), rng);
    }
    let mut eves = Vec::new();
    if cut > 0.0 {
        extend_ppp(&mut eves, model.lambda_e, &disk(2.0 * cut), rng);
    }
    let frames = match &model.enhancement {
        Enhancement::Sectorized { sectors, offsets } => Some(
            legit
                .iter()
                .map(|_| SectorFrame::new(*sectors, draw_offset(offsets, rng)))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };

    let effective: Vec<P> = if rho > 0.0 {
        let germs = GridIndex::build(&legit, rho);
        eves.iter().copied().filter(|e| !germs.any_within(&legit, *e, rho)).collect()
    } else {
        eves.clone()
    };
    let grid = GridIndex::build(&effective, 1.0 / model.lambda_e.sqrt());

    let origin = Point2::origin();
    let mut degree = 0;
    for (i, x) in legit.iter().enumerate().skip(1) {
        let r = x.norm();
        if r > cut {
            continue;
        }
        let blocked = match &frames {
            Some(frames) if frames[i].count > 1 => {
                let frame = frames[i];
                let target = frame.index0_towards(*x, origin);
                grid.any_within_where(&effective, *x, r, |k| frame.index0_towards(*x, effective[k]) == target)
            }
            _ => grid.any_within(&effective, *x, r),
        };
        degree += !blocked as u64;
    }
    let offsets = frames.map(|f| f.iter().map(|fr| fr.offset).collect());
    Ok(InTrial { degree, legit, eves, guard_radius: cut, offsets })
}

pub fn estimate_in_degree_windowed(model: &NetworkModel<f64>, cfg: &ExperimentConfig) -> Result<EstimateReport> {
    check_spatial_model(model)?;
    let params = serde_json::to_value(model).expect("model serializes");
    run_experiment("in_degree_windowed", params, cfg, |rng| simulate_in_trial(model, cfg.window, rng).map(|t| t.degree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{edge_exists, OffsetLaw};
    use crate::point_process::{Realization, RngStream};

    fn model(l: f64, e: f64, enh: Enhancement<f64>) -> NetworkModel<f64> {
        NetworkModel::new(l, e, enh).unwrap()
    }

    /// Counts candidates inside the guard radius through the generic edge rule.
    fn cross_check(m: &NetworkModel<f64>, trials: u64) {
        for t in 0..trials {
            let mut rng = RngStream::new(321, t).rng();
            let out = simulate_in_trial(m, WindowLimits::default(), &mut rng).unwrap();
            let real = Realization {
                legit: out.legit.clone(),
                eves: out.eves.clone(),
                window: Disk::centered(2.0 * out.guard_radius + m.enhancement.neutralization_radius()).unwrap(),
                origin_is_typical: true,
            };
            let generic_model = match (&m.enhancement, &out.offsets) {
                (Enhancement::Sectorized { sectors, .. }, Some(offsets)) => NetworkModel {
                    enhancement: Enhancement::Sectorized {
                        sectors: *sectors,
                        offsets: OffsetLaw::PerNode { offsets: offsets.clone() },
                    },
                    ..m.clone()
                },
                _ => m.clone(),
            };
            let generic = (1..real.legit.len())
                .filter(|&i| real.legit[i].norm() <= out.guard_radius)
                .filter(|&i| edge_exists(&generic_model, &real, i, 0).unwrap())
                .count();
            assert_eq!(out.degree, generic as u64, "trial {t}");
        }
    }

    #[test]
    fn trials_agree_with_edge_rule() {
        cross_check(&model(1.0, 0.5, Enhancement::None), 100);
        cross_check(&model(1.0, 1.0, Enhancement::sectorized(2)), 100);
        cross_check(&model(1.0, 1.0, Enhancement::Neutralization { rho: 0.5 }), 30);
    }

    #[test]
    fn guard_radius_tail_bound() {
        let m = model(1.0, 0.5, Enhancement::None);
        let r = guard_radius(&m);
        let tail = (1.0 / 0.5) * (-PI * 0.5 * r * r).exp();
        assert!((tail - GUARD_TAIL).abs() < 1e-12);
        let s = model(1.0, 0.5, Enhancement::sectorized(4));
        assert!(guard_radius(&s) > r);
        assert_eq!(guard_radius(&model(0.0, 1.0, Enhancement::None)), 0.0);
        let n = model(1.0, 0.5, Enhancement::Neutralization { rho: 0.5 });
        assert!(guard_radius(&n) > r);
    }

    #[test]
    fn in_degree_means() {
        let cfg = ExperimentConfig::new(20_000, 4);
        let r = estimate_in_degree_windowed(&model(1.0, 0.5, Enhancement::None), &cfg).unwrap();
        assert!(r.ci_contains(2.0), "{r:?}");
        let r = estimate_in_degree_windowed(&model(1.0, 1.0, Enhancement::sectorized(2)), &cfg).unwrap();
        assert!(r.ci_contains(2.0), "{r:?}");
        let r = estimate_in_degree_windowed(&model(0.0, 1.0, Enhancement::None), &cfg).unwrap();
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn oversized_guard_zone_rejected() {
        let m = model(1.0, 1e-9, Enhancement::None);
        let mut rng = crate::point_process::RngStream::new(1, 0).rng();
        assert!(matches!(simulate_in_trial(&m, WindowLimits::default(), &mut rng), Err(Error::WindowCap { .. })));
    }
}
