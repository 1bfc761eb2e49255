//! Spatial out-degree estimation with adaptively grown disk windows.
//!
//! Eavesdroppers are sampled in a disk of radius `r₀ = 3/√(πλe)` around the
//! typical node. Until the nearest in-scope eavesdropper is confirmed, the
//! radius doubles and only the new annulus is sampled; Poisson independence
//! of disjoint regions makes the grown sample exact. Under neutralization,
//! legitimate germs extend `ρ` beyond the eavesdropper window, so every
//! sampled eavesdropper sees all germs that could cover it.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{run_experiment, EstimateReport, ExperimentConfig, WindowLimits};
use crate::error::{Error, Result};
use crate::geometry::{Annulus, Disk, GridIndex, Point2, SectorFrame};
use crate::graph::{EdgeRule, Enhancement, NetworkModel, OffsetLaw};
use crate::point_process::{extend_ppp, Region};

type P = Point2<f64>;

/// Outcome of one spatial trial, with the sampled points for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct OutTrial {
    pub degree: u64,
    /// Legitimate nodes; the typical node is at index 0.
    pub legit: Vec<P>,
    pub eves: Vec<P>,
    /// Final eavesdropper window radius.
    pub eve_radius: f64,
    /// Sector offset of the typical node, when sectorized.
    pub origin_offset: Option<f64>,
}

pub(crate) fn check_spatial_model(model: &NetworkModel<f64>) -> Result<()> {
    if !(model.lambda_e > 0.0) {
        return Err(Error::NearestDistanceUndefined);
    }
    if model.natural_rule() != EdgeRule::Distance {
        return Err(Error::InvalidParameter(
            "spatial estimators require a zero secrecy threshold and equal noise powers".into(),
        ));
    }
    if let Enhancement::Sectorized { offsets: OffsetLaw::PerNode { .. }, .. } = model.enhancement {
        return Err(Error::InvalidParameter("spatial estimators need a uniform or fixed offset law".into()));
    }
    Ok(())
}

pub(crate) fn draw_offset<R: Rng + ?Sized>(law: &OffsetLaw<f64>, rng: &mut R) -> f64 {
    match law {
        OffsetLaw::Fixed { offset } => *offset,
        _ => std::f64::consts::TAU * rng.random::<f64>(),
    }
}

/// Disk window that doubles on demand, enforcing [`WindowLimits`].
struct GrowingWindow {
    radius: f64,
    doublings: u32,
    limits: WindowLimits,
    total_density: f64,
    pad: f64,
}

impl GrowingWindow {
    fn new(model: &NetworkModel<f64>, limits: WindowLimits) -> Result<Self> {
        let win = GrowingWindow {
            radius: 3.0 / (PI * model.lambda_e).sqrt(),
            doublings: 0,
            limits,
            total_density: model.lambda_l + model.lambda_e,
            pad: model.enhancement.neutralization_radius(),
        };
        win.check(win.radius, 0)?;
        Ok(win)
    }

    fn check(&self, radius: f64, doublings: u32) -> Result<()> {
        let expected = self.total_density * PI * (radius + self.pad).powi(2);
        if doublings > self.limits.max_doublings || !(expected <= self.limits.max_expected_points) {
            return Err(Error::WindowCap { radius, doublings });
        }
        Ok(())
    }

    /// Doubles the radius and returns the new annulus `(old, new)`.
    fn grow(&mut self) -> Result<(f64, f64)> {
        let next = 2.0 * self.radius;
        self.check(next, self.doublings + 1)?;
        let old = self.radius;
        self.radius = next;
        self.doublings += 1;
        Ok((old, next))
    }
}

fn sample_disk<R: Rng + ?Sized>(out: &mut Vec<P>, density: f64, radius: f64, rng: &mut R) {
    let disk = Disk { center: Point2::origin(), radius };
    extend_ppp(out, density, &Region::Disk(disk), rng);
}

fn sample_ring<R: Rng + ?Sized>(out: &mut Vec<P>, density: f64, inner: f64, outer: f64, rng: &mut R) {
    extend_ppp(out, density, &Region::Annulus(Annulus { inner, outer }), rng);
}

fn typical_with_disk<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Vec<P> {
    let mut legit = vec![Point2::origin()];
    sample_disk(&mut legit, density, radius, rng);
    legit
}

fn count_closer(legit: &[P], radius: f64) -> u64 {
    legit[1..].iter().filter(|x| x.norm() < radius).count() as u64
}

fn baseline_trial(model: &NetworkModel<f64>, limits: WindowLimits, rng: &mut ChaCha8Rng) -> Result<OutTrial> {
    let mut win = GrowingWindow::new(model, limits)?;
    let mut eves = Vec::new();
    sample_disk(&mut eves, model.lambda_e, win.radius, rng);
    while eves.is_empty() {
        let (a, b) = win.grow()?;
        sample_ring(&mut eves, model.lambda_e, a, b, rng);
    }
    let nearest = eves.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min);
    let legit = typical_with_disk(model.lambda_l, nearest, rng);
    let degree = count_closer(&legit, nearest);
    Ok(OutTrial { degree, legit, eves, eve_radius: win.radius, origin_offset: None })
}

fn sectorized_trial(
    model: &NetworkModel<f64>,
    sectors: u32,
    law: &OffsetLaw<f64>,
    limits: WindowLimits,
    rng: &mut ChaCha8Rng,
) -> Result<OutTrial> {
    let offset = draw_offset(law, rng);
    let frame = SectorFrame::new(sectors, offset)?;
    let origin = Point2::origin();
    let mut nearest = vec![f64::INFINITY; sectors as usize];
    let mut win = GrowingWindow::new(model, limits)?;
    let mut eves = Vec::new();
    sample_disk(&mut eves, model.lambda_e, win.radius, rng);
    let mut seen = 0;
    loop {
        for e in &eves[seen..] {
            let s = frame.index0_towards(origin, *e) as usize;
            nearest[s] = nearest[s].min(e.norm());
        }
        seen = eves.len();
        if nearest.iter().all(|d| d.is_finite()) {
            break;
        }
        let (a, b) = win.grow()?;
        sample_ring(&mut eves, model.lambda_e, a, b, rng);
    }
    let reach = nearest.iter().copied().fold(0.0, f64::max);
    let legit = typical_with_disk(model.lambda_l, reach, rng);
    let degree = legit[1..]
        .iter()
        .filter(|x| x.norm() < nearest[frame.index0_towards(origin, **x) as usize])
        .count() as u64;
    Ok(OutTrial { degree, legit, eves, eve_radius: win.radius, origin_offset: Some(frame.offset) })
}

fn neutralization_trial(model: &NetworkModel<f64>, rho: f64, limits: WindowLimits, rng: &mut ChaCha8Rng) -> Result<OutTrial> {
    let mut win = GrowingWindow::new(model, limits)?;
    let mut eves = Vec::new();
    sample_disk(&mut eves, model.lambda_e, win.radius, rng);
    let mut legit = typical_with_disk(model.lambda_l, win.radius + rho, rng);
    let mut checked = 0;
    let mut nearest = f64::INFINITY;
    loop {
        // Eavesdroppers inside the current window see every germ within rho.
        let grid = (rho > 0.0).then(|| GridIndex::build(&legit, rho));
        for e in &eves[checked..] {
            let covered = grid.as_ref().is_some_and(|g| g.any_within(&legit, *e, rho));
            if !covered {
                nearest = nearest.min(e.norm());
            }
        }
        checked = eves.len();
        if nearest.is_finite() {
            break;
        }
        let (a, b) = win.grow()?;
        sample_ring(&mut eves, model.lambda_e, a, b, rng);
        sample_ring(&mut legit, model.lambda_l, a + rho, b + rho, rng);
    }
    let degree = count_closer(&legit, nearest);
    Ok(OutTrial { degree, legit, eves, eve_radius: win.radius, origin_offset: None })
}

/// One spatial trial of the typical node's out-degree.
pub fn simulate_out_trial(model: &NetworkModel<f64>, limits: WindowLimits, rng: &mut ChaCha8Rng) -> Result<OutTrial> {
    check_spatial_model(model)?;
    match &model.enhancement {
        Enhancement::None => baseline_trial(model, limits, rng),
        Enhancement::Sectorized { sectors, offsets } => sectorized_trial(model, *sectors, offsets, limits, rng),
        Enhancement::Neutralization { rho } => neutralization_trial(model, *rho, limits, rng),
    }
}

pub fn estimate_windowed(model: &NetworkModel<f64>, cfg: &ExperimentConfig) -> Result<EstimateReport> {
    check_spatial_model(model)?;
    let params = serde_json::to_value(model).expect("model serializes");
    run_experiment("out_degree_windowed", params, cfg, |rng| {
        simulate_out_trial(model, cfg.window, rng).map(|t| t.degree)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{out_degree_origin, LinkBudget};
    use crate::montecarlo::estimate_baseline_exact;
    use crate::analytics::DensityPair;
    use crate::point_process::{Realization, RngStream};

    fn model(l: f64, e: f64, enh: Enhancement<f64>) -> NetworkModel<f64> {
        NetworkModel::new(l, e, enh).unwrap()
    }

    /// Re-evaluates each trial's realization through the generic edge rule.
    fn cross_check(m: &NetworkModel<f64>, trials: u64) {
        for t in 0..trials {
            let mut rng = RngStream::new(123, t).rng();
            let out = simulate_out_trial(m, WindowLimits::default(), &mut rng).unwrap();
            let real = Realization {
                legit: out.legit.clone(),
                eves: out.eves.clone(),
                window: Disk::centered(out.eve_radius + m.enhancement.neutralization_radius()).unwrap(),
                origin_is_typical: true,
            };
            let generic = match (&m.enhancement, out.origin_offset) {
                (Enhancement::Sectorized { sectors, .. }, Some(off)) => {
                    let fixed = NetworkModel {
                        enhancement: Enhancement::Sectorized { sectors: *sectors, offsets: OffsetLaw::Fixed { offset: off } },
                        ..m.clone()
                    };
                    out_degree_origin(&fixed, &real).unwrap()
                }
                _ => out_degree_origin(m, &real).unwrap(),
            };
            assert_eq!(out.degree, generic as u64, "trial {t} of {m:?}");
        }
    }

    #[test]
    fn trials_agree_with_edge_rule() {
        cross_check(&model(1.0, 0.5, Enhancement::None), 300);
        cross_check(&model(1.0, 1.0, Enhancement::sectorized(3)), 300);
        cross_check(&model(1.0, 1.0, Enhancement::Neutralization { rho: 0.4 }), 300);
        cross_check(&model(1.0, 4.0, Enhancement::Neutralization { rho: 0.6 }), 100);
    }

    #[test]
    fn windowed_baseline_matches_exact() {
        let m = model(1.0, 0.5, Enhancement::None);
        let w = estimate_windowed(&m, &ExperimentConfig::new(50_000, 1)).unwrap();
        let e = estimate_baseline_exact(&DensityPair::new(1.0, 0.5).unwrap(), &ExperimentConfig::new(50_000, 2)).unwrap();
        assert!(w.ci_overlaps(&e), "{w:?} {e:?}");
    }

    #[test]
    fn neutralization_zero_radius_matches_ratio() {
        let m = model(1.0, 1.0, Enhancement::Neutralization { rho: 0.0 });
        let w = estimate_windowed(&m, &ExperimentConfig::new(50_000, 3)).unwrap();
        assert!(w.ci_contains(1.0), "{w:?}");
    }

    #[test]
    fn window_cap_reports_diagnostic() {
        let m = model(1.0, 1e-12, Enhancement::Neutralization { rho: 1e5 });
        let mut rng = RngStream::new(1, 0).rng();
        let limits = WindowLimits { max_doublings: 3, max_expected_points: 1e6 };
        assert!(matches!(simulate_out_trial(&m, limits, &mut rng), Err(Error::WindowCap { .. })));
    }

    #[test]
    fn rejects_unsupported_models() {
        let cfg = ExperimentConfig::new(10, 1);
        assert!(estimate_windowed(&model(1.0, 0.0, Enhancement::None), &cfg).is_err());
        let general = model(1.0, 1.0, Enhancement::None).with_budget(LinkBudget::new(1.0, 1.0, 1.0, 0.5).unwrap());
        assert!(estimate_windowed(&general, &cfg).is_err());
    }

    #[test]
    fn same_seed_reproduces() {
        let m = model(1.0, 1.0, Enhancement::Neutralization { rho: 0.5 });
        let cfg = ExperimentConfig::new(5_000, 77);
        assert_eq!(estimate_windowed(&m, &cfg).unwrap(), estimate_windowed(&m, &cfg).unwrap());
    }
}
