//! Acceptance criteria for the estimators, bounds and edge rules.
//!
//! Each criterion runs at a configurable [`Scale`] and returns a
//! [`CriterionOutcome`] holding one [`Check`] per gated comparison. Seeds are
//! fixed offsets from a single base seed.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{geometric_pmf, negbin_pmf, neutralization_bound, BoundVariant, DensityPair};
use crate::error::{Error, Result};
use crate::geometry::{Disk, Point2};
use crate::graph::{build_graph, build_graph_with, EdgeRule, Enhancement, GainFunction, LinkBudget, NetworkModel, OffsetLaw};
use crate::montecarlo::{
    estimate_baseline_exact, estimate_in_degree_windowed, estimate_sectorized_exact, estimate_windowed, merge,
    neutralization_point, neutralization_sweep, run_trial_range, simulate_out_trial, tv_distance, write_sweep_table,
    EstimateReport, ExperimentConfig, ExperimentId, Pmf,
};
use crate::point_process::{Realization, RngStream};

type P = Point2<f64>;

/// Trial and instance counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scale {
    pub exact_trials: u64,
    pub windowed_trials: u64,
    pub sweep_trials: u64,
    pub in_out_trials: u64,
    pub determinism_trials: u64,
    pub instances: usize,
}

impl Default for Scale {
    fn default() -> Self {
        Scale {
            exact_trials: 1_000_000,
            windowed_trials: 1_000_000,
            sweep_trials: 100_000,
            in_out_trials: 100_000,
            determinism_trials: 20_000,
            instances: 1000,
        }
    }
}

impl Scale {
    /// Same instance count, every Monte Carlo run at `trials`.
    pub fn with_trials(self, trials: u64) -> Self {
        Scale {
            exact_trials: trials,
            windowed_trials: trials,
            sweep_trials: trials,
            in_out_trials: trials,
            determinism_trials: trials,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Criterion groups or ids; empty runs everything.
    pub select: Vec<String>,
    pub seed: u64,
    pub scale: Scale,
    /// Multiplier applied to every analytic reference value. Anything but 1
    /// is a deliberate fault for exercising the failure path.
    pub analytic_scale: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { select: Vec::new(), seed: 20_240_917, scale: Scale::default(), analytic_scale: 1.0 }
    }
}

pub const GROUPS: [(&str, &[u8]); 7] = [
    ("thm3.1", &[1, 2]),
    ("thm3.2", &[3]),
    ("thm3.3", &[4, 5]),
    ("reduction", &[6]),
    ("oracle", &[7]),
    ("inout", &[8]),
    ("determinism", &[9]),
];

pub fn group_of(id: u8) -> &'static str {
    GROUPS.iter().find(|(_, ids)| ids.contains(&id)).map_or("?", |(g, _)| g)
}

/// Resolves selectors (group names, `cN` or `N`) to sorted criterion ids.
pub fn resolve_selection(select: &[String]) -> Result<Vec<u8>> {
    if select.is_empty() {
        return Ok((1..=9).collect());
    }
    let mut ids = Vec::new();
    for s in select {
        let key = s.trim().to_ascii_lowercase();
        if key == "all" {
            ids.extend(1..=9);
        } else if let Some((_, g)) = GROUPS.iter().find(|(g, _)| *g == key) {
            ids.extend_from_slice(g);
        } else {
            match key.trim_start_matches('c').parse::<u8>() {
                Ok(n) if (1..=9).contains(&n) => ids.push(n),
                _ => return Err(Error::InvalidParameter(format!("unknown criterion selector {s:?}"))),
            }
        }
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub group: String,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Reported but not gated.
    pub notes: Vec<String>,
}

impl CriterionOutcome {
    fn new(id: u8, title: &str, checks: Vec<Check>, notes: Vec<String>) -> Self {
        CriterionOutcome {
            id,
            group: group_of(id).to_string(),
            title: title.to_string(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            notes,
        }
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(f, "{} C{} [{}] {}", tag(self.passed), self.id, self.group, self.title)?;
        for c in &self.checks {
            writeln!(f, "    {} {}: {}", tag(c.passed), c.label, c.detail)?;
        }
        for n in &self.notes {
            writeln!(f, "    note {n}")?;
        }
        Ok(())
    }
}

fn check(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { label: label.into(), passed, detail: detail.into() }
}

fn ci_text(r: &EstimateReport) -> String {
    format!("mean {:.5} se {:.5} CI [{:.5}, {:.5}]", r.mean, r.stderr, r.ci_low, r.ci_high)
}

fn ci_check(label: String, r: &EstimateReport, target: f64) -> Check {
    check(label, r.ci_contains(target), format!("{} vs {target:.5}", ci_text(r)))
}

fn cfg(trials: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(trials, seed)
}

pub fn run_criterion(id: u8, vc: &ValidationConfig) -> Result<CriterionOutcome> {
    let k = vc.analytic_scale;
    let s = vc.scale;
    let seed = |n: u64| vc.seed.wrapping_add(1000 * id as u64 + n);
    match id {
        1 => baseline_mean(s, k, seed),
        2 => baseline_pmf(s, k, seed),
        3 => sectorized(s, k, seed),
        4 => neutralization_sweep_check(s, k, seed),
        5 => dense_eve_regime(s, k, seed),
        6 => reductions(s, seed),
        7 => oracle(s, seed),
        8 => in_out(s, seed),
        9 => determinism(s, seed),
        _ => Err(Error::InvalidParameter(format!("no criterion {id}"))),
    }
}

pub fn run_selected(vc: &ValidationConfig) -> Result<Vec<CriterionOutcome>> {
    if !(vc.analytic_scale.is_finite() && vc.analytic_scale > 0.0) {
        return Err(Error::InvalidParameter("analytic_scale must be finite and positive".into()));
    }
    resolve_selection(&vc.select)?.into_iter().map(|id| run_criterion(id, vc)).collect()
}

fn baseline_mean(s: Scale, k: f64, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let mut checks = Vec::new();
    for (n, (l, e)) in [(1.0, 0.5), (1.0, 1.0), (2.0, 1.0)].into_iter().enumerate() {
        let target = k * l / e;
        let d = DensityPair::new(l, e)?;
        let exact = estimate_baseline_exact(&d, &cfg(s.exact_trials, seed(2 * n as u64)))?;
        checks.push(ci_check(format!("exact λℓ={l} λe={e}"), &exact, target));
        let model = NetworkModel::new(l, e, Enhancement::None)?;
        let win = estimate_windowed(&model, &cfg(s.windowed_trials, seed(2 * n as u64 + 1)))?;
        checks.push(ci_check(format!("windowed λℓ={l} λe={e}"), &win, target));
    }
    Ok(CriterionOutcome::new(1, "baseline mean degree", checks, vec![]))
}

fn baseline_pmf(s: Scale, k: f64, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let d = DensityPair::new(1.0, 1.0)?;
    let c = cfg(s.exact_trials, seed(0));
    let r = estimate_baseline_exact(&d, &c)?;
    let analytic = Pmf::from_fn(c.max_degree_tracked, |n| k * geometric_pmf(&d, n));
    let tv = tv_distance(&r.empirical_pmf(), &analytic)?;
    let checks = vec![check("TV to geometric, λℓ=λe=1", tv < 0.01, format!("TV {tv:.5} (< 0.01), {} trials", r.trials))];
    Ok(CriterionOutcome::new(2, "baseline degree distribution", checks, vec![]))
}

fn sectorized(s: Scale, k: f64, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let d = DensityPair::new(1.0, 1.0)?;
    let mut checks = Vec::new();
    let mut l1 = None;
    for (n, sectors) in [1u32, 2, 4, 8].into_iter().enumerate() {
        let c = cfg(s.exact_trials, seed(n as u64)).with_max_degree(128);
        let r = estimate_sectorized_exact(&d, sectors, &c)?;
        checks.push(ci_check(format!("mean L={sectors}"), &r, k * sectors as f64));
        let analytic = Pmf::from_fn(c.max_degree_tracked, |m| k * negbin_pmf(&d, sectors, m));
        let tv = tv_distance(&r.empirical_pmf(), &analytic)?;
        checks.push(check(format!("TV to negative binomial L={sectors}"), tv < 0.01, format!("TV {tv:.5} (< 0.01)")));
        if sectors == 1 {
            l1 = Some(r);
        }
    }
    let base = estimate_baseline_exact(&d, &cfg(s.exact_trials, seed(10)))?;
    let l1 = l1.expect("L=1 is in the list");
    checks.push(check(
        "L=1 vs baseline",
        l1.ci_overlaps(&base),
        format!("sectorized {} / baseline {}", ci_text(&l1), ci_text(&base)),
    ));
    Ok(CriterionOutcome::new(3, "sectorized degree", checks, vec![]))
}

const SWEEP_LAMBDA_E: [f64; 3] = [0.1, 0.5, 1.0];

fn neutralization_sweep_check(s: Scale, k: f64, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let rhos: Vec<f64> = (0..=6).map(|i| (2 * i) as f64 / 10.0).collect();
    let pts = neutralization_sweep(1.0, &SWEEP_LAMBDA_E, &rhos, &cfg(s.sweep_trials, seed(0)))?;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for (n, &le) in SWEEP_LAMBDA_E.iter().enumerate() {
        let row = &pts[n * rhos.len()..(n + 1) * rhos.len()];
        let ratio = k * 1.0 / le;
        let zero = &row[0];
        let bounds_ok = (k * zero.row.bound_printed - ratio).abs() <= 1e-12 * ratio
            && (k * zero.row.bound_corrected - ratio).abs() <= 1e-12 * ratio;
        checks.push(check(
            format!("λe={le} ρ=0"),
            zero.report.ci_contains(ratio) && bounds_ok,
            format!(
                "{} vs {ratio:.5}; bounds {:.5} / {:.5}",
                ci_text(&zero.report),
                k * zero.row.bound_printed,
                k * zero.row.bound_corrected
            ),
        ));
        let mut worst = f64::INFINITY;
        let mut below = true;
        for p in row {
            let slack = p.report.mean + 2.0 * p.report.stderr - k * p.row.bound_corrected;
            worst = worst.min(slack);
            below &= slack >= 0.0;
            notes.push(format!(
                "λe={le} ρ={:.1}: sim {:.4} corrected {:.4} ({:.1}% of sim) printed {:.4e}",
                p.row.rho,
                p.report.mean,
                k * p.row.bound_corrected,
                100.0 * k * p.row.bound_corrected / p.report.mean,
                k * p.row.bound_printed
            ));
        }
        checks.push(check(
            format!("λe={le} corrected bound <= mean + 2se"),
            below,
            format!("min slack {worst:.5} over {} radii", row.len()),
        ));
        let mut worst_drop = f64::NEG_INFINITY;
        let mut monotone = true;
        for w in row.windows(2) {
            let (a, b) = (&w[0].report, &w[1].report);
            let noise = 1.959_963_984_540_054 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            let drop = a.mean - b.mean;
            worst_drop = worst_drop.max(drop - noise);
            monotone &= drop <= noise;
        }
        checks.push(check(
            format!("λe={le} mean non-decreasing in ρ"),
            monotone,
            format!("largest drop beyond CI noise {worst_drop:.5} (<= 0)"),
        ));
    }
    Ok(CriterionOutcome::new(4, "neutralization sweep and bound", checks, notes))
}

fn dense_eve_regime(s: Scale, k: f64, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let (ll, le, rho) = (1.0, 50.0, 0.5);
    let ball = ll * PI * rho * rho;
    let p = neutralization_point(ll, le, rho, &cfg(s.sweep_trials, seed(0)))?;
    let (mean, se) = (p.report.mean, p.report.stderr);
    let target = k * ball;
    let rel = (mean - target).abs() / target;
    let corrected = k * p.row.bound_corrected;
    let printed = k * p.row.bound_printed;
    let crel = (corrected - target).abs() / target;
    let d = |e: f64| DensityPair::new(ll, e);
    let gaps: Vec<f64> = [50.0, 200.0, 1000.0]
        .into_iter()
        .map(|e| Ok(k * neutralization_bound(&d(e)?, rho, BoundVariant::Corrected)? - target))
        .collect::<Result<_>>()?;
    let checks = vec![
        check("mean within 10% of λℓπρ²", rel <= 0.10, format!("{} vs {target:.5}, rel. gap {rel:.4}", ci_text(&p.report))),
        check(
            "corrected bound within 10% of λℓπρ² and below mean + 2se",
            crel <= 0.10 && corrected <= mean + 2.0 * se,
            format!("corrected {corrected:.5}, rel. gap {crel:.4}"),
        ),
        check(
            "corrected bound converges as λe grows",
            gaps.windows(2).all(|w| w[1].abs() < w[0].abs()),
            format!("gap at λe=50/200/1000: {:.5} / {:.5} / {:.5}", gaps[0], gaps[1], gaps[2]),
        ),
        check("as-printed bound exceeds the mean", printed > mean + 2.0 * se, format!("printed {printed:.4e} vs mean {mean:.5}")),
    ];
    Ok(CriterionOutcome::new(5, "dense eavesdropper regime", checks, vec![]))
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> P {
    let r = radius * rng.random::<f64>().sqrt();
    P::from_polar(r, TAU * rng.random::<f64>())
}

fn small_realization<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> Result<Realization<f64>> {
    let n_legit = rng.random_range(2..=max_nodes.min(8));
    let n_eve = rng.random_range(0..=max_nodes - n_legit);
    Ok(Realization {
        legit: (0..n_legit).map(|_| uniform_in_disk(rng, 2.0)).collect(),
        eves: (0..n_eve).map(|_| uniform_in_disk(rng, 2.0)).collect(),
        window: Disk::centered(2.0)?,
        origin_is_typical: false,
    })
}

fn random_gain<R: Rng + ?Sized>(rng: &mut R) -> GainFunction<f64> {
    if rng.random_bool(0.5) {
        GainFunction::ShiftedPowerLaw { b: rng.random_range(0.5..4.0) }
    } else {
        GainFunction::Exponential { alpha: rng.random_range(0.2..3.0) }
    }
}

fn reductions(s: Scale, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let mut rng = RngStream::new(seed(0), 0).rng();
    let (mut msr_bad, mut sector_bad, mut rho_bad) = (0usize, 0usize, 0usize);
    let mut families = [0usize; 2];
    for _ in 0..s.instances {
        let real = small_realization(&mut rng, 12)?;
        let base = build_graph_with(EdgeRule::Distance, &NetworkModel::new(1.0, 1.0, Enhancement::None)?, &real)?;
        let noise = rng.random_range(0.1..10.0);
        let budget = LinkBudget::new(rng.random_range(0.1..10.0), noise, noise, 0.0)?;
        for gain in [
            GainFunction::ShiftedPowerLaw { b: rng.random_range(0.5..4.0) },
            GainFunction::Exponential { alpha: rng.random_range(0.2..3.0) },
        ] {
            families[matches!(gain, GainFunction::Exponential { .. }) as usize] += 1;
            let m = NetworkModel::new(1.0, 1.0, Enhancement::None)?.with_budget(budget).with_gain(gain);
            msr_bad += (build_graph_with(EdgeRule::SecrecyRate, &m, &real)? != base) as usize;
        }
        let one = Enhancement::Sectorized { sectors: 1, offsets: OffsetLaw::Fixed { offset: TAU * rng.random::<f64>() } };
        sector_bad += (build_graph(&NetworkModel::new(1.0, 1.0, one)?, &real)? != base) as usize;
        let zero = NetworkModel::new(1.0, 1.0, Enhancement::Neutralization { rho: 0.0 })?;
        rho_bad += (build_graph(&zero, &real)? != base) as usize;
    }
    let n = s.instances;
    let checks = vec![
        check(
            "secrecy rate rule, zero threshold, equal noise = distance rule",
            msr_bad == 0,
            format!("{msr_bad} mismatches over {} power-law and {} exponential evaluations", families[0], families[1]),
        ),
        check("one sector = baseline", sector_bad == 0, format!("{sector_bad} of {n} differ")),
        check("zero neutralization radius = baseline", rho_bad == 0, format!("{rho_bad} of {n} differ")),
    ];
    Ok(CriterionOutcome::new(6, "reduction invariants", checks, vec![]))
}

/// Edge set computed straight from the definitions with exhaustive scans.
fn direct_edges(model: &NetworkModel<f64>, real: &Realization<f64>) -> Vec<(usize, usize)> {
    let dist = |a: P, b: P| ((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)).sqrt();
    let rho = match model.enhancement {
        Enhancement::Neutralization { rho } => rho,
        _ => 0.0,
    };
    let effective: Vec<P> = if rho > 0.0 {
        real.eves.iter().copied().filter(|e| real.legit.iter().all(|x| dist(*x, *e) > rho)).collect()
    } else {
        real.eves.clone()
    };
    let (sectors, offsets) = match &model.enhancement {
        Enhancement::Sectorized { sectors, offsets: OffsetLaw::PerNode { offsets } } => (*sectors, offsets.clone()),
        Enhancement::Sectorized { sectors, offsets: OffsetLaw::Fixed { offset } } => (*sectors, vec![*offset; real.legit.len()]),
        _ => (1, vec![0.0; real.legit.len()]),
    };
    // Sector l covers [φ + l w, φ + (l+1) w) modulo 2π.
    let sector_of = |from: P, to: P, phi: f64| -> u32 {
        let theta = (to.y - from.y).atan2(to.x - from.x);
        let width = TAU / sectors as f64;
        let phi = phi.rem_euclid(TAU);
        for l in 0..sectors {
            let lo = phi + l as f64 * width;
            let hi = lo + width;
            if [-TAU, 0.0, TAU, 2.0 * TAU].iter().any(|shift| {
                let t = theta + shift;
                lo <= t && t < hi
            }) {
                return l;
            }
        }
        unreachable!("sectors cover the circle")
    };
    let gain = |r: f64| match model.gain {
        GainFunction::ShiftedPowerLaw { b } => (1.0 + r).powf(-2.0 * b),
        GainFunction::Exponential { alpha } => (-alpha * r).exp(),
    };
    let b = model.budget;
    let geometric = b.secrecy_threshold == 0.0 && b.noise_legit == b.noise_eve;
    let mut edges = Vec::new();
    for (i, &xi) in real.legit.iter().enumerate() {
        for (j, &xj) in real.legit.iter().enumerate() {
            if i == j {
                continue;
            }
            let target = sector_of(xi, xj, offsets[i]);
            let mut nearest: Option<f64> = None;
            for &e in &effective {
                if sectors > 1 && sector_of(xi, e, offsets[i]) != target {
                    continue;
                }
                let de = dist(xi, e);
                if nearest.is_none_or(|d| de < d) {
                    nearest = Some(de);
                }
            }
            let link = dist(xi, xj);
            let present = if geometric {
                nearest.is_none_or(|d| link < d)
            } else {
                let legit = (1.0 + b.power * gain(link) / b.noise_legit).log2();
                let leak = nearest.map_or(0.0, |d| (1.0 + b.power * gain(d) / b.noise_eve).log2());
                (legit - leak).max(0.0) > b.secrecy_threshold
            };
            if present {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn random_model<R: Rng + ?Sized>(rng: &mut R, n_legit: usize) -> Result<NetworkModel<f64>> {
    let enhancement = match rng.random_range(0..3) {
        0 => Enhancement::None,
        1 => {
            let sectors = rng.random_range(1..=6);
            let offsets = (0..n_legit).map(|_| TAU * rng.random::<f64>()).collect();
            Enhancement::Sectorized { sectors, offsets: OffsetLaw::PerNode { offsets } }
        }
        _ => Enhancement::Neutralization { rho: rng.random_range(0.0..1.0) },
    };
    let budget = if rng.random_bool(0.5) {
        LinkBudget::default()
    } else {
        LinkBudget::new(
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
            if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.5) },
        )?
    };
    Ok(NetworkModel::new(1.0, 1.0, enhancement)?.with_budget(budget).with_gain(random_gain(rng)))
}

fn oracle(s: Scale, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let mut rng = RngStream::new(seed(0), 0).rng();
    let mut bad = 0usize;
    let mut edges = 0usize;
    let mut first_bad = None;
    for t in 0..s.instances {
        let real = small_realization(&mut rng, 10)?;
        let model = random_model(&mut rng, real.legit.len())?;
        let fast = build_graph(&model, &real)?;
        let direct = direct_edges(&model, &real);
        edges += direct.len();
        if fast.edges != direct {
            bad += 1;
            first_bad.get_or_insert(t);
        }
    }
    let checks = vec![check(
        "build_graph = direct evaluation",
        bad == 0,
        format!("{bad} of {} instances differ ({edges} edges total){}", s.instances, first_bad.map_or(String::new(), |t| format!(", first at {t}"))),
    )];
    Ok(CriterionOutcome::new(7, "brute-force oracle", checks, vec![]))
}

fn in_out(s: Scale, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let points = [
        ("none λℓ=1 λe=0.5", NetworkModel::new(1.0, 0.5, Enhancement::None)?),
        ("sectorized L=2 λℓ=λe=1", NetworkModel::new(1.0, 1.0, Enhancement::sectorized(2))?),
        ("neutralization ρ=0.5 λℓ=λe=1", NetworkModel::new(1.0, 1.0, Enhancement::Neutralization { rho: 0.5 })?),
    ];
    let mut checks = Vec::new();
    for (n, (label, m)) in points.iter().enumerate() {
        let out = estimate_windowed(m, &cfg(s.in_out_trials, seed(2 * n as u64)))?;
        let inn = estimate_in_degree_windowed(m, &cfg(s.in_out_trials, seed(2 * n as u64 + 1)))?;
        checks.push(check(*label, out.ci_overlaps(&inn), format!("out {} / in {}", ci_text(&out), ci_text(&inn))));
    }
    Ok(CriterionOutcome::new(8, "in-degree and out-degree means agree", checks, vec![]))
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn determinism(s: Scale, seed: impl Fn(u64) -> u64) -> Result<CriterionOutcome> {
    let n = s.determinism_trials;
    let seeds: Vec<u64> = (0..6).map(seed).collect();
    let seed = |i: u64| seeds[i as usize];
    let d = DensityPair::new(1.0, 0.5)?;
    let neut = NetworkModel::new(1.0, 1.0, Enhancement::Neutralization { rho: 0.4 })?;
    let sect = NetworkModel::new(1.0, 1.0, Enhancement::sectorized(3))?;
    type Runner<'a> = Box<dyn Fn() -> Result<String> + Sync + 'a>;
    let json = |r: Result<EstimateReport>| r.map(|r| serde_json::to_string(&r).expect("report serializes"));
    let runners: Vec<(&str, Runner)> = vec![
        ("exact baseline", Box::new(|| json(estimate_baseline_exact(&d, &cfg(n, seed(0)))))),
        ("exact sectorized", Box::new(|| json(estimate_sectorized_exact(&d, 4, &cfg(n, seed(1)))))),
        ("windowed neutralization", Box::new(|| json(estimate_windowed(&neut, &cfg(n, seed(2)))))),
        ("in-degree sectorized", Box::new(|| json(estimate_in_degree_windowed(&sect, &cfg(n, seed(3)))))),
        (
            "sweep table",
            Box::new(|| {
                let pts = neutralization_sweep(1.0, &[0.5, 1.0], &[0.0, 0.6], &cfg(n / 4 + 1, seed(4)))?;
                let mut buf = Vec::new();
                write_sweep_table(&pts, &mut buf).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                Ok(String::from_utf8(buf).expect("csv is utf-8"))
            }),
        ),
    ];
    let mut checks = Vec::new();
    for (label, run) in &runners {
        let reference = run()?;
        let mut same = run()? == reference;
        for threads in [1, 2, 4] {
            same &= with_threads(threads, run)?? == reference;
        }
        checks.push(check(format!("{label}: rerun and 1/2/4 threads"), same, format!("{} bytes compared", reference.len())));
    }

    // Shards merged in reverse order reproduce the single run.
    let c = cfg(n, seed(5));
    let id = ExperimentId::new("shards", &serde_json::json!({}), c.seed);
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| simulate_out_trial(&neut, c.window, rng).map(|t| t.degree);
    let whole = run_trial_range(&id, &c, 0..n, trial)?;
    let cuts = [0, n / 3, n / 3 + 7, n];
    let mut acc = run_trial_range(&id, &c, cuts[2]..cuts[3], trial)?;
    for w in cuts.windows(2).take(2).collect::<Vec<_>>().into_iter().rev() {
        acc = merge(&acc, &run_trial_range(&id, &c, w[0]..w[1], trial)?)?;
    }
    checks.push(check("merged shards = single run", acc == whole, format!("{} trials in 3 shards", whole.n)));
    Ok(CriterionOutcome::new(9, "determinism", checks, vec![]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(select: &[&str]) -> ValidationConfig {
        ValidationConfig {
            select: select.iter().map(|s| s.to_string()).collect(),
            scale: Scale { instances: 200, ..Scale::default().with_trials(20_000) },
            ..ValidationConfig::default()
        }
    }

    #[test]
    fn selectors() {
        assert_eq!(resolve_selection(&[]).unwrap(), (1..=9).collect::<Vec<_>>());
        assert_eq!(resolve_selection(&["thm3.1".into()]).unwrap(), vec![1, 2]);
        assert_eq!(resolve_selection(&["c7".into(), "3".into(), "thm3.3".into()]).unwrap(), vec![3, 4, 5, 7]);
        assert!(resolve_selection(&["thm9".into()]).is_err());
        assert!(resolve_selection(&["c10".into()]).is_err());
    }

    #[test]
    fn structural_criteria_pass() {
        for o in run_selected(&small(&["reduction", "oracle"])).unwrap() {
            assert!(o.passed, "{o}");
        }
    }

    #[test]
    fn baseline_passes_small_and_fault_is_caught() {
        let ok = run_selected(&small(&["thm3.1"])).unwrap();
        assert!(ok.iter().all(|o| o.passed), "{ok:?}");
        let bad = run_selected(&ValidationConfig { analytic_scale: 1.5, ..small(&["thm3.1"]) }).unwrap();
        assert!(bad.iter().all(|o| !o.passed));
        assert!(run_selected(&ValidationConfig { analytic_scale: 0.0, ..small(&["c1"]) }).is_err());
    }

    #[test]
    fn oracle_sees_sector_and_neutralization_effects() {
        let mut rng = RngStream::new(5, 0).rng();
        let real = small_realization(&mut rng, 10).unwrap();
        let all = NetworkModel::new(1.0, 1.0, Enhancement::Neutralization { rho: 5.0 }).unwrap();
        let n = real.legit.len();
        assert_eq!(direct_edges(&all, &real).len(), n * (n - 1));
    }

    #[test]
    fn display_lines() {
        let o = CriterionOutcome::new(6, "x", vec![check("a", true, "ok"), check("b", false, "bad")], vec![]);
        let text = o.to_string();
        assert!(text.starts_with("FAIL C6 [reduction] x\n"));
        assert!(text.contains("    FAIL b: bad"));
    }
}
