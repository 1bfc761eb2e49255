//! Secrecy-graph edge rules and graph construction.
//!
//! A directed link `x_i -> x_j` between legitimate nodes exists when its
//! maximum secrecy rate exceeds the threshold, where the competing
//! eavesdropper is the strongest one "in scope" for the source: all
//! eavesdroppers, those in the source's sector containing the destination,
//! or those surviving neutralization.

use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, GridIndex, Point2, SectorFrame};
use crate::point_process::Realization;
use crate::scalar::Scalar;

/// Distance-dependent power gain `g(r)`: continuous, strictly decreasing,
/// vanishing at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainFunction<T> {
    /// `g(r) = (1 + r)^(-2b)`.
    ShiftedPowerLaw { b: T },
    /// `g(r) = exp(-alpha r)`.
    Exponential { alpha: T },
}

impl<T: Scalar> GainFunction<T> {
    pub fn shifted_power_law(b: T) -> Result<Self> {
        Self::ShiftedPowerLaw { b }.validated()
    }

    pub fn exponential(alpha: T) -> Result<Self> {
        Self::Exponential { alpha }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Self::ShiftedPowerLaw { b } => b > T::zero() && b.is_finite(),
            Self::Exponential { alpha } => alpha > T::zero() && alpha.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("gain parameters must be finite and positive: {self:?}")))
        }
    }

    pub fn eval(&self, r: T) -> T {
        match *self {
            Self::ShiftedPowerLaw { b } => (T::one() + r).powf(-(b + b)),
            Self::Exponential { alpha } => (-alpha * r).exp(),
        }
    }
}

impl<T: Scalar> Default for GainFunction<T> {
    fn default() -> Self {
        Self::ShiftedPowerLaw { b: T::lit(2.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget<T> {
    /// Transmit power `P` in watts.
    pub power: T,
    pub noise_legit: T,
    pub noise_eve: T,
    /// Secrecy-rate threshold in bits per complex dimension.
    pub secrecy_threshold: T,
}

impl<T: Scalar> LinkBudget<T> {
    pub fn new(power: T, noise_legit: T, noise_eve: T, secrecy_threshold: T) -> Result<Self> {
        Self { power, noise_legit, noise_eve, secrecy_threshold }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if pos(self.power) && pos(self.noise_legit) && pos(self.noise_eve) && self.secrecy_threshold >= T::zero() {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("invalid link budget {self:?}")))
        }
    }

    /// Zero threshold with equal noise: the edge rule is purely geometric.
    pub fn reduces_to_distance_rule(&self) -> bool {
        self.secrecy_threshold == T::zero() && self.noise_legit == self.noise_eve
    }
}

impl<T: Scalar> Default for LinkBudget<T> {
    fn default() -> Self {
        LinkBudget { power: T::one(), noise_legit: T::one(), noise_eve: T::one(), secrecy_threshold: T::zero() }
    }
}

/// How each legitimate node orients its sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffsetLaw<T> {
    /// Independent uniform offsets on `[0, 2π)`, drawn per realization.
    Uniform,
    /// Every node uses the same offset.
    Fixed { offset: T },
    /// One offset per legitimate node, indexed like the realization.
    PerNode { offsets: Vec<T> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Enhancement<T> {
    None,
    Sectorized { sectors: u32, offsets: OffsetLaw<T> },
    Neutralization { rho: T },
}

impl<T: Scalar> Enhancement<T> {
    pub fn sectorized(sectors: u32) -> Self {
        Enhancement::Sectorized { sectors, offsets: OffsetLaw::Uniform }
    }

    pub fn validated(self) -> Result<Self> {
        match &self {
            Enhancement::Sectorized { sectors: 0, .. } => {
                Err(Error::InvalidParameter("sector count must be >= 1".into()))
            }
            Enhancement::Neutralization { rho } if !(*rho >= T::zero() && rho.is_finite()) => {
                Err(Error::InvalidParameter(format!("neutralization radius {rho} must be finite and >= 0")))
            }
            _ => Ok(self),
        }
    }

    pub fn neutralization_radius(&self) -> T {
        match self {
            Enhancement::Neutralization { rho } => *rho,
            _ => T::zero(),
        }
    }
}

/// Densities, enhancement, link budget and gain function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct NetworkModel<T> {
    pub lambda_l: T,
    pub lambda_e: T,
    pub enhancement: Enhancement<T>,
    #[serde(default)]
    pub budget: LinkBudget<T>,
    #[serde(default)]
    pub gain: GainFunction<T>,
}

impl<T: Scalar> NetworkModel<T> {
    pub fn new(lambda_l: T, lambda_e: T, enhancement: Enhancement<T>) -> Result<Self> {
        Self { lambda_l, lambda_e, enhancement, budget: LinkBudget::default(), gain: GainFunction::default() }
            .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let dens = |v: T| v >= T::zero() && v.is_finite();
        if !dens(self.lambda_l) || !dens(self.lambda_e) {
            return Err(Error::InvalidParameter("densities must be finite and >= 0".into()));
        }
        self.budget.validated()?;
        self.gain.validated()?;
        Ok(Self { enhancement: self.enhancement.validated()?, ..self })
    }

    pub fn with_budget(mut self, budget: LinkBudget<T>) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_gain(mut self, gain: GainFunction<T>) -> Self {
        self.gain = gain;
        self
    }

    pub fn natural_rule(&self) -> EdgeRule {
        if self.budget.reduces_to_distance_rule() {
            EdgeRule::Distance
        } else {
            EdgeRule::SecrecyRate
        }
    }

    /// Replaces a uniform offset law by `n` independently drawn offsets.
    pub fn realize_offsets<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Self {
        let mut out = self.clone();
        if let Enhancement::Sectorized { offsets: law @ OffsetLaw::Uniform, .. } = &mut out.enhancement {
            let offsets = (0..n).map(|_| T::lit(std::f64::consts::TAU * rng.random::<f64>())).collect();
            *law = OffsetLaw::PerNode { offsets };
        }
        out
    }

    /// Sector frame of legitimate node `i` out of `n`; `None` when not sectorized.
    pub fn frame_of(&self, i: usize, n: usize) -> Result<Option<SectorFrame<T>>> {
        let Enhancement::Sectorized { sectors, offsets } = &self.enhancement else {
            return Ok(None);
        };
        let offset = match offsets {
            OffsetLaw::Fixed { offset } => *offset,
            OffsetLaw::PerNode { offsets } if offsets.len() == n => offsets[i],
            OffsetLaw::PerNode { offsets } => {
                return Err(Error::FramesMissing { expected: n, got: offsets.len() })
            }
            OffsetLaw::Uniform => return Err(Error::FramesMissing { expected: n, got: 0 }),
        };
        SectorFrame::new(*sectors, offset).map(Some)
    }
}

/// Which edge criterion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// `|x_i − x_j| < |x_i − e*|`.
    Distance,
    /// Maximum secrecy rate strictly above the threshold.
    SecrecyRate,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DirectedGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl DirectedGraph {
    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == v).count()
    }

    pub fn contains(&self, src: usize, dst: usize) -> bool {
        self.edges.contains(&(src, dst))
    }

    /// Writes the `src,dst` edge table.
    pub fn write_edge_table<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["src", "dst"])?;
        for (s, d) in &self.edges {
            wtr.write_record([s.to_string(), d.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `P · g(|a − b|)`.
pub fn received_power<T: Scalar>(budget: &LinkBudget<T>, gain: &GainFunction<T>, a: Point2<T>, b: Point2<T>) -> Result<T> {
    if a == b {
        return Err(Error::ZeroLengthLink);
    }
    Ok(budget.power * gain.eval(distance(a, b)))
}

/// Index and distance of the closest eavesdropper; ties go to the lowest index.
pub fn nearest_eve<T: Scalar>(xi: Point2<T>, eves: &[Point2<T>]) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (k, e) in eves.iter().enumerate() {
        let d2 = xi.dist_sq(*e);
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((k, d2));
        }
    }
    best.map(|(k, d2)| (k, d2.sqrt()))
}

fn log2_1p<T: Scalar>(snr: T) -> T {
    snr.ln_1p() / T::LN_2()
}

/// Secrecy rate given the distance to the strongest eavesdropper (`None`
/// when no eavesdropper is in scope).
fn secrecy_rate_at<T: Scalar>(budget: &LinkBudget<T>, gain: &GainFunction<T>, link: T, eve: Option<T>) -> T {
    let legit = log2_1p(budget.power * gain.eval(link) / budget.noise_legit);
    let leak = eve.map_or(T::zero(), |d| log2_1p(budget.power * gain.eval(d) / budget.noise_eve));
    (legit - leak).max(T::zero())
}

/// Maximum secrecy rate of the link `xi -> xj` against all of `eves`.
pub fn max_secrecy_rate<T: Scalar>(
    budget: &LinkBudget<T>,
    gain: &GainFunction<T>,
    xi: Point2<T>,
    xj: Point2<T>,
    eves: &[Point2<T>],
) -> Result<T> {
    if xi == xj {
        return Err(Error::ZeroLengthLink);
    }
    let nearest = nearest_eve(xi, eves).map(|(_, d)| d);
    Ok(secrecy_rate_at(budget, gain, distance(xi, xj), nearest))
}

/// Eavesdroppers outside every closed ball of radius `rho` around a
/// legitimate node. At `rho = 0` nothing is neutralized.
pub fn effective_eves<T: Scalar>(real: &Realization<T>, rho: T) -> Vec<Point2<T>> {
    if rho <= T::zero() || real.legit.is_empty() {
        return real.eves.clone();
    }
    let grid = GridIndex::build(&real.legit, rho);
    real.eves.iter().copied().filter(|e| !grid.any_within(&real.legit, *e, rho)).collect()
}

/// Per-realization data shared by all edge queries.
struct EdgeContext<'a, T: Clone> {
    model: &'a NetworkModel<T>,
    legit: &'a [Point2<T>],
    eves: std::borrow::Cow<'a, [Point2<T>]>,
    rule: EdgeRule,
}

impl<'a, T: Scalar> EdgeContext<'a, T> {
    fn new(model: &'a NetworkModel<T>, real: &'a Realization<T>, rule: EdgeRule) -> Result<Self> {
        let eves = match &model.enhancement {
            Enhancement::Neutralization { rho } => std::borrow::Cow::Owned(effective_eves(real, *rho)),
            _ => std::borrow::Cow::Borrowed(&real.eves[..]),
        };
        // Surface missing frames before any edge is evaluated.
        if !real.legit.is_empty() {
            model.frame_of(0, real.legit.len())?;
        }
        Ok(EdgeContext { model, legit: &real.legit, eves, rule })
    }

    /// Distance from `xi` to the nearest in-scope eavesdropper for the
    /// destination `xj`.
    fn nearest_in_scope(&self, i: usize, xj: Point2<T>) -> Result<Option<T>> {
        let xi = self.legit[i];
        let nearest = match self.model.frame_of(i, self.legit.len())? {
            Some(frame) if frame.count > 1 => {
                let target = frame.index0_towards(xi, xj);
                self.eves
                    .iter()
                    .filter(|e| frame.index0_towards(xi, **e) == target)
                    .map(|e| xi.dist_sq(*e))
                    .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
                    .map(|d2| d2.sqrt())
            }
            _ => nearest_eve(xi, &self.eves).map(|(_, d)| d),
        };
        Ok(nearest)
    }

    fn edge(&self, i: usize, j: usize) -> Result<bool> {
        let n = self.legit.len();
        if i >= n {
            return Err(Error::VertexOutOfRange(i));
        }
        if j >= n {
            return Err(Error::VertexOutOfRange(j));
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        let (xi, xj) = (self.legit[i], self.legit[j]);
        if xi == xj {
            return Err(Error::ZeroLengthLink);
        }
        let link = distance(xi, xj);
        let eve = self.nearest_in_scope(i, xj)?;
        Ok(match self.rule {
            EdgeRule::Distance => eve.is_none_or(|d| link < d),
            EdgeRule::SecrecyRate => {
                secrecy_rate_at(&self.model.budget, &self.model.gain, link, eve) > self.model.budget.secrecy_threshold
            }
        })
    }
}

/// Whether the directed link between legitimate nodes `i -> j` exists.
pub fn edge_exists<T: Scalar>(model: &NetworkModel<T>, real: &Realization<T>, i: usize, j: usize) -> Result<bool> {
    edge_exists_with(model.natural_rule(), model, real, i, j)
}

pub fn edge_exists_with<T: Scalar>(
    rule: EdgeRule,
    model: &NetworkModel<T>,
    real: &Realization<T>,
    i: usize,
    j: usize,
) -> Result<bool> {
    EdgeContext::new(model, real, rule)?.edge(i, j)
}

pub fn build_graph<T: Scalar>(model: &NetworkModel<T>, real: &Realization<T>) -> Result<DirectedGraph> {
    build_graph_with(model.natural_rule(), model, real)
}

pub fn build_graph_with<T: Scalar>(rule: EdgeRule, model: &NetworkModel<T>, real: &Realization<T>) -> Result<DirectedGraph> {
    let ctx = EdgeContext::new(model, real, rule)?;
    let n = real.legit.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && ctx.edge(i, j)? {
                edges.push((i, j));
            }
        }
    }
    Ok(DirectedGraph { vertices: n, edges })
}

pub fn out_degree_origin<T: Scalar>(model: &NetworkModel<T>, real: &Realization<T>) -> Result<usize> {
    let o = real.origin_index().ok_or(Error::OriginMissing)?;
    let ctx = EdgeContext::new(model, real, model.natural_rule())?;
    let mut count = 0;
    for j in (0..real.legit.len()).filter(|&j| j != o) {
        count += ctx.edge(o, j)? as usize;
    }
    Ok(count)
}

pub fn in_degree_origin<T: Scalar>(model: &NetworkModel<T>, real: &Realization<T>) -> Result<usize> {
    let o = real.origin_index().ok_or(Error::OriginMissing)?;
    let ctx = EdgeContext::new(model, real, model.natural_rule())?;
    let mut count = 0;
    for i in (0..real.legit.len()).filter(|&i| i != o) {
        count += ctx.edge(i, o)? as usize;
    }
    Ok(count)
}
