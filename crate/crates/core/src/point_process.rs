//! Homogeneous Poisson point processes on planar windows, the typical-node
//! construction, and exact nearest-neighbour distance samplers.

use std::io;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, Disk, Point2};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PppParams<T> {
    pub density: T,
}

impl<T: Scalar> PppParams<T> {
    pub fn new(density: T) -> Result<Self> {
        if !(density >= T::zero()) || !density.is_finite() {
            return Err(Error::InvalidParameter(format!("density {density} must be finite and >= 0")));
        }
        Ok(PppParams { density })
    }
}

/// Sampling region: a disk anywhere in the plane or an origin-centred annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region<T> {
    Disk(Disk<T>),
    Annulus(Annulus<T>),
}

impl<T: Scalar> Region<T> {
    pub fn area(&self) -> Result<T> {
        match self {
            Region::Disk(d) => d.area(),
            Region::Annulus(a) => crate::geometry::annulus_area(a),
        }
    }
}

/// Identifies an independent random substream.
///
/// The same `(seed, stream_index)` always produces the same sequence,
/// independent of thread scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        RngStream { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Exact Poisson variate with the given mean; zero mean gives zero.
pub fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as u64
}

fn uniform_in_region<T: Scalar, R: Rng + ?Sized>(region: &Region<T>, rng: &mut R) -> Point2<T> {
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    let u: f64 = rng.random();
    match region {
        Region::Disk(d) => {
            let r = d.radius.to_f64_lossy() * u.sqrt();
            let off = Point2::<T>::from_polar(T::lit(r), T::lit(theta));
            Point2::new(d.center.x + off.x, d.center.y + off.y)
        }
        Region::Annulus(a) => {
            let (lo, hi) = (a.inner.to_f64_lossy(), a.outer.to_f64_lossy());
            let r = (lo * lo + u * (hi * hi - lo * lo)).sqrt();
            // Rounding may push r a hair outside [lo, hi].
            Point2::from_polar(T::lit(r.clamp(lo, hi)), T::lit(theta))
        }
    }
}

/// Samples a homogeneous Poisson process of the given density on `region`.
pub fn sample_ppp<T: Scalar, R: Rng + ?Sized>(
    params: PppParams<T>,
    region: &Region<T>,
    rng: &mut R,
) -> Result<Vec<Point2<T>>> {
    let area = region.area()?;
    let n = poisson_count(rng, (params.density * area).to_f64_lossy());
    Ok((0..n).map(|_| uniform_in_region(region, rng)).collect())
}

/// Appends a Poisson sample on `region` to `out`; used for incremental
/// window growth.
pub(crate) fn extend_ppp<R: Rng + ?Sized>(out: &mut Vec<Point2<f64>>, density: f64, region: &Region<f64>, rng: &mut R) {
    let area = region.area().expect("finite sampling region");
    let n = poisson_count(rng, density * area);
    out.reserve(n as usize);
    for _ in 0..n {
        out.push(uniform_in_region(region, rng));
    }
}

/// Inverse CDF of the nearest-point distance of a planar Poisson process with
/// the given density: `F(r) = 1 − exp(−density·π·r²)`.
fn nearest_distance_inverse<T: Scalar>(density: f64, u: f64) -> T {
    T::lit((-(1.0 - u).ln() / (std::f64::consts::PI * density)).sqrt())
}

/// Distance from the origin to the nearest point of an unbounded
/// homogeneous process of density `lambda_e`.
pub fn sample_nearest_eve_distance<T: Scalar, R: Rng + ?Sized>(lambda_e: T, rng: &mut R) -> Result<T> {
    let d = lambda_e.to_f64_lossy();
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::NearestDistanceUndefined);
    }
    Ok(nearest_distance_inverse(d, rng.random()))
}

/// Nearest-eavesdropper distance within one of `sectors` equal sectors: the
/// mapped process of squared distances has rate `π·lambda_e/sectors`.
pub fn sample_sector_nearest_eve_distance<T: Scalar, R: Rng + ?Sized>(
    lambda_e: T,
    sectors: u32,
    rng: &mut R,
) -> Result<T> {
    if sectors == 0 {
        return Err(Error::InvalidParameter("sector count must be >= 1".into()));
    }
    let d = lambda_e.to_f64_lossy();
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::NearestDistanceUndefined);
    }
    Ok(nearest_distance_inverse(d / sectors as f64, rng.random()))
}

/// Sampled legitimate and eavesdropper locations within a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization<T> {
    pub legit: Vec<Point2<T>>,
    pub eves: Vec<Point2<T>>,
    pub window: Disk<T>,
    pub origin_is_typical: bool,
}

impl<T: Scalar> Realization<T> {
    /// Samples both processes independently on `window`.
    pub fn sample<R: Rng + ?Sized>(lambda_l: T, lambda_e: T, window: Disk<T>, rng: &mut R) -> Result<Self> {
        let region = Region::Disk(window);
        let legit = sample_ppp(PppParams::new(lambda_l)?, &region, rng)?;
        let eves = sample_ppp(PppParams::new(lambda_e)?, &region, rng)?;
        Ok(Realization { legit, eves, window, origin_is_typical: false })
    }

    /// Index of the typical node, when present.
    pub fn origin_index(&self) -> Option<usize> {
        (self.origin_is_typical && self.legit.first().is_some_and(|p| p.is_origin())).then_some(0)
    }
}

/// Adds a legitimate node at the origin, stored at index 0.
pub fn with_typical_node<T: Scalar>(mut real: Realization<T>) -> Realization<T> {
    if real.origin_index().is_some() {
        return real;
    }
    real.legit.retain(|p| !p.is_origin());
    real.legit.insert(0, Point2::origin());
    real.origin_is_typical = true;
    real
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    id: usize,
    kind: String,
    x: f64,
    y: f64,
}

/// Writes the `id,kind,x,y` node table. Legitimate nodes come first, so their
/// ids are the graph vertex ids; eavesdroppers follow.
pub fn write_node_table<T: Scalar, W: io::Write>(real: &Realization<T>, w: W) -> csv::Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let legit = real.legit.iter().map(|p| ("legit", p));
    let eves = real.eves.iter().map(|p| ("eve", p));
    for (id, (kind, p)) in legit.chain(eves).enumerate() {
        wtr.serialize(NodeRow { id, kind: kind.to_string(), x: p.x.to_f64_lossy(), y: p.y.to_f64_lossy() })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Legitimate and eavesdropper locations, in table order.
pub type NodeLists = (Vec<Point2<f64>>, Vec<Point2<f64>>);

/// Parses a node table back into legitimate and eavesdropper lists.
pub fn read_node_table<R: io::Read>(r: R) -> Result<NodeLists> {
    let mut rdr = csv::Reader::from_reader(r);
    let (mut legit, mut eves) = (Vec::new(), Vec::new());
    for row in rdr.deserialize::<NodeRow>() {
        let row = row.map_err(|e| Error::InvalidParameter(format!("node table: {e}")))?;
        let p = Point2::new(row.x, row.y);
        match row.kind.as_str() {
            "legit" => legit.push(p),
            "eve" => eves.push(p),
            other => return Err(Error::InvalidParameter(format!("unknown node kind {other:?}"))),
        }
    }
    Ok((legit, eves))
}
