//! Planar primitives: points, disks, annuli, angular sectors and a uniform
//! grid for fixed-radius neighbour queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    pub fn origin() -> Self {
        Point2 { x: T::zero(), y: T::zero() }
    }

    pub fn from_polar(r: T, theta: T) -> Self {
        Point2 { x: r * theta.cos(), y: r * theta.sin() }
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> T {
        self.x * self.x + self.y * self.y
    }

    pub fn is_origin(self) -> bool {
        self.x == T::zero() && self.y == T::zero()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist_sq(self, other: Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Direction of `to` as seen from `self`, in `[0, 2π)`.
    pub fn angle_to(self, to: Self) -> T {
        normalize_angle((to.y - self.y).atan2(to.x - self.x))
    }
}

/// Euclidean distance `|a - b|`.
pub fn distance<T: Scalar>(a: Point2<T>, b: Point2<T>) -> T {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Maps any finite angle to `[0, 2π)`.
pub fn normalize_angle<T: Scalar>(theta: T) -> T {
    let two_pi = T::TAU();
    let mut a = theta % two_pi;
    if a < T::zero() {
        a = a + two_pi;
    }
    // `a + 2π` can round up to exactly 2π for tiny negative inputs.
    if a >= two_pi {
        a = T::zero();
    }
    a
}

/// Closed disk `B_center(radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk<T> {
    pub center: Point2<T>,
    pub radius: T,
}

impl<T: Scalar> Disk<T> {
    pub fn new(center: Point2<T>, radius: T) -> Result<Self> {
        if !(radius >= T::zero()) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!("disk radius {radius} must be >= 0")));
        }
        Ok(Disk { center, radius })
    }

    pub fn centered(radius: T) -> Result<Self> {
        Self::new(Point2::origin(), radius)
    }

    pub fn area(&self) -> Result<T> {
        if self.radius.is_infinite() {
            return Err(Error::InfiniteArea);
        }
        Ok(T::PI() * self.radius * self.radius)
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        p.dist_sq(self.center) <= self.radius * self.radius
    }
}

/// Annulus `{x : inner <= |x| <= outer}` centered at the origin. `outer`
/// may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus<T> {
    pub inner: T,
    pub outer: T,
}

impl<T: Scalar> Annulus<T> {
    pub fn new(inner: T, outer: T) -> Result<Self> {
        if !(inner >= T::zero()) || !(outer >= inner) || inner.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "annulus requires 0 <= inner <= outer, got inner={inner}, outer={outer}"
            )));
        }
        Ok(Annulus { inner, outer })
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        let r2 = p.norm_sq();
        r2 >= self.inner * self.inner && r2 <= self.outer * self.outer
    }
}

/// `π(outer² − inner²)`; fails for an unbounded annulus.
pub fn annulus_area<T: Scalar>(ann: &Annulus<T>) -> Result<T> {
    if ann.outer.is_infinite() {
        return Err(Error::InfiniteArea);
    }
    Ok(T::PI() * (ann.outer * ann.outer - ann.inner * ann.inner))
}

/// `L` equal angular sectors rotated by an offset `φ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorFrame<T> {
    pub count: u32,
    pub offset: T,
}

impl<T: Scalar> SectorFrame<T> {
    pub fn new(count: u32, offset: T) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("sector count must be >= 1".into()));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("sector offset must be finite".into()));
        }
        Ok(SectorFrame { count, offset: normalize_angle(offset) })
    }

    pub fn width(&self) -> T {
        T::TAU() / T::lit(self.count as f64)
    }

    /// Zero-based sector containing direction `theta`.
    pub fn index0(&self, theta: T) -> u32 {
        if self.count == 1 {
            return 0;
        }
        let rel = normalize_angle(normalize_angle(theta) - self.offset);
        let k = (rel / self.width()).floor().to_u32().unwrap_or(0);
        k.min(self.count - 1)
    }

    /// Zero-based sector of `from` that contains `to`.
    pub fn index0_towards(&self, from: Point2<T>, to: Point2<T>) -> u32 {
        if self.count == 1 {
            return 0;
        }
        self.index0(from.angle_to(to))
    }
}

/// One-based sector index `l ∈ 1..=L` whose half-open interval
/// `[φ + (l−1)·2π/L, φ + l·2π/L)` (mod 2π) contains `theta`.
pub fn sector_index<T: Scalar>(frame: &SectorFrame<T>, theta: T) -> u32 {
    frame.index0(theta) + 1
}

/// True iff some center lies within the closed ball of radius `rho` around `p`.
pub fn covered_by_any<T: Scalar>(p: Point2<T>, centers: &[Point2<T>], rho: T) -> bool {
    let r2 = rho * rho;
    centers.iter().any(|c| p.dist_sq(*c) <= r2)
}

/// Uniform bucket grid over a point set, stored in compressed rows.
#[derive(Debug, Clone)]
pub struct GridIndex<T> {
    min_x: T,
    min_y: T,
    cell: T,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

const MAX_CELLS_PER_AXIS: usize = 1024;

impl<T: Scalar> GridIndex<T> {
    /// Builds an index whose cells are at least `cell` wide.
    pub fn build(points: &[Point2<T>], cell: T) -> Self {
        let (mut min_x, mut min_y) = (T::zero(), T::zero());
        let (mut max_x, mut max_y) = (T::zero(), T::zero());
        if let Some(first) = points.first() {
            min_x = first.x;
            max_x = first.x;
            min_y = first.y;
            max_y = first.y;
        }
        for p in points {
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
            max_y = max_y.max(p.y);
        }
        let extent = (max_x - min_x).max(max_y - min_y);
        let floor_cell = extent / T::lit(MAX_CELLS_PER_AXIS as f64);
        let mut cell = cell.max(floor_cell);
        if !(cell > T::zero()) {
            cell = T::one();
        }
        let axis = |span: T| ((span / cell).floor().to_usize().unwrap_or(0) + 1).min(MAX_CELLS_PER_AXIS + 1);
        let nx = axis(max_x - min_x);
        let ny = axis(max_y - min_y);

        let mut grid = GridIndex { min_x, min_y, cell, nx, ny, starts: vec![0; nx * ny + 1], items: Vec::new() };
        let keys: Vec<usize> = points.iter().map(|p| grid.key(*p)).collect();
        for &k in &keys {
            grid.starts[k + 1] += 1;
        }
        for i in 1..grid.starts.len() {
            grid.starts[i] += grid.starts[i - 1];
        }
        let mut fill = grid.starts.clone();
        grid.items = vec![0; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            grid.items[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        grid
    }

    fn coord(&self, v: T, min: T, n: usize) -> usize {
        let c = ((v - min) / self.cell).floor();
        if c < T::zero() {
            0
        } else {
            c.to_usize().unwrap_or(usize::MAX).min(n - 1)
        }
    }

    fn key(&self, p: Point2<T>) -> usize {
        self.coord(p.y, self.min_y, self.ny) * self.nx + self.coord(p.x, self.min_x, self.nx)
    }

    /// Visits indices of points whose cells intersect the square around `p`
    /// of half-width `r`, stopping early when `visit` returns `true`.
    /// Returns whether a visit returned `true`.
    pub fn any_candidate(&self, p: Point2<T>, r: T, mut visit: impl FnMut(usize) -> bool) -> bool {
        if self.items.is_empty() {
            return false;
        }
        let x0 = self.coord(p.x - r, self.min_x, self.nx);
        let x1 = self.coord(p.x + r, self.min_x, self.nx);
        let y0 = self.coord(p.y - r, self.min_y, self.ny);
        let y1 = self.coord(p.y + r, self.min_y, self.ny);
        for cy in y0..=y1 {
            let row = cy * self.nx;
            for cx in x0..=x1 {
                let k = row + cx;
                let (s, e) = (self.starts[k] as usize, self.starts[k + 1] as usize);
                for &i in &self.items[s..e] {
                    if visit(i as usize) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Whether any indexed point within the closed ball `B_p(r)` satisfies `pred`.
    pub fn any_within_where(
        &self,
        points: &[Point2<T>],
        p: Point2<T>,
        r: T,
        mut pred: impl FnMut(usize) -> bool,
    ) -> bool {
        let r2 = r * r;
        self.any_candidate(p, r, |i| points[i].dist_sq(p) <= r2 && pred(i))
    }

    pub fn any_within(&self, points: &[Point2<T>], p: Point2<T>, r: T) -> bool {
        self.any_within_where(points, p, r, |_| true)
    }
}
