//! Closed-form degree laws of the typical node and the neutralization
//! lower bound.
//!
//! The neutralization bound exists in two variants that differ only in the
//! density inside the inner exponential: [`BoundVariant::AsPrinted`] uses the
//! eavesdropper density, [`BoundVariant::Corrected`] uses the legitimate
//! density, which is what the mean vacant area of the Boolean model gives.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPair<T> {
    pub lambda_l: T,
    pub lambda_e: T,
}

impl<T: Scalar> DensityPair<T> {
    pub fn new(lambda_l: T, lambda_e: T) -> Result<Self> {
        let ok = |v: T| v >= T::zero() && v.is_finite();
        if !ok(lambda_l) || !ok(lambda_e) {
            return Err(Error::InvalidParameter(format!(
                "densities must be finite and >= 0 (got {lambda_l}, {lambda_e})"
            )));
        }
        Ok(DensityPair { lambda_l, lambda_e })
    }

    /// `λℓ / (λℓ + λe)`.
    pub fn p(&self) -> T {
        self.lambda_l / (self.lambda_l + self.lambda_e)
    }

    /// `λe / (λℓ + λe)`.
    pub fn q(&self) -> T {
        self.lambda_e / (self.lambda_l + self.lambda_e)
    }

    fn require_eves(&self) -> Result<()> {
        if self.lambda_e > T::zero() {
            Ok(())
        } else {
            Err(Error::InfiniteMeanDegree)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVariant {
    /// Eavesdropper density in the coverage exponent.
    AsPrinted,
    /// Legitimate density in the coverage exponent.
    Corrected,
}

impl BoundVariant {
    pub const ALL: [BoundVariant; 2] = [BoundVariant::AsPrinted, BoundVariant::Corrected];

    fn coverage_density<T: Scalar>(self, d: &DensityPair<T>) -> T {
        match self {
            BoundVariant::AsPrinted => d.lambda_e,
            BoundVariant::Corrected => d.lambda_l,
        }
    }
}

fn pow_n<T: Scalar>(base: T, n: u64) -> T {
    match i32::try_from(n) {
        Ok(k) => base.powi(k),
        Err(_) => base.powf(T::lit(n as f64)),
    }
}

/// `pⁿ (1 − p)`: out-degree law without enhancement.
pub fn geometric_pmf<T: Scalar>(d: &DensityPair<T>, n: u64) -> T {
    pow_n(d.p(), n) * d.q()
}

/// `C(L+n−1, L−1)`, exact up to `L + n <= 30`.
fn binomial_coefficient<T: Scalar>(sectors: u32, n: u64) -> T {
    let l = sectors as u64;
    if l == 1 {
        return T::one();
    }
    if l + n <= 30 {
        let k = n.min(l - 1);
        let top = l + n - 1;
        // Multiplicative form stays integral at every step.
        let mut c: u64 = 1;
        for i in 0..k {
            c = c * (top - i) / (i + 1);
        }
        T::lit(c as f64)
    } else {
        T::lit(ln_binomial(l + n - 1, l - 1).exp())
    }
}

/// `C(L+n−1, L−1) pⁿ (1 − p)^L`: sectorized out-degree law.
pub fn negbin_pmf<T: Scalar>(d: &DensityPair<T>, sectors: u32, n: u64) -> T {
    assert!(sectors >= 1, "sector count must be >= 1");
    let (p, q) = (d.p(), d.q());
    let l = sectors as u64;
    if l > 1 && l + n > 30 && p > T::zero() && q > T::zero() {
        let ln_coef = ln_binomial(l + n - 1, l - 1);
        if ln_coef > 600.0 {
            // Coefficient and powers would over/underflow separately.
            let ln = ln_coef + n as f64 * p.to_f64_lossy().ln() + l as f64 * q.to_f64_lossy().ln();
            return T::lit(ln.exp());
        }
    }
    binomial_coefficient::<T>(sectors, n) * pow_n(p, n) * pow_n(q, l)
}

/// PMF values from `n = 0` until the remaining tail mass is provably below
/// `tol`. The bound uses the pmf ratio `p (L+n)/(n+1)`, which decreases in
/// `n`, so the tail past `N` is at most `pmf(N) r / (1 − r)`.
pub fn negbin_support<T: Scalar>(d: &DensityPair<T>, sectors: u32, tol: f64) -> Vec<T> {
    let p = d.p().to_f64_lossy();
    let mut out = Vec::new();
    for n in 0u64.. {
        let v = negbin_pmf(d, sectors, n);
        out.push(v);
        let r = p * (sectors as f64 + n as f64) / (n as f64 + 1.0);
        if r < 1.0 && v.to_f64_lossy() * r / (1.0 - r) < tol {
            break;
        }
        if n > 10_000_000 {
            break;
        }
    }
    out
}

/// `λℓ / λe`.
pub fn mean_degree_baseline<T: Scalar>(d: &DensityPair<T>) -> Result<T> {
    d.require_eves()?;
    Ok(d.lambda_l / d.lambda_e)
}

/// `L λℓ / λe`.
pub fn mean_degree_sectorized<T: Scalar>(d: &DensityPair<T>, sectors: u32) -> Result<T> {
    Ok(T::lit(sectors as f64) * mean_degree_baseline(d)?)
}

/// `(λℓ/λe)(π λe ρ² + exp(π λ□ ρ²))` with `λ□` picked by `variant`.
pub fn neutralization_bound<T: Scalar>(d: &DensityPair<T>, rho: T, variant: BoundVariant) -> Result<T> {
    d.require_eves()?;
    check_radius(rho)?;
    let area = T::PI() * rho * rho;
    let ratio = d.lambda_l / d.lambda_e;
    Ok(ratio * (d.lambda_e * area + (variant.coverage_density(d) * area).exp()))
}

fn check_radius<T: Scalar>(rho: T) -> Result<()> {
    if rho >= T::zero() && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("neutralization radius {rho} must be finite and >= 0")))
    }
}

fn check_annulus<T: Scalar>(rho: T, x_norm: T) -> Result<()> {
    check_radius(rho)?;
    if x_norm < rho {
        return Err(Error::InsideNeutralizedDisk { x_norm: x_norm.to_f64_lossy(), rho: rho.to_f64_lossy() });
    }
    Ok(())
}

/// Lower bound on the Palm probability that a legitimate node at distance
/// `x_norm` is closer to the origin than every non-neutralized eavesdropper:
/// `exp(−π λe exp(−π λ□ ρ²)(x_norm² − ρ²))`.
pub fn palm_prob_lower_bound<T: Scalar>(d: &DensityPair<T>, rho: T, x_norm: T, variant: BoundVariant) -> Result<T> {
    check_annulus(rho, x_norm)?;
    let vacancy = (-T::PI() * variant.coverage_density(d) * rho * rho).exp();
    Ok((-T::PI() * d.lambda_e * vacancy * (x_norm * x_norm - rho * rho)).exp())
}

/// Expected area of the annulus `ρ <= |y| <= x_norm` left uncovered by a
/// Boolean model of radius-`ρ` disks on germs of density `λℓ`.
pub fn mean_vacant_area<T: Scalar>(lambda_l: T, rho: T, x_norm: T) -> Result<T> {
    check_annulus(rho, x_norm)?;
    Ok(T::PI() * (x_norm * x_norm - rho * rho) * (-lambda_l * T::PI() * rho * rho).exp())
}
