//! Cauchy, psi, chi, R and S transforms (positive and symmetric branches),
//! and the identities connecting them, including the constructive S-from-R
//! pipeline through C(z) = z R(z).
//!
//! All inversions reduce to one primitive: inverting a strictly increasing
//! function on the negative half-axis by bracket expansion, bisection in log
//! space, and a few regula-falsi polish steps.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{Map, PositiveRealMeasure, ShapeTag, SymmetricRealMeasure};

/// Absolute tolerance on the psi-residual of chi (and every other inversion).
pub const ROOT_TOL: f64 = 1e-12;
/// Width of the z ~ 0 pad inside which S-tables answer with their limit.
const ENDPOINT_PAD: f64 = 1e-9;

// ---------------------------------------------------------------------------
// closed-form Marchenko-Pastur backend
// ---------------------------------------------------------------------------

/// psi of the free-Poisson(lambda) law, written in a form free of
/// cancellation on the whole negative axis:
/// psi(u) = 4*lambda*u / ((1-(1-l)u + D)(1+(1-l)u + D)),
/// D = sqrt(1 - 2(1+l)u + (1-l)^2 u^2).
pub(crate) fn psi_mp(lambda: f64, u: f64) -> f64 {
    let l = lambda;
    let d = (1.0 - 2.0 * (1.0 + l) * u + (1.0 - l) * (1.0 - l) * u * u).sqrt();
    4.0 * l * u / ((1.0 - (1.0 - l) * u + d) * (1.0 + (1.0 - l) * u + d))
}

/// Cauchy transform of free-Poisson(lambda) for real x < 0, on the branch
/// with G ~ 1/x at -infinity: G(x) = 2 / (x + 1 - lambda - D),
/// D = sqrt((x-1-lambda)^2 - 4 lambda) > 0.
pub(crate) fn g_neg_mp(lambda: f64, x: f64) -> f64 {
    let l = lambda;
    let d = ((x - 1.0 - l) * (x - 1.0 - l) - 4.0 * l).sqrt();
    2.0 / (x + 1.0 - l - d)
}

// ---------------------------------------------------------------------------
// psi and the negative-axis Cauchy transform
// ---------------------------------------------------------------------------

/// psi_mu(u) = int u t/(1 - u t) dmu(t) for u < 0; strictly increasing with
/// range (delta - 1, 0).
pub fn psi(mu: &PositiveRealMeasure, u: f64) -> f64 {
    assert!(u < 0.0, "psi requires u < 0");
    match mu.tag {
        ShapeTag::Mp { lambda, scale } => psi_mp(lambda, scale * u),
        ShapeTag::MpInv { lambda, scale } => {
            // law of scale/Y: psi(u) = -v G_mp(v) with v = scale*u
            let v = scale * u;
            -v * g_neg_mp(lambda, v)
        }
        _ => psi_numeric(mu, u),
    }
}

fn psi_numeric(mu: &PositiveRealMeasure, u: f64) -> f64 {
    let mut total = 0.0;
    for &(x, w) in &mu.atoms {
        total += w * u * x / (1.0 - u * x);
    }
    if let Some(d) = &mu.density {
        total += d.psi_integral(u);
    }
    total
}

/// Cauchy transform on the real axis left of the support (used by the
/// R-transform machinery; prefers the closed form for tagged measures).
pub(crate) fn g_neg(mu: &PositiveRealMeasure, x: f64) -> f64 {
    match mu.tag {
        ShapeTag::Mp { lambda, scale } => g_neg_mp(lambda, x / scale) / scale,
        ShapeTag::MpInv { lambda, scale } => {
            // law of scale/Y: G(x) = (1 - (scale/x) G_mp(scale/x)) / x
            let a = scale / x;
            (1.0 - a * g_neg_mp(lambda, a)) / x
        }
        _ => {
            let mut total = if mu.atom0 > 0.0 { mu.atom0 / x } else { 0.0 };
            for &(t, w) in &mu.atoms {
                total += w / (x - t);
            }
            if let Some(d) = &mu.density {
                total += d.resolvent_neg(x);
            }
            total
        }
    }
}

/// G_mu(z) = int dmu(t)/(z - t) by atoms + grid quadrature. Real arguments
/// must sit strictly left of the support.
pub fn cauchy(mu: &PositiveRealMeasure, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re >= mu.inf_support() && z.re <= mu.sup_support() {
        return Err(Error::PointOnSupport(z.re));
    }
    let mut total = Complex64::new(0.0, 0.0);
    if mu.atom0 > 0.0 {
        total += mu.atom0 / z;
    }
    for &(t, w) in &mu.atoms {
        total += w / (z - t);
    }
    if let Some(d) = &mu.density {
        total += d.resolvent(z);
    }
    Ok(total)
}

/// Cauchy transform of a symmetric measure: G_nu(z) = (G+(z) - G+(-z))/2
/// where G+ is the transform of the positive part.
pub fn cauchy_symmetric(nu: &SymmetricRealMeasure, z: Complex64) -> Result<Complex64> {
    let sup = nu.positive_part.sup_support();
    if z.im == 0.0 && z.re.abs() <= sup {
        return Err(Error::PointOnSupport(z.re));
    }
    let gp = cauchy_unchecked(&nu.positive_part, z);
    let gm = cauchy_unchecked(&nu.positive_part, -z);
    Ok(0.5 * (gp - gm))
}

fn cauchy_unchecked(mu: &PositiveRealMeasure, z: Complex64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    if mu.atom0 > 0.0 {
        total += mu.atom0 / z;
    }
    for &(t, w) in &mu.atoms {
        total += w / (z - t);
    }
    if let Some(d) = &mu.density {
        total += d.resolvent(z);
    }
    total
}

// ---------------------------------------------------------------------------
// monotone inversion primitive
// ---------------------------------------------------------------------------

/// Invert a strictly increasing function h on the negative axis:
/// find u in [left, right] (left < right < 0) with h(u) = target.
/// Geometric bisection (both endpoints negative) to machine-width bracket,
/// then up to 10 regula-falsi polish steps; the best residual wins.
fn invert_increasing_negative<F: Fn(f64) -> f64>(
    h: F,
    target: f64,
    mut left: f64,
    mut right: f64,
) -> f64 {
    let mut fl = h(left) - target;
    let mut fr = h(right) - target;
    if fl >= 0.0 {
        return left;
    }
    if fr <= 0.0 {
        return right;
    }
    let mut best = if -fl < fr { left } else { right };
    let mut best_res = (-fl).min(fr);
    for _ in 0..200 {
        if left / right - 1.0 < 1e-15 {
            break;
        }
        let mid = -(left * right).sqrt();
        let fm = h(mid) - target;
        if fm.abs() < best_res {
            best = mid;
            best_res = fm.abs();
        }
        if fm < 0.0 {
            left = mid;
            fl = fm;
        } else {
            right = mid;
            fr = fm;
        }
        if fm == 0.0 {
            return mid;
        }
    }
    for _ in 0..10 {
        let denom = fr - fl;
        if denom <= 0.0 {
            break;
        }
        let u = left - fl * (right - left) / denom;
        if !(u > left && u < right) {
            break;
        }
        let fu = h(u) - target;
        if fu.abs() < best_res {
            best = u;
            best_res = fu.abs();
        }
        if fu == 0.0 {
            return u;
        }
        if fu < 0.0 {
            left = u;
            fl = fu;
        } else {
            right = u;
            fr = fu;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// chi and the S-transform
// ---------------------------------------------------------------------------

/// chi_mu(w): the unique u < 0 with psi(u) = w, for w in (delta - 1, 0).
pub fn chi(mu: &PositiveRealMeasure, w: f64) -> Result<f64> {
    let dl = mu.atom0 - 1.0;
    if !(w > dl && w < 0.0) {
        return Err(Error::OutOfDomain { arg: w, left: dl });
    }
    let f = |u: f64| psi(mu, u);
    let mut right = -1e-12;
    let mut guard = 0;
    while f(right) < w {
        right /= 1024.0;
        guard += 1;
        if guard > 60 {
            break;
        }
    }
    let mut left = -1.0_f64;
    guard = 0;
    while f(left) > w {
        left *= 2.0;
        guard += 1;
        if guard > 960 || left < -1e280 {
            break;
        }
    }
    if left >= right {
        left = 2.0 * right;
    }
    Ok(invert_increasing_negative(f, w, left, right))
}

/// S_mu(w) = (1+w)/w * chi_mu(w) > 0 on (delta - 1, 0).
pub fn s_transform(mu: &PositiveRealMeasure, w: f64) -> Result<f64> {
    if mu.is_delta_zero() {
        return Err(Error::DeltaZeroMeasure);
    }
    let u = chi(mu, w)?;
    Ok((1.0 + w) / w * u)
}

/// How an S-transform table came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Analytic,
    PsiInversion,
    Compressed,
}

/// An evaluable S-transform on (domain_left, 0), with the limit at 0- kept
/// alongside so evaluation inside the 1e-9 endpoint pad never stalls a root
/// finder (the limit equals 1/first-moment, or 0 for infinite first moment).
#[derive(Clone)]
pub struct STransformTable {
    domain_left: f64,
    provenance: Provenance,
    limit_at_zero: Option<f64>,
    eval_fn: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
}

impl STransformTable {
    pub fn from_fn<F>(
        domain_left: f64,
        provenance: Provenance,
        limit_at_zero: Option<f64>,
        f: F,
    ) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        STransformTable {
            domain_left,
            provenance,
            limit_at_zero,
            eval_fn: Arc::new(f),
        }
    }

    pub fn domain_left(&self) -> f64 {
        self.domain_left
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn limit_at_zero(&self) -> Option<f64> {
        self.limit_at_zero
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if z > -ENDPOINT_PAD && z <= 0.0 {
            if let Some(l) = self.limit_at_zero {
                return Ok(l);
            }
        }
        if !(z > self.domain_left && z < 0.0) {
            return Err(Error::OutOfDomain {
                arg: z,
                left: self.domain_left,
            });
        }
        (self.eval_fn)(z)
    }
}

/// Build the S-transform table of a positive measure. Point masses get the
/// analytic constant; everything else goes through psi-inversion.
pub fn s_table(mu: &PositiveRealMeasure) -> Result<STransformTable> {
    if mu.is_delta_zero() {
        return Err(Error::DeltaZeroMeasure);
    }
    let dl = mu.atom0 - 1.0;
    if let Some(c) = mu.point_mass_location() {
        let s = 1.0 / c;
        return Ok(STransformTable::from_fn(
            dl,
            Provenance::Analytic,
            Some(s),
            move |_| Ok(s),
        ));
    }
    let limit = match mu.moment(1.0) {
        crate::measures::Extended::Finite(m1) => Some(1.0 / m1),
        crate::measures::Extended::Infinite => Some(0.0),
    };
    let owned = Arc::new(mu.clone());
    Ok(STransformTable::from_fn(
        dl,
        Provenance::PsiInversion,
        limit,
        move |z| s_transform(&owned, z),
    ))
}

// ---------------------------------------------------------------------------
// symmetric branch
// ---------------------------------------------------------------------------

/// Value of a symmetric S-transform: S = i * magnitude on the H-branch.
/// Only S^2 is ever consumed downstream, so the branch never materializes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSValue {
    magnitude: f64,
}

impl SymmetricSValue {
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// S^2 = (i m)^2 = -m^2 < 0.
    pub fn squared(&self) -> f64 {
        -(self.magnitude * self.magnitude)
    }
}

/// Symmetric S-transform on the H-branch: solve psi_nu(i t) = w for t > 0,
/// return |(1+w)/w| * t. Since psi_nu(i t) = psi_{musq}(-t^2) where musq is
/// the square-pushforward of the positive part, the solve is a chi call.
pub fn symmetric_s_transform(nu: &SymmetricRealMeasure, w: f64) -> Result<SymmetricSValue> {
    let pp = &nu.positive_part;
    if pp.is_delta_zero() {
        return Err(Error::DeltaZeroMeasure);
    }
    let musq = pp.pushforward(Map::Square)?;
    let u = chi(&musq, w)?;
    let t = (-u).sqrt();
    Ok(SymmetricSValue {
        magnitude: ((1.0 + w) / w).abs() * t,
    })
}

/// S of the squared variable: w/(1+w) * S_nu(w)^2, a positive real.
pub fn s_of_square(nu: &SymmetricRealMeasure, w: f64) -> Result<f64> {
    let v = symmetric_s_transform(nu, w)?;
    Ok(w / (1.0 + w) * v.squared())
}

// ---------------------------------------------------------------------------
// R-transform and S-from-R
// ---------------------------------------------------------------------------

/// Evaluable R-transform on the real interval (-epsilon, 0).
#[derive(Clone)]
pub struct RTransformTable {
    epsilon: f64,
    eval_fn: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
}

impl RTransformTable {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eval(&self, w: f64) -> Result<f64> {
        if !(w > -self.epsilon && w < 0.0) {
            return Err(Error::OutOfDomain {
                arg: w,
                left: -self.epsilon,
            });
        }
        (self.eval_fn)(w)
    }
}

/// R_mu(w) = G^{-1}(w) - 1/w on (-epsilon, 0), epsilon = -G(-1) discovered by
/// scanning G along the geometric grid z = -2^{0..40} (the scan maximum sits
/// at z = -1 since |G| decreases toward -infinity).
pub fn r_table(mu: &PositiveRealMeasure) -> Result<RTransformTable> {
    let mut epsilon = 0.0_f64;
    for i in 0..=40u32 {
        let z = -(2.0_f64.powi(i as i32));
        epsilon = epsilon.max(-g_neg(mu, z));
    }
    let owned = Arc::new(mu.clone());
    Ok(RTransformTable {
        epsilon,
        eval_fn: Arc::new(move |w: f64| {
            // G is decreasing in z on (-inf, -1], with range [-epsilon, 0);
            // substitute y = 1/z so h(y) = G(1/y) is increasing on [-1, 0)
            // and bracket inversion applies directly.
            let h = |y: f64| g_neg(&owned, 1.0 / y);
            let y = invert_increasing_negative(h, w, -1.0, -1e-18);
            // R = G^{-1}(w) - 1/w, but z - 1/w cancels catastrophically as
            // w -> 0-. Since z G(z) - 1 = psi(1/z), the stable form is
            // R = psi(y) / G(1/y) evaluated at the root y.
            Ok(psi(&owned, y) / h(y))
        }),
    })
}

pub fn r_transform(mu: &PositiveRealMeasure, w: f64) -> Result<f64> {
    r_table(mu)?.eval(w)
}

/// S through Appendix A: S(w) = C^{-1}(w)/w with C(z) = z R(z), inverted by
/// monotone bisection on (-epsilon, 0). The range of C is (epsilon - 1, 0).
pub fn s_from_r(mu: &PositiveRealMeasure, w: f64) -> Result<f64> {
    let rt = r_table(mu)?;
    let eps = rt.epsilon();
    let left_edge = eps - 1.0;
    if !(w > left_edge && w < 0.0) {
        return Err(Error::OutOfDomain {
            arg: w,
            left: left_edge,
        });
    }
    let c = |z: f64| z * rt.eval(z).expect("z inside R domain");
    let left = -eps * (1.0 - 1e-12);
    let right = -eps * 1e-18;
    let z = invert_increasing_negative(c, w, left, right);
    Ok(z / w)
}

/// S of the inverted measure via S_{mu^{-1}}(w) S_mu(-1-w) = 1.
pub fn s_of_inverse(mu: &PositiveRealMeasure, w: f64) -> Result<f64> {
    if mu.atom0 > 0.0 {
        return Err(Error::AtomAtZero);
    }
    let s = s_transform(mu, -1.0 - w)?;
    Ok(1.0 / s)
}

/// Pointwise product of two S-transforms (free multiplicative convolution).
pub fn s_multiply(sa: &STransformTable, sb: &STransformTable, w: f64) -> Result<f64> {
    Ok(sa.eval(w)? * sb.eval(w)?)
}

/// Product table with the intersected domain.
pub fn s_multiply_table(sa: &STransformTable, sb: &STransformTable) -> STransformTable {
    let dl = sa.domain_left().max(sb.domain_left());
    let prov = if sa.provenance() == Provenance::Analytic && sb.provenance() == Provenance::Analytic
    {
        Provenance::Analytic
    } else {
        Provenance::PsiInversion
    };
    let limit = match (sa.limit_at_zero(), sb.limit_at_zero()) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    };
    let (a, b) = (sa.clone(), sb.clone());
    STransformTable::from_fn(dl, prov, limit, move |z| Ok(a.eval(z)? * b.eval(z)?))
}
