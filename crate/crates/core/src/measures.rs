//! Measure data model: positive measures on [0, inf), their symmetrizations,
//! and radial Brown measures given by a quantile table.
//!
//! Densities live on explicit grids and are treated as piecewise-linear
//! between nodes. All kernel integrals against such a density (mass, powers,
//! the psi kernel ut/(1-ut), the resolvent 1/(z-t)) are evaluated in closed
//! form per interval, which keeps them accurate over the full dynamic range
//! of the transform arguments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MASS_TOL: f64 = 1e-9;

/// Extended real value: moments may diverge, and a diverging moment is a
/// tagged flag, never a sentinel float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }
}

/// Pushforward maps available on positive measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Map {
    Square,
    Sqrt,
    Inverse,
    Dilate(f64),
}

/// Closed-form transform backend attached to measures produced by the
/// free-Poisson constructor and its pushforwards. The grid representation is
/// kept alongside (for moments and Cauchy-transform quadrature); psi and the
/// negative-axis resolvent prefer the closed form, which is what makes the
/// 1e-8 S-transform targets reachable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ShapeTag {
    Generic,
    /// law of scale * Y with Y ~ free-Poisson(lambda)
    Mp { lambda: f64, scale: f64 },
    /// law of scale * sqrt(Y)
    MpSqrt { lambda: f64, scale: f64 },
    /// law of scale / Y
    MpInv { lambda: f64, scale: f64 },
}

// ---------------------------------------------------------------------------
// piecewise-linear kernel primitives
// ---------------------------------------------------------------------------

/// f(r) = -ln(1-r) - r, with a series branch for small |r|.
fn kernel_f(r: f64) -> f64 {
    if r.abs() < 0.25 {
        let mut acc = 0.0;
        let mut p = r * r;
        let mut k = 2.0;
        loop {
            let term = p / k;
            acc += term;
            if term.abs() <= 1e-18 * acc.abs() || k > 64.0 {
                break;
            }
            p *= r;
            k += 1.0;
        }
        acc
    } else {
        -(-r).ln_1p() - r
    }
}

/// g(r) = -ln(1-r) - r - r^2/2.
fn kernel_g(r: f64) -> f64 {
    if r.abs() < 0.25 {
        let mut acc = 0.0;
        let mut p = r * r * r;
        let mut k = 3.0;
        loop {
            let term = p / k;
            acc += term;
            if term.abs() <= 1e-18 * acc.abs() || k > 64.0 {
                break;
            }
            p *= r;
            k += 1.0;
        }
        acc
    } else {
        -(-r).ln_1p() - r - 0.5 * r * r
    }
}

/// Complex ln(1 + d), stable for small |d|.
fn ln_1p_complex(d: Complex64) -> Complex64 {
    if d.norm() < 0.5 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = d;
        let mut k = 1.0;
        loop {
            let term = p / k;
            acc += term;
            if term.norm() <= 1e-17 * acc.norm().max(1e-300) || k > 64.0 {
                break;
            }
            p *= -d;
            k += 1.0;
        }
        acc
    } else {
        (Complex64::new(1.0, 0.0) + d).ln()
    }
}

/// A strictly increasing grid with nonnegative piecewise-linear values.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (t[0], t[1], v[0], v[1]))
    }

    /// Trapezoid mass, which is exact for the piecewise-linear density.
    pub fn mass(&self) -> f64 {
        self.segments()
            .map(|(t1, t2, v1, v2)| 0.5 * (v1 + v2) * (t2 - t1))
            .sum()
    }

    /// Integral of t^gamma against the density.
    pub fn power_integral(&self, gamma: f64) -> f64 {
        let mut total = 0.0;
        for (t1, t2, v1, v2) in self.segments() {
            let b = (v2 - v1) / (t2 - t1);
            let a = v1 - b * t1;
            total += a * power_segment(t1, t2, gamma) + b * power_segment(t1, t2, gamma + 1.0);
        }
        total
    }

    /// Integral of u*t/(1 - u*t) against the density, u < 0.
    pub fn psi_integral(&self, u: f64) -> f64 {
        let mut total = 0.0;
        for (t1, t2, v1, v2) in self.segments() {
            let b = (v2 - v1) / (t2 - t1);
            let a = v1 - b * t1;
            let r1 = u * t1;
            if r1 <= -1e15 {
                // Deep asymptotic regime: the kernel is -1 - 1/(u t) + O(1/(ut)^2).
                total += -(a * (t2 - t1) + 0.5 * b * (t2 * t2 - t1 * t1))
                    - (a * (t2 / t1).ln() + b * (t2 - t1)) / u;
            } else {
                let r2 = u * t2;
                total += (a / u) * (kernel_f(r2) - kernel_f(r1))
                    + (b / (u * u)) * (kernel_g(r2) - kernel_g(r1));
            }
        }
        total
    }

    /// Integral of 1/(z - t) against the density, z off the support.
    pub fn resolvent(&self, z: Complex64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (t1, t2, v1, v2) in self.segments() {
            let dt = t2 - t1;
            let b = (v2 - v1) / dt;
            let a = v1 - b * t1;
            let l = ln_1p_complex(Complex64::new(dt, 0.0) / (z - t2));
            total += (a + b * z) * l - b * dt;
        }
        total
    }

    /// Real-axis resolvent for x < inf(support).
    pub fn resolvent_neg(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for (t1, t2, v1, v2) in self.segments() {
            let dt = t2 - t1;
            let b = (v2 - v1) / dt;
            let a = v1 - b * t1;
            let l = (dt / (x - t2)).ln_1p();
            total += (a + b * x) * l - b * dt;
        }
        total
    }
}

/// Integral of t^gamma over [t1, t2], 0 < t1 < t2.
fn power_segment(t1: f64, t2: f64, gamma: f64) -> f64 {
    let q = gamma + 1.0;
    if q.abs() < 1e-12 {
        (t2 / t1).ln()
    } else {
        // t2^q - t1^q = t1^q * expm1(q * ln(t2/t1)); stable for narrow segments.
        t1.powf(q) * (q * ((t2 - t1) / t1).ln_1p()).exp_m1() / q
    }
}

// ---------------------------------------------------------------------------
// PositiveRealMeasure
// ---------------------------------------------------------------------------

/// Probability measure on [0, inf): an atom at zero, finitely many positive
/// atoms, and an optional density grid.
#[derive(Debug, Clone)]
pub struct PositiveRealMeasure {
    pub atom0: f64,
    /// (location, weight), locations strictly increasing and positive.
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<DensityGrid>,
    pub(crate) tag: ShapeTag,
}

impl PositiveRealMeasure {
    pub fn new(atom0: f64, atoms: Vec<(f64, f64)>, density: Option<DensityGrid>) -> Result<Self> {
        let m = PositiveRealMeasure {
            atom0,
            atoms,
            density,
            tag: ShapeTag::Generic,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn point_mass(c: f64) -> Self {
        assert!(c > 0.0, "point_mass location must be positive");
        PositiveRealMeasure {
            atom0: 0.0,
            atoms: vec![(c, 1.0)],
            density: None,
            tag: ShapeTag::Generic,
        }
    }

    pub fn delta_zero() -> Self {
        PositiveRealMeasure {
            atom0: 1.0,
            atoms: vec![],
            density: None,
            tag: ShapeTag::Generic,
        }
    }

    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut sorted = atoms.to_vec();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self::new(0.0, sorted, None)
    }

    /// Free-Poisson (Marchenko-Pastur) law with parameter lambda > 0 on a
    /// Chebyshev-clustered grid of `nodes` interior points; lambda < 1 adds
    /// the atom (1 - lambda) at zero. The measure carries a closed-form
    /// transform backend, so psi/chi/S evaluations do not pay for the grid.
    pub fn free_poisson(lambda: f64, nodes: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "free_poisson parameter must be positive, got {lambda}"
            )));
        }
        if nodes < 8 {
            return Err(Error::InvalidMeasure("free_poisson needs >= 8 nodes".into()));
        }
        let sl = lambda.sqrt();
        let a = (1.0 - sl) * (1.0 - sl);
        let b = (1.0 + sl) * (1.0 + sl);
        let n = nodes;
        let mut grid = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for j in 1..=n {
            let theta = std::f64::consts::PI * j as f64 / (n + 1) as f64;
            let x = a + (b - a) * 0.5 * (1.0 - theta.cos());
            let rho = ((b - x).max(0.0) * (x - a).max(0.0)).sqrt()
                / (2.0 * std::f64::consts::PI * x);
            grid.push(x);
            values.push(rho);
        }
        let atom0 = (1.0 - lambda).max(0.0);
        let density = DensityGrid { grid, values };
        let mass = density.mass();
        let target = 1.0 - atom0;
        let mut density = density;
        for v in density.values.iter_mut() {
            *v *= target / mass;
        }
        Ok(PositiveRealMeasure {
            atom0,
            atoms: vec![],
            density: Some(density),
            tag: ShapeTag::Mp { lambda, scale: 1.0 },
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.atom0) {
            return Err(Error::InvalidMeasure(format!(
                "atom0 = {} outside [0, 1]",
                self.atom0
            )));
        }
        let mut prev = 0.0;
        for &(x, w) in &self.atoms {
            if !(x > prev) {
                return Err(Error::InvalidMeasure(format!(
                    "atom locations must be strictly positive and strictly increasing (saw {x})"
                )));
            }
            if !(w > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom weight {w} must be positive")));
            }
            prev = x;
        }
        if let Some(d) = &self.density {
            if d.grid.len() != d.values.len() || d.grid.len() < 2 {
                return Err(Error::InvalidMeasure(
                    "density grid and values must have equal length >= 2".into(),
                ));
            }
            let mut prev = 0.0;
            for &x in &d.grid {
                if !(x > prev) {
                    return Err(Error::InvalidMeasure(
                        "density grid must be strictly positive and strictly increasing".into(),
                    ));
                }
                prev = x;
            }
            if d.values.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::InvalidMeasure("density values must be nonnegative".into()));
            }
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!(
                "total mass {mass} differs from 1 by more than {MASS_TOL}"
            )));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.atom0
            + self.atoms.iter().map(|&(_, w)| w).sum::<f64>()
            + self.density.as_ref().map_or(0.0, |d| d.mass())
    }

    pub fn is_delta_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.is_none() && self.atom0 > 0.0
    }

    /// Some(c) when the measure is exactly a single unit atom at c > 0.
    pub fn point_mass_location(&self) -> Option<f64> {
        if self.atom0 == 0.0 && self.density.is_none() && self.atoms.len() == 1 {
            Some(self.atoms[0].0)
        } else {
            None
        }
    }

    pub fn inf_support(&self) -> f64 {
        if self.atom0 > 0.0 {
            return 0.0;
        }
        let a = self.atoms.first().map(|&(x, _)| x).unwrap_or(f64::INFINITY);
        let d = self
            .density
            .as_ref()
            .map(|d| d.grid[0])
            .unwrap_or(f64::INFINITY);
        a.min(d)
    }

    pub fn sup_support(&self) -> f64 {
        let a = self.atoms.last().map(|&(x, _)| x).unwrap_or(0.0);
        let d = self
            .density
            .as_ref()
            .map(|d| *d.grid.last().unwrap())
            .unwrap_or(0.0);
        a.max(d)
    }

    /// Split every positive mass evenly over +/- its location.
    pub fn symmetrize(&self) -> SymmetricRealMeasure {
        SymmetricRealMeasure {
            positive_part: self.clone(),
        }
    }

    /// Transport the measure by the given map, with Jacobian-corrected
    /// density values. The transported density is renormalized so its mass
    /// matches the pre-image exactly (the piecewise-linear re-interpolation
    /// would otherwise drift by O(h^2)).
    pub fn pushforward(&self, map: Map) -> Result<PositiveRealMeasure> {
        if let Map::Dilate(c) = map {
            if !(c > 0.0) {
                return Err(Error::InvalidMeasure(format!("dilate factor {c} must be positive")));
            }
        }
        if matches!(map, Map::Inverse) && self.atom0 > 0.0 {
            return Err(Error::InversionOfAtomAtZero);
        }
        let fwd = |x: f64| -> f64 {
            match map {
                Map::Square => x * x,
                Map::Sqrt => x.sqrt(),
                Map::Inverse => 1.0 / x,
                Map::Dilate(c) => c * x,
            }
        };
        // |d(map)/dx|
        let jac = |x: f64| -> f64 {
            match map {
                Map::Square => 2.0 * x,
                Map::Sqrt => 0.5 / x.sqrt(),
                Map::Inverse => 1.0 / (x * x),
                Map::Dilate(c) => c,
            }
        };
        let mut atoms: Vec<(f64, f64)> = self.atoms.iter().map(|&(x, w)| (fwd(x), w)).collect();
        if matches!(map, Map::Inverse) {
            atoms.reverse();
        }
        let density = match &self.density {
            None => None,
            Some(d) => {
                let old_mass = d.mass();
                let mut pairs: Vec<(f64, f64)> = d
                    .grid
                    .iter()
                    .zip(&d.values)
                    .map(|(&x, &v)| (fwd(x), v / jac(x)))
                    .collect();
                if matches!(map, Map::Inverse) {
                    pairs.reverse();
                }
                let mut out = DensityGrid {
                    grid: pairs.iter().map(|p| p.0).collect(),
                    values: pairs.iter().map(|p| p.1).collect(),
                };
                let new_mass = out.mass();
                if new_mass > 0.0 {
                    for v in out.values.iter_mut() {
                        *v *= old_mass / new_mass;
                    }
                }
                Some(out)
            }
        };
        let tag = match (self.tag, map) {
            (ShapeTag::Mp { lambda, scale }, Map::Sqrt) => ShapeTag::MpSqrt {
                lambda,
                scale: scale.sqrt(),
            },
            (ShapeTag::Mp { lambda, scale }, Map::Dilate(c)) => ShapeTag::Mp {
                lambda,
                scale: scale * c,
            },
            (ShapeTag::Mp { lambda, scale }, Map::Inverse) => ShapeTag::MpInv {
                lambda,
                scale: 1.0 / scale,
            },
            (ShapeTag::MpSqrt { lambda, scale }, Map::Square) => ShapeTag::Mp {
                lambda,
                scale: scale * scale,
            },
            (ShapeTag::MpSqrt { lambda, scale }, Map::Dilate(c)) => ShapeTag::MpSqrt {
                lambda,
                scale: scale * c,
            },
            (ShapeTag::MpInv { lambda, scale }, Map::Inverse) => ShapeTag::Mp {
                lambda,
                scale: 1.0 / scale,
            },
            (ShapeTag::MpInv { lambda, scale }, Map::Dilate(c)) => ShapeTag::MpInv {
                lambda,
                scale: scale * c,
            },
            _ => ShapeTag::Generic,
        };
        let out = PositiveRealMeasure {
            atom0: self.atom0,
            atoms,
            density,
            tag,
        };
        out.validate()?;
        Ok(out)
    }

    /// Integral of t^gamma. The atom at zero makes every negative moment
    /// diverge; for densities reaching toward zero the local power-law slope
    /// through the first two nodes decides whether the extrapolated tail
    /// integral converges.
    pub fn moment(&self, gamma: f64) -> Extended {
        if self.atom0 > 0.0 && gamma < 0.0 {
            return Extended::Infinite;
        }
        // free-Poisson moments m1 = lambda, m2 = lambda(1+lambda) are exact;
        // the grid quadrature would leak its piecewise-linear bias here
        if let ShapeTag::Mp { lambda, scale } = self.tag {
            if gamma == 1.0 {
                return Extended::Finite(scale * lambda);
            }
            if gamma == 2.0 {
                return Extended::Finite(scale * scale * lambda * (1.0 + lambda));
            }
        }
        let mut total = if gamma == 0.0 { self.atom0 } else { 0.0 };
        for &(x, w) in &self.atoms {
            total += w * x.powf(gamma);
        }
        if let Some(d) = &self.density {
            if gamma < 0.0 {
                let (g0, g1) = (d.grid[0], d.grid[1]);
                let (v0, v1) = (d.values[0], d.values[1]);
                // Only meaningful when the grid actually approaches zero.
                if v0 > 0.0 && v1 > 0.0 && g0 < 1e-3 * *d.grid.last().unwrap() {
                    let slope = (v1 / v0).ln() / (g1 / g0).ln();
                    if gamma + slope <= -1.0 + 1e-9 {
                        return Extended::Infinite;
                    }
                }
            }
            total += d.power_integral(gamma);
        }
        Extended::Finite(total)
    }
}

// ---------------------------------------------------------------------------
// JSON mirror
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct AtomJson {
    x: f64,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    grid: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct MeasureJson {
    #[serde(default)]
    atom0: f64,
    #[serde(default)]
    atoms: Vec<AtomJson>,
    #[serde(default)]
    density: Option<DensityJson>,
}

impl PositiveRealMeasure {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MeasureJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidMeasure(format!("measure JSON: {e}")))?;
        PositiveRealMeasure::new(
            raw.atom0,
            raw.atoms.into_iter().map(|a| (a.x, a.w)).collect(),
            raw.density.map(|d| DensityGrid {
                grid: d.grid,
                values: d.values,
            }),
        )
    }

    pub fn to_json(&self) -> String {
        let raw = MeasureJson {
            atom0: self.atom0,
            atoms: self.atoms.iter().map(|&(x, w)| AtomJson { x, w }).collect(),
            density: self.density.as_ref().map(|d| DensityJson {
                grid: d.grid.clone(),
                values: d.values.clone(),
            }),
        };
        serde_json::to_string(&raw).unwrap()
    }
}

// ---------------------------------------------------------------------------
// SymmetricRealMeasure
// ---------------------------------------------------------------------------

/// Even measure on the line, stored through its positive part: each positive
/// mass of `positive_part` is split evenly over +/- its location; the atom at
/// zero stays put.
#[derive(Debug, Clone)]
pub struct SymmetricRealMeasure {
    pub positive_part: PositiveRealMeasure,
}

impl SymmetricRealMeasure {
    /// Right-continuous CDF of the symmetrized measure.
    pub fn cdf(&self, x: f64) -> f64 {
        let p = &self.positive_part;
        if x >= 0.0 {
            0.5 + 0.5 * positive_cdf(p, x)
        } else {
            let y = -x;
            let at_y: f64 = p
                .atoms
                .iter()
                .filter(|&&(loc, _)| loc == y)
                .map(|&(_, w)| w)
                .sum();
            0.5 * (1.0 - positive_cdf(p, y) + at_y)
        }
    }

    pub fn atom0(&self) -> f64 {
        self.positive_part.atom0
    }
}

/// CDF of a positive measure at x >= 0, including the atom at x.
fn positive_cdf(mu: &PositiveRealMeasure, x: f64) -> f64 {
    let mut acc = mu.atom0;
    for &(loc, w) in &mu.atoms {
        if loc <= x {
            acc += w;
        }
    }
    if let Some(d) = &mu.density {
        for (t1, t2, v1, v2) in d.segments() {
            if x >= t2 {
                acc += 0.5 * (v1 + v2) * (t2 - t1);
            } else if x > t1 {
                let v = v1 + (v2 - v1) * (x - t1) / (t2 - t1);
                acc += 0.5 * (v1 + v) * (x - t1);
                break;
            } else {
                break;
            }
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// RadialBrownMeasure
// ---------------------------------------------------------------------------

/// Rotation-invariant measure on the plane: an atom at the origin plus a
/// monotone radial quantile table Q(t) on (delta, 1).
#[derive(Debug, Clone)]
pub struct RadialBrownMeasure {
    pub atom0: f64,
    pub t_grid: Vec<f64>,
    pub q_values: Vec<f64>,
    pub r_min: f64,
    /// f64::INFINITY flags an unbounded support.
    pub r_max: f64,
}

impl RadialBrownMeasure {
    pub fn new(
        atom0: f64,
        t_grid: Vec<f64>,
        q_values: Vec<f64>,
        r_min: f64,
        r_max: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&atom0) {
            return Err(Error::InvalidMeasure(format!("atom0 = {atom0} outside [0, 1)")));
        }
        if t_grid.len() != q_values.len() || t_grid.is_empty() {
            return Err(Error::InvalidMeasure("quantile table shape mismatch".into()));
        }
        for w in t_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidMeasure("t grid must be strictly increasing".into()));
            }
        }
        for w in q_values.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidMeasure("quantile values must be nondecreasing".into()));
            }
        }
        Ok(RadialBrownMeasure {
            atom0,
            t_grid,
            q_values,
            r_min,
            r_max,
        })
    }

    pub fn unbounded(&self) -> bool {
        self.r_max.is_infinite()
    }

    /// Multiply all radii by a positive factor.
    pub fn scale_radii(&mut self, factor: f64) {
        for q in self.q_values.iter_mut() {
            *q *= factor;
        }
        self.r_min *= factor;
        self.r_max *= factor;
    }
}

/// Mass of the closed disk of radius r: monotone inverse of the quantile
/// table with linear interpolation. Below r_min the answer is the atom mass;
/// at or beyond r_max it is 1. For unbounded measures radii beyond the last
/// tabulated quantile clamp to the last t node (the untabulated tail mass is
/// 1 - t_last).
pub fn radial_cdf(b: &RadialBrownMeasure, r: f64) -> f64 {
    let delta = b.atom0;
    if r < b.r_min {
        return delta;
    }
    if r >= b.r_max {
        return 1.0;
    }
    let q = &b.q_values;
    let t = &b.t_grid;
    let n = q.len();
    if r < q[0] {
        // between the inner edge and the first node
        if q[0] > b.r_min {
            return delta + (t[0] - delta) * (r - b.r_min) / (q[0] - b.r_min);
        }
        return delta;
    }
    if r >= q[n - 1] {
        if b.r_max.is_finite() && b.r_max > q[n - 1] {
            return t[n - 1] + (1.0 - t[n - 1]) * (r - q[n - 1]) / (b.r_max - q[n - 1]);
        }
        return t[n - 1];
    }
    // rightmost index with q[i] <= r
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if q[mid] <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if q[hi] > q[lo] {
        t[lo] + (t[hi] - t[lo]) * (r - q[lo]) / (q[hi] - q[lo])
    } else {
        t[hi]
    }
}
