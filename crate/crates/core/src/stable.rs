//! The stable Brown-measure family mu_beta: S-transform, radial quantile and
//! density, tails, absolute moments, the nu_beta fractional moments, and the
//! dilation/stability scaling checks.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::measures::{Extended, RadialBrownMeasure};
use crate::semigroup::{compress_s, quantile_nodes};
use crate::transforms::{Provenance, STransformTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub beta: f64,
    /// dilation scale: the S-transform prefactor, S(z) = c (-z)^beta/(1+z)
    pub c: f64,
}

impl StableParams {
    pub fn new(beta: f64, c: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidMeasure(format!("beta = {beta} must be >= 0")));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidMeasure(format!("scale c = {c} must be > 0")));
        }
        Ok(StableParams { beta, c })
    }
}

/// S-transform of the stable family: c (-z)^beta / (1+z) on (-1, 0). Real
/// powers are exp(beta ln) on positive reals; the complex branch never
/// materializes on this interval.
pub fn stable_s(params: &StableParams, z: f64) -> Result<f64> {
    if !(z > -1.0 && z < 0.0) {
        return Err(Error::OutOfDomain { arg: z, left: -1.0 });
    }
    Ok(params.c * (-z).powf(params.beta) / (1.0 + z))
}

pub fn stable_s_table(params: &StableParams) -> STransformTable {
    let p = *params;
    let limit = if p.beta > 0.0 { Some(0.0) } else { Some(p.c) };
    STransformTable::from_fn(-1.0, Provenance::Analytic, limit, move |z| stable_s(&p, z))
}

/// Radial quantile of mu_beta (c = 1): Q(t) = t^{1/2} (1-t)^{-beta/2}.
pub fn mu_beta_quantile(beta: f64, t: f64) -> f64 {
    assert!(t > 0.0 && t < 1.0);
    (t / (1.0 - t).powf(beta)).sqrt()
}

/// Closed-form radial Brown measure of D_c-scaled mu_beta on n Chebyshev
/// nodes (radii carry the c^{-1/2} dilation of the S-prefactor).
pub fn mu_beta_brown(beta: f64, c: f64, n: usize) -> RadialBrownMeasure {
    let scale = 1.0 / c.sqrt();
    let t_grid = quantile_nodes(0.0, n);
    let q_values: Vec<f64> = t_grid
        .iter()
        .map(|&t| scale * mu_beta_quantile(beta, t))
        .collect();
    let r_max = if beta > 0.0 { f64::INFINITY } else { scale };
    RadialBrownMeasure {
        atom0: 0.0,
        t_grid,
        q_values,
        r_min: 0.0,
        r_max,
    }
}

/// Planar density of mu_beta at radius r > 0 for beta > 0:
/// rho_beta(r) = f_beta(r)/(2 pi r) with f = dt/dr, t recovered by monotone
/// inversion of the quantile.
pub fn mu_beta_radial_density(beta: f64, r: f64) -> f64 {
    assert!(beta > 0.0 && r > 0.0);
    // invert r(t) = t^{1/2}(1-t)^{-beta/2} by bisection on h(t) = ln t - beta ln(1-t)
    let target = 2.0 * r.ln();
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let h = mid.ln() - beta * (1.0 - mid).ln();
        if h < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-17 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let drdt = 0.5 * t.powf(-0.5) * (1.0 - t).powf(-beta / 2.0)
        + (beta / 2.0) * t.sqrt() * (1.0 - t).powf(-beta / 2.0 - 1.0);
    1.0 / (drdt * 2.0 * std::f64::consts::PI * r)
}

/// k-th absolute moment of mu_beta:
/// Gamma(1 + k/2) Gamma(1 - beta k/2) / Gamma(2 + k/2 - beta k/2)
/// for beta k < 2, else infinite (flagged before the Gamma pole is touched).
pub fn mu_beta_abs_moment(beta: f64, k: f64) -> Extended {
    assert!(k >= 0.0);
    if beta * k >= 2.0 - 1e-12 {
        return Extended::Infinite;
    }
    let ln = ln_gamma(1.0 + k / 2.0) + ln_gamma(1.0 - beta * k / 2.0)
        - ln_gamma(2.0 + k / 2.0 - beta * k / 2.0);
    Extended::Finite(ln.exp())
}

/// Fractional moments of nu_beta (the law of |x|^2 for the stable variable):
/// sin(pi g)/(pi g) * Gamma(1+2g) Gamma(1-(1+beta)g) / Gamma(2+(1-beta)g)
/// for -1/2 < g < 1/(1+beta); 1 at g = 0 (removable singularity), infinite
/// outside.
pub fn nu_beta_moment(beta: f64, gamma: f64) -> Extended {
    assert!(beta > 0.0);
    if gamma <= -0.5 + 1e-14 || gamma >= 1.0 / (1.0 + beta) - 1e-14 {
        return Extended::Infinite;
    }
    let pg = std::f64::consts::PI * gamma;
    let sinc = if pg.abs() < 1e-8 {
        1.0 - pg * pg / 6.0
    } else {
        pg.sin() / pg
    };
    let ln = ln_gamma(1.0 + 2.0 * gamma) + ln_gamma(1.0 - (1.0 + beta) * gamma)
        - ln_gamma(2.0 + (1.0 - beta) * gamma);
    Extended::Finite(sinc * ln.exp())
}

/// alpha_s = s^{(1+beta)/2}: mu_beta^{boxplus s}(A) = mu_beta(alpha_s^{-1} A).
pub fn stable_scaling_factor(beta: f64, s: f64) -> f64 {
    s.powf((1.0 + beta) / 2.0)
}

/// Max residual of the stability functional equation
/// compress_s(S_beta, s)(z) = s^{-(1+beta)} S_beta(z) over an interior grid.
pub fn stability_residual(beta: f64, s: f64) -> Result<f64> {
    let params = StableParams::new(beta, 1.0)?;
    let table = stable_s_table(&params);
    let compressed = compress_s(&table, s);
    let factor = s.powf(-(1.0 + beta));
    let mut worst = 0.0_f64;
    for k in 1..=201 {
        let z = -(k as f64) / 202.0;
        let r = (compressed.eval(z)? - factor * stable_s(&params, z)?).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}
