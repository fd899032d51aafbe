//! Command-line entry point: measures -> transforms -> semigroup/stable ->
//! rmt, with seeded, file-based, reproducible runs. CSV for curves, JSON for
//! scalars and reports; every output embeds the RunConfig that produced it.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::measures::{Extended, Map, PositiveRealMeasure};
use crate::rmt::{
    free_sum_check, run_experiment, singular_moment_check, EnsembleKind, EnsembleSpec,
    ExperimentReport,
};
use crate::semigroup::{
    atom_after_compression, compress_s, compressed_brown, semigroup_additivity_check,
    CompressionParams, Scaling,
};
use crate::stable::{
    mu_beta_abs_moment, mu_beta_brown, mu_beta_quantile, nu_beta_moment, stability_residual,
    StableParams,
};
use crate::transforms::{
    cauchy, chi, psi, r_table, r_transform, s_from_r, s_of_inverse, s_of_square, s_table,
    s_transform,
};

const DEFAULT_GRID: usize = 512;
/// grid used for prediction tables backing Monte Carlo comparisons
const PREDICTION_GRID: usize = 2048;

#[derive(Serialize, Clone)]
pub struct Tolerances {
    pub root: f64,
    pub identity: f64,
}

/// Provenance block embedded in every output file.
#[derive(Serialize, Clone)]
pub struct RunConfig {
    pub command: Vec<String>,
    pub output_path: Option<String>,
    pub seed: Option<u64>,
    pub grid_size: usize,
    pub tolerances: Tolerances,
    pub version: String,
}

impl RunConfig {
    fn new(out: Option<&Path>, seed: Option<u64>, grid: usize) -> Self {
        RunConfig {
            command: std::env::args().collect(),
            output_path: out.map(|p| p.display().to_string()),
            seed,
            grid_size: grid,
            tolerances: Tolerances {
                root: 1e-12,
                identity: 1e-8,
            },
            version: format!("freebrown {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "freebrown",
    version,
    about = "free compressions of R-diagonal variables: transforms, Brown measures, the stable family, and Monte Carlo checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Cauchy,
    Psi,
    Chi,
    S,
    R,
    SFromR,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    None,
    SqrtS,
    S,
}

impl From<ScalingArg> for Scaling {
    fn from(a: ScalingArg) -> Scaling {
        match a {
            ScalingArg::None => Scaling::None,
            ScalingArg::SqrtS => Scaling::SqrtS,
            ScalingArg::S => Scaling::S,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a transform of a measure at one or more points
    Transform {
        /// path to a measure JSON file {atom0, atoms: [{x, w}], density: {grid, values}}
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_enum)]
        which: Which,
        /// evaluation point; repeatable
        #[arg(long = "at", required = true, allow_negative_numbers = true)]
        at: Vec<f64>,
    },
    /// Radial Brown measure of the free compression, as a t,r quantile CSV
    Compress {
        #[arg(long)]
        measure: PathBuf,
        /// compression parameter s >= 1
        #[arg(long)]
        s: f64,
        #[arg(long, value_enum, default_value = "sqrt-s")]
        scaling: ScalingArg,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stable-family quantile table and closed-form moments
    Stable {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// absolute-moment orders k, comma separated
        #[arg(long, value_delimiter = ',')]
        moments: Vec<f64>,
        /// nu_beta fractional-moment orders gamma, comma separated
        #[arg(long = "nu-moments", value_delimiter = ',', allow_negative_numbers = true)]
        nu_moments: Vec<f64>,
        /// CSV path; the JSON report goes to a .json sidecar (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-matrix Monte Carlo experiments
    Rmt {
        #[command(subcommand)]
        cmd: RmtCmd,
    },
    /// Run the identity/property self-test suite and print a pass/fail table
    Verify {
        /// reduced sample counts
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Parser)]
struct RmtCommon {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, env = "FREEBROWN_SEED", default_value_t = 42)]
    seed: u64,
    /// rayon worker threads (default: all cores)
    #[arg(long)]
    parallel: Option<usize>,
    /// report JSON path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RmtCmd {
    /// m x m truncation of an n x n Haar unitary, m = round(n/s)
    TruncatedHaar {
        #[arg(long)]
        s: f64,
        #[command(flatten)]
        common: RmtCommon,
    },
    /// Ginibre eigenvalues vs the uniform disk
    Ginibre {
        #[command(flatten)]
        common: RmtCommon,
    },
    /// G1 G2^{-k} eigenvalues vs mu_k
    Product {
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        common: RmtCommon,
    },
    /// sum of two independent G1 G2^{-k} samples vs mu_k after 2^{-(1+k)/2}
    FreeSum {
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        common: RmtCommon,
    },
    /// empirical fractional singular moment vs nu_k closed form
    Moments {
        #[arg(long)]
        k: u32,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[command(flatten)]
        common: RmtCommon,
    },
}

/// Parse argv, dispatch, and map errors to exit codes: 0 success,
/// 2 validation error, 3 numerical failure.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Transform { measure, which, at } => cmd_transform(&measure, which, &at),
        Cmd::Compress {
            measure,
            s,
            scaling,
            grid,
            out,
        } => cmd_compress(&measure, s, scaling.into(), grid, &out),
        Cmd::Stable {
            beta,
            c,
            grid,
            moments,
            nu_moments,
            out,
        } => cmd_stable(beta, c, grid, &moments, &nu_moments, out.as_deref()),
        Cmd::Rmt { cmd } => cmd_rmt(cmd),
        Cmd::Verify { quick } => cmd_verify(quick),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

fn load_measure(path: &Path) -> Result<PositiveRealMeasure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidMeasure(format!("cannot read {}: {e}", path.display())))?;
    PositiveRealMeasure::from_json(&text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::InvalidMeasure(format!("cannot write {}: {e}", path.display())))
}

fn curve_csv(rc: &RunConfig, rows: &[(f64, f64)]) -> String {
    let mut out = format!("# {}\n", serde_json::to_string(rc).unwrap());
    out.push_str("t,r\n");
    for &(t, r) in rows {
        out.push_str(&format!("{t:.12},{r:.12}\n"));
    }
    out
}

/// JSON value for a possibly-infinite quantity.
fn finite_or_inf(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!("+inf")
    }
}

fn extended_json(e: Extended) -> serde_json::Value {
    match e.finite() {
        Some(v) => json!(v),
        None => json!("+inf"),
    }
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).unwrap();
    match out {
        Some(p) => write_text(p, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn configure_rayon(parallel: Option<usize>) {
    if let Some(p) = parallel {
        // best effort: the global pool can only be configured once
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(p.max(1))
            .build_global();
    }
}

// ---------------------------------------------------------------------------
// transform
// ---------------------------------------------------------------------------

fn cmd_transform(measure: &Path, which: Which, at: &[f64]) -> Result<()> {
    let mu = load_measure(measure)?;
    println!("w,value");
    for &w in at {
        let value = match which {
            Which::Cauchy => cauchy(&mu, Complex64::new(w, 0.0))?.re,
            Which::Psi => {
                if w >= 0.0 {
                    return Err(Error::OutOfDomain {
                        arg: w,
                        left: f64::NEG_INFINITY,
                    });
                }
                psi(&mu, w)
            }
            Which::Chi => chi(&mu, w)?,
            Which::S => s_transform(&mu, w)?,
            Which::R => r_transform(&mu, w)?,
            Which::SFromR => s_from_r(&mu, w)?,
        };
        println!("{w:.12},{value:.12}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// compress
// ---------------------------------------------------------------------------

fn cmd_compress(
    measure: &Path,
    s: f64,
    scaling: Scaling,
    grid: usize,
    out: &Path,
) -> Result<()> {
    if grid < 2 {
        return Err(Error::InvalidMeasure(format!("grid = {grid} too small")));
    }
    let mu = load_measure(measure)?;
    let params = CompressionParams::new(s, scaling)?;
    let rc = RunConfig::new(Some(out), None, grid);

    let table = compress_s(&s_table(&mu)?, s);
    let delta_s = atom_after_compression(mu.atom0, s);
    let factor = params.radius_factor();
    // uniform t-grid so that round fractions (t = 0.5 in particular) land on
    // a row exactly; the interior tables use Chebyshev clustering instead
    let mut rows = Vec::with_capacity(grid - 1);
    for j in 1..grid {
        let t = delta_s + (1.0 - delta_s) * j as f64 / grid as f64;
        let sv = table.eval(t - 1.0)?;
        if !(sv > 0.0) {
            return Err(Error::NonMonotoneS(t - 1.0));
        }
        rows.push((t, factor / sv.sqrt()));
    }
    write_text(out, &curve_csv(&rc, &rows))?;

    let b = compressed_brown(&mu, params, grid.max(DEFAULT_GRID))?;
    let gap = rows
        .iter()
        .map(|&(t, r)| (r - t.sqrt()).abs())
        .fold(0.0_f64, f64::max);
    let sidecar = json!({
        "delta_s": delta_s,
        "r_min": finite_or_inf(b.r_min),
        "r_max": finite_or_inf(b.r_max),
        "gap_to_disk": gap,
        "run_config": serde_json::to_value(&rc).unwrap(),
    });
    emit_json(Some(&out.with_extension("json")), &sidecar)
}

// ---------------------------------------------------------------------------
// stable
// ---------------------------------------------------------------------------

fn cmd_stable(
    beta: f64,
    c: f64,
    grid: usize,
    moments: &[f64],
    nu_moments: &[f64],
    out: Option<&Path>,
) -> Result<()> {
    let params = StableParams::new(beta, c)?;
    let rc = RunConfig::new(out, None, grid);

    let mut abs = serde_json::Map::new();
    for &k in moments {
        abs.insert(format!("{k}"), extended_json(mu_beta_abs_moment(beta, k)));
    }
    let mut nu = serde_json::Map::new();
    for &g in nu_moments {
        nu.insert(format!("{g}"), extended_json(nu_beta_moment(beta, g)));
    }
    let report = json!({
        "beta": params.beta,
        "c": params.c,
        "abs_moments": abs,
        "nu_moments": nu,
        "run_config": serde_json::to_value(&rc).unwrap(),
    });

    match out {
        Some(path) => {
            let scale = 1.0 / c.sqrt();
            let mut rows = Vec::with_capacity(grid - 1);
            for j in 1..grid {
                let t = j as f64 / grid as f64;
                rows.push((t, scale * mu_beta_quantile(beta, t)));
            }
            write_text(path, &curve_csv(&rc, &rows))?;
            emit_json(Some(&path.with_extension("json")), &report)
        }
        None => emit_json(None, &report),
    }
}

// ---------------------------------------------------------------------------
// rmt
// ---------------------------------------------------------------------------

fn report_json(rep: &ExperimentReport, rc: &RunConfig) -> serde_json::Value {
    // percentile summary of the pooled radii; the full sample stays internal
    let radii = &rep.scaled_radii;
    let quantiles: Vec<f64> = (0..=100)
        .map(|p| radii[(p * (radii.len() - 1)) / 100])
        .collect();
    json!({
        "spec": serde_json::to_value(&rep.spec).unwrap(),
        "ks": rep.ks_distance,
        "n_resamples": rep.n_resamples,
        "radii_quantiles": quantiles,
        "predicted_quantile_ref": rep.predicted_quantile_ref,
        "wall_time_s": rep.wall_time_s,
        "run_config": serde_json::to_value(rc).unwrap(),
    })
}

fn cmd_rmt(cmd: RmtCmd) -> Result<()> {
    match cmd {
        RmtCmd::TruncatedHaar { s, common } => {
            configure_rayon(common.parallel);
            if s < 1.0 {
                return Err(Error::InvalidMeasure(format!("s = {s} must be >= 1")));
            }
            let m = ((common.n as f64 / s).round() as usize).max(1);
            let spec = EnsembleSpec {
                kind: EnsembleKind::TruncatedHaar { m },
                n: common.n,
                trials: common.trials,
                seed: common.seed,
            };
            let predicted = compressed_brown(
                &PositiveRealMeasure::point_mass(1.0),
                CompressionParams::new(s, Scaling::SqrtS)?,
                PREDICTION_GRID,
            )?;
            let rep = run_experiment(&spec, &predicted, s.sqrt(), "compressed haar")?;
            let rc = RunConfig::new(common.out.as_deref(), Some(common.seed), PREDICTION_GRID);
            emit_json(common.out.as_deref(), &report_json(&rep, &rc))
        }
        RmtCmd::Ginibre { common } => {
            configure_rayon(common.parallel);
            let spec = EnsembleSpec {
                kind: EnsembleKind::Ginibre,
                n: common.n,
                trials: common.trials,
                seed: common.seed,
            };
            let predicted = mu_beta_brown(0.0, 1.0, PREDICTION_GRID);
            let rep = run_experiment(&spec, &predicted, 1.0, "uniform disk")?;
            let rc = RunConfig::new(common.out.as_deref(), Some(common.seed), PREDICTION_GRID);
            emit_json(common.out.as_deref(), &report_json(&rep, &rc))
        }
        RmtCmd::Product { k, common } => {
            configure_rayon(common.parallel);
            let spec = EnsembleSpec {
                kind: EnsembleKind::GinibreProduct { k },
                n: common.n,
                trials: common.trials,
                seed: common.seed,
            };
            let predicted = mu_beta_brown(k as f64, 1.0, PREDICTION_GRID);
            let rep = run_experiment(&spec, &predicted, 1.0, &format!("mu_beta(beta={k})"))?;
            let rc = RunConfig::new(common.out.as_deref(), Some(common.seed), PREDICTION_GRID);
            emit_json(common.out.as_deref(), &report_json(&rep, &rc))
        }
        RmtCmd::FreeSum { k, common } => {
            configure_rayon(common.parallel);
            let rep = free_sum_check(k, common.n, common.trials, common.seed)?;
            let rc = RunConfig::new(common.out.as_deref(), Some(common.seed), PREDICTION_GRID);
            emit_json(common.out.as_deref(), &report_json(&rep, &rc))
        }
        RmtCmd::Moments { k, gamma, common } => {
            configure_rayon(common.parallel);
            if k < 1 {
                return Err(Error::InvalidMeasure("k must be >= 1".into()));
            }
            let chk = singular_moment_check(k, gamma, common.n, common.trials, common.seed)?;
            let rc = RunConfig::new(common.out.as_deref(), Some(common.seed), PREDICTION_GRID);
            let mut v = serde_json::to_value(&chk).unwrap();
            v["run_config"] = serde_json::to_value(&rc).unwrap();
            emit_json(common.out.as_deref(), &v)
        }
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct Check {
    name: &'static str,
    tol: f64,
    worst: Result<f64>,
}

fn random_atomic(rng: &mut ChaCha8Rng) -> PositiveRealMeasure {
    let k = rng.random_range(1..=4usize);
    let mut atoms = Vec::with_capacity(k);
    let mut total = 0.0;
    for _ in 0..k {
        let x = rng.random_range(0.1..5.0);
        let w = rng.random_range(0.1..1.0);
        total += w;
        atoms.push((x, w));
    }
    for a in atoms.iter_mut() {
        a.1 /= total;
    }
    PositiveRealMeasure::from_atoms(&atoms).unwrap()
}

fn cmd_verify(quick: bool) -> Result<()> {
    let n_measures = if quick { 10 } else { 100 };
    let ws = [-0.9, -0.5, -0.1, -0.01];
    let mut rng = ChaCha8Rng::seed_from_u64(0xF5EE_B505);
    let measures: Vec<PositiveRealMeasure> =
        (0..n_measures).map(|_| random_atomic(&mut rng)).collect();

    let mut checks: Vec<Check> = Vec::new();

    checks.push(Check {
        name: "psi-chi round-trip",
        tol: 1e-10,
        worst: (|| {
            let mut worst = 0.0_f64;
            for mu in &measures {
                for &w in &ws {
                    let u = chi(mu, w)?;
                    worst = worst.max((psi(mu, u) - w).abs());
                }
            }
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "S from R vs direct S",
        tol: 1e-8,
        worst: (|| {
            let mut worst = 0.0_f64;
            for mu in measures.iter().take(if quick { 5 } else { 50 }) {
                let eps = r_table(mu)?.epsilon();
                for frac in [0.25, 0.5, 0.85] {
                    let w = (eps - 1.0) * frac;
                    worst = worst.max((s_from_r(mu, w)? - s_transform(mu, w)?).abs());
                }
            }
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "squaring identity",
        tol: 1e-8,
        worst: (|| {
            let mut worst = 0.0_f64;
            for mu in &measures {
                let root = mu.pushforward(Map::Sqrt)?;
                let nu = root.symmetrize();
                for &w in &ws {
                    worst = worst.max((s_of_square(&nu, w)? - s_transform(mu, w)?).abs());
                }
            }
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "inversion identity",
        tol: 1e-8,
        worst: (|| {
            let mut worst = 0.0_f64;
            for mu in &measures {
                let inv = mu.pushforward(Map::Inverse)?;
                for &w in &ws {
                    worst = worst.max((s_of_inverse(mu, w)? - s_transform(&inv, w)?).abs());
                }
            }
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "S- and R-scaling",
        tol: 1e-10,
        worst: (|| {
            let mut worst = 0.0_f64;
            let mut rng = ChaCha8Rng::seed_from_u64(0x5CA1_E5);
            for mu in &measures {
                let c = rng.random_range(0.5..2.0);
                let dil = mu.pushforward(Map::Dilate(c))?;
                for &w in &ws {
                    worst = worst.max((s_transform(&dil, w)? - s_transform(mu, w)? / c).abs());
                }
                let eps_mu = r_table(mu)?.epsilon();
                let eps_dil = r_table(&dil)?.epsilon();
                let w = -0.5 * eps_dil.min(eps_mu / c);
                worst =
                    worst.max((r_transform(&dil, w)? - c * r_transform(mu, c * w)?).abs());
            }
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "semigroup additivity",
        tol: 1e-10,
        worst: (|| {
            let mut worst = 0.0_f64;
            for mu in measures.iter().take(if quick { 5 } else { 25 }) {
                worst = worst.max(semigroup_additivity_check(mu, 1.5, 2.0)?);
            }
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "stable stability residual",
        tol: 1e-10,
        worst: (|| {
            let mut worst = 0.0_f64;
            for beta in [0.0, 1.0, 2.0] {
                for s in [1.5, 2.0] {
                    worst = worst.max(stability_residual(beta, s)?);
                }
            }
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "moment oracles",
        tol: 1e-12,
        worst: (|| {
            let mut worst = 0.0_f64;
            worst = worst.max(
                (mu_beta_abs_moment(0.0, 1.0).finite().unwrap() - 2.0 / 3.0).abs(),
            );
            worst = worst.max(
                (mu_beta_abs_moment(1.0, 1.0).finite().unwrap() - std::f64::consts::FRAC_PI_2)
                    .abs(),
            );
            worst = worst
                .max((nu_beta_moment(1.0, 0.25).finite().unwrap() - 2.0_f64.sqrt()).abs());
            Ok(worst)
        })(),
    });

    checks.push(Check {
        name: "circular fixed point",
        tol: 1e-8,
        worst: (|| {
            let mp = PositiveRealMeasure::free_poisson(1.0, 512)?;
            let p = CompressionParams::new(2.0, Scaling::SqrtS)?;
            let b = compressed_brown(&mp, p, if quick { 128 } else { 512 })?;
            let mut worst = 0.0_f64;
            for (t, q) in b.t_grid.iter().zip(&b.q_values) {
                worst = worst.max((q - t.sqrt()).abs());
            }
            Ok(worst)
        })(),
    });

    let mut failures = 0usize;
    for c in &checks {
        match &c.worst {
            Ok(w) if *w <= c.tol => {
                println!("PASS  {:28} worst {:10.3e}  tol {:8.1e}", c.name, w, c.tol)
            }
            Ok(w) => {
                failures += 1;
                println!("FAIL  {:28} worst {:10.3e}  tol {:8.1e}", c.name, w, c.tol)
            }
            Err(e) => {
                failures += 1;
                println!("FAIL  {:28} error: {e}", c.name)
            }
        }
    }
    if failures > 0 {
        return Err(Error::SolverFailure(format!(
            "verify: {failures} of {} checks failed",
            checks.len()
        )));
    }
    Ok(())
}
