//! Batch pipeline behind the command-line tool.
//!
//! A single JSON document configures everything; the three entry points map
//! onto the subcommands:
//!
//! * [`run_analyze`] — evaluate the condition certificate, write the report
//!   JSON (exit 2 when `require_conditions` is set and the certificate fails);
//! * [`run_estimate`] — run the requested estimators over the `s` grid and
//!   append one CSV row per `(s, method)`; never touches the report file;
//! * [`run_fit`] — read the CSV back and fit the asymptotic constant, writing
//!   the fit JSON. Fitting never launches simulations.
//!
//! Estimation derives one seed per `(s, method)` run from the master seed by
//! SplitMix64 mixing, so re-running an identical configuration reproduces the
//! CSV rows byte for byte; the per-run seed lands in the `seed` column.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asympt;
use crate::conditions::{self, ConditionReport, Verdict};
use crate::error::{Error, Result};
use crate::model::{JumpLaw, LevyModel};
use crate::rates::{OrthantTarget, ToleranceProfile};
use crate::sim::{self, HitEstimate, Method, SimConfig, TiltPlan};

pub const CSV_HEADER: &str = "s,method,delta,n,p_hat,std_err,ci_lo,ci_hi,seed";

/// Model description inside the JSON config. Field names are part of the
/// interface: `dim`, `drift`, `cov`, optional `jumps` with `intensity` and a
/// `law` tagged by `kind` ∈ {"exp_along", "gaussian", "points"}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSchema {
    pub dim: usize,
    pub drift: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    #[serde(default)]
    pub jumps: Option<JumpsSchema>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpsSchema {
    pub intensity: f64,
    pub law: LawSchema,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LawSchema {
    #[serde(rename = "exp_along")]
    ExpAlong { direction: Vec<f64>, rate: f64 },
    #[serde(rename = "gaussian")]
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    #[serde(rename = "points")]
    Points { atoms: Vec<(Vec<f64>, f64)> },
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, key: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::config(key, format!("must be a {dim}x{dim} matrix")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl ModelSchema {
    pub fn build(&self) -> Result<LevyModel> {
        if self.dim == 0 {
            return Err(Error::config("model.dim", "must be at least 1"));
        }
        if self.drift.len() != self.dim {
            return Err(Error::config(
                "model.drift",
                format!("must have {} components", self.dim),
            ));
        }
        let cov = matrix_from_rows(&self.cov, self.dim, "model.cov")?;
        let drift = DVector::from_vec(self.drift.clone());
        let model = match &self.jumps {
            None => LevyModel::gaussian(drift, cov),
            Some(j) => {
                if !(j.intensity > 0.0) {
                    return Err(Error::config("model.jumps.intensity", "must be positive"));
                }
                let law = match &j.law {
                    LawSchema::ExpAlong { direction, rate } => {
                        if direction.len() != self.dim {
                            return Err(Error::config(
                                "model.jumps.law.direction",
                                format!("must have {} components", self.dim),
                            ));
                        }
                        if !(*rate > 0.0) {
                            return Err(Error::config("model.jumps.law.rate", "must be positive"));
                        }
                        JumpLaw::ScalarExponentialAlong {
                            direction: DVector::from_vec(direction.clone()),
                            rate: *rate,
                        }
                    }
                    LawSchema::Gaussian { mean, cov } => {
                        if mean.len() != self.dim {
                            return Err(Error::config(
                                "model.jumps.law.mean",
                                format!("must have {} components", self.dim),
                            ));
                        }
                        JumpLaw::GaussianJump {
                            mean: DVector::from_vec(mean.clone()),
                            cov: matrix_from_rows(cov, self.dim, "model.jumps.law.cov")?,
                        }
                    }
                    LawSchema::Points { atoms } => JumpLaw::PointMasses {
                        atoms: atoms
                            .iter()
                            .map(|(x, p)| {
                                if x.len() != self.dim {
                                    return Err(Error::config(
                                        "model.jumps.law.atoms",
                                        format!("atoms must have {} components", self.dim),
                                    ));
                                }
                                Ok((DVector::from_vec(x.clone()), *p))
                            })
                            .collect::<Result<Vec<_>>>()?,
                    },
                };
                LevyModel::with_jumps(drift, cov, j.intensity, law)
            }
        };
        model.map_err(|e| Error::config("model", e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSchema {
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Flags {
    #[serde(default)]
    pub require_conditions: bool,
    #[serde(default)]
    pub assume_c1: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default = "default_report_path")]
    pub report_path: PathBuf,
    #[serde(default = "default_csv_path")]
    pub csv_path: PathBuf,
}

fn default_report_path() -> PathBuf {
    PathBuf::from("report.json")
}

fn default_csv_path() -> PathBuf {
    PathBuf::from("estimates.csv")
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            report_path: default_report_path(),
            csv_path: default_csv_path(),
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Crude, Method::Importance]
}

/// The run configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSchema,
    pub target: TargetSchema,
    pub s_grid: Vec<f64>,
    pub sim: SimConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub tolerances: ToleranceProfile,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Builds and validates the model and target; every failure names the
    /// offending config key.
    pub fn build(&self) -> Result<(LevyModel, OrthantTarget)> {
        let model = self.model.build()?;
        let target = OrthantTarget::new(DVector::from_vec(self.target.g.clone()))?;
        if target.dim() != model.dim() {
            return Err(Error::config(
                "target.g",
                format!("must have {} components", model.dim()),
            ));
        }
        if self.s_grid.is_empty() {
            return Err(Error::config("s_grid", "must be nonempty"));
        }
        if self.s_grid.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::config("s_grid", "entries must be positive"));
        }
        if self.s_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("s_grid", "must be strictly increasing"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "must name at least one method"));
        }
        if !(self.tolerances.newton_tol > 0.0) || !(self.tolerances.root_tol > 0.0) {
            return Err(Error::config("tolerances", "tolerances must be positive"));
        }
        if !(self.tolerances.bracket_lo > 0.0 && self.tolerances.bracket_lo < self.tolerances.bracket_hi) {
            return Err(Error::config(
                "tolerances",
                "bracket_lo must be positive and below bracket_hi",
            ));
        }
        self.sim.validate()?;
        Ok((model, target))
    }

    fn report(&self, model: &LevyModel, target: &OrthantTarget) -> ConditionReport {
        let mut report = conditions::check_conditions(model, target, &self.tolerances);
        if self.flags.assume_c1 {
            report.assume_c1();
        }
        report
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::config("output", format!("serialization failed: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Evaluates the condition certificate and writes the report JSON. Returns
/// exit status 2 when `require_conditions` is set and the certificate fails;
/// never launches simulations.
pub fn run_analyze(cfg: &RunConfig) -> Result<i32> {
    let (model, target) = cfg.build()?;
    let report = cfg.report(&model, &target);
    write_json(&cfg.output.report_path, &report)?;
    println!(
        "conditions: c1 {:?}, c2 {:?}, c3 {:?}",
        report.c1.verdict, report.c2.verdict, report.c3.overall.verdict
    );
    if let (Some(r_g), Some(d)) = (report.r_g, report.d_of_g) {
        println!("r_g = {r_g:.12}, d_of_g = {d:.12}");
    }
    println!("report written to {}", cfg.output.report_path.display());
    if cfg.flags.require_conditions && !report.all_hold() {
        return Ok(2);
    }
    Ok(0)
}

/// Per-run seed derivation: SplitMix64 over (master seed, s index, method).
fn derive_run_seed(master: u64, s_index: usize, method: Method) -> u64 {
    let tag: u64 = match method {
        Method::Crude => 1,
        Method::Importance => 2,
    };
    sim::mix64(master ^ sim::mix64(((s_index as u64) << 8) | tag))
}

fn format_row(est: &HitEstimate, seed: u64) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        est.s,
        est.method,
        est.delta,
        est.n_paths,
        est.p_hat,
        est.std_err,
        est.ci95.0,
        est.ci95.1,
        seed
    )
}

/// Runs the configured estimators over the `s` grid, appending one CSV row
/// per `(s, method)`. Returns exit status 2 when `require_conditions` is set
/// and the certificate fails (nothing is simulated then).
pub fn run_estimate(cfg: &RunConfig) -> Result<i32> {
    let (model, target) = cfg.build()?;
    let report = cfg.report(&model, &target);
    if cfg.flags.require_conditions && !report.all_hold() {
        eprintln!(
            "conditions do not hold (c1 {:?}, c2 {:?}, c3 {:?}); refusing to estimate",
            report.c1.verdict, report.c2.verdict, report.c3.overall.verdict
        );
        return Ok(2);
    }
    let plan: Option<TiltPlan> = if cfg.methods.contains(&Method::Importance) {
        if report.c3.overall.verdict != Verdict::Holds {
            return Err(Error::ConditionError {
                reason: format!(
                    "importance sampling requires the scale condition to hold, but it is {:?}: {}",
                    report.c3.overall.verdict, report.c3.overall.reason
                ),
            });
        }
        Some(TiltPlan {
            tilt: DVector::from_vec(report.normal.clone().expect("normal present")),
            r_g: report.r_g.expect("r_g present"),
            d_of_g: report.d_of_g.expect("d_of_g present"),
        })
    } else {
        None
    };

    let fresh = fs::metadata(&cfg.output.csv_path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&cfg.output.csv_path)?;
    if fresh {
        writeln!(file, "{CSV_HEADER}")?;
    }

    for (i, &s) in cfg.s_grid.iter().enumerate() {
        for &method in &cfg.methods {
            let seed = derive_run_seed(cfg.sim.master_seed, i, method);
            let run_cfg = SimConfig {
                master_seed: seed,
                ..cfg.sim
            };
            let est = match method {
                Method::Crude => sim::simulate_hitting_crude(&model, &target, s, &run_cfg)?,
                Method::Importance => {
                    let plan = plan.as_ref().expect("tilt plan prepared above");
                    sim::simulate_hitting_is_with_plan(&model, &target, s, &run_cfg, plan)?.0
                }
            };
            writeln!(file, "{}", format_row(&est, seed))?;
            println!(
                "s = {s}: {method} p_hat = {:.6e} (std err {:.3e}, {} hits / {} paths)",
                est.p_hat, est.std_err, est.n_hits, est.n_paths
            );
        }
    }
    println!("estimates appended to {}", cfg.output.csv_path.display());
    Ok(0)
}

fn parse_csv(text: &str) -> Result<Vec<(HitEstimate, u64)>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config("csv", "estimates file is empty"))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::config(
            "csv",
            format!("unexpected header `{header}`, expected `{CSV_HEADER}`"),
        ));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::config(
                "csv",
                format!("line {}: expected 9 columns, got {}", lineno + 2, fields.len()),
            ));
        }
        let num = |idx: usize, name: &str| -> Result<f64> {
            fields[idx].parse::<f64>().map_err(|_| {
                Error::config("csv", format!("line {}: bad {name} `{}`", lineno + 2, fields[idx]))
            })
        };
        let s = num(0, "s")?;
        let method: Method = fields[1].parse()?;
        let delta = num(2, "delta")?;
        let n_paths = fields[3].parse::<u64>().map_err(|_| {
            Error::config("csv", format!("line {}: bad n `{}`", lineno + 2, fields[3]))
        })?;
        let p_hat = num(4, "p_hat")?;
        let std_err = num(5, "std_err")?;
        let ci_lo = num(6, "ci_lo")?;
        let ci_hi = num(7, "ci_hi")?;
        let seed = fields[8].parse::<u64>().map_err(|_| {
            Error::config("csv", format!("line {}: bad seed `{}`", lineno + 2, fields[8]))
        })?;
        out.push((
            HitEstimate {
                s,
                method,
                p_hat,
                std_err,
                ci95: (ci_lo, ci_hi),
                n_paths,
                n_hits: (p_hat * n_paths as f64).round() as u64,
                delta,
                truncation_bias_flag: method == Method::Crude,
            },
            seed,
        ));
    }
    Ok(out)
}

/// Reads the estimates CSV and fits the asymptotic constant, writing the fit
/// JSON to the report path. Never launches simulations.
pub fn run_fit(cfg: &RunConfig) -> Result<i32> {
    let (model, target) = cfg.build()?;
    let text = fs::read_to_string(&cfg.output.csv_path).map_err(|e| {
        Error::config(
            "output.csv_path",
            format!("cannot read {}: {e}", cfg.output.csv_path.display()),
        )
    })?;
    let records: Vec<HitEstimate> = parse_csv(&text)?.into_iter().map(|(e, _)| e).collect();

    let report = cfg.report(&model, &target);
    if report.c3.overall.verdict != Verdict::Holds {
        return Err(Error::ConditionError {
            reason: format!(
                "fitting requires the scale condition (D(G) well-defined), but it is {:?}: {}",
                report.c3.overall.verdict, report.c3.overall.reason
            ),
        });
    }
    let d_of_g = report.d_of_g.expect("d_of_g present when c3 holds");
    let fit = asympt::fit_a0(&records, d_of_g, model.dim())?;
    write_json(&cfg.output.report_path, &fit)?;
    println!(
        "a0_hat = {:.6e} (95% CI [{:.6e}, {:.6e}]), shape slope {:.3e} (95% CI [{:.3e}, {:.3e}])",
        fit.a0_hat,
        fit.a0_ci95.0,
        fit.a0_ci95.1,
        fit.shape_slope,
        fit.shape_slope_ci95.0,
        fit.shape_slope_ci95.1
    );
    println!("fit written to {}", cfg.output.report_path.display());
    Ok(0)
}
