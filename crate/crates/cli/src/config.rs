//! Run configuration: JSON file values overlaid by command-line flags,
//! resolved to concrete, validated parameters per command.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use entroflow::inequalities::InequalityKind;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const DEFAULT_OUT: &str = "entroflow-out";
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Flow {
    Heat,
    FokkerPlanck,
    FastDiffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Potential {
    Quadratic,
    Quartic,
    AnisotropicQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum JkoFunctional {
    Entropy,
    FokkerPlanck,
}

/// Top level of a `--config` file. Parameter keys sit next to `command`,
/// `seed` and `out`, e.g. `{"command": "simulate", "flow": "heat", "dt": 1e-3}`.
#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(path_error)
    }

    /// Parameters of one command; unknown keys and malformed values are
    /// reported with their key.
    pub fn params<T: for<'de> Deserialize<'de> + Default>(&self) -> Result<T, CliError> {
        if self.params.is_empty() {
            return Ok(T::default());
        }
        serde_path_to_error::deserialize(Value::Object(self.params.clone())).map_err(path_error)
    }
}

fn path_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> CliError {
    let path = e.path().to_string();
    let inner = e.into_inner().to_string();
    // unknown keys surface at the parent path; name the key from the message
    let field = if path == "." {
        inner
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "config".into())
    } else {
        path
    };
    CliError::config(field, inner)
}

/// Copies every field that is set in `top` onto `base`.
macro_rules! overlay {
    ($ty:ident { $($f:ident),* $(,)? }) => {
        impl $ty {
            pub fn overlay(&mut self, top: &Self) {
                $( if top.$f.is_some() { self.$f = top.$f.clone(); } )*
            }
        }
    };
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(name, format!("must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(name, format!("must be finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(CliError::config(name, format!("must be at least {min}, got {v}")))
    }
}

fn interval(name: &str, v: Option<Vec<f64>>, default: [f64; 2]) -> Result<[f64; 2], CliError> {
    let v = v.unwrap_or_else(|| default.to_vec());
    match v[..] {
        [a, b] if a.is_finite() && b.is_finite() && a < b => Ok([a, b]),
        _ => Err(CliError::config(
            name,
            format!("expected two finite increasing bounds, got {v:?}"),
        )),
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOpts {
    /// PDE to integrate [default: fokker_planck]
    #[arg(long, value_enum)]
    #[serde(alias = "kind")]
    pub flow: Option<Flow>,
    /// Dimension of the fast-diffusion flow (radial grid) [default: 3]
    #[arg(long)]
    pub n: Option<usize>,
    /// Line domain `a,b` for heat and Fokker-Planck [default: -8,8]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    /// Truncation radius for fast diffusion [default: 10]
    #[arg(long)]
    pub radius: Option<f64>,
    /// Grid nodes [default: 1601 on the line, 400 radial]
    #[arg(long = "nodes")]
    #[serde(rename = "N", alias = "nodes")]
    pub nodes: Option<usize>,
    /// Time step [default: 1e-3]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time [default: 4 on the line, 3 radial]
    #[arg(long = "t-end")]
    #[serde(rename = "T", alias = "t_end")]
    pub t_end: Option<f64>,
    /// Keep every k-th step [default: 20]
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Mean of the Gaussian initial datum on the line [default: 2]
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    /// Standard deviation of the Gaussian initial datum [default: 1]
    #[arg(long)]
    pub sd: Option<f64>,
    /// Amplitude of the seeded perturbation of the fast-diffusion profile
    /// [default: 0.5]
    #[arg(long)]
    pub perturbation: Option<f64>,
    /// Also write the dissipation report and fitted rates [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub diagnose: Option<bool>,
}

overlay!(SimulateOpts {
    flow,
    n,
    domain,
    radius,
    nodes,
    dt,
    t_end,
    snapshot_every,
    mean,
    sd,
    perturbation,
    diagnose
});

#[derive(Debug, Clone, Serialize)]
pub struct SimulateParams {
    pub flow: Flow,
    pub n: usize,
    pub domain: Option<[f64; 2]>,
    pub radius: Option<f64>,
    #[serde(rename = "N")]
    pub nodes: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub snapshot_every: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub perturbation: Option<f64>,
    pub diagnose: bool,
}

impl SimulateOpts {
    pub fn resolve(self) -> Result<SimulateParams, CliError> {
        let flow = self.flow.unwrap_or(Flow::FokkerPlanck);
        let radial = flow == Flow::FastDiffusion;
        let n = if radial {
            at_least("n", self.n.unwrap_or(3), 2)?
        } else {
            1
        };
        let dt = positive("dt", self.dt.unwrap_or(1e-3))?;
        let t_end = positive("T", self.t_end.unwrap_or(if radial { 3.0 } else { 4.0 }))?;
        if t_end < dt {
            return Err(CliError::config(
                "T",
                format!("final time {t_end} is shorter than dt = {dt}"),
            ));
        }
        let nodes = at_least("N", self.nodes.unwrap_or(if radial { 400 } else { 1601 }), 8)?;
        let snapshot_every = at_least("snapshot_every", self.snapshot_every.unwrap_or(20), 1)?;
        let diagnose = self.diagnose.unwrap_or(false);
        // centred time differences need the initial state and two more snapshots
        let steps = (t_end / dt - 1e-9).ceil() as usize;
        if diagnose && steps.div_ceil(snapshot_every) < 2 {
            return Err(CliError::config(
                "snapshot_every",
                format!("diagnostics need at least three snapshots; {steps} steps every {snapshot_every} give fewer"),
            ));
        }
        Ok(SimulateParams {
            flow,
            n,
            domain: if radial {
                None
            } else {
                Some(interval("domain", self.domain, [-8.0, 8.0])?)
            },
            radius: if radial {
                Some(positive("radius", self.radius.unwrap_or(10.0))?)
            } else {
                None
            },
            nodes,
            dt,
            t_end,
            snapshot_every,
            mean: if radial {
                None
            } else {
                Some(finite("mean", self.mean.unwrap_or(2.0))?)
            },
            sd: if radial {
                None
            } else {
                Some(positive("sd", self.sd.unwrap_or(1.0))?)
            },
            perturbation: if radial {
                let eps = self.perturbation.unwrap_or(0.5);
                if !(0.0..1.0).contains(&eps) {
                    return Err(CliError::config(
                        "perturbation",
                        format!("must lie in [0, 1), got {eps}"),
                    ));
                }
                Some(eps)
            } else {
                None
            },
            diagnose,
        })
    }
}

// ---------------------------------------------------------------- diagnose

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseOpts {
    /// Potential of the finite-dimensional flow [default: quadratic]
    #[arg(long, value_enum)]
    pub potential: Option<Potential>,
    /// Dimension of the quadratic potential [default: 2]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Starting point, comma separated [default: 1, 0.4, -0.2, ...]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Time step [default: 0.01]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time [default: 5]
    #[arg(long = "t-end")]
    #[serde(rename = "T", alias = "t_end")]
    pub t_end: Option<f64>,
}

overlay!(DiagnoseOpts {
    potential,
    dim,
    x0,
    dt,
    t_end
});

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseParams {
    pub potential: Potential,
    pub x0: Vec<f64>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
}

impl DiagnoseOpts {
    pub fn resolve(self) -> Result<DiagnoseParams, CliError> {
        let potential = self.potential.unwrap_or(Potential::Quadratic);
        let dim = match potential {
            Potential::Quadratic => at_least("dim", self.dim.unwrap_or(2), 1)?,
            Potential::Quartic => 1,
            Potential::AnisotropicQuadratic => 2,
        };
        let x0 = self
            .x0
            .unwrap_or_else(|| (0..dim).map(|i| 1.0 - 0.6 * i as f64).collect());
        if x0.len() != dim {
            return Err(CliError::config(
                "x0",
                format!("expected {dim} coordinates, got {}", x0.len()),
            ));
        }
        for &v in &x0 {
            finite("x0", v)?;
        }
        let dt = positive("dt", self.dt.unwrap_or(0.01))?;
        let t_end = positive("T", self.t_end.unwrap_or(5.0))?;
        if t_end < dt {
            return Err(CliError::config(
                "T",
                format!("final time {t_end} is shorter than dt = {dt}"),
            ));
        }
        Ok(DiagnoseParams {
            potential,
            x0,
            dt,
            t_end,
        })
    }
}

// ---------------------------------------------------------------- jko

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct JkoOpts {
    /// Functional driving the scheme [default: fokker_planck]
    #[arg(long, value_enum)]
    pub functional: Option<JkoFunctional>,
    /// Proximal time step [default: 0.02]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of proximal steps [default: 50]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Number of quantile levels [default: 2000]
    #[arg(long = "levels")]
    #[serde(rename = "M", alias = "levels")]
    pub levels: Option<usize>,
    /// Line domain `a,b` of the output grid [default: -8,8]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    /// Grid nodes [default: 1601]
    #[arg(long = "nodes")]
    #[serde(rename = "N", alias = "nodes")]
    pub nodes: Option<usize>,
    /// Mean of the Gaussian initial datum [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    /// Standard deviation of the Gaussian initial datum [default: 1]
    #[arg(long)]
    pub sd: Option<f64>,
}

overlay!(JkoOpts {
    functional,
    tau,
    steps,
    levels,
    domain,
    nodes,
    mean,
    sd
});

#[derive(Debug, Clone, Serialize)]
pub struct JkoParams {
    pub functional: JkoFunctional,
    pub tau: f64,
    pub steps: usize,
    #[serde(rename = "M")]
    pub levels: usize,
    pub domain: [f64; 2],
    #[serde(rename = "N")]
    pub nodes: usize,
    pub mean: f64,
    pub sd: f64,
}

impl JkoOpts {
    pub fn resolve(self) -> Result<JkoParams, CliError> {
        Ok(JkoParams {
            functional: self.functional.unwrap_or(JkoFunctional::FokkerPlanck),
            tau: positive("tau", self.tau.unwrap_or(0.02))?,
            steps: at_least("steps", self.steps.unwrap_or(50), 1)?,
            levels: at_least("M", self.levels.unwrap_or(2000), entroflow::jko::MIN_JKO_NODES)?,
            domain: interval("domain", self.domain, [-8.0, 8.0])?,
            nodes: at_least("N", self.nodes.unwrap_or(1601), 8)?,
            mean: finite("mean", self.mean.unwrap_or(1.0))?,
            sd: positive("sd", self.sd.unwrap_or(1.0))?,
        })
    }
}

// ---------------------------------------------------------------- check

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOpts {
    /// Inequality to sweep: lsi, sobolev, eep_fp, eep_fd or zugmeyer
    /// [default: lsi]
    #[arg(long)]
    pub inequality: Option<String>,
    /// Test bank; only `default` is defined [default: default]
    #[arg(long)]
    pub bank: Option<String>,
    /// Number of cases [default: 200, 50 for sobolev]
    #[arg(long)]
    pub count: Option<usize>,
    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long)]
    pub threads: Option<usize>,
}

overlay!(CheckOpts {
    inequality,
    bank,
    count,
    threads
});

#[derive(Debug, Clone, Serialize)]
pub struct CheckParams {
    #[serde(serialize_with = "kind_name")]
    pub inequality: InequalityKind,
    pub bank: String,
    pub count: usize,
    /// Scheduling only; results do not depend on it.
    #[serde(skip)]
    pub threads: usize,
}

fn kind_name<S: serde::Serializer>(k: &InequalityKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(k.name())
}

impl CheckOpts {
    pub fn resolve(self) -> Result<CheckParams, CliError> {
        let name = self.inequality.unwrap_or_else(|| "lsi".into());
        let inequality: InequalityKind = name.parse().map_err(|_| {
            let known: Vec<_> = InequalityKind::ALL.iter().map(|k| k.name()).collect();
            CliError::config(
                "inequality",
                format!("unknown inequality {name:?}, expected one of {}", known.join(", ")),
            )
        })?;
        let bank = self.bank.unwrap_or_else(|| "default".into());
        if bank != "default" {
            return Err(CliError::config(
                "bank",
                format!("unknown bank {bank:?}, expected \"default\""),
            ));
        }
        Ok(CheckParams {
            inequality,
            bank,
            count: at_least("count", self.count.unwrap_or(inequality.default_count()), 1)?,
            threads: self.threads.unwrap_or(0),
        })
    }
}

// ---------------------------------------------------------------- w2

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct W2Opts {
    /// First density as an `x,value` CSV; overrides the Gaussian parameters
    #[arg(long)]
    pub mu: Option<PathBuf>,
    /// Second density as an `x,value` CSV
    #[arg(long)]
    pub nu: Option<PathBuf>,
    /// Mean of the first Gaussian [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub mu_mean: Option<f64>,
    /// Standard deviation of the first Gaussian [default: 1]
    #[arg(long)]
    pub mu_sd: Option<f64>,
    /// Mean of the second Gaussian [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub nu_mean: Option<f64>,
    /// Standard deviation of the second Gaussian [default: 1]
    #[arg(long)]
    pub nu_sd: Option<f64>,
    /// Line domain `a,b` for the Gaussians [default: -10,10]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    /// Grid nodes for the Gaussians [default: 2001]
    #[arg(long = "nodes")]
    #[serde(rename = "N", alias = "nodes")]
    pub nodes: Option<usize>,
    /// Write the McCann geodesic with this many steps; 0 skips it
    /// [default: 0]
    #[arg(long)]
    pub geodesic_steps: Option<usize>,
}

overlay!(W2Opts {
    mu,
    nu,
    mu_mean,
    mu_sd,
    nu_mean,
    nu_sd,
    domain,
    nodes,
    geodesic_steps
});

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Measures {
    Files {
        mu: PathBuf,
        nu: PathBuf,
    },
    Gaussians {
        mu_mean: f64,
        mu_sd: f64,
        nu_mean: f64,
        nu_sd: f64,
        domain: [f64; 2],
        #[serde(rename = "N")]
        nodes: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct W2Params {
    pub measures: Measures,
    pub geodesic_steps: usize,
}

impl W2Opts {
    pub fn resolve(self) -> Result<W2Params, CliError> {
        let measures = match (self.mu, self.nu) {
            (Some(mu), Some(nu)) => Measures::Files { mu, nu },
            (None, None) => Measures::Gaussians {
                mu_mean: finite("mu_mean", self.mu_mean.unwrap_or(0.0))?,
                mu_sd: positive("mu_sd", self.mu_sd.unwrap_or(1.0))?,
                nu_mean: finite("nu_mean", self.nu_mean.unwrap_or(1.0))?,
                nu_sd: positive("nu_sd", self.nu_sd.unwrap_or(1.0))?,
                domain: interval("domain", self.domain, [-10.0, 10.0])?,
                nodes: at_least("N", self.nodes.unwrap_or(2001), 8)?,
            },
            (Some(_), None) => return Err(CliError::config("nu", "missing: --mu needs --nu")),
            (None, Some(_)) => return Err(CliError::config("mu", "missing: --nu needs --mu")),
        };
        Ok(W2Params {
            measures,
            geodesic_steps: self.geodesic_steps.unwrap_or(0),
        })
    }
}
