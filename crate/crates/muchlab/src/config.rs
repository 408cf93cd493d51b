//! Run configuration: a TOML file with every table closed to unknown keys.
//!
//! ```toml
//! n = 256
//! t_end = 1.0
//! seeds = [0.25, 0.5]
//!
//! [params]
//! k1 = 1.0
//! k2 = 1.0
//!
//! [initial]
//! kind = "sine"
//! offset = 0.5
//! amplitude = 0.1
//!
//! [control]
//! abs_tol = 1e-8
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blowup::von_mises_data;
use crate::error::{Error, Result};
use crate::grid::{apply_ainv, Field, PeriodicGrid, TWO_PI};
use crate::model::ModelParams;
use crate::peakons::{amplitude_for_speed, sample_field, PeakonFormulation, PeakonSystem};
use crate::timestepper::StepControl;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        value: f64,
    },
    /// `offset + amplitude sin(2 pi wavenumber x + phase)`.
    Sine {
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_u32")]
        wavenumber: u32,
        #[serde(default)]
        phase: f64,
    },
    /// `u = A^{-1}(mean + amplitude cos(2 pi wavenumber x))`.
    MomentumCosine {
        #[serde(default = "one")]
        mean: f64,
        amplitude: f64,
        #[serde(default = "one_u32")]
        wavenumber: u32,
    },
    /// Momentum `floor + amplitude * (von Mises bump of mean 1)`.
    VonMises {
        floor: f64,
        amplitude: f64,
        kappa: f64,
        #[serde(default = "half")]
        centre: f64,
    },
    /// One peakon given by its speed or its amplitude.
    Peakon {
        c: Option<f64>,
        a: Option<f64>,
        #[serde(default)]
        x0: f64,
        /// Which real root to take when `c` is given (descending order).
        #[serde(default)]
        root: usize,
    },
    Multipeakon {
        p: Vec<f64>,
        q: Vec<f64>,
    },
    /// Grid values read from a file: one number per line, or a CSV with a
    /// `u` column.
    Samples {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write every this many stored snapshots (the final one is always kept).
    pub snapshot_every: usize,
    pub snapshots: bool,
    pub plot_script: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("muchlab-out"), snapshot_every: 1, snapshots: true, plot_script: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakonConfig {
    pub formulation: PeakonFormulation,
}

/// Axes of a sweep; the runs are the Cartesian product, empty axes keep the
/// base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub gamma: Vec<f64>,
    pub n: Vec<usize>,
    /// Scales the initial amplitude of `sine`, `momentum-cosine` and `von-mises` data.
    pub amplitude: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Peakon,
    Characteristics,
    BlowupCheck,
    Verify,
    Sweep,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Peakon => "peakon",
            Mode::Characteristics => "characteristics",
            Mode::BlowupCheck => "blowup-check",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Informational; the command line picks the mode.
    pub mode: Option<Mode>,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default = "default_n")]
    pub n: usize,
    pub initial: Option<InitialCondition>,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default)]
    pub control: StepControl,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed points for characteristics and pointwise blow-up checks.
    #[serde(default)]
    pub seeds: Vec<f64>,
    #[serde(default)]
    pub peakon: PeakonConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_n() -> usize {
    256
}

/// Command-line values that replace file values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub t_end: Option<f64>,
}

impl RunConfig {
    /// Parses TOML text; relative sample paths resolve against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(InitialCondition::Samples { path }), Some(base)) = (cfg.initial.as_mut(), base) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(n) = o.n {
            self.n = n;
        }
        if let Some(t) = o.t_end {
            self.t_end = t;
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.params.validate().map_err(cfg)?;
        self.control.validate().map_err(cfg)?;
        PeriodicGrid::new(self.n).map_err(cfg)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive and finite, got {}", self.t_end)));
        }
        if self.output.snapshot_every == 0 {
            return Err(Error::Config("output.snapshot_every must be at least 1".into()));
        }
        if let Some(s) = self.seeds.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("seed {s} is not finite")));
        }
        for &n in &self.sweep.n {
            PeriodicGrid::new(n).map_err(cfg)?;
        }
        if mode == Mode::Verify {
            return Ok(());
        }
        let ic = self
            .initial
            .as_ref()
            .ok_or_else(|| Error::Config(format!("mode {} needs an [initial] table", mode.name())))?;
        if mode == Mode::Peakon {
            self.peakon_system()?;
        } else {
            self.initial_field_with(self.n, 1.0)?;
        }
        if matches!(ic, InitialCondition::Samples { .. }) && !self.sweep.n.is_empty() && mode == Mode::Sweep {
            return Err(Error::Config("sampled initial data cannot be swept over n".into()));
        }
        Ok(())
    }

    /// Peakon system for `peakon`, `multipeakon` data.
    pub fn peakon_system(&self) -> Result<PeakonSystem> {
        match &self.initial {
            Some(InitialCondition::Peakon { c, a, x0, root }) => {
                let amp = single_amplitude(*c, *a, *root, &self.params)?;
                PeakonSystem::new(vec![amp], vec![*x0]).map_err(|e| Error::Config(e.to_string()))
            }
            Some(InitialCondition::Multipeakon { p, q }) => {
                if p.is_empty() {
                    return Err(Error::Config("multipeakon needs at least one peakon".into()));
                }
                PeakonSystem::new(p.clone(), q.clone()).map_err(|e| Error::Config(e.to_string()))
            }
            _ => Err(Error::Config("peakon mode needs `peakon` or `multipeakon` initial data".into())),
        }
    }

    pub fn initial_field(&self) -> Result<Field> {
        self.initial_field_with(self.n, 1.0)
    }

    /// Initial field on an `n`-point grid with the amplitude scaled by `scale`.
    pub fn initial_field_with(&self, n: usize, scale: f64) -> Result<Field> {
        let cfg = |e: Error| Error::Config(e.to_string());
        let grid = PeriodicGrid::new(n).map_err(cfg)?;
        let ic = self.initial.as_ref().ok_or_else(|| Error::Config("missing [initial] table".into()))?;
        let field = match ic {
            InitialCondition::Constant { value } => Field::constant(&grid, *value),
            InitialCondition::Sine { offset, amplitude, wavenumber, phase } => {
                let (o, a, k, ph) = (*offset, scale * amplitude, *wavenumber as f64, *phase);
                grid.sample(|x| o + a * (TWO_PI * k * x + ph).sin())
            }
            InitialCondition::MomentumCosine { mean, amplitude, wavenumber } => {
                let (mu, a, k) = (*mean, scale * amplitude, *wavenumber as f64);
                grid.sample(|x| mu + a * (TWO_PI * k * x).cos()).map(|m| apply_ainv(&m))
            }
            InitialCondition::VonMises { floor, amplitude, kappa, centre } => {
                if !(*kappa >= 0.0) {
                    return Err(Error::Config(format!("kappa must be nonnegative, got {kappa}")));
                }
                von_mises_data(&grid, *floor, scale * amplitude, *kappa, *centre)
            }
            InitialCondition::Peakon { .. } | InitialCondition::Multipeakon { .. } => {
                let sys = self.peakon_system()?;
                let p = sys.p().iter().map(|p| scale * p).collect();
                Ok(sample_field(&PeakonSystem::new(p, sys.q().to_vec()).map_err(cfg)?, &grid))
            }
            InitialCondition::Samples { path } => {
                let values = read_samples(path)?;
                if values.len() != n {
                    return Err(Error::Config(format!(
                        "{} holds {} samples but n = {n}",
                        path.display(),
                        values.len()
                    )));
                }
                Field::new(grid, values.into_iter().map(|v| scale * v).collect())
            }
        };
        field.map_err(cfg)
    }
}

fn single_amplitude(c: Option<f64>, a: Option<f64>, root: usize, params: &ModelParams) -> Result<f64> {
    match (c, a) {
        (Some(_), Some(_)) => Err(Error::Config("give either `c` or `a` for a peakon, not both".into())),
        (None, None) => Err(Error::Config("a peakon needs `c` or `a`".into())),
        (None, Some(a)) => Ok(a),
        (Some(c), None) => {
            let sol = amplitude_for_speed(c, params).map_err(|e| Error::Config(e.to_string()))?;
            sol.roots.get(root).copied().ok_or_else(|| {
                Error::Config(format!("speed {c} has {} real amplitude(s); root {root} requested", sol.roots.len()))
            })
        }
    }
}

/// One value per line, or a CSV whose header names a `u` column.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let bad = |e: String| Error::Config(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut rows = reader.records();
    let first = match rows.next() {
        Some(r) => r.map_err(|e| bad(e.to_string()))?,
        None => return Err(bad("no samples".into())),
    };
    let (col, mut values) = match first.iter().position(|h| h == "u") {
        Some(col) => (col, Vec::new()),
        None if first.len() == 1 => {
            let v = first[0].parse::<f64>().map_err(|e| bad(format!("{e} in {:?}", &first[0])))?;
            (0, vec![v])
        }
        None => return Err(bad("multi-column sample files need a `u` header".into())),
    };
    for row in rows {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let cell = row.get(col).ok_or_else(|| bad("short row".into()))?;
        values.push(cell.parse::<f64>().map_err(|e| bad(format!("{e} in {cell:?}")))?);
    }
    Ok(values)
}
