//! Run configuration. Every block has defaults describing the reference run
//! (`m = 1`, `k = 3/16`, `r0 = 1`, `k0 = 0`, static bump `g = 1`, `rho = 3`, moving Gaussian),
//! so `{}` is a valid config. Unknown keys are rejected.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;
use tdho::estimates::EstimateConfig;
use tdho::magnetic::MagneticModel;
use tdho::scattering::RangeCutoffs;
use tdho::states::make_gaussian;
use tdho::{Grid, InnerProfile, OscillatorModel, PotentialSpec, StepPolicy, TimeFactor, WaveFunction};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Names the output subdirectory; unique within a sweep.
    pub id: String,
    pub model: ModelBlock,
    pub grid: GridBlock,
    /// `null` runs with `V = 0`.
    pub potential: Option<PotentialBlock>,
    pub state: StateBlock,
    pub cutoffs: CutoffBlock,
    pub schedule: ScheduleBlock,
    pub decay: DecayBlock,
    pub magnetic: MagneticBlock,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            id: "run".into(),
            model: ModelBlock::default(),
            grid: GridBlock::default(),
            potential: Some(PotentialBlock::StaticBump { g: 1.0, rho: 3.0, cosine_omega: None }),
            state: StateBlock::default(),
            cutoffs: CutoffBlock::default(),
            schedule: ScheduleBlock::default(),
            decay: DecayBlock::default(),
            magnetic: MagneticBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub m: f64,
    pub k: f64,
    pub r0: f64,
    pub inner: InnerBlock,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self { m: 1.0, k: 3.0 / 16.0, r0: 1.0, inner: InnerBlock::Constant { k0: 0.0 } }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InnerBlock {
    Constant { k0: f64 },
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub dim: usize,
    pub n: usize,
    pub l: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { dim: 1, n: 2048, l: 256.0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialBlock {
    StaticBump {
        g: f64,
        rho: f64,
        #[serde(default)]
        cosine_omega: Option<f64>,
    },
    GaussianBump {
        g: f64,
        rho: f64,
        width: f64,
        #[serde(default)]
        cosine_omega: Option<f64>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateBlock {
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub width: f64,
}

impl Default for StateBlock {
    fn default() -> Self {
        Self { center: vec![3.0], momentum: vec![1.5], width: 4.0 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffBlock {
    pub kappa1: f64,
    pub r1: f64,
    pub kappa2: f64,
    pub eps: f64,
    pub eta0: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// `None` takes the midpoint of the admissible interval.
    pub eps5: Option<f64>,
}

impl Default for CutoffBlock {
    fn default() -> Self {
        let d = EstimateConfig::default();
        Self {
            kappa1: d.kappa1,
            r1: d.r1,
            kappa2: d.kappa2,
            eps: d.eps,
            eta0: d.eta0,
            eps2: d.eps2,
            eps3: d.eps3,
            eps5: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleBlock {
    /// Largest horizon exponent, `T_k = r0 2^k`.
    pub k_max: u32,
    /// Cauchy-gap tolerance of the wave operators.
    pub tol: f64,
    pub membership_tol: f64,
    pub roundtrip_tol: f64,
    pub dt_max: f64,
    pub rel_step: f64,
    /// Halvings applied to the clock for the factorization check.
    pub refine: u32,
    /// Factorization times in units of `r0`.
    pub times_r0: Vec<f64>,
    pub residual_tol: f64,
    pub potential_residual_tol: f64,
    /// Estimates integrate up to `T_max` (a power-of-two multiple of `r0`).
    pub t_max: f64,
    pub samples_per_doubling: u32,
    pub stability_tol: f64,
    /// Range of the fundamental-solution table, `[-fundamental_t_max, fundamental_t_max]`.
    pub fundamental_t_max: f64,
    pub wronskian_tol: f64,
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        Self {
            k_max: 8,
            tol: 1e-4,
            membership_tol: 1e-3,
            roundtrip_tol: 1e-3,
            dt_max: 0.02,
            rel_step: 0.01,
            refine: 3,
            times_r0: vec![1.0, 2.0, 4.0, 8.0],
            residual_tol: 1e-6,
            potential_residual_tol: 1e-5,
            t_max: 1024.0,
            samples_per_doubling: 8,
            stability_tol: 0.05,
            fundamental_t_max: 1000.0,
            wronskian_tol: 1e-8,
        }
    }
}

/// Free-decay probe on a momentum bump centered at `p0` (along the first axis).
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayBlock {
    pub p0: f64,
    pub half_width: f64,
    pub eps0: f64,
    /// Sample range in units of `r0`.
    pub t_min_r0: f64,
    pub t_max_r0: f64,
    pub samples_per_doubling: u32,
}

impl Default for DecayBlock {
    fn default() -> Self {
        Self { p0: 1.0, half_width: 0.5, eps0: 0.2, t_min_r0: 4.0, t_max_r0: 512.0, samples_per_doubling: 2 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagneticBlock {
    pub q: f64,
    pub b0: f64,
    pub b_bar: f64,
    /// Residual times in units of `r0`.
    pub times_r0: Vec<f64>,
    pub residual_tol: f64,
    pub period_tol: f64,
    pub cyclotron_dt: f64,
}

impl Default for MagneticBlock {
    fn default() -> Self {
        Self {
            q: 1.0,
            b0: 2.0 * PI,
            b_bar: 0.5,
            times_r0: vec![1.0, 2.0],
            residual_tol: 1e-6,
            period_tol: 1e-3,
            cyclotron_dt: 0.002,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Write TDHO snapshots of the final states.
    pub snapshot: bool,
}

/// Validated objects built from a config.
pub struct Setup {
    pub model: OscillatorModel,
    pub grid: Grid,
    pub potential: Option<PotentialSpec>,
    pub state: WaveFunction,
    pub policy: StepPolicy,
    pub cutoffs: RangeCutoffs,
    pub estimates: EstimateConfig,
}

impl RunConfig {
    pub fn model(&self) -> Result<OscillatorModel> {
        let b = &self.model;
        let inner = match &b.inner {
            InnerBlock::Constant { k0 } => InnerProfile::ConstantK0 { k0: *k0 },
            InnerBlock::PiecewiseLinear { times, values } => {
                InnerProfile::piecewise_linear(times.clone(), values.clone())?
            }
        };
        Ok(OscillatorModel::new(b.m, b.k, b.r0, inner)?)
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid.dim, self.grid.n, self.grid.l)?)
    }

    pub fn potential(&self, lambda: f64) -> Result<Option<PotentialSpec>> {
        let Some(block) = &self.potential else { return Ok(None) };
        let (spec, omega) = match *block {
            PotentialBlock::StaticBump { g, rho, cosine_omega } => {
                (PotentialSpec::static_bump(g, rho, lambda)?, cosine_omega)
            }
            PotentialBlock::GaussianBump { g, rho, width, cosine_omega } => {
                (PotentialSpec::gaussian_bump(g, width, rho, lambda)?, cosine_omega)
            }
        };
        Ok(Some(match omega {
            Some(omega) => spec.with_time_factor(TimeFactor::Cosine { omega })?,
            None => spec,
        }))
    }

    pub fn policy(&self) -> Result<StepPolicy> {
        let p = StepPolicy::fixed(self.schedule.dt_max, self.schedule.rel_step);
        p.validate()?;
        Ok(p)
    }

    pub fn estimate_config(&self, model: &OscillatorModel) -> Result<EstimateConfig> {
        let c = &self.cutoffs;
        let s = &self.schedule;
        let ratio = s.t_max / model.r0();
        let doublings = ratio.log2().round();
        ensure!(
            doublings >= 1.0 && (2f64.powf(doublings) - ratio).abs() <= 1e-9 * ratio,
            "schedule.t_max = {} must be r0 times a power of two",
            s.t_max
        );
        let mut cfg = EstimateConfig {
            kappa1: c.kappa1,
            r1: c.r1,
            kappa2: c.kappa2,
            eps: c.eps,
            eta0: c.eta0,
            eps2: c.eps2,
            eps3: c.eps3,
            eps5: c.eps5.unwrap_or(0.0),
            doublings: doublings as u32,
            samples_per_doubling: s.samples_per_doubling,
        };
        if c.eps5.is_none() {
            cfg = cfg.with_midpoint_eps5(model);
        }
        cfg.validate(model)?;
        Ok(cfg)
    }

    pub fn magnetic_model(&self) -> Result<MagneticModel> {
        let b = &self.magnetic;
        Ok(MagneticModel::new(b.q, self.model.m, b.b0, b.b_bar, self.model.r0)?)
    }

    /// Re-validates every block.
    pub fn setup(&self) -> Result<Setup> {
        ensure!(
            !self.id.is_empty() && !self.id.contains(['/', '\\']) && self.id != "." && self.id != "..",
            "invalid run id {:?}",
            self.id
        );
        let model = self.model()?;
        let grid = self.grid()?;
        let potential = self.potential(model.lambda())?;
        let s = &self.state;
        let state = make_gaussian(grid, &s.center, &s.momentum, s.width).context("state block")?;
        let policy = self.policy()?;
        let estimates = self.estimate_config(&model)?;
        let cutoffs = estimates.cutoffs();
        let sch = &self.schedule;
        ensure!(sch.tol > 0.0 && sch.membership_tol > 0.0 && sch.roundtrip_tol > 0.0, "tolerances must be positive");
        ensure!(sch.times_r0.iter().all(|t| *t >= 1.0), "schedule.times_r0 entries must be >= 1");
        ensure!(sch.fundamental_t_max > model.r0(), "schedule.fundamental_t_max must exceed r0");
        let d = &self.decay;
        ensure!(
            d.t_min_r0 > 0.0 && d.t_max_r0 > 2.0 * d.t_min_r0 && d.samples_per_doubling > 0,
            "invalid decay sample range"
        );
        ensure!(self.magnetic.times_r0.iter().all(|t| *t >= 0.0), "magnetic.times_r0 entries must be >= 0");
        ensure!(self.magnetic.cyclotron_dt > 0.0, "magnetic.cyclotron_dt must be positive");
        Ok(Setup { model, grid, potential, state, policy, cutoffs, estimates })
    }

    /// `key=value` summary echoed into every report row.
    pub fn echo(&self) -> String {
        let m = &self.model;
        let inner = match &m.inner {
            InnerBlock::Constant { k0 } => format!("k0={k0:?}"),
            InnerBlock::PiecewiseLinear { times, .. } => format!("inner=piecewise_linear({} nodes)", times.len()),
        };
        let v = match &self.potential {
            None => "V=0".to_string(),
            Some(PotentialBlock::StaticBump { g, rho, .. }) => format!("V=static_bump(g={g:?},rho={rho:?})"),
            Some(PotentialBlock::GaussianBump { g, rho, width, .. }) => {
                format!("V=gaussian_bump(g={g:?},rho={rho:?},width={width:?})")
            }
        };
        format!(
            "m={:?};k={:?};r0={:?};{inner};dim={};N={};L={:?};{v}",
            m.m, m.k, m.r0, self.grid.dim, self.grid.n, self.grid.l
        )
    }
}

/// A config file holds one run object or an array of runs (a sweep).
pub fn load(path: &Path) -> Result<Vec<RunConfig>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn parse(text: &str) -> Result<Vec<RunConfig>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let runs: Vec<RunConfig> = match value {
        serde_json::Value::Array(items) => {
            items.into_iter().map(serde_json::from_value).collect::<std::result::Result<_, _>>()?
        }
        serde_json::Value::Object(_) => vec![serde_json::from_value(value)?],
        _ => bail!("config must be a JSON object or an array of objects"),
    };
    ensure!(!runs.is_empty(), "config contains no runs");
    let mut ids: Vec<&str> = runs.iter().map(|r| r.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        bail!("duplicate run id {:?}", w[0]);
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_reference_run() {
        let runs = parse("{}").unwrap();
        let setup = runs[0].setup().unwrap();
        assert_eq!(setup.model.lambda(), 0.25);
        assert!(setup.potential.is_some());
        assert_eq!(setup.estimates.eps5, 0.0225);
    }

    #[test]
    fn unknown_keys_and_duplicates_are_rejected() {
        assert!(parse(r#"{"modle": {}}"#).is_err());
        assert!(parse(r#"{"model": {"m": 1, "mass": 2}}"#).is_err());
        assert!(parse(r#"[{"id": "a"}, {"id": "a"}]"#).is_err());
        assert!(parse("3").is_err());
    }

    #[test]
    fn invalid_blocks_fail_setup() {
        let bad_t_max = &parse(r#"{"schedule": {"t_max": 1000}}"#).unwrap()[0];
        assert!(bad_t_max.setup().is_err());
        let bad_k = &parse(r#"{"model": {"k": 0.3}}"#).unwrap()[0];
        assert!(bad_k.setup().is_err());
        let null_v = &parse(r#"{"potential": null}"#).unwrap()[0];
        assert!(null_v.setup().unwrap().potential.is_none());
    }
}
