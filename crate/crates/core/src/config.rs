//! Experiment configuration: a TOML file of flat tables.
//!
//! ```toml
//! [run]
//! method = "schwarz"          # or penalty_explicit, penalty_implicit, lagrange_explicit, lagrange_implicit
//! label = "imp-imp"
//!
//! [benchmark]                 # any of density, modulus, area, length, gap, velocity, t_start, t_end
//!
//! [controller]
//! interval = 1e-7
//! tol_rel = 1e-12
//! tol_abs = 1e-15
//!
//! [left]                      # [right] takes the same keys
//! elements = 200
//! time_step = 1e-7
//! family = "implicit"
//! preset = "classic_newmark"
//! mass = "averaged"
//! role = "dirichlet"
//!
//! [penalty]
//! tau = 7.5e4
//!
//! [output]
//! substeps = false
//!
//! [sweep]                     # exactly one of elements, time_step, preset
//! elements = [50, 100, 200, 400]
//! ```
//!
//! Every table and key is optional. Unknown keys are errors.

use crate::conventional::ConventionalMethod;
use crate::error::{Error, Result};
use crate::fem::MassKind;
use crate::integrators::{Family, Preset};
use crate::oracle::BenchmarkSpec;
use crate::schwarz::{steps_per_interval, Role, SchwarzSettings};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Schwarz,
    PenaltyExplicit,
    PenaltyImplicit,
    LagrangeExplicit,
    LagrangeImplicit,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self.conventional() {
            None => "schwarz",
            Some(m) => m.name(),
        }
    }

    pub fn conventional(&self) -> Option<ConventionalMethod> {
        match self {
            Method::Schwarz => None,
            Method::PenaltyExplicit => Some(ConventionalMethod::PenaltyExplicit),
            Method::PenaltyImplicit => Some(ConventionalMethod::PenaltyImplicit),
            Method::LagrangeExplicit => Some(ConventionalMethod::LagrangeExplicit),
            Method::LagrangeImplicit => Some(ConventionalMethod::LagrangeImplicit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub method: Method,
    /// Row name in summaries; derived from the setup when empty.
    #[serde(skip_serializing_if = "String::is_empty")]
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    /// Controller interval; also the output sampling interval.
    pub interval: f64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iterations: usize,
    pub max_status_flips: usize,
    pub overlap_tol: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let s = SchwarzSettings::default();
        ControllerSection {
            interval: 1e-7,
            tol_rel: s.tol_rel,
            tol_abs: s.tol_abs,
            max_iterations: s.max_iterations,
            max_status_flips: s.max_status_flips,
            overlap_tol: s.overlap_tol,
        }
    }
}

impl ControllerSection {
    pub fn settings(&self) -> SchwarzSettings {
        SchwarzSettings {
            tol_rel: self.tol_rel,
            tol_abs: self.tol_abs,
            max_iterations: self.max_iterations,
            max_status_flips: self.max_status_flips,
            overlap_tol: self.overlap_tol,
            ..SchwarzSettings::default()
        }
    }
}

/// One rod. For conventional methods only `elements`, `time_step` and `mass` matter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubdomainSection {
    pub elements: usize,
    pub time_step: f64,
    pub family: Family,
    pub preset: Preset,
    /// Unset: averaged for Schwarz, the method's own default otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<MassKind>,
    /// Unset: left is Dirichlet, right is Neumann.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

impl Default for SubdomainSection {
    fn default() -> Self {
        SubdomainSection {
            elements: 200,
            time_step: 1e-7,
            family: Family::Implicit,
            preset: Preset::ClassicNewmark,
            mass: None,
            role: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Also write contact-node samples at every local step.
    pub substeps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_step: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Vec<Preset>>,
}

/// The sweep axis, once validated.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Elements(Vec<usize>),
    TimeStep(Vec<f64>),
    Preset(Vec<Preset>),
}

impl SweepSection {
    pub fn axis(&self) -> Result<Sweep> {
        let given = [self.elements.is_some(), self.time_step.is_some(), self.preset.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Error::Validation(
                "sweep needs exactly one of elements, time_step, preset".into(),
            ));
        }
        let axis = if let Some(v) = &self.elements {
            Sweep::Elements(v.clone())
        } else if let Some(v) = &self.time_step {
            Sweep::TimeStep(v.clone())
        } else {
            Sweep::Preset(self.preset.clone().unwrap_or_default())
        };
        let len = match &axis {
            Sweep::Elements(v) => v.len(),
            Sweep::TimeStep(v) => v.len(),
            Sweep::Preset(v) => v.len(),
        };
        if len == 0 {
            return Err(Error::Validation("sweep values must not be empty".into()));
        }
        Ok(axis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub benchmark: BenchmarkSpec,
    pub controller: ControllerSection,
    pub left: SubdomainSection,
    pub right: SubdomainSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltySection>,
    pub output: OutputSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            run: RunSection::default(),
            benchmark: BenchmarkSpec::default(),
            controller: ControllerSection::default(),
            left: SubdomainSection::default(),
            right: SubdomainSection::default(),
            penalty: None,
            output: OutputSection::default(),
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn subdomain(&self, side: usize) -> &SubdomainSection {
        if side == 0 {
            &self.left
        } else {
            &self.right
        }
    }

    pub fn role(&self, side: usize) -> Role {
        match self.subdomain(side).role {
            Some(r) => r,
            None if side == 0 => Role::Dirichlet,
            None => Role::Neumann,
        }
    }

    pub fn mass(&self, side: usize) -> MassKind {
        match (self.subdomain(side).mass, self.run.method.conventional()) {
            (Some(m), _) => m,
            (None, None) => MassKind::Averaged,
            (None, Some(c)) => c.default_mass(),
        }
    }

    /// Summary row name.
    pub fn label(&self) -> String {
        if !self.run.label.is_empty() {
            return self.run.label.clone();
        }
        match self.run.method {
            Method::Schwarz => {
                let fam = |f: Family| if f == Family::Implicit { "imp" } else { "exp" };
                let mut s = format!("schwarz {}-{}", fam(self.left.family), fam(self.right.family));
                if self.left.preset == self.right.preset {
                    s += &format!(" {}", self.left.preset.name());
                } else {
                    s += &format!(" {}/{}", self.left.preset.name(), self.right.preset.name());
                }
                s
            }
            m => m.name().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.benchmark.validate()?;
        let c = &self.controller;
        if !(c.interval > 0.0 && c.interval.is_finite()) {
            return Err(Error::Validation(format!("controller.interval must be positive, got {}", c.interval)));
        }
        self.controller.settings().validate()?;
        steps_per_interval(c.interval, self.benchmark.t_end - self.benchmark.t_start).map_err(|_| {
            Error::Validation(format!(
                "controller.interval {} does not divide the run length {}",
                c.interval,
                self.benchmark.t_end - self.benchmark.t_start
            ))
        })?;
        for (side, name) in [(0, "left"), (1, "right")] {
            let s = self.subdomain(side);
            if s.elements == 0 {
                return Err(Error::Validation(format!("{name}.elements must be at least 1")));
            }
            check_time_step(name, s.time_step, c.interval)?;
            if self.run.method == Method::Schwarz && !s.preset.supports(s.family) {
                return Err(Error::Validation(format!(
                    "{name}.preset {} has no {} variant",
                    s.preset.name(),
                    s.family.name()
                )));
            }
        }
        if let Some(p) = &self.penalty {
            if !(p.tau > 0.0 && p.tau.is_finite()) {
                return Err(Error::Validation(format!("penalty.tau must be positive, got {}", p.tau)));
            }
        }
        match self.run.method.conventional() {
            None => {
                if self.role(0) == self.role(1) {
                    return Err(Error::Validation(
                        "left.role and right.role must be one dirichlet and one neumann".into(),
                    ));
                }
            }
            Some(m) => {
                if m.needs_penalty() && self.penalty.is_none() {
                    return Err(Error::Validation(format!("method {} needs [penalty] tau", m.name())));
                }
                if self.left.time_step != self.right.time_step {
                    return Err(Error::Validation(format!(
                        "method {} uses one time step; left.time_step and right.time_step differ",
                        m.name()
                    )));
                }
                if m == ConventionalMethod::LagrangeExplicit
                    && (self.mass(0) != MassKind::Lumped || self.mass(1) != MassKind::Lumped)
                {
                    return Err(Error::Validation("lagrange_explicit needs mass = \"lumped\"".into()));
                }
            }
        }
        if let Some(sw) = &self.sweep {
            match sw.axis()? {
                Sweep::Elements(v) => {
                    if v.contains(&0) {
                        return Err(Error::Validation("sweep.elements must be at least 1".into()));
                    }
                }
                Sweep::TimeStep(v) => {
                    for dt in v {
                        check_time_step("sweep", dt, c.interval)?;
                    }
                }
                Sweep::Preset(v) => {
                    if self.run.method != Method::Schwarz {
                        return Err(Error::Validation("sweep.preset needs method = \"schwarz\"".into()));
                    }
                    for p in v {
                        for s in [&self.left, &self.right] {
                            if !p.supports(s.family) {
                                return Err(Error::Validation(format!(
                                    "sweep.preset {} has no {} variant",
                                    p.name(),
                                    s.family.name()
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// One concrete config per sweep value, in sweep order. Without a sweep, just `self`.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let Some(sw) = &self.sweep else {
            return Ok(vec![self.clone()]);
        };
        let base = ExperimentConfig {
            sweep: None,
            ..self.clone()
        };
        let label = self.label();
        let make = |suffix: String, f: &dyn Fn(&mut SubdomainSection)| {
            let mut c = base.clone();
            f(&mut c.left);
            f(&mut c.right);
            c.run.label = format!("{label} {suffix}");
            c
        };
        Ok(match sw.axis()? {
            Sweep::Elements(v) => v
                .iter()
                .map(|&n| make(format!("N={n}"), &|s| s.elements = n))
                .collect(),
            Sweep::TimeStep(v) => v
                .iter()
                .map(|&dt| make(format!("dt={dt:e}"), &|s| s.time_step = dt))
                .collect(),
            Sweep::Preset(v) => v
                .iter()
                .map(|&p| {
                    let mut c = make(String::new(), &|s| s.preset = p);
                    c.run.label = p.name().to_string();
                    c
                })
                .collect(),
        })
    }
}

fn check_time_step(name: &str, dt: f64, interval: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Validation(format!("{name}.time_step must be positive, got {dt}")));
    }
    steps_per_interval(dt, interval)
        .map(|_| ())
        .map_err(|_| Error::Validation(format!("{name}.time_step {dt:e} does not divide controller.interval {interval:e}")))
}

/// Parse and validate.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        Error::Parse {
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text form; `parse_config(&emit_config(c)) == c` for any valid `c`.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config types always serialize")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}
