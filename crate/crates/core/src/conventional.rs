//! Monolithic two-rod contact: penalty and Lagrange-multiplier enforcement.

use crate::error::{Error, Result};
use crate::fem::{internal_force, MassKind, State};
use crate::integrators::{explicit_position_update, step, Family, IntegratorSpec, Preset, StepContext};
use crate::rod::Rod;
use crate::schwarz::{steps_per_interval, ControllerGrid};
use crate::series::{RunSeries, StopRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionalMethod {
    PenaltyExplicit,
    PenaltyImplicit,
    LagrangeExplicit,
    LagrangeImplicit,
}

impl ConventionalMethod {
    pub const ALL: [ConventionalMethod; 4] = [
        ConventionalMethod::PenaltyExplicit,
        ConventionalMethod::PenaltyImplicit,
        ConventionalMethod::LagrangeExplicit,
        ConventionalMethod::LagrangeImplicit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ConventionalMethod::PenaltyExplicit => "penalty_explicit",
            ConventionalMethod::PenaltyImplicit => "penalty_implicit",
            ConventionalMethod::LagrangeExplicit => "lagrange_explicit",
            ConventionalMethod::LagrangeImplicit => "lagrange_implicit",
        }
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self, ConventionalMethod::PenaltyExplicit | ConventionalMethod::LagrangeExplicit)
    }

    pub fn needs_penalty(&self) -> bool {
        matches!(self, ConventionalMethod::PenaltyExplicit | ConventionalMethod::PenaltyImplicit)
    }

    /// Mass used when the configuration does not say.
    pub fn default_mass(&self) -> MassKind {
        if self.is_explicit() {
            MassKind::Lumped
        } else {
            MassKind::Consistent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub tau: f64,
    pub max_fixed_point_iters: usize,
    pub fp_tol: f64,
}

impl PenaltySpec {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Validation(format!("penalty tau must be positive, got {tau}")));
        }
        Ok(PenaltySpec {
            tau,
            max_fixed_point_iters: 50,
            fp_tol: 1e-10,
        })
    }
}

/// Overlap measure between the contact ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapState {
    pub g: f64,
    pub active: bool,
    pub lambda: f64,
}

impl GapState {
    pub fn from_positions(left_end: f64, right_end: f64, lambda: f64) -> Self {
        let g = (left_end - right_end).max(0.0);
        GapState {
            g,
            active: g > 0.0,
            lambda,
        }
    }
}

/// Both rods with their current states.
#[derive(Debug, Clone)]
pub struct RodPair {
    pub rods: [Rod; 2],
    pub states: [State; 2],
}

impl RodPair {
    pub fn new(rods: [Rod; 2], states: [State; 2]) -> Result<Self> {
        if rods[0].side != crate::rod::Side::Left || rods[1].side != crate::rod::Side::Right {
            return Err(Error::InvalidInput("rod pair must be ordered left, right".into()));
        }
        rods[0].check_state(&states[0])?;
        rods[1].check_state(&states[1])?;
        Ok(RodPair { rods, states })
    }

    fn ends(&self, x: [&[f64]; 2]) -> (f64, f64) {
        (x[0][self.rods[0].contact_node()], x[1][self.rods[1].contact_node()])
    }

    fn record(&self, t: f64, force: f64, active: bool) -> StopRecord {
        let mut r = StopRecord {
            t,
            active,
            iterations: 0,
            contact_x: [0.0; 2],
            contact_v: [0.0; 2],
            force,
            kinetic: [0.0; 2],
            potential: [0.0; 2],
            eps_abs: f64::NAN,
            eps_rel: f64::NAN,
        };
        for i in 0..2 {
            let p = self.rods[i].contact_node();
            r.contact_x[i] = self.states[i].x[p];
            r.contact_v[i] = self.states[i].v[p];
            let (k, v) = self.rods[i].energies(&self.states[i]);
            r.kinetic[i] = k;
            r.potential[i] = v;
        }
        r
    }

    /// Σ M v over both rods.
    pub fn momentum(&self) -> f64 {
        (0..2)
            .map(|i| self.rods[i].mass.mul_vec(&self.states[i].v).iter().sum::<f64>())
            .sum()
    }

    /// Σ |𝟙ᵀ M v| per rod; the scale for momentum checks.
    pub fn momentum_scale(&self) -> f64 {
        (0..2)
            .map(|i| self.rods[i].mass.mul_vec(&self.states[i].v).iter().sum::<f64>().abs())
            .sum()
    }
}

/// Per-step diagnostics shared with property tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub gap: GapState,
    /// Signed left-end minus right-end position after the step.
    pub signed_gap: f64,
    pub momentum: f64,
    pub momentum_scale: f64,
}

fn contact_forces(pair: &RodPair, lambda: f64) -> [Vec<f64>; 2] {
    let mut f = [vec![0.0; pair.rods[0].n_nodes()], vec![0.0; pair.rods[1].n_nodes()]];
    for i in 0..2 {
        // compression pushes each rod back along its outward normal
        f[i][pair.rods[i].contact_node()] = -pair.rods[i].normal() * lambda;
    }
    f
}

fn step_pair(pair: &RodPair, spec: &IntegratorSpec, dt: f64, lambda: f64) -> Result<[State; 2]> {
    let f = contact_forces(pair, lambda);
    let mut out = Vec::with_capacity(2);
    for i in 0..2 {
        let rod = &pair.rods[i];
        let ctx = StepContext::new(&rod.mass, &rod.stiffness, rod.reference(), &f[i]);
        out.push(step(spec, &ctx, &pair.states[i], dt)?);
    }
    let b = out.pop().expect("two states");
    let a = out.pop().expect("two states");
    Ok([a, b])
}

trait ContactStep {
    /// Advance by `dt`; returns the contact force applied over the step.
    fn advance(&mut self, pair: &mut RodPair, dt: f64) -> Result<f64>;
}

struct PenaltyExplicit {
    spec: IntegratorSpec,
    penalty: PenaltySpec,
}

impl ContactStep for PenaltyExplicit {
    fn advance(&mut self, pair: &mut RodPair, dt: f64) -> Result<f64> {
        let x0 = explicit_position_update(&pair.states[0], dt, 0.5);
        let x1 = explicit_position_update(&pair.states[1], dt, 0.5);
        let (l, r) = pair.ends([&x0, &x1]);
        let gap = GapState::from_positions(l, r, 0.0);
        let lambda = self.penalty.tau * gap.g;
        pair.states = step_pair(pair, &self.spec, dt, lambda)?;
        Ok(lambda)
    }
}

struct PenaltyImplicit {
    spec: IntegratorSpec,
    penalty: PenaltySpec,
    lambda: f64,
}

impl ContactStep for PenaltyImplicit {
    fn advance(&mut self, pair: &mut RodPair, dt: f64) -> Result<f64> {
        let mut lambda = self.lambda;
        let mut change = f64::INFINITY;
        for _ in 0..self.penalty.max_fixed_point_iters {
            let next = step_pair(pair, &self.spec, dt, lambda)?;
            let (l, r) = pair.ends([&next[0].x, &next[1].x]);
            let updated = self.penalty.tau * GapState::from_positions(l, r, lambda).g;
            change = (updated - lambda).abs();
            if change <= self.penalty.fp_tol {
                pair.states = next;
                self.lambda = lambda;
                return Ok(lambda);
            }
            lambda = updated;
        }
        Err(Error::FixedPointDivergence {
            iterations: self.penalty.max_fixed_point_iters,
            last_change: change,
        })
    }
}

struct LagrangeExplicit {
    spec: IntegratorSpec,
}

impl ContactStep for LagrangeExplicit {
    fn advance(&mut self, pair: &mut RodPair, dt: f64) -> Result<f64> {
        let mut next = step_pair(pair, &self.spec, dt, 0.0)?;
        // forward increment: the force at this step closes the gap at the next one
        let p = [pair.rods[0].contact_node(), pair.rods[1].contact_node()];
        let pred = |s: &State, i: usize| s.x[i] + dt * s.v[i] + 0.5 * dt * dt * s.a[i];
        let g_pred = pred(&next[0], p[0]) - pred(&next[1], p[1]);
        let m = [pair.rods[0].mass.diag()[p[0]], pair.rods[1].mass.diag()[p[1]]];
        let lambda = if g_pred > 0.0 {
            g_pred / (dt * dt * (1.0 / m[0] + 1.0 / m[1]))
        } else {
            0.0
        };
        if lambda > 0.0 {
            for i in 0..2 {
                let da = -pair.rods[i].normal() * lambda / m[i];
                next[i].a[p[i]] += da;
                next[i].v[p[i]] += dt * self.spec.gamma * da;
            }
        }
        pair.states = next;
        Ok(lambda)
    }
}

struct LagrangeImplicit;

impl ContactStep for LagrangeImplicit {
    fn advance(&mut self, pair: &mut RodPair, dt: f64) -> Result<f64> {
        // solve for the increment over x + dt v; absolute positions would put
        // M x / dt² (~1e10) on the right-hand side and leak momentum through round-off
        let mut bases = Vec::with_capacity(2);
        let mut free = Vec::with_capacity(2);
        let mut compliance = [0.0; 2];
        let mut keffs = Vec::with_capacity(2);
        for i in 0..2 {
            let rod = &pair.rods[i];
            let s = &pair.states[i];
            let keff = rod.mass.combine(1.0 / (dt * dt), &rod.stiffness, 1.0);
            let base = explicit_position_update(s, dt, 0.0);
            let rhs: Vec<f64> = internal_force(&rod.stiffness, &base, rod.reference())
                .iter()
                .map(|f| -f)
                .collect();
            free.push(keff.solve(&rhs)?);
            let mut unit = vec![0.0; rod.n_nodes()];
            unit[rod.contact_node()] = 1.0;
            let c = keff.solve(&unit)?;
            compliance[i] = c[rod.contact_node()];
            keffs.push(c);
            bases.push(base);
        }
        let end = |i: usize| {
            let p = pair.rods[i].contact_node();
            bases[i][p] + free[i][p]
        };
        let (l, r) = (end(0), end(1));
        let schur = compliance[0] + compliance[1];
        if !(schur > 0.0) {
            return Err(Error::SingularSaddleSystem { schur });
        }
        let lambda = ((l - r) / schur).max(0.0);
        for i in 0..2 {
            let shift = -pair.rods[i].normal() * lambda;
            let s = &pair.states[i];
            let dx: Vec<f64> = free[i].iter().zip(&keffs[i]).map(|(d, c)| d + shift * c).collect();
            let x: Vec<f64> = bases[i].iter().zip(&dx).map(|(b, d)| b + d).collect();
            let v: Vec<f64> = s.v.iter().zip(&dx).map(|(v, d)| v + d / dt).collect();
            let a: Vec<f64> = dx.iter().map(|d| d / (dt * dt)).collect();
            pair.states[i] = State { t: s.t + dt, x, v, a };
        }
        Ok(lambda)
    }
}

/// Drive a contact stepper over the controller grid, sampling at every stop.
fn drive(
    pair: &mut RodPair,
    stepper: &mut dyn ContactStep,
    dt: f64,
    grid: &ControllerGrid,
    mut diag: Option<&mut Vec<StepDiagnostics>>,
) -> Result<RunSeries> {
    let n_int = grid.n_intervals()?;
    let sub = steps_per_interval(dt, grid.interval)?;
    let mut series = RunSeries::default();
    series.records.push(pair.record(grid.t_start, 0.0, false));
    let mut in_contact = false;
    for k in 0..n_int {
        let mut force = 0.0;
        for j in 0..sub {
            force = stepper.advance(pair, dt)?;
            let t = if j + 1 == sub {
                grid.stop(k + 1)
            } else {
                grid.stop(k) + (j + 1) as f64 * dt
            };
            pair.states[0].t = t;
            pair.states[1].t = t;
            if let Some(d) = diag.as_deref_mut() {
                let (l, r) = pair.ends([&pair.states[0].x, &pair.states[1].x]);
                d.push(StepDiagnostics {
                    t,
                    gap: GapState::from_positions(l, r, force),
                    signed_gap: l - r,
                    momentum: pair.momentum(),
                    momentum_scale: pair.momentum_scale(),
                });
            }
        }
        let active = force > 0.0;
        if active && series.t_imp.is_none() {
            series.t_imp = Some(grid.stop(k));
        }
        if !active && in_contact && series.t_rel.is_none() {
            series.t_rel = Some(grid.stop(k));
        }
        in_contact |= active;
        series.records.push(pair.record(grid.stop(k + 1), force, active));
    }
    Ok(series)
}

fn classic(family: Family) -> IntegratorSpec {
    Preset::ClassicNewmark
        .spec(family)
        .expect("classic Newmark exists in both families")
}

pub fn solve_penalty_explicit(pair: &mut RodPair, penalty: PenaltySpec, dt: f64, grid: &ControllerGrid) -> Result<RunSeries> {
    solve(ConventionalMethod::PenaltyExplicit, pair, Some(penalty), dt, grid, None)
}

pub fn solve_penalty_implicit(pair: &mut RodPair, penalty: PenaltySpec, dt: f64, grid: &ControllerGrid) -> Result<RunSeries> {
    solve(ConventionalMethod::PenaltyImplicit, pair, Some(penalty), dt, grid, None)
}

pub fn solve_lagrange_explicit(pair: &mut RodPair, dt: f64, grid: &ControllerGrid) -> Result<RunSeries> {
    solve(ConventionalMethod::LagrangeExplicit, pair, None, dt, grid, None)
}

pub fn solve_lagrange_implicit(pair: &mut RodPair, dt: f64, grid: &ControllerGrid) -> Result<RunSeries> {
    solve(ConventionalMethod::LagrangeImplicit, pair, None, dt, grid, None)
}

fn check_lumped(pair: &RodPair) -> Result<()> {
    if pair.rods.iter().any(|r| !r.mass.is_diagonal()) {
        return Err(Error::Validation("explicit Lagrange multipliers need a lumped mass".into()));
    }
    Ok(())
}

/// Run any of the four methods, optionally collecting per-step diagnostics.
pub fn solve(
    method: ConventionalMethod,
    pair: &mut RodPair,
    penalty: Option<PenaltySpec>,
    dt: f64,
    grid: &ControllerGrid,
    diagnostics: Option<&mut Vec<StepDiagnostics>>,
) -> Result<RunSeries> {
    let need = || penalty.ok_or_else(|| Error::Validation(format!("{} needs a penalty tau", method.name())));
    match method {
        ConventionalMethod::PenaltyExplicit => {
            let mut s = PenaltyExplicit {
                spec: classic(Family::Explicit),
                penalty: need()?,
            };
            drive(pair, &mut s, dt, grid, diagnostics)
        }
        ConventionalMethod::PenaltyImplicit => {
            let mut s = PenaltyImplicit {
                spec: classic(Family::Implicit),
                penalty: need()?,
                lambda: 0.0,
            };
            drive(pair, &mut s, dt, grid, diagnostics)
        }
        ConventionalMethod::LagrangeExplicit => {
            check_lumped(pair)?;
            let mut s = LagrangeExplicit {
                spec: classic(Family::Explicit),
            };
            drive(pair, &mut s, dt, grid, diagnostics)
        }
        ConventionalMethod::LagrangeImplicit => drive(pair, &mut LagrangeImplicit, dt, grid, diagnostics),
    }
}
