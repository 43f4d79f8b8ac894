//! Alternating Dirichlet-Neumann Schwarz contact with a global time controller.

use crate::error::{Error, Result};
use crate::fem::State;
use crate::linalg::SymTridiag;
use crate::integrators::{step, ContactPhase, IntegratorSpec, NewtonSettings, Obstacle, Prescribed, StepContext};
use crate::rod::Rod;
use crate::series::{RunSeries, StopRecord, SubstepRecord};
use crate::transfer::{project_dirichlet, project_neumann, TimeHistory, TransferOperator};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Dirichlet,
    Neumann,
}

impl Role {
    pub fn name(&self) -> &'static str {
        match self {
            Role::Dirichlet => "dirichlet",
            Role::Neumann => "neumann",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Subdomain {
    pub rod: Rod,
    pub spec: IntegratorSpec,
    pub dt: f64,
    pub role: Role,
    /// State at the current controller stop.
    pub state: State,
}

impl Subdomain {
    pub fn new(rod: Rod, spec: IntegratorSpec, dt: f64, role: Role, state: State) -> Result<Self> {
        spec.validate()?;
        rod.check_state(&state)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        Ok(Subdomain {
            rod,
            spec,
            dt,
            role,
            state,
        })
    }

    /// Local steps per controller interval.
    pub fn steps_per_interval(&self, interval: f64) -> Result<usize> {
        steps_per_interval(self.dt, interval)
    }

    fn local_stops(&self, t_k: f64, t_k1: f64, l: usize) -> Vec<f64> {
        (0..=l)
            .map(|j| if j == l { t_k1 } else { t_k + j as f64 * self.dt })
            .collect()
    }

    fn contact_values(&self, s: &State) -> Vec<f64> {
        let p = self.rod.contact_node();
        vec![s.x[p], s.v[p], s.a[p]]
    }
}

/// `interval / dt` when it is an integer (to 1e-9 relative).
pub fn steps_per_interval(dt: f64, interval: f64) -> Result<usize> {
    let ratio = interval / dt;
    let l = ratio.round();
    if l < 1.0 || (ratio - l).abs() > 1e-9 * ratio {
        return Err(Error::Validation(format!(
            "time step {dt:e} does not divide the controller interval {interval:e}"
        )));
    }
    Ok(l as usize)
}

/// Contact pressure on the boundary of a Dirichlet subdomain, compression positive.
///
/// Boundary row of `M a + K u` without the boundary node's own inertia, which is
/// carried by the Neumann side instead (see [`SchwarzSolver`]).
pub fn extract_contact_traction(sub: &Subdomain, state: &State) -> f64 {
    let rod = &sub.rod;
    let p = rod.contact_node();
    let q = if p == 0 { 1 } else { p - 1 };
    let coupling = rod.mass.get(p, q) * state.a[q];
    let f = crate::fem::internal_force_at(&rod.stiffness, &state.x, rod.reference(), p) + coupling;
    -rod.normal() * f / rod.material.area
}

/// Boundary values for one Dirichlet step; naive stabilization zeroes the acceleration.
pub fn apply_dirichlet_contact_bc(sub: &Subdomain, x: f64, v: f64, a: f64) -> Prescribed {
    let a = match sub.spec.stabilization {
        crate::integrators::Stabilization::NaiveStabilized => 0.0,
        _ => a,
    };
    Prescribed {
        dof: sub.rod.contact_node(),
        x,
        v,
        a,
    }
}

/// Global stops `t0 + k I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub interval: f64,
}

impl ControllerGrid {
    pub fn n_intervals(&self) -> Result<usize> {
        if !(self.interval > 0.0) || !(self.t_end > self.t_start) {
            return Err(Error::Validation("controller grid needs t_end > t_start and interval > 0".into()));
        }
        steps_per_interval(self.interval, self.t_end - self.t_start)
    }

    pub fn stop(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.interval
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwarzSettings {
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iterations: usize,
    pub max_status_flips: usize,
    /// Overlap below this (m) is round-off, not impact.
    pub overlap_tol: f64,
    pub newton: NewtonSettings,
    pub record_substeps: bool,
}

impl Default for SchwarzSettings {
    fn default() -> Self {
        SchwarzSettings {
            tol_rel: 1e-12,
            tol_abs: 1e-15,
            max_iterations: 100,
            max_status_flips: 3,
            overlap_tol: 1e-12,
            newton: NewtonSettings::default(),
            record_substeps: false,
        }
    }
}

impl SchwarzSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel > 0.0) || !(self.tol_abs > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if !(self.overlap_tol >= 0.0) {
            return Err(Error::Validation("overlap tolerance must be non-negative".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub k: usize,
    pub t_k: f64,
    pub t_k1: f64,
    pub active_contact: bool,
    pub persistence: bool,
}

/// Contact status at the end of an interval: compression while contact persists,
/// overlap beyond `overlap_tol` otherwise.
pub fn detect_active_contact(
    persistence: bool,
    end_pressure: f64,
    left_end_x: f64,
    right_end_x: f64,
    overlap_tol: f64,
) -> bool {
    if persistence {
        end_pressure > 0.0
    } else {
        left_end_x - right_end_x > overlap_tol
    }
}

/// Result of one contact interval.
#[derive(Debug, Clone)]
pub struct IntervalOutcome {
    pub histories: [Vec<State>; 2],
    /// Dirichlet-side pressure at the Dirichlet local stops.
    pub pressures: Vec<f64>,
    pub iterations: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
}

/// One interval result: histories, final pressure, iterations, (eps_abs, eps_rel).
type Attempt = ([Vec<State>; 2], f64, usize, (f64, f64));

pub struct SchwarzSolver {
    pub subdomains: [Subdomain; 2],
    pub grid: ControllerGrid,
    pub settings: SchwarzSettings,
    operator: TransferOperator,
    steps: [usize; 2],
    dirichlet: usize,
    /// Converged pressure at the current stop, held as the Neumann initial guess.
    pressure: f64,
    /// Neumann mass with the Dirichlet boundary node's mass added at the contact
    /// node. Used while in contact so the reaction's inertial part is implicit.
    neumann_mass: SymTridiag,
}

fn zero_force(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

impl SchwarzSolver {
    pub fn new(subdomains: [Subdomain; 2], grid: ControllerGrid, settings: SchwarzSettings) -> Result<Self> {
        settings.validate()?;
        grid.n_intervals()?;
        let dirichlet = match (subdomains[0].role, subdomains[1].role) {
            (Role::Dirichlet, Role::Neumann) => 0,
            (Role::Neumann, Role::Dirichlet) => 1,
            _ => {
                return Err(Error::Validation(
                    "exactly one subdomain must be Dirichlet and one Neumann".into(),
                ))
            }
        };
        if subdomains[0].rod.side == subdomains[1].rod.side {
            return Err(Error::Validation("subdomains must be the left and the right rod".into()));
        }
        let steps = [
            subdomains[0].steps_per_interval(grid.interval)?,
            subdomains[1].steps_per_interval(grid.interval)?,
        ];
        let (sd, sn) = (&subdomains[dirichlet], &subdomains[1 - dirichlet]);
        let mut neumann_mass = sn.rod.mass.clone();
        let pd = sd.rod.contact_node();
        neumann_mass.add_to_diag(sn.rod.contact_node(), sd.rod.mass.get(pd, pd));
        Ok(SchwarzSolver {
            neumann_mass,
            subdomains,
            grid,
            settings,
            operator: TransferOperator::point(),
            steps,
            dirichlet,
            pressure: 0.0,
        })
    }

    fn neumann(&self) -> usize {
        1 - self.dirichlet
    }

    fn advance_free(&self, i: usize, t_k: f64, t_k1: f64) -> Result<Vec<State>> {
        let sub = &self.subdomains[i];
        let stops = sub.local_stops(t_k, t_k1, self.steps[i]);
        let f = zero_force(sub.rod.n_nodes());
        let mut ctx = StepContext::new(&sub.rod.mass, &sub.rod.stiffness, sub.rod.reference(), &f);
        ctx.newton = self.settings.newton;
        let mut hist = Vec::with_capacity(stops.len());
        hist.push(sub.state.clone());
        for j in 1..stops.len() {
            let mut s = step(&sub.spec, &ctx, &hist[j - 1], stops[j] - stops[j - 1])?;
            s.t = stops[j];
            hist.push(s);
        }
        Ok(hist)
    }

    /// Dirichlet sweep against the Neumann history. Returns states and boundary pressures.
    fn dirichlet_sweep(&self, t_k: f64, t_k1: f64, neumann_hist: &TimeHistory) -> Result<(Vec<State>, Vec<f64>)> {
        let d = self.dirichlet;
        let sub = &self.subdomains[d];
        let stops = sub.local_stops(t_k, t_k1, self.steps[d]);
        let f = zero_force(sub.rod.n_nodes());
        let dofs = [sub.rod.contact_node()];
        let mut hist = Vec::with_capacity(stops.len());
        let mut pressures = Vec::with_capacity(stops.len());
        hist.push(sub.state.clone());
        pressures.push(extract_contact_traction(sub, &sub.state));
        for j in 1..stops.len() {
            let vals = neumann_hist.interpolate(stops[j])?;
            let x = project_dirichlet(&self.operator, &vals[0..1])?[0];
            let v = project_dirichlet(&self.operator, &vals[1..2])?[0];
            let a = project_dirichlet(&self.operator, &vals[2..3])?[0];
            let bc = [apply_dirichlet_contact_bc(sub, x, v, a)];
            let mut ctx = StepContext::new(&sub.rod.mass, &sub.rod.stiffness, sub.rod.reference(), &f);
            ctx.newton = self.settings.newton;
            ctx.constraints = &bc;
            ctx.contact = Some(ContactPhase {
                dofs: &dofs,
                obstacle: None,
            });
            let mut s = step(&sub.spec, &ctx, &hist[j - 1], stops[j] - stops[j - 1])?;
            s.t = stops[j];
            pressures.push(extract_contact_traction(sub, &s));
            hist.push(s);
        }
        Ok((hist, pressures))
    }

    /// Neumann sweep with boundary pressure from `pressure_hist`. When `obstacle_hist`
    /// (Dirichlet boundary x and v) is given, the stabilized prediction keeps the
    /// contact node behind the Dirichlet node's own predictor `x + dt v`.
    fn neumann_sweep(
        &self,
        t_k: f64,
        t_k1: f64,
        pressure_hist: &TimeHistory,
        obstacle_hist: Option<&TimeHistory>,
    ) -> Result<Vec<State>> {
        let n = self.neumann();
        let sub = &self.subdomains[n];
        let stops = sub.local_stops(t_k, t_k1, self.steps[n]);
        let p = sub.rod.contact_node();
        let dofs = [p];
        let area = sub.rod.material.area;
        let mut f = zero_force(sub.rod.n_nodes());
        let mut hist = Vec::with_capacity(stops.len());
        hist.push(sub.state.clone());
        for j in 1..stops.len() {
            let pressure = pressure_hist.interpolate(stops[j])?[0];
            let force = project_neumann(&self.operator, &[pressure * area])?[0];
            f[p] = -sub.rod.normal() * force;
            let obstacle = match obstacle_hist {
                Some(h) => {
                    let xv = h.interpolate(stops[j - 1])?;
                    Some(Obstacle {
                        dof: p,
                        position: xv[0] + (stops[j] - stops[j - 1]) * xv[1],
                        normal: sub.rod.normal(),
                    })
                }
                None => None,
            };
            let mut ctx = StepContext::new(&self.neumann_mass, &sub.rod.stiffness, sub.rod.reference(), &f);
            ctx.newton = self.settings.newton;
            ctx.contact = Some(ContactPhase { dofs: &dofs, obstacle });
            let mut s = step(&sub.spec, &ctx, &hist[j - 1], stops[j] - stops[j - 1])?;
            s.t = stops[j];
            hist.push(s);
        }
        Ok(hist)
    }

    fn contact_history(&self, i: usize, hist: &[State]) -> Result<TimeHistory> {
        let sub = &self.subdomains[i];
        TimeHistory::new(
            hist.iter().map(|s| s.t).collect(),
            hist.iter().map(|s| sub.contact_values(s)).collect(),
        )
    }

    /// One controller interval under active contact.
    pub fn schwarz_interval(&self, k: usize) -> Result<IntervalOutcome> {
        let (t_k, t_k1) = (self.grid.stop(k), self.grid.stop(k + 1));
        let (d, n) = (self.dirichlet, self.neumann());
        let d_stops = self.subdomains[d].local_stops(t_k, t_k1, self.steps[d]);

        // initial iterate: Dirichlet side in free flight, Neumann side under the held pressure
        let held = TimeHistory::new(
            vec![t_k, t_k1],
            vec![vec![self.pressure], vec![self.pressure]],
        )?;
        let mut hist_d = self.advance_free(d, t_k, t_k1)?;
        let mut hist_n = self.neumann_sweep(t_k, t_k1, &held, None)?;

        let mut iterations = 0;
        loop {
            iterations += 1;
            let n_boundary = self.contact_history(n, &hist_n)?;
            let (new_d, pressures) = self.dirichlet_sweep(t_k, t_k1, &n_boundary)?;
            let pressure_hist = TimeHistory::new(d_stops.clone(), pressures.iter().map(|p| vec![*p]).collect())?;
            let obstacle = if self.subdomains[n].spec.stabilization
                == crate::integrators::Stabilization::ContactStabilized
            {
                Some(TimeHistory::new(
                    d_stops.clone(),
                    new_d
                        .iter()
                        .map(|s| {
                            let p = self.subdomains[d].rod.contact_node();
                            vec![s.x[p], s.v[p]]
                        })
                        .collect(),
                )?)
            } else {
                None
            };
            let new_n = self.neumann_sweep(t_k, t_k1, &pressure_hist, obstacle.as_ref())?;

            let (abs_d, rel_d) = history_change(&new_d, &hist_d, self.subdomains[d].dt);
            let (abs_n, rel_n) = history_change(&new_n, &hist_n, self.subdomains[n].dt);
            let eps_abs = (abs_d + abs_n).sqrt();
            let eps_rel = (rel_d + rel_n).sqrt();
            hist_d = new_d;
            hist_n = new_n;
            if eps_abs <= self.settings.tol_abs || eps_rel <= self.settings.tol_rel {
                let mut histories = [Vec::new(), Vec::new()];
                histories[d] = hist_d;
                histories[n] = hist_n;
                return Ok(IntervalOutcome {
                    histories,
                    pressures,
                    iterations,
                    eps_abs,
                    eps_rel,
                });
            }
            if iterations >= self.settings.max_iterations {
                return Err(Error::MaxIterationsExceeded {
                    interval: k,
                    iterations,
                    eps_abs,
                    eps_rel,
                });
            }
        }
    }

    fn record(&self, t: f64, active: bool, iterations: usize, force: f64, eps: (f64, f64)) -> StopRecord {
        let mut r = StopRecord {
            t,
            active,
            iterations,
            contact_x: [0.0; 2],
            contact_v: [0.0; 2],
            force,
            kinetic: [0.0; 2],
            potential: [0.0; 2],
            eps_abs: eps.0,
            eps_rel: eps.1,
        };
        for sub in &self.subdomains {
            let i = sub.rod.side.index();
            let p = sub.rod.contact_node();
            r.contact_x[i] = sub.state.x[p];
            r.contact_v[i] = sub.state.v[p];
            let (kin, pot) = sub.rod.energies(&sub.state);
            r.kinetic[i] = kin;
            r.potential[i] = pot;
        }
        r
    }

    /// Impact: the two boundary nodes take their common momentum-weighted velocity
    /// and acceleration, so the Dirichlet data starts consistent with the Dirichlet state.
    fn capture_contact_nodes(&mut self) {
        let mut m = [0.0; 2];
        let (mut mv, mut ma) = (0.0, 0.0);
        for (i, sub) in self.subdomains.iter().enumerate() {
            let p = sub.rod.contact_node();
            let q = if p == 0 { 1 } else { p - 1 };
            m[i] = sub.rod.mass.get(p, p) + sub.rod.mass.get(p, q);
            mv += m[i] * sub.state.v[p];
            ma += m[i] * sub.state.a[p];
        }
        let total = m[0] + m[1];
        for sub in &mut self.subdomains {
            let p = sub.rod.contact_node();
            sub.state.v[p] = mv / total;
            sub.state.a[p] = ma / total;
        }
    }

    fn end_positions(&self, hist: &[Vec<State>; 2]) -> (f64, f64) {
        let mut ends = [0.0; 2];
        for (i, sub) in self.subdomains.iter().enumerate() {
            let last = hist[i].last().expect("history is never empty");
            ends[sub.rod.side.index()] = last.x[sub.rod.contact_node()];
        }
        (ends[0], ends[1])
    }

    /// Controller loop over every interval.
    pub fn run(mut self) -> Result<RunSeries> {
        let n_int = self.grid.n_intervals()?;
        let mut series = RunSeries::default();
        series.records.reserve(n_int + 1);
        series.records.push(self.record(self.grid.t_start, false, 0, 0.0, (f64::NAN, f64::NAN)));
        let mut ctrl = ControllerState {
            k: 0,
            t_k: self.grid.t_start,
            t_k1: self.grid.stop(1),
            active_contact: false,
            persistence: false,
        };
        let mut was_contact = false;
        for k in 0..n_int {
            ctrl.k = k;
            ctrl.t_k = self.grid.stop(k);
            ctrl.t_k1 = self.grid.stop(k + 1);
            let mut flips = 0;
            // results per status: [free, contact]
            let mut tried: [Option<Attempt>; 2] = [None, None];
            let was_active = ctrl.active_contact;
            let saved = [self.subdomains[0].state.clone(), self.subdomains[1].state.clone()];
            let (hist, pressure, iterations, eps) = loop {
                for (sub, s) in self.subdomains.iter_mut().zip(&saved) {
                    sub.state = s.clone();
                }
                let attempt = if ctrl.active_contact {
                    if !was_active {
                        self.capture_contact_nodes();
                    }
                    let out = self.schwarz_interval(k)?;
                    let p = *out.pressures.last().expect("pressures is never empty");
                    (out.histories, p, out.iterations, (out.eps_abs, out.eps_rel))
                } else {
                    let h0 = self.advance_free(0, ctrl.t_k, ctrl.t_k1)?;
                    let h1 = self.advance_free(1, ctrl.t_k, ctrl.t_k1)?;
                    ([h0, h1], 0.0, 0, (f64::NAN, f64::NAN))
                };
                ctrl.persistence = ctrl.active_contact;
                let (left_x, right_x) = self.end_positions(&attempt.0);
                let now = detect_active_contact(ctrl.persistence, attempt.1, left_x, right_x, self.settings.overlap_tol);
                if now == ctrl.active_contact {
                    break attempt;
                }
                tried[ctrl.active_contact as usize] = Some(attempt);
                if let Some(contact) = tried[1].take().filter(|_| tried[0].is_some()) {
                    // tension under contact but overlap when free: keep the
                    // non-penetrating solution and stay in contact
                    ctrl.active_contact = true;
                    break contact;
                }
                flips += 1;
                if flips > self.settings.max_status_flips {
                    return Err(Error::StatusOscillation { interval: k, flips });
                }
                ctrl.active_contact = now;
            };
            if ctrl.active_contact && series.t_imp.is_none() {
                series.t_imp = Some(ctrl.t_k);
            }
            if !ctrl.active_contact && was_contact && series.t_rel.is_none() {
                series.t_rel = Some(ctrl.t_k);
            }
            was_contact |= ctrl.active_contact;
            if self.settings.record_substeps {
                for (i, h) in hist.iter().enumerate() {
                    let sub = &self.subdomains[i];
                    let p = sub.rod.contact_node();
                    for s in &h[1..] {
                        series.substeps.push(SubstepRecord {
                            t: s.t,
                            rod: sub.rod.side.index(),
                            x: s.x[p],
                            v: s.v[p],
                            a: s.a[p],
                        });
                    }
                }
            }
            for (sub, h) in self.subdomains.iter_mut().zip(hist) {
                sub.state = h.into_iter().last().expect("history is never empty");
            }
            self.pressure = if ctrl.active_contact { pressure } else { 0.0 };
            let force = self.pressure * self.subdomains[self.dirichlet].rod.material.area;
            series
                .records
                .push(self.record(ctrl.t_k1, ctrl.active_contact, iterations, force, eps));
        }
        Ok(series)
    }
}

/// Squared absolute and relative change over local stops 1.. of the positions and of
/// the accelerations scaled to a length by `dt²`. With a non-diagonal mass the
/// explicit positions can settle while the boundary accelerations still move.
fn history_change(new: &[State], old: &[State], dt: f64) -> (f64, f64) {
    let dt2 = dt * dt;
    let mut diff = 0.0;
    let mut size = 0.0;
    for (a, b) in new.iter().zip(old).skip(1) {
        for (x, y) in a.x.iter().zip(&b.x) {
            diff += (x - y) * (x - y);
            size += x * x;
        }
        for (x, y) in a.a.iter().zip(&b.a) {
            diff += (dt2 * (x - y)).powi(2);
        }
    }
    let rel = if size > 0.0 { diff / size } else { diff };
    (diff, rel)
}

pub fn run_simulation(subdomains: [Subdomain; 2], grid: ControllerGrid, settings: SchwarzSettings) -> Result<RunSeries> {
    SchwarzSolver::new(subdomains, grid, settings)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_branches() {
        assert!(!detect_active_contact(false, 0.0, -0.01, 0.01, 1e-12));
        assert!(detect_active_contact(false, 0.0, 0.001, 0.0, 1e-12));
        // touching or round-off overlap is not impact
        assert!(!detect_active_contact(false, 0.0, 0.0, 0.0, 1e-12));
        assert!(!detect_active_contact(false, 0.0, 4e-16, 0.0, 1e-12));
        assert!(!detect_active_contact(true, -5.0, 0.0, 0.0, 1e-12));
        assert!(!detect_active_contact(true, 0.0, 0.0, 0.0, 1e-12));
        assert!(detect_active_contact(true, 1e8, 0.0, 0.0, 1e-12));
    }

    #[test]
    fn divisibility() {
        assert_eq!(steps_per_interval(1e-8, 1e-7).unwrap(), 10);
        assert_eq!(steps_per_interval(1e-7, 1e-7).unwrap(), 1);
        assert!(steps_per_interval(3e-8, 1e-7).is_err());
        assert!(steps_per_interval(2e-7, 1e-7).is_err());
    }

    #[test]
    fn history_change_counts_only_new_stops() {
        let a = State::new(0.0, vec![1.0], vec![0.0], vec![0.0]).unwrap();
        let b = State::new(0.0, vec![2.0], vec![0.0], vec![0.0]).unwrap();
        let (d, r) = history_change(&[a.clone(), b.clone()], &[b.clone(), b.clone()], 0.1);
        assert_eq!((d, r), (0.0, 0.0));
        let (d, r) = history_change(&[a.clone(), a.clone()], &[b.clone(), b.clone()], 0.1);
        assert_eq!(d, 1.0);
        assert_eq!(r, 1.0);
        let c = State::new(0.0, vec![2.0], vec![0.0], vec![100.0]).unwrap();
        let (d, _) = history_change(&[b.clone(), c], &[b.clone(), b], 0.1);
        assert!((d - 1.0).abs() < 1e-12);
    }
}
