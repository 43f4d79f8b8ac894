//! Time integrators and contact stabilizations behind one stepping interface.

use crate::error::{Error, Result};
use crate::fem::{internal_force, State};
use crate::linalg::{norm2, SymTridiag};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    NewmarkExplicit,
    NewmarkImplicit,
    TchamwaWielgosz,
    ChungLee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stabilization {
    None,
    NaiveStabilized,
    ContactImplicit,
    ContactStabilized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub kind: SchemeKind,
    pub gamma: f64,
    pub beta: f64,
    pub phi: f64,
    pub stabilization: Stabilization,
}

impl IntegratorSpec {
    pub fn new(
        kind: SchemeKind,
        gamma: f64,
        beta: f64,
        phi: f64,
        stabilization: Stabilization,
    ) -> Result<Self> {
        let spec = IntegratorSpec {
            kind,
            gamma,
            beta,
            phi,
            stabilization,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self.kind {
            SchemeKind::NewmarkExplicit => {
                if self.beta != 0.0 {
                    return bad(format!("explicit Newmark needs beta = 0, got {}", self.beta));
                }
                if !(0.0..=1.0).contains(&self.gamma) {
                    return bad(format!("gamma {} outside [0, 1]", self.gamma));
                }
            }
            SchemeKind::NewmarkImplicit => {
                if !(self.beta > 0.0 && 2.0 * self.beta <= 1.0) {
                    return bad(format!("implicit Newmark needs 0 < 2 beta <= 1, got beta {}", self.beta));
                }
                if !(0.0..=1.0).contains(&self.gamma) {
                    return bad(format!("gamma {} outside [0, 1]", self.gamma));
                }
            }
            SchemeKind::TchamwaWielgosz => {
                if !(self.phi >= 1.0) {
                    return bad(format!("phi must be >= 1, got {}", self.phi));
                }
            }
            SchemeKind::ChungLee => {
                if self.gamma != 1.5 || !(1.0..=28.0 / 27.0).contains(&self.beta) {
                    return bad(format!(
                        "Chung-Lee needs gamma = 3/2 and beta in [1, 28/27], got {} / {}",
                        self.gamma, self.beta
                    ));
                }
            }
        }
        match self.stabilization {
            Stabilization::ContactImplicit | Stabilization::ContactStabilized
                if self.kind != SchemeKind::NewmarkImplicit =>
            {
                bad("contact-implicit / contact-stabilized require implicit Newmark".into())
            }
            Stabilization::NaiveStabilized
                if !matches!(self.kind, SchemeKind::NewmarkExplicit | SchemeKind::NewmarkImplicit) =>
            {
                bad("naive stabilization is defined for Newmark schemes only".into())
            }
            _ => Ok(()),
        }
    }

    pub fn is_explicit(&self) -> bool {
        self.kind != SchemeKind::NewmarkImplicit
    }
}

/// Explicit or implicit member of a preset pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Explicit,
    Implicit,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Explicit => "explicit",
            Family::Implicit => "implicit",
        }
    }
}

/// Named parameter sets selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    ClassicNewmark,
    DissipativeNewmark,
    ChaudharyBathe,
    TchamwaWielgosz,
    ChungLee,
    NaiveStabilized,
    ContactImplicit,
    ContactStabilized,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::ClassicNewmark,
        Preset::DissipativeNewmark,
        Preset::ChaudharyBathe,
        Preset::TchamwaWielgosz,
        Preset::ChungLee,
        Preset::NaiveStabilized,
        Preset::ContactImplicit,
        Preset::ContactStabilized,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::ClassicNewmark => "classic_newmark",
            Preset::DissipativeNewmark => "dissipative_newmark",
            Preset::ChaudharyBathe => "chaudhary_bathe",
            Preset::TchamwaWielgosz => "tchamwa_wielgosz",
            Preset::ChungLee => "chung_lee",
            Preset::NaiveStabilized => "naive_stabilized",
            Preset::ContactImplicit => "contact_implicit",
            Preset::ContactStabilized => "contact_stabilized",
        }
    }

    pub fn from_name(name: &str) -> Result<Preset> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown preset '{name}'")))
    }

    pub fn supports(&self, family: Family) -> bool {
        match self {
            Preset::ClassicNewmark | Preset::DissipativeNewmark | Preset::NaiveStabilized => true,
            Preset::TchamwaWielgosz | Preset::ChungLee => family == Family::Explicit,
            Preset::ChaudharyBathe | Preset::ContactImplicit | Preset::ContactStabilized => {
                family == Family::Implicit
            }
        }
    }

    /// Presets available for a family, in table order.
    pub fn for_family(family: Family) -> Vec<Preset> {
        Preset::ALL.iter().copied().filter(|p| p.supports(family)).collect()
    }

    pub fn spec(&self, family: Family) -> Result<IntegratorSpec> {
        if !self.supports(family) {
            return Err(Error::InvalidInput(format!(
                "preset {} has no {} variant",
                self.name(),
                family.name()
            )));
        }
        use SchemeKind::*;
        use Stabilization as S;
        let newmark = |gamma: f64, beta_implicit: f64, stab: Stabilization| match family {
            Family::Explicit => IntegratorSpec::new(NewmarkExplicit, gamma, 0.0, 1.0, stab),
            Family::Implicit => IntegratorSpec::new(NewmarkImplicit, gamma, beta_implicit, 1.0, stab),
        };
        match self {
            Preset::ClassicNewmark => newmark(0.5, 0.25, S::None),
            Preset::DissipativeNewmark => newmark(0.9, 0.49, S::None),
            Preset::ChaudharyBathe => newmark(0.5, 0.5, S::None),
            Preset::NaiveStabilized => newmark(0.5, 0.25, S::NaiveStabilized),
            Preset::ContactImplicit => newmark(0.5, 0.25, S::ContactImplicit),
            Preset::ContactStabilized => newmark(0.5, 0.25, S::ContactStabilized),
            Preset::TchamwaWielgosz => IntegratorSpec::new(TchamwaWielgosz, 1.0, 0.0, 1.05, S::None),
            Preset::ChungLee => IntegratorSpec::new(ChungLee, 1.5, 1.0, 1.0, S::None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol: 1e-12,
            max_iterations: 10,
        }
    }
}

/// Kinematic values imposed on one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prescribed {
    pub dof: usize,
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

/// Gap target for the contact-stabilized prediction: penetration is
/// `normal * (x[dof] - position)` when positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub dof: usize,
    pub position: f64,
    pub normal: f64,
}

/// Present only while contact is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPhase<'a> {
    pub dofs: &'a [usize],
    pub obstacle: Option<Obstacle>,
}

/// Everything a step needs besides the state. `f_ext` is evaluated at the target time.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub mass: &'a SymTridiag,
    pub stiffness: &'a SymTridiag,
    pub reference: &'a [f64],
    pub f_ext: &'a [f64],
    pub constraints: &'a [Prescribed],
    pub contact: Option<ContactPhase<'a>>,
    pub newton: NewtonSettings,
}

impl<'a> StepContext<'a> {
    pub fn new(
        mass: &'a SymTridiag,
        stiffness: &'a SymTridiag,
        reference: &'a [f64],
        f_ext: &'a [f64],
    ) -> Self {
        StepContext {
            mass,
            stiffness,
            reference,
            f_ext,
            constraints: &[],
            contact: None,
            newton: NewtonSettings::default(),
        }
    }

    fn check(&self, state: &State) -> Result<()> {
        let n = state.n_nodes();
        for len in [self.mass.dim(), self.stiffness.dim(), self.reference.len(), self.f_ext.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        for c in self.constraints {
            if c.dof >= n {
                return Err(Error::InvalidInput(format!("constrained dof {} out of range", c.dof)));
            }
        }
        Ok(())
    }

    fn overwrite_constrained(&self, s: &mut State) {
        for c in self.constraints {
            s.x[c.dof] = c.x;
            s.v[c.dof] = c.v;
            s.a[c.dof] = c.a;
        }
    }

    /// `f_ext - f_int(x)`.
    fn unbalanced(&self, x: &[f64]) -> Vec<f64> {
        let fi = internal_force(self.stiffness, x, self.reference);
        self.f_ext.iter().zip(&fi).map(|(f, g)| f - g).collect()
    }
}

/// Zero the accelerations of the listed nodes.
pub fn apply_naive_stabilization(mut state: State, contact_dofs: &[usize]) -> State {
    for &d in contact_dofs {
        state.a[d] = 0.0;
    }
    state
}

/// Position update shared by the explicit schemes: `x + dt v + dt² w a`.
pub fn explicit_position_update(state: &State, dt: f64, weight: f64) -> Vec<f64> {
    state
        .x
        .iter()
        .zip(&state.v)
        .zip(&state.a)
        .map(|((x, v), a)| x + dt * v + dt * dt * weight * a)
        .collect()
}

/// Solve `M Δa = f_ext - f_int(x_force) - M a_k` with constrained accelerations fixed.
fn acceleration_update(ctx: &StepContext, state: &State, x_force: &[f64]) -> Result<Vec<f64>> {
    let ma = ctx.mass.mul_vec(&state.a);
    let rhs: Vec<f64> = ctx
        .unbalanced(x_force)
        .iter()
        .zip(&ma)
        .map(|(r, m)| r - m)
        .collect();
    let fixed: Vec<(usize, f64)> = ctx
        .constraints
        .iter()
        .map(|c| (c.dof, c.a - state.a[c.dof]))
        .collect();
    let da = ctx.mass.solve_with_fixed(&rhs, &fixed)?;
    Ok(state.a.iter().zip(&da).map(|(a, d)| a + d).collect())
}

fn pre_step(spec: &IntegratorSpec, ctx: &StepContext, state: &State) -> Result<State> {
    ctx.check(state)?;
    let s = state.clone();
    Ok(match (spec.stabilization, ctx.contact) {
        (Stabilization::NaiveStabilized, Some(c)) => apply_naive_stabilization(s, c.dofs),
        _ => s,
    })
}

pub fn step_newmark_explicit(spec: &IntegratorSpec, ctx: &StepContext, state: &State, dt: f64) -> Result<State> {
    let s = pre_step(spec, ctx, state)?;
    let mut x = explicit_position_update(&s, dt, 0.5);
    for c in ctx.constraints {
        x[c.dof] = c.x;
    }
    let a = acceleration_update(ctx, &s, &x)?;
    let v = s
        .v
        .iter()
        .zip(&s.a)
        .zip(&a)
        .map(|((v, ak), a1)| v + dt * (1.0 - spec.gamma) * ak + dt * spec.gamma * a1)
        .collect();
    let mut out = State { t: s.t + dt, x, v, a };
    ctx.overwrite_constrained(&mut out);
    Ok(out)
}

pub fn step_tchamwa_wielgosz(spec: &IntegratorSpec, ctx: &StepContext, state: &State, dt: f64) -> Result<State> {
    let s = pre_step(spec, ctx, state)?;
    let mut x = explicit_position_update(&s, dt, spec.phi);
    for c in ctx.constraints {
        x[c.dof] = c.x;
    }
    let a = acceleration_update(ctx, &s, &x)?;
    let v = s.v.iter().zip(&s.a).map(|(v, ak)| v + dt * ak).collect();
    let mut out = State { t: s.t + dt, x, v, a };
    ctx.overwrite_constrained(&mut out);
    Ok(out)
}

/// Forces are sampled at the latest known positions `x_k`, so the stored
/// acceleration trails the position by one step; this is the two-step
/// Chung-Lee recursion written in one-step form.
pub fn step_chung_lee(spec: &IntegratorSpec, ctx: &StepContext, state: &State, dt: f64) -> Result<State> {
    let s = pre_step(spec, ctx, state)?;
    let beta_hat = 0.5 - spec.beta;
    let gamma_hat = 1.0 - spec.gamma;
    let a = acceleration_update(ctx, &s, &s.x)?;
    let n = s.n_nodes();
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; n];
    for i in 0..n {
        let x_pred = s.x[i] + dt * s.v[i] + dt * dt * beta_hat * s.a[i];
        let v_pred = s.v[i] + dt * gamma_hat * s.a[i];
        x[i] = x_pred + dt * dt * spec.beta * a[i];
        v[i] = v_pred + dt * spec.gamma * a[i];
    }
    let mut out = State { t: s.t + dt, x, v, a };
    ctx.overwrite_constrained(&mut out);
    Ok(out)
}

/// Implicit Newmark with a Newton loop. Returns the new state and the Newton count.
pub fn step_newmark_implicit_counted(
    spec: &IntegratorSpec,
    ctx: &StepContext,
    state: &State,
    dt: f64,
) -> Result<(State, usize)> {
    let s = pre_step(spec, ctx, state)?;
    let contact = ctx.contact.is_some();
    let base = match (spec.stabilization, contact) {
        (Stabilization::ContactStabilized, true) => prediction_contact_stabilized(ctx, &s, dt)?,
        _ => explicit_position_update(&s, dt, 0.0),
    };
    let c2 = dt * dt * spec.beta;
    let x_pred: Vec<f64> = base
        .iter()
        .zip(&s.a)
        .map(|(b, a)| b + dt * dt * (0.5 - spec.beta) * a)
        .collect();
    let v_pred: Vec<f64> = s
        .v
        .iter()
        .zip(&s.a)
        .map(|(v, a)| v + dt * (1.0 - spec.gamma) * a)
        .collect();

    let mut x = x_pred.clone();
    for c in ctx.constraints {
        x[c.dof] = c.x;
    }
    let keff = ctx.mass.combine(1.0 / c2, ctx.stiffness, 1.0);
    let fixed: Vec<(usize, f64)> = ctx.constraints.iter().map(|c| (c.dof, 0.0)).collect();
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    loop {
        if iterations == ctx.newton.max_iterations {
            return Err(Error::NewtonDivergence {
                iterations,
                last_norm: last,
            });
        }
        iterations += 1;
        let a: Vec<f64> = x.iter().zip(&x_pred).map(|(x, p)| (x - p) / c2).collect();
        let ma = ctx.mass.mul_vec(&a);
        let rhs: Vec<f64> = ctx.unbalanced(&x).iter().zip(&ma).map(|(r, m)| r - m).collect();
        let dx = keff.solve_with_fixed(&rhs, &fixed)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        last = norm2(&dx);
        if last <= ctx.newton.tol * norm2(&x).max(1.0) {
            break;
        }
    }
    debug_assert!(iterations <= 2, "linear Newton took {iterations} iterations");

    let a: Vec<f64> = x.iter().zip(&x_pred).map(|(x, p)| (x - p) / c2).collect();
    let v = v_pred.iter().zip(&a).map(|(v, a)| v + dt * spec.gamma * a).collect();
    let mut out = State { t: s.t + dt, x, v, a };
    if let (Stabilization::ContactImplicit | Stabilization::ContactStabilized, Some(phase)) =
        (spec.stabilization, ctx.contact)
    {
        // split only where a contact force acts
        let split = correction_contact_implicit(ctx, &s, &base, &out.x, dt, spec.beta, spec.gamma)?;
        for &p in phase.dofs {
            out.v[p] = split.v[p];
            out.a[p] = split.a[p];
        }
    }
    ctx.overwrite_constrained(&mut out);
    Ok((out, iterations))
}

pub fn step_newmark_implicit(spec: &IntegratorSpec, ctx: &StepContext, state: &State, dt: f64) -> Result<State> {
    step_newmark_implicit_counted(spec, ctx, state, dt).map(|(s, _)| s)
}

/// Acceleration split into an internal part and a contact part, velocity rebuilt from both.
pub fn correction_contact_implicit(
    ctx: &StepContext,
    state_k: &State,
    x_pred: &[f64],
    x_solved: &[f64],
    dt: f64,
    beta: f64,
    gamma: f64,
) -> Result<State> {
    let a_int = ctx.mass.solve(&ctx.unbalanced(x_solved))?;
    let n = x_solved.len();
    let mut a = vec![0.0; n];
    let mut v = vec![0.0; n];
    for i in 0..n {
        let a_con = (x_solved[i] - x_pred[i]) / (dt * dt) - 2.0 * beta * a_int[i];
        a[i] = a_int[i] + a_con;
        v[i] = state_k.v[i] + dt * (1.0 - gamma) * a_int[i] + dt * gamma * a_int[i] + dt * a_con;
    }
    Ok(State {
        t: state_k.t + dt,
        x: x_solved.to_vec(),
        v,
        a,
    })
}

/// Positions predicted by a mass-weighted projection of `x_k + dt v_k` onto the
/// no-penetration set, enforced with a stiff penalty on the contact node.
pub fn prediction_contact_stabilized(ctx: &StepContext, state_k: &State, dt: f64) -> Result<Vec<f64>> {
    let target = explicit_position_update(state_k, dt, 0.0);
    let mut x = target.clone();
    for c in ctx.constraints {
        x[c.dof] = c.x;
    }
    let obstacle = match ctx.contact.and_then(|c| c.obstacle) {
        Some(o) => o,
        None => return Ok(x),
    };
    let tau = 1e3 * ctx.stiffness.diag()[obstacle.dof];
    let fixed: Vec<(usize, f64)> = ctx.constraints.iter().map(|c| (c.dof, 0.0)).collect();
    for _ in 0..ctx.newton.max_iterations {
        let diff: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
        let mut rhs: Vec<f64> = ctx.mass.mul_vec(&diff).iter().map(|r| -r).collect();
        let mut jac = ctx.mass.clone();
        let gap = obstacle.normal * (x[obstacle.dof] - obstacle.position);
        // touching counts as active: zero penalty force, and no flip-flop at gap = 0
        if gap >= 0.0 {
            rhs[obstacle.dof] -= tau * gap * obstacle.normal;
            jac.add_to_diag(obstacle.dof, tau);
        }
        let dx = jac.solve_with_fixed(&rhs, &fixed)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let new_gap = obstacle.normal * (x[obstacle.dof] - obstacle.position);
        // done once the update is negligible and the active set is stable
        if norm2(&dx) <= ctx.newton.tol * norm2(&x).max(1.0) && (gap >= 0.0) == (new_gap >= 0.0) {
            return Ok(x);
        }
    }
    Err(Error::NewtonDivergence {
        iterations: ctx.newton.max_iterations,
        last_norm: f64::NAN,
    })
}

/// Dispatch on the scheme kind.
pub fn step(spec: &IntegratorSpec, ctx: &StepContext, state: &State, dt: f64) -> Result<State> {
    match spec.kind {
        SchemeKind::NewmarkExplicit => step_newmark_explicit(spec, ctx, state, dt),
        SchemeKind::NewmarkImplicit => step_newmark_implicit(spec, ctx, state, dt),
        SchemeKind::TchamwaWielgosz => step_tchamwa_wielgosz(spec, ctx, state, dt),
        SchemeKind::ChungLee => step_chung_lee(spec, ctx, state, dt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_stiffness, energies, Material, MassKind, Mesh1D};

    fn sdof() -> (SymTridiag, SymTridiag) {
        (SymTridiag::diagonal(vec![1.0]), SymTridiag::diagonal(vec![1.0]))
    }

    fn oscillate(spec: &IntegratorSpec, dt: f64, t_end: f64) -> State {
        let (m, k) = sdof();
        let reference = [0.0];
        let f = [0.0];
        let ctx = StepContext::new(&m, &k, &reference, &f);
        let n = (t_end / dt).round() as usize;
        let mut s = State::new(0.0, vec![1.0], vec![0.0], vec![-1.0]).unwrap();
        for _ in 0..n {
            s = step(spec, &ctx, &s, dt).unwrap();
        }
        s
    }

    fn osc_error(spec: &IntegratorSpec, dt: f64) -> f64 {
        let t_end = 10.0;
        let s = oscillate(spec, dt, t_end);
        ((s.x[0] - t_end.cos()).powi(2) + (s.v[0] + t_end.sin()).powi(2)).sqrt()
    }

    #[test]
    fn presets_cover_table() {
        assert_eq!(Preset::for_family(Family::Explicit).len(), 5);
        assert_eq!(Preset::for_family(Family::Implicit).len(), 6);
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()).unwrap(), p);
        }
        assert!(Preset::TchamwaWielgosz.spec(Family::Implicit).is_err());
        assert!(Preset::ContactImplicit.spec(Family::Explicit).is_err());
        let tw = Preset::TchamwaWielgosz.spec(Family::Explicit).unwrap();
        assert_eq!(tw.phi, 1.05);
        let cb = Preset::ChaudharyBathe.spec(Family::Implicit).unwrap();
        assert_eq!((cb.gamma, cb.beta), (0.5, 0.5));
        let cl = Preset::ChungLee.spec(Family::Explicit).unwrap();
        assert_eq!((cl.gamma, cl.beta), (1.5, 1.0));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(IntegratorSpec::new(SchemeKind::TchamwaWielgosz, 1.0, 0.0, 0.9, Stabilization::None).is_err());
        assert!(IntegratorSpec::new(SchemeKind::NewmarkImplicit, 0.5, 0.0, 1.0, Stabilization::None).is_err());
        assert!(IntegratorSpec::new(SchemeKind::NewmarkExplicit, 0.5, 0.0, 1.0, Stabilization::ContactImplicit).is_err());
        assert!(IntegratorSpec::new(SchemeKind::ChungLee, 1.5, 2.0, 1.0, Stabilization::None).is_err());
    }

    #[test]
    fn free_flight_exact_for_all_schemes() {
        let mesh = Mesh1D::uniform(0.0, 0.25, 10).unwrap();
        let mat = Material::new(1000.0, 1e9, 1e-6).unwrap();
        let k = assemble_stiffness(&mesh, &mat);
        let f = vec![0.0; 11];
        let specs = [
            (Preset::ClassicNewmark, Family::Explicit),
            (Preset::ClassicNewmark, Family::Implicit),
            (Preset::DissipativeNewmark, Family::Implicit),
            (Preset::TchamwaWielgosz, Family::Explicit),
            (Preset::ChungLee, Family::Explicit),
        ];
        for (p, fam) in specs {
            let spec = p.spec(fam).unwrap();
            let kind = if spec.is_explicit() { MassKind::Lumped } else { MassKind::Consistent };
            let m = assemble_mass(&mesh, &mat, kind);
            let ctx = StepContext::new(&m, &k, mesh.coords(), &f);
            let mut s = State::rigid(0.0, mesh.coords(), 100.0);
            let dt = 1e-7;
            for _ in 0..50 {
                s = step(&spec, &ctx, &s, dt).unwrap();
            }
            for (x, x0) in s.x.iter().zip(mesh.coords()) {
                assert!((x - (x0 + 100.0 * 50.0 * dt)).abs() < 1e-15, "{:?}", p);
            }
            assert!(s.a.iter().all(|a| (a * dt * dt).abs() < 1e-16), "{:?}", p);
        }
    }

    #[test]
    fn explicit_matches_central_difference() {
        let spec = Preset::ClassicNewmark.spec(Family::Explicit).unwrap();
        let (m, k) = sdof();
        let r = [0.0];
        let f = [0.0];
        let ctx = StepContext::new(&m, &k, &r, &f);
        let dt = 0.05;
        let mut s = State::new(0.0, vec![1.0], vec![0.0], vec![-1.0]).unwrap();
        let mut prev = 1.0;
        let s1 = step(&spec, &ctx, &s, dt).unwrap();
        let mut cur = s1.x[0];
        s = s1;
        for _ in 0..100 {
            let next_cd = 2.0 * cur - prev - dt * dt * cur;
            s = step(&spec, &ctx, &s, dt).unwrap();
            assert!((s.x[0] - next_cd).abs() < 1e-12);
            prev = cur;
            cur = s.x[0];
        }
    }

    #[test]
    fn explicit_energy_drift_is_second_order() {
        let spec = Preset::ClassicNewmark.spec(Family::Explicit).unwrap();
        let e1 = osc_error(&spec, 0.02);
        let e2 = osc_error(&spec, 0.01);
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn dissipative_explicit_never_gains_energy_after_transient() {
        let spec = Preset::DissipativeNewmark.spec(Family::Explicit).unwrap();
        let (m, k) = sdof();
        let r = [0.0];
        let f = [0.0];
        let ctx = StepContext::new(&m, &k, &r, &f);
        let mut s = State::new(0.0, vec![1.0], vec![0.0], vec![-1.0]).unwrap();
        let energy = |s: &State| 0.5 * s.v[0] * s.v[0] + 0.5 * s.x[0] * s.x[0];
        let e0 = energy(&s);
        let mut per_period = Vec::new();
        let dt = 0.01;
        let steps = (2.0 * std::f64::consts::PI / dt).round() as usize;
        for _ in 0..20 {
            for _ in 0..steps {
                s = step(&spec, &ctx, &s, dt).unwrap();
            }
            per_period.push(energy(&s));
        }
        assert!(per_period[0] < e0);
        assert!(per_period.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn implicit_trapezoid_preserves_amplitude() {
        let spec = Preset::ClassicNewmark.spec(Family::Implicit).unwrap();
        let (m, k) = sdof();
        let r = [0.0];
        let f = [0.0];
        let ctx = StepContext::new(&m, &k, &r, &f);
        let mut s = State::new(0.0, vec![1.0], vec![0.0], vec![-1.0]).unwrap();
        let dt = 2.0 * std::f64::consts::PI / 20.0;
        for _ in 0..20 * 1000 {
            s = step(&spec, &ctx, &s, dt).unwrap();
        }
        let amp = (s.x[0] * s.x[0] + s.v[0] * s.v[0]).sqrt();
        assert!((amp - 1.0).abs() < 1e-10, "amplitude {amp}");
    }

    #[test]
    fn implicit_fixed_point_and_newton_count() {
        let spec = Preset::ClassicNewmark.spec(Family::Implicit).unwrap();
        let mesh = Mesh1D::uniform(0.0, 0.25, 8).unwrap();
        let mat = Material::new(1000.0, 1e9, 1e-6).unwrap();
        let m = assemble_mass(&mesh, &mat, MassKind::Consistent);
        let k = assemble_stiffness(&mesh, &mat);
        let f = vec![0.0; 9];
        let ctx = StepContext::new(&m, &k, mesh.coords(), &f);
        let s = State::rigid(0.0, mesh.coords(), 0.0);
        let (s1, its) = step_newmark_implicit_counted(&spec, &ctx, &s, 1e-6).unwrap();
        assert!(its <= 2);
        assert_eq!(s1.x, s.x);
        assert!(s1.v.iter().chain(&s1.a).all(|v| *v == 0.0));
    }

    #[test]
    fn implicit_rod_energy_conserved() {
        let spec = Preset::ClassicNewmark.spec(Family::Implicit).unwrap();
        let mesh = Mesh1D::uniform(0.0, 0.25, 20).unwrap();
        let mat = Material::new(1000.0, 1e9, 1e-6).unwrap();
        let m = assemble_mass(&mesh, &mat, MassKind::Consistent);
        let k = assemble_stiffness(&mesh, &mat);
        let f = vec![0.0; 21];
        let ctx = StepContext::new(&m, &k, mesh.coords(), &f);
        let mut s = State::rigid(0.0, mesh.coords(), 0.0);
        for (i, v) in s.v.iter_mut().enumerate() {
            *v = 100.0 * (i as f64 * 0.7).sin();
        }
        let total = |s: &State| {
            let (t, v) = energies(&m, &k, s, mesh.coords());
            t + v
        };
        let e0 = total(&s);
        for _ in 0..10_000 {
            s = step(&spec, &ctx, &s, 1e-6).unwrap();
        }
        let drift = ((total(&s) - e0) / e0).abs();
        assert!(drift < 1e-10, "drift {drift:e}");
    }

    #[test]
    fn tchamwa_wielgosz_first_order() {
        let spec = Preset::TchamwaWielgosz.spec(Family::Explicit).unwrap();
        let e1 = osc_error(&spec, 0.002);
        let e2 = osc_error(&spec, 0.001);
        let order = (e1 / e2).log2();
        assert!((order - 1.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn chung_lee_second_order() {
        let spec = Preset::ChungLee.spec(Family::Explicit).unwrap();
        let e1 = osc_error(&spec, 0.004);
        let e2 = osc_error(&spec, 0.002);
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn naive_stabilization_basics() {
        let s = State::new(0.0, vec![0.0; 3], vec![0.0; 3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(apply_naive_stabilization(s.clone(), &[]), s);
        let z = apply_naive_stabilization(s.clone(), &[2]);
        assert_eq!(z.a, vec![1.0, 2.0, 0.0]);
        assert_eq!(apply_naive_stabilization(z.clone(), &[2]), z);
        assert_eq!(z.x, s.x);
    }

    #[test]
    fn contact_implicit_correction_consistent_without_contact_force() {
        // x - x_pred = 2 beta dt² a_int => a_con = 0 and the classic update is recovered
        let (m, k) = sdof();
        let r = [0.0];
        let f = [0.0];
        let ctx = StepContext::new(&m, &k, &r, &f);
        let dt = 0.1;
        let beta = 0.25;
        let gamma = 0.5;
        let s = State::new(0.0, vec![0.5], vec![0.2], vec![-0.5]).unwrap();
        let x_solved = [0.48];
        let a_int = -x_solved[0];
        let x_pred = [x_solved[0] - 2.0 * beta * dt * dt * a_int];
        let out = correction_contact_implicit(&ctx, &s, &x_pred, &x_solved, dt, beta, gamma).unwrap();
        assert!((out.a[0] - a_int).abs() < 1e-14);
        assert!((out.v[0] - (s.v[0] + dt * a_int)).abs() < 1e-14);
    }

    #[test]
    fn stabilized_prediction_without_contact_is_plain_predictor() {
        let (m, k) = sdof();
        let r = [0.0];
        let f = [0.0];
        let ctx = StepContext::new(&m, &k, &r, &f);
        let s = State::new(0.0, vec![0.5], vec![2.0], vec![-0.5]).unwrap();
        assert_eq!(prediction_contact_stabilized(&ctx, &s, 0.1).unwrap(), vec![0.7]);
    }

    #[test]
    fn stabilized_prediction_closes_gap() {
        let mesh = Mesh1D::uniform(0.0, 0.25, 4).unwrap();
        let mat = Material::new(1000.0, 1e9, 1e-6).unwrap();
        let m = assemble_mass(&mesh, &mat, MassKind::Consistent);
        let k = assemble_stiffness(&mesh, &mat);
        let f = vec![0.0; 5];
        let dofs = [4usize];
        let mut ctx = StepContext::new(&m, &k, mesh.coords(), &f);
        ctx.contact = Some(ContactPhase {
            dofs: &dofs,
            obstacle: Some(Obstacle { dof: 4, position: 0.25, normal: 1.0 }),
        });
        let s = State::rigid(0.0, mesh.coords(), 100.0);
        let x = prediction_contact_stabilized(&ctx, &s, 1e-6).unwrap();
        assert!(x[4] - 0.25 < 1e-6 * 1e-3, "penetration {}", x[4] - 0.25);
        assert!(x[0] > mesh.coords()[0]);
    }

    #[test]
    fn constrained_dofs_take_prescribed_values() {
        let mesh = Mesh1D::uniform(0.0, 0.25, 5).unwrap();
        let mat = Material::new(1000.0, 1e9, 1e-6).unwrap();
        let k = assemble_stiffness(&mesh, &mat);
        let f = vec![0.0; 6];
        let c = [Prescribed { dof: 5, x: 0.2500001, v: 1.0, a: 2.0 }];
        for fam in [Family::Explicit, Family::Implicit] {
            let spec = Preset::ClassicNewmark.spec(fam).unwrap();
            let kind = if fam == Family::Explicit { MassKind::Lumped } else { MassKind::Consistent };
            let m = assemble_mass(&mesh, &mat, kind);
            let mut ctx = StepContext::new(&m, &k, mesh.coords(), &f);
            ctx.constraints = &c;
            let s = State::rigid(0.0, mesh.coords(), 0.0);
            let out = step(&spec, &ctx, &s, 1e-7).unwrap();
            assert_eq!((out.x[5], out.v[5], out.a[5]), (0.2500001, 1.0, 2.0));
        }
    }
}
