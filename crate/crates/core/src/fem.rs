//! Linear-element operators for a single elastic rod.

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub rho: f64,
    pub e: f64,
    pub area: f64,
}

impl Material {
    pub fn new(rho: f64, e: f64, area: f64) -> Result<Self> {
        for (name, v) in [("density", rho), ("modulus", e), ("area", area)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Material { rho, e, area })
    }

    pub fn wave_speed(&self) -> f64 {
        (self.e / self.rho).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    coords: Vec<f64>,
}

impl Mesh1D {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput("mesh needs at least one element".into()));
        }
        if coords.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("node coordinates must be strictly increasing".into()));
        }
        Ok(Mesh1D { coords })
    }

    /// `n_elements` equal elements on `[left, right]`.
    pub fn uniform(left: f64, right: f64, n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidInput("n_elements must be >= 1".into()));
        }
        let h = (right - left) / n_elements as f64;
        let coords = (0..=n_elements)
            .map(|i| if i == n_elements { right } else { left + h * i as f64 })
            .collect();
        Mesh1D::new(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.coords[e + 1] - self.coords[e]
    }

    pub fn length(&self) -> f64 {
        self.coords[self.coords.len() - 1] - self.coords[0]
    }

    pub fn min_element_length(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_length(e))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Nodal positions, velocities and accelerations at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl State {
    pub fn new(t: f64, x: Vec<f64>, v: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() || x.len() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: if v.len() != x.len() { v.len() } else { a.len() },
            });
        }
        if !t.is_finite() {
            return Err(Error::InvalidInput("state time must be finite".into()));
        }
        Ok(State { t, x, v, a })
    }

    /// Undeformed rod translating rigidly.
    pub fn rigid(t: f64, reference: &[f64], velocity: f64) -> Self {
        State {
            t,
            x: reference.to_vec(),
            v: vec![velocity; reference.len()],
            a: vec![0.0; reference.len()],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.x.len()
    }
}

/// Mass matrix flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    /// Row-sum diagonal.
    Lumped,
    /// Full shape-function integral.
    Consistent,
    /// Mean of lumped and consistent; lowest dispersion for linear elements.
    Averaged,
}

impl MassKind {
    pub fn name(&self) -> &'static str {
        match self {
            MassKind::Lumped => "lumped",
            MassKind::Consistent => "consistent",
            MassKind::Averaged => "averaged",
        }
    }
}

pub fn assemble_mass(mesh: &Mesh1D, mat: &Material, kind: MassKind) -> SymTridiag {
    let mut m = SymTridiag::zeros(mesh.n_nodes());
    for e in 0..mesh.n_elements() {
        let me = mat.rho * mat.area * mesh.element_length(e);
        let (d, o) = match kind {
            MassKind::Lumped => (me / 2.0, 0.0),
            MassKind::Consistent => (me / 3.0, me / 6.0),
            MassKind::Averaged => (5.0 * me / 12.0, me / 12.0),
        };
        m.add_element(e, d, o, d);
    }
    m
}

pub fn assemble_stiffness(mesh: &Mesh1D, mat: &Material) -> SymTridiag {
    let mut k = SymTridiag::zeros(mesh.n_nodes());
    for e in 0..mesh.n_elements() {
        let ke = mat.e * mat.area / mesh.element_length(e);
        k.add_element(e, ke, -ke, ke);
    }
    k
}

pub fn displacement(x: &[f64], reference: &[f64]) -> Vec<f64> {
    x.iter().zip(reference).map(|(a, b)| a - b).collect()
}

/// `K (x - X)`.
pub fn internal_force(k: &SymTridiag, x: &[f64], reference: &[f64]) -> Vec<f64> {
    k.mul_vec(&displacement(x, reference))
}

/// Internal force at a single node.
pub fn internal_force_at(k: &SymTridiag, x: &[f64], reference: &[f64], node: usize) -> f64 {
    let n = x.len();
    let u = |i: usize| x[i] - reference[i];
    let mut s = k.diag()[node] * u(node);
    if node > 0 {
        s += k.off()[node - 1] * u(node - 1);
    }
    if node + 1 < n {
        s += k.off()[node] * u(node + 1);
    }
    s
}

/// Kinetic and potential energy, `(½ vᵀMv, ½ uᵀKu)`.
pub fn energies(m: &SymTridiag, k: &SymTridiag, state: &State, reference: &[f64]) -> (f64, f64) {
    let kinetic = 0.5 * m.quad_form(&state.v);
    let potential = 0.5 * k.quad_form(&displacement(&state.x, reference));
    (kinetic, potential.max(0.0))
}

pub fn cfl_time_step(mesh: &Mesh1D, mat: &Material) -> f64 {
    mesh.min_element_length() / mat.wave_speed()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rod() -> Material {
        Material::new(1000.0, 1e9, 1e-6).unwrap()
    }

    #[test]
    fn one_element_lumped_mass() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 1).unwrap();
        let m = assemble_mass(&mesh, &rod(), MassKind::Lumped);
        assert_relative_eq!(m.diag()[0], 5e-4, max_relative = 1e-15);
        assert_relative_eq!(m.diag()[1], 5e-4, max_relative = 1e-15);
        assert!(m.is_diagonal());
        assert_relative_eq!(m.sum_entries(), 1e-3, max_relative = 1e-15);
    }

    #[test]
    fn benchmark_rod_total_mass() {
        for n in [1, 7, 200] {
            let mesh = Mesh1D::uniform(-0.27, -0.02, n).unwrap();
            for kind in [MassKind::Lumped, MassKind::Consistent, MassKind::Averaged] {
                let m = assemble_mass(&mesh, &rod(), kind);
                assert_relative_eq!(m.sum_entries(), 2.5e-4, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn consistent_interior_entry() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        let mat = rod();
        let m = assemble_mass(&mesh, &mat, MassKind::Consistent);
        let h = 0.5;
        // each element contributes rho*A*h/3 to the shared node
        assert_relative_eq!(m.diag()[1], 2.0 * mat.rho * mat.area * h / 3.0, max_relative = 1e-15);
        assert_relative_eq!(m.get(0, 1), mat.rho * mat.area * h / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn stiffness_entries_and_rigid_mode() {
        let mesh = Mesh1D::uniform(0.0, 0.25, 1).unwrap();
        let k = assemble_stiffness(&mesh, &rod());
        // EA/h = 1e9 * 1e-6 / 0.25
        assert_relative_eq!(k.get(0, 0), 4000.0, max_relative = 1e-15);
        assert_relative_eq!(k.get(0, 1), -4000.0, max_relative = 1e-15);
        let mesh = Mesh1D::uniform(0.0, 0.25, 9).unwrap();
        let k = assemble_stiffness(&mesh, &rod());
        let y = k.mul_vec(&[3.5; 10]);
        assert!(y.iter().all(|v| v.abs() < 1e-6 * 3.5 * k.diag()[1]));
    }

    #[test]
    fn internal_force_cases() {
        let mesh = Mesh1D::uniform(0.0, 0.25, 1).unwrap();
        let k = assemble_stiffness(&mesh, &rod());
        let xref = mesh.coords().to_vec();
        assert_eq!(internal_force(&k, &xref, &xref), vec![0.0, 0.0]);
        let shifted: Vec<f64> = xref.iter().map(|x| x + 0.125).collect();
        assert_eq!(internal_force(&k, &shifted, &xref), vec![0.0, 0.0]);
        let delta = 1e-3;
        let stretched = vec![xref[0], xref[1] + delta];
        let f = internal_force(&k, &stretched, &xref);
        assert_relative_eq!(f[0], -4000.0 * delta, max_relative = 1e-12);
        assert_relative_eq!(f[1], 4000.0 * delta, max_relative = 1e-12);
        assert_relative_eq!(internal_force_at(&k, &stretched, &xref, 1), f[1]);
    }

    #[test]
    fn benchmark_kinetic_energy() {
        let mesh = Mesh1D::uniform(-0.27, -0.02, 200).unwrap();
        let mat = rod();
        let k = assemble_stiffness(&mesh, &mat);
        for kind in [MassKind::Lumped, MassKind::Consistent] {
            let m = assemble_mass(&mesh, &mat, kind);
            let s = State::rigid(0.0, mesh.coords(), 100.0);
            let (t, v) = energies(&m, &k, &s, mesh.coords());
            assert_relative_eq!(t, 1.25, max_relative = 1e-12);
            assert_eq!(v, 0.0);
            let rest = State::rigid(0.0, mesh.coords(), 0.0);
            assert_eq!(energies(&m, &k, &rest, mesh.coords()).0, 0.0);
        }
    }

    #[test]
    fn cfl_values() {
        let mat = rod();
        let mesh = Mesh1D::uniform(0.0, 0.25, 200).unwrap();
        assert_relative_eq!(cfl_time_step(&mesh, &mat), 1.25e-6, max_relative = 1e-12);
        let fine = Mesh1D::uniform(0.0, 0.25, 400).unwrap();
        assert_relative_eq!(cfl_time_step(&fine, &mat), 0.625e-6, max_relative = 1e-12);
        let stiff = Material::new(1000.0, 4e9, 1e-6).unwrap();
        assert_relative_eq!(cfl_time_step(&mesh, &stiff), 0.625e-6, max_relative = 1e-12);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(Material::new(0.0, 1.0, 1.0).is_err());
        assert!(Mesh1D::new(vec![0.0, 0.0]).is_err());
        assert!(Mesh1D::new(vec![0.0]).is_err());
        assert!(State::new(0.0, vec![0.0], vec![], vec![0.0]).is_err());
    }
}
