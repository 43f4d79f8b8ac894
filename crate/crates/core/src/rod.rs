//! One elastic rod of the two-rod impact problem with its assembled operators.

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, energies, internal_force_at, MassKind, Material, Mesh1D, State};
use crate::linalg::SymTridiag;
use crate::oracle::BenchmarkSpec;

/// Which of the two rods. The left rod touches with its last node, the right rod with its first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(&self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rod {
    pub side: Side,
    pub mesh: Mesh1D,
    pub material: Material,
    pub mass_kind: MassKind,
    pub mass: SymTridiag,
    pub stiffness: SymTridiag,
}

impl Rod {
    pub fn new(side: Side, mesh: Mesh1D, material: Material, mass_kind: MassKind) -> Self {
        let mass = assemble_mass(&mesh, &material, mass_kind);
        let stiffness = assemble_stiffness(&mesh, &material);
        Rod {
            side,
            mesh,
            material,
            mass_kind,
            mass,
            stiffness,
        }
    }

    /// Benchmark rod: left occupies `[-L-g, -g]`, right `[g, g+L]`.
    pub fn benchmark(spec: &BenchmarkSpec, side: Side, n_elements: usize, mass_kind: MassKind) -> Result<Self> {
        let material = Material::new(spec.density, spec.modulus, spec.area)?;
        let (a, b) = match side {
            Side::Left => (-spec.length - spec.gap, -spec.gap),
            Side::Right => (spec.gap, spec.gap + spec.length),
        };
        let mesh = Mesh1D::uniform(a, b, n_elements)?;
        Ok(Rod::new(side, mesh, material, mass_kind))
    }

    /// Benchmark initial state: undeformed, moving towards the other rod.
    pub fn initial_state(&self, spec: &BenchmarkSpec) -> State {
        let v = match self.side {
            Side::Left => spec.velocity,
            Side::Right => -spec.velocity,
        };
        State::rigid(spec.t_start, self.mesh.coords(), v)
    }

    pub fn reference(&self) -> &[f64] {
        self.mesh.coords()
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn contact_node(&self) -> usize {
        match self.side {
            Side::Left => self.n_nodes() - 1,
            Side::Right => 0,
        }
    }

    /// Outward normal of the contact end.
    pub fn normal(&self) -> f64 {
        match self.side {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    /// Contact pressure carried by the end element, compression positive.
    pub fn end_pressure(&self, state: &State) -> f64 {
        let f = internal_force_at(&self.stiffness, &state.x, self.reference(), self.contact_node());
        -self.normal() * f / self.material.area
    }

    pub fn energies(&self, state: &State) -> (f64, f64) {
        energies(&self.mass, &self.stiffness, state, self.reference())
    }

    pub fn check_state(&self, state: &State) -> Result<()> {
        if state.n_nodes() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                got: state.n_nodes(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn benchmark_geometry() {
        let spec = BenchmarkSpec::default();
        let l = Rod::benchmark(&spec, Side::Left, 200, MassKind::Lumped).unwrap();
        let r = Rod::benchmark(&spec, Side::Right, 200, MassKind::Lumped).unwrap();
        assert_relative_eq!(l.reference()[l.contact_node()], -0.02);
        assert_relative_eq!(r.reference()[r.contact_node()], 0.02);
        assert_eq!(l.initial_state(&spec).v[0], 100.0);
        assert_eq!(r.initial_state(&spec).v[0], -100.0);
    }

    #[test]
    fn static_compression_pressure() {
        // two-node bar pushed by end force F at the contact end: pressure F/A
        let spec = BenchmarkSpec::default();
        for side in [Side::Left, Side::Right] {
            let rod = Rod::benchmark(&spec, side, 1, MassKind::Consistent).unwrap();
            let k = 1e9 * 1e-6 / 0.25;
            let force = 50.0;
            let mut s = rod.initial_state(&spec);
            let p = rod.contact_node();
            s.x[p] -= rod.normal() * force / k;
            assert_relative_eq!(rod.end_pressure(&s), force / 1e-6, max_relative = 1e-9);
            assert_eq!(rod.end_pressure(&rod.initial_state(&spec)), 0.0);
        }
    }
}
