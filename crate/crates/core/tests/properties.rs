//! Randomized invariants of the building blocks.

use proptest::prelude::*;
use schwarz_contact::config::{emit_config, parse_config, ExperimentConfig, Method, PenaltySection, SweepSection};
use schwarz_contact::fem::{assemble_mass, assemble_stiffness, MassKind, Material, Mesh1D, State};
use schwarz_contact::integrators::{apply_naive_stabilization, step, Family, Preset, StepContext};
use schwarz_contact::oracle::{build_oracle, total_relative_error, BenchmarkSpec};
use schwarz_contact::schwarz::Role;
use schwarz_contact::transfer::{build_operators, project_dirichlet, project_neumann, InterfaceMesh, TimeHistory};

fn sorted_coords(mut c: Vec<f64>) -> Option<Vec<f64>> {
    c.sort_by(f64::total_cmp);
    c.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    (c.len() >= 2).then_some(c)
}

/// Random interface mesh on [0, 1] with both end points included.
fn segment() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..0.999, 0..12).prop_filter_map("need distinct nodes", |mut v| {
        v.push(0.0);
        v.push(1.0);
        sorted_coords(v)
    })
}

proptest! {
    #[test]
    fn total_mass_is_rho_a_l(n in 1usize..300, len in 0.01f64..2.0, rho in 1.0f64..1e4) {
        let mat = Material::new(rho, 1e9, 1e-6).unwrap();
        let mesh = Mesh1D::uniform(0.0, len, n).unwrap();
        for kind in [MassKind::Lumped, MassKind::Consistent, MassKind::Averaged] {
            let m = assemble_mass(&mesh, &mat, kind);
            let want = rho * 1e-6 * len;
            prop_assert!(((m.sum_entries() - want) / want).abs() < 1e-12);
        }
        let lumped = assemble_mass(&mesh, &mat, MassKind::Lumped);
        prop_assert!(lumped.is_diagonal() && lumped.diag().iter().all(|d| *d > 0.0));
    }

    #[test]
    fn stiffness_annihilates_constants(n in 1usize..200, c in -10.0f64..10.0) {
        let mat = Material::new(1000.0, 1e9, 1e-6).unwrap();
        let k = assemble_stiffness(&Mesh1D::uniform(0.0, 0.25, n).unwrap(), &mat);
        let scale = k.diag().iter().cloned().fold(0.0, f64::max) * c.abs().max(1.0);
        prop_assert!(k.mul_vec(&vec![c; n + 1]).iter().all(|f| f.abs() <= 1e-12 * scale));
    }

    #[test]
    fn free_flight_is_exact(dt in 1e-9f64..1e-5, v in -200.0f64..200.0, steps in 1usize..50) {
        let mat = Material::new(1000.0, 1e9, 1e-6).unwrap();
        let mesh = Mesh1D::uniform(0.0, 0.25, 10).unwrap();
        let m = assemble_mass(&mesh, &mat, MassKind::Consistent);
        let k = assemble_stiffness(&mesh, &mat);
        let f = vec![0.0; 11];
        let ctx = StepContext::new(&m, &k, mesh.coords(), &f);
        for (preset, fam) in [
            (Preset::ClassicNewmark, Family::Implicit),
            (Preset::ClassicNewmark, Family::Explicit),
            (Preset::DissipativeNewmark, Family::Implicit),
            (Preset::TchamwaWielgosz, Family::Explicit),
            (Preset::ChungLee, Family::Explicit),
        ] {
            let spec = preset.spec(fam).unwrap();
            let mut s = State::rigid(0.0, mesh.coords(), v);
            for _ in 0..steps {
                s = step(&spec, &ctx, &s, dt).unwrap();
            }
            let shift = v * dt * steps as f64;
            for (x, x0) in s.x.iter().zip(mesh.coords()) {
                prop_assert!((x - x0 - shift).abs() <= 1e-12 * (1.0 + shift.abs()), "{preset:?} {fam:?}");
            }
            prop_assert!(s.v.iter().all(|w| (w - v).abs() <= 1e-9 * (1.0 + v.abs())));
        }
    }

    #[test]
    fn naive_stabilization_idempotent(vals in prop::collection::vec(-1e3f64..1e3, 6), dof in 0usize..6) {
        let s = State::new(0.0, vals.clone(), vals.clone(), vals.clone()).unwrap();
        let once = apply_naive_stabilization(s, &[dof]);
        let twice = apply_naive_stabilization(once.clone(), &[dof]);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.a[dof], 0.0);
        prop_assert_eq!(once.v[dof], vals[dof]);
    }

    #[test]
    fn transfer_partition_linear_force(src in segment(), dst in segment(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let op = build_operators(
            &InterfaceMesh::segment(src.clone()).unwrap(),
            &InterfaceMesh::segment(dst.clone()).unwrap(),
        ).unwrap();
        let ones = project_dirichlet(&op, &vec![1.0; src.len()]).unwrap();
        prop_assert!(ones.iter().all(|v| (v - 1.0).abs() <= 1e-12));
        let lin: Vec<f64> = src.iter().map(|s| a + b * s).collect();
        let got = project_dirichlet(&op, &lin).unwrap();
        for (g, s) in got.iter().zip(&dst) {
            prop_assert!((g - (a + b * s)).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
        }
        let f: Vec<f64> = src.iter().map(|s| a * s * s + b).collect();
        let moved = project_neumann(&op, &f).unwrap();
        let (before, after) = (f.iter().sum::<f64>(), moved.iter().sum::<f64>());
        prop_assert!((before - after).abs() <= 1e-12 * (1.0 + f.iter().map(|v| v.abs()).sum::<f64>()));
    }

    #[test]
    fn transfer_round_trip_does_not_grow(src in segment(), dst in segment(), k in 0.5f64..3.0) {
        let s = InterfaceMesh::segment(src.clone()).unwrap();
        let d = InterfaceMesh::segment(dst).unwrap();
        let there = build_operators(&s, &d).unwrap();
        let back = build_operators(&d, &s).unwrap();
        // L2 norm of the piecewise-linear function, the norm projections contract in
        let norm = |v: &[f64]| {
            src.windows(2)
                .zip(v.windows(2))
                .map(|(x, f)| (x[1] - x[0]) / 3.0 * (f[0] * f[0] + f[0] * f[1] + f[1] * f[1]))
                .sum::<f64>()
                .sqrt()
        };
        let mut f: Vec<f64> = src.iter().map(|x| (k * x).sin()).collect();
        let mut last = norm(&f);
        for _ in 0..3 {
            let g = project_dirichlet(&back, &project_dirichlet(&there, &f).unwrap()).unwrap();
            let n = norm(&g);
            prop_assert!(n <= last * (1.0 + 1e-12) + 1e-15);
            last = n;
            f = g;
        }
    }

    #[test]
    fn history_interpolation_hits_stops(vals in prop::collection::vec(-1.0f64..1.0, 2..8), frac in 0.0f64..1.0) {
        let n = vals.len();
        let stops: Vec<f64> = (0..n).map(|i| i as f64 * 1e-8).collect();
        let h = TimeHistory::new(stops.clone(), vals.iter().map(|v| vec![*v, 2.0 * v]).collect()).unwrap();
        for (t, v) in stops.iter().zip(&vals) {
            prop_assert_eq!(h.interpolate(*t).unwrap(), vec![*v, 2.0 * v]);
        }
        let t = frac * stops[n - 1];
        let got = h.interpolate(t).unwrap();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(got[0] >= lo - 1e-15 && got[0] <= hi + 1e-15);
        prop_assert!(h.interpolate(stops[n - 1] + 1e-9).is_err());
    }

    #[test]
    fn oracle_energy_closure(t in -2e-4f64..8e-4, v0 in 1.0f64..500.0, len in 0.05f64..1.0) {
        let spec = BenchmarkSpec { velocity: v0, length: len, ..BenchmarkSpec::default() };
        let o = build_oracle(&spec);
        let (k, p) = o.energies(t);
        let e0 = 0.5 * spec.density * spec.area * spec.length * v0 * v0;
        prop_assert!(((k + p) - e0).abs() <= 1e-14 * e0);
        prop_assert!(k >= 0.0 && p >= 0.0);
    }

    #[test]
    fn error_numerator_is_translation_invariant(xs in prop::collection::vec(-1.0f64..1.0, 3..20), c in -10.0f64..10.0) {
        let ana: Vec<f64> = xs.iter().map(|x| x + 2.0).collect();
        let num: Vec<f64> = xs.iter().map(|x| x + 2.1).collect();
        let e1 = total_relative_error(&num, &ana).unwrap();
        let shifted_num: Vec<f64> = num.iter().map(|x| x + c).collect();
        let shifted_ana: Vec<f64> = ana.iter().map(|x| x + c).collect();
        let n1: f64 = ana.iter().map(|a| a * a).sum::<f64>().sqrt();
        let n2: f64 = shifted_ana.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n2 > 0.0 {
            let e2 = total_relative_error(&shifted_num, &shifted_ana).unwrap();
            // numerators agree once the denominators are taken out
            prop_assert!((e1 * n1 - e2 * n2).abs() <= 1e-9 * (1.0 + e1 * n1));
        }
    }

    #[test]
    fn config_round_trip(
        n in 1usize..500,
        steps in 1usize..20,
        explicit in any::<bool>(),
        swap in any::<bool>(),
        method in 0usize..5,
        tau in 1.0f64..1e7,
        mass in 0usize..4,
        sweep in 0usize..4,
    ) {
        let mut c = ExperimentConfig::default();
        c.left.elements = n;
        c.right.elements = n + 1;
        c.left.time_step = 1e-7 / steps as f64;
        c.right.time_step = c.left.time_step;
        if explicit {
            c.right.family = Family::Explicit;
        }
        if swap {
            c.left.role = Some(Role::Neumann);
            c.right.role = Some(Role::Dirichlet);
        }
        c.run.method = [Method::Schwarz, Method::PenaltyExplicit, Method::PenaltyImplicit, Method::LagrangeExplicit, Method::LagrangeImplicit][method];
        c.penalty = Some(PenaltySection { tau });
        let kind = [None, Some(MassKind::Lumped), Some(MassKind::Consistent), Some(MassKind::Averaged)][mass];
        c.left.mass = kind;
        c.right.mass = kind;
        if c.run.method == Method::LagrangeExplicit {
            c.left.mass = Some(MassKind::Lumped);
            c.right.mass = Some(MassKind::Lumped);
        }
        c.sweep = match sweep {
            1 => Some(SweepSection { elements: Some(vec![n, 2 * n]), ..Default::default() }),
            2 => Some(SweepSection { time_step: Some(vec![1e-7, 5e-8]), ..Default::default() }),
            _ => None,
        };
        c.run.label = format!("case {n}");
        prop_assert!(c.validate().is_ok(), "{:?}", c.validate());
        let text = emit_config(&c);
        prop_assert_eq!(parse_config(&text).unwrap(), c);
    }
}

#[test]
fn oracle_seams_are_continuous() {
    let o = build_oracle(&BenchmarkSpec::default());
    for t in [o.t_imp, o.t_rel] {
        let eps = 1e-15;
        let (a, _) = o.contact_point(t - eps);
        let (b, _) = o.contact_point(t + eps);
        assert!((a - b).abs() < 1e-9, "jump at {t}: {a} vs {b}");
    }
}

#[test]
fn point_transfer_is_a_copy() {
    let op = build_operators(&InterfaceMesh::Point, &InterfaceMesh::Point).unwrap();
    for v in [0.0, -3.25, 1e-300, 7.0e12] {
        assert_eq!(project_dirichlet(&op, &[v]).unwrap(), vec![v]);
        assert_eq!(project_neumann(&op, &[v]).unwrap(), vec![v]);
    }
}
