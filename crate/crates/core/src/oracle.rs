//! Closed-form two-rod impact solution and the error statistics built on it.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Benchmark parameters. Defaults are the standard two-rod impact values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSpec {
    pub density: f64,
    pub modulus: f64,
    pub area: f64,
    pub length: f64,
    pub gap: f64,
    pub velocity: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            density: 1000.0,
            modulus: 1e9,
            area: 1e-6,
            length: 0.25,
            gap: 0.02,
            velocity: 100.0,
            t_start: -2e-4,
            t_end: 8e-4,
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("density", self.density),
            ("modulus", self.modulus),
            ("area", self.area),
            ("length", self.length),
            ("gap", self.gap),
            ("velocity", self.velocity),
        ];
        for (name, v) in positive {
            // the gap may be zero (rods touching at the start)
            let ok = if name == "gap" { v >= 0.0 } else { v > 0.0 };
            if !ok || !v.is_finite() {
                return Err(Error::Validation(format!("benchmark.{name} must be positive, got {v}")));
            }
        }
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::Validation("benchmark.t_end must exceed benchmark.t_start".into()));
        }
        Ok(())
    }

    /// Energy of one rod, ½ρALv₀².
    pub fn rod_energy(&self) -> f64 {
        0.5 * self.density * self.area * self.length * self.velocity * self.velocity
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSolution {
    pub spec: BenchmarkSpec,
    pub t_imp: f64,
    pub t_rel: f64,
    pub t_m: f64,
    pub f_contact: f64,
}

pub fn build_oracle(spec: &BenchmarkSpec) -> OracleSolution {
    let transit = spec.length * (spec.density / spec.modulus).sqrt();
    let t_imp = spec.t_start + spec.gap / spec.velocity;
    OracleSolution {
        spec: *spec,
        t_imp,
        t_rel: t_imp + 2.0 * transit,
        t_m: t_imp + transit,
        f_contact: spec.velocity * (spec.modulus * spec.density).sqrt() * spec.area,
    }
}

impl OracleSolution {
    /// Position and velocity of the left rod's contact end.
    pub fn contact_point(&self, t: f64) -> (f64, f64) {
        let s = &self.spec;
        if t <= self.t_imp {
            (-s.gap + s.velocity * (t - s.t_start), s.velocity)
        } else if t <= self.t_rel {
            (0.0, 0.0)
        } else {
            (-s.velocity * (t - self.t_rel), -s.velocity)
        }
    }

    /// Kinetic and potential energy of one rod.
    pub fn energies(&self, t: f64) -> (f64, f64) {
        let s = &self.spec;
        let e0 = s.rod_energy();
        // rate at which kinetic energy converts while the wave travels
        let rate = 0.5 * (s.density * s.modulus).sqrt() * s.area * s.velocity * s.velocity;
        if t <= self.t_imp {
            (e0, 0.0)
        } else if t <= self.t_m {
            let k = e0 - rate * (t - self.t_imp);
            (k, e0 - k)
        } else if t <= self.t_rel {
            let k = rate * (t - self.t_m);
            (k, e0 - k)
        } else {
            (e0, 0.0)
        }
    }

    /// Contact force, compression positive.
    pub fn contact_force(&self, t: f64) -> f64 {
        if t >= self.t_imp && t <= self.t_rel {
            self.f_contact
        } else {
            0.0
        }
    }

    /// Both rods together.
    pub fn system_energy(&self) -> f64 {
        2.0 * self.spec.rod_energy()
    }
}

/// `100 ‖num − ana‖₂ / ‖ana‖₂`.
pub fn total_relative_error(numeric: &[f64], analytic: &[f64]) -> Result<f64> {
    if numeric.len() != analytic.len() {
        return Err(Error::DimensionMismatch {
            expected: analytic.len(),
            got: numeric.len(),
        });
    }
    let den: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::ZeroReferenceNorm);
    }
    let num: f64 = numeric
        .iter()
        .zip(analytic)
        .map(|(n, a)| (n - a) * (n - a))
        .sum::<f64>()
        .sqrt();
    Ok(100.0 * num / den)
}

/// Signed mean and population standard deviation of `num − ana`.
pub fn error_moments(numeric: &[f64], analytic: &[f64]) -> Result<(f64, f64)> {
    if numeric.len() != analytic.len() {
        return Err(Error::DimensionMismatch {
            expected: analytic.len(),
            got: numeric.len(),
        });
    }
    if numeric.is_empty() {
        return Ok((0.0, 0.0));
    }
    let n = numeric.len() as f64;
    let diffs: Vec<f64> = numeric.iter().zip(analytic).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Least-squares slope of `log(error)` against `log(1/N)`.
pub fn convergence_rate(pairs: &[(usize, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 (N, error) pairs, got {}",
            pairs.len()
        )));
    }
    for &(n, e) in pairs {
        if !(e > 0.0) {
            return Err(Error::NonPositiveError(e));
        }
        if n == 0 {
            return Err(Error::InvalidInput("element count must be positive".into()));
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|(n, _)| -(*n as f64).ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn benchmark_events() {
        let o = build_oracle(&BenchmarkSpec::default());
        assert!(o.t_imp.abs() < 1e-18);
        assert_relative_eq!(o.t_rel, 5e-4, max_relative = 1e-12);
        assert_relative_eq!(o.t_m, 2.5e-4, max_relative = 1e-12);
        assert_relative_eq!(o.f_contact, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn small_rod_events() {
        let spec = BenchmarkSpec {
            length: 1e-3,
            gap: 1e-4,
            t_start: -1e-6,
            ..BenchmarkSpec::default()
        };
        let o = build_oracle(&spec);
        assert!(o.t_imp.abs() < 1e-18);
        assert_relative_eq!(o.t_rel, 2e-6, max_relative = 1e-12);
        let touching = BenchmarkSpec {
            gap: 0.0,
            t_start: 0.0,
            ..BenchmarkSpec::default()
        };
        assert_eq!(build_oracle(&touching).t_imp, 0.0);
    }

    #[test]
    fn contact_point_branches() {
        let o = build_oracle(&BenchmarkSpec::default());
        assert_eq!(o.contact_point(-2e-4), (-0.02, 100.0));
        assert_eq!(o.contact_point(1e-4), (0.0, 0.0));
        let (x, v) = o.contact_point(6e-4);
        assert_relative_eq!(x, -0.01, max_relative = 1e-9);
        assert_eq!(v, -100.0);
    }

    #[test]
    fn energy_branches() {
        let o = build_oracle(&BenchmarkSpec::default());
        assert_eq!(o.energies(-1e-4), (1.25, 0.0));
        let (k, p) = o.energies(o.t_m);
        assert!(k.abs() < 1e-12);
        assert_relative_eq!(p, 1.25, max_relative = 1e-12);
        assert_eq!(o.energies(7e-4), (1.25, 0.0));
    }

    #[test]
    fn error_metric_examples() {
        let ana = [1.0, -2.0, 3.0];
        assert_eq!(total_relative_error(&ana, &ana).unwrap(), 0.0);
        let scaled: Vec<f64> = ana.iter().map(|a| 1.01 * a).collect();
        assert_relative_eq!(total_relative_error(&scaled, &ana).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(total_relative_error(&[1.0], &[0.0]), Err(Error::ZeroReferenceNorm));
        assert_eq!(error_moments(&ana, &ana).unwrap(), (0.0, 0.0));
        let shifted: Vec<f64> = ana.iter().map(|a| a + 0.5).collect();
        let (mu, sigma) = error_moments(&shifted, &ana).unwrap();
        assert_relative_eq!(mu, 0.5, max_relative = 1e-14);
        assert!(sigma < 1e-15);
    }

    #[test]
    fn rate_examples() {
        let pairs: Vec<(usize, f64)> = [50, 100, 200, 400].iter().map(|&n| (n, 3.0 / n as f64)).collect();
        assert_relative_eq!(convergence_rate(&pairs).unwrap(), 1.0, max_relative = 1e-12);
        let pairs: Vec<(usize, f64)> = [50, 100, 200, 400]
            .iter()
            .map(|&n| (n, 2.0 * (n as f64).powf(-0.82)))
            .collect();
        assert!((convergence_rate(&pairs).unwrap() - 0.82).abs() < 1e-10);
        assert!(matches!(
            convergence_rate(&[(1, 1.0), (2, 0.0), (3, 1.0)]),
            Err(Error::NonPositiveError(_))
        ));
        assert!(convergence_rate(&[(1, 1.0), (2, 0.5)]).is_err());
    }
}
