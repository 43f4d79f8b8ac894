//! Error statistics of a run against the closed-form solution.

use crate::error::Result;
use crate::oracle::{error_moments, total_relative_error, OracleSolution};
use crate::series::RunSeries;

/// Quantities of interest compared against the oracle, all for the left rod
/// except total energy, which covers both rods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qoi {
    Position,
    Velocity,
    Force,
    Potential,
    Kinetic,
    Total,
}

impl Qoi {
    pub const ALL: [Qoi; 6] = [
        Qoi::Position,
        Qoi::Velocity,
        Qoi::Force,
        Qoi::Potential,
        Qoi::Kinetic,
        Qoi::Total,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Qoi::Position => "position",
            Qoi::Velocity => "velocity",
            Qoi::Force => "force",
            Qoi::Potential => "potential_energy",
            Qoi::Kinetic => "kinetic_energy",
            Qoi::Total => "total_energy",
        }
    }
}

/// Numeric and analytic samples of one quantity.
pub fn qoi_series(series: &RunSeries, oracle: &OracleSolution, q: Qoi) -> (Vec<f64>, Vec<f64>) {
    series
        .records
        .iter()
        .map(|r| {
            let (x, v) = oracle.contact_point(r.t);
            let (k, p) = oracle.energies(r.t);
            match q {
                Qoi::Position => (r.contact_x[0], x),
                Qoi::Velocity => (r.contact_v[0], v),
                Qoi::Force => (r.force, oracle.contact_force(r.t)),
                Qoi::Potential => (r.potential[0], p),
                Qoi::Kinetic => (r.kinetic[0], k),
                Qoi::Total => (r.total_energy(), oracle.system_energy()),
            }
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiError {
    /// Total relative error in percent.
    pub total: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub errors: Vec<(Qoi, QoiError)>,
    /// Largest pointwise relative error of the two-rod total energy, percent.
    pub max_total_energy_error: f64,
    pub t_imp: Option<f64>,
    pub t_rel: Option<f64>,
    pub max_iterations: usize,
    pub avg_iterations: f64,
}

impl Metrics {
    pub fn compute(series: &RunSeries, oracle: &OracleSolution) -> Result<Metrics> {
        let mut errors = Vec::with_capacity(Qoi::ALL.len());
        for q in Qoi::ALL {
            let (num, ana) = qoi_series(series, oracle, q);
            let total = total_relative_error(&num, &ana)?;
            let (mean, std) = error_moments(&num, &ana)?;
            errors.push((q, QoiError { total, mean, std }));
        }
        let e0 = oracle.system_energy();
        let max_total_energy_error = series
            .records
            .iter()
            .map(|r| 100.0 * (r.total_energy() - e0).abs() / e0)
            .fold(0.0, f64::max);
        Ok(Metrics {
            errors,
            max_total_energy_error,
            t_imp: series.t_imp,
            t_rel: series.t_rel,
            max_iterations: series.max_iterations(),
            avg_iterations: series.avg_iterations(),
        })
    }

    pub fn get(&self, q: Qoi) -> QoiError {
        self.errors
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, e)| *e)
            .expect("every quantity is computed")
    }

    pub fn total(&self, q: Qoi) -> f64 {
        self.get(q).total
    }
}
