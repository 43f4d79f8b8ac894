//! Per-stop records shared by every contact method.

/// Quantities sampled at one controller stop. Index 0 is the left rod, 1 the right rod.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRecord {
    pub t: f64,
    /// Contact treatment was active over the interval ending here.
    pub active: bool,
    /// Schwarz iterations spent on the interval ending here (0 for conventional methods).
    pub iterations: usize,
    /// Position of each rod's contact-end node.
    pub contact_x: [f64; 2],
    pub contact_v: [f64; 2],
    /// Contact force, compression positive.
    pub force: f64,
    pub kinetic: [f64; 2],
    pub potential: [f64; 2],
    /// Final convergence measures of the interval ending here (NaN outside contact).
    pub eps_abs: f64,
    pub eps_rel: f64,
}

impl StopRecord {
    pub fn total_energy(&self) -> f64 {
        self.kinetic[0] + self.kinetic[1] + self.potential[0] + self.potential[1]
    }

    /// Overlap of the two contact ends; positive means interpenetration.
    pub fn gap(&self) -> f64 {
        self.contact_x[0] - self.contact_x[1]
    }
}

/// Contact-end samples at a local sub-step, kept only on request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstepRecord {
    pub t: f64,
    pub rod: usize,
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSeries {
    pub records: Vec<StopRecord>,
    /// Start of the first interval treated as contact.
    pub t_imp: Option<f64>,
    /// Start of the first free interval after contact.
    pub t_rel: Option<f64>,
    pub substeps: Vec<SubstepRecord>,
}

impl RunSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Iteration counts over contact intervals only.
    pub fn contact_iterations(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.active && r.iterations > 0)
            .map(|r| r.iterations)
            .collect()
    }

    pub fn max_iterations(&self) -> usize {
        self.contact_iterations().into_iter().max().unwrap_or(0)
    }

    pub fn avg_iterations(&self) -> f64 {
        let its = self.contact_iterations();
        if its.is_empty() {
            0.0
        } else {
            its.iter().sum::<usize>() as f64 / its.len() as f64
        }
    }
}
