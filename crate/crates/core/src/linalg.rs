//! Symmetric tridiagonal storage for 1D linear-element operators.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix. `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        SymTridiag {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn from_parts(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                got: off.len(),
            });
        }
        Ok(SymTridiag { diag, off })
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        let n = values.len();
        SymTridiag {
            diag: values,
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Scatter a 2x2 symmetric element block `[[a, b], [b, c]]` onto rows `e`, `e + 1`.
    pub fn add_element(&mut self, e: usize, a: f64, b: f64, c: f64) {
        self.diag[e] += a;
        self.diag[e + 1] += c;
        self.off[e] += b;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.off[i]
        } else if j + 1 == i {
            self.off[j]
        } else {
            0.0
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.off.iter().all(|&o| o == 0.0)
    }

    /// Sum of every entry (total mass for a mass matrix).
    pub fn sum_entries(&self) -> f64 {
        self.diag.iter().sum::<f64>() + 2.0 * self.off.iter().sum::<f64>()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Single row of the product, `(A x)_i`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = self.diag[i] * x[i];
        if i > 0 {
            s += self.off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            s += self.off[i] * x[i + 1];
        }
        s
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * x[i];
        }
        for i in 0..n.saturating_sub(1) {
            s += 2.0 * self.off[i] * x[i] * x[i + 1];
        }
        s
    }

    /// `self * a + other * b`.
    pub fn combine(&self, a: f64, other: &SymTridiag, b: f64) -> SymTridiag {
        debug_assert_eq!(self.dim(), other.dim());
        SymTridiag {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn add_to_diag(&mut self, i: usize, value: f64) {
        self.diag[i] += value;
    }

    /// Thomas elimination. Fine without pivoting for the SPD systems assembled here.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        if self.is_diagonal() {
            return rhs
                .iter()
                .zip(&self.diag)
                .enumerate()
                .map(|(row, (r, d))| {
                    if *d == 0.0 || !d.is_finite() {
                        Err(Error::SingularMatrix { row, pivot: *d })
                    } else {
                        Ok(r / d)
                    }
                })
                .collect();
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        check_pivot(0, piv)?;
        if n > 1 {
            c[0] = self.off[0] / piv;
        }
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.off[i - 1] * c[i - 1];
            check_pivot(i, piv)?;
            if i + 1 < n {
                c[i] = self.off[i] / piv;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Solve with some unknowns fixed: rows and columns of fixed dofs are eliminated,
    /// their values moved to the right-hand side, and returned unchanged in the solution.
    pub fn solve_with_fixed(&self, rhs: &[f64], fixed: &[(usize, f64)]) -> Result<Vec<f64>> {
        if fixed.is_empty() {
            return self.solve(rhs);
        }
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let mut a = self.clone();
        let mut b = rhs.to_vec();
        for &(i, value) in fixed {
            if i >= n {
                return Err(Error::InvalidInput(format!("fixed dof {i} out of range {n}")));
            }
            if i > 0 {
                b[i - 1] -= a.off[i - 1] * value;
                a.off[i - 1] = 0.0;
            }
            if i + 1 < n {
                b[i + 1] -= a.off[i] * value;
                a.off[i] = 0.0;
            }
        }
        for &(i, value) in fixed {
            a.diag[i] = 1.0;
            b[i] = value;
        }
        a.solve(&b)
    }
}

fn check_pivot(row: usize, pivot: f64) -> Result<()> {
    if pivot == 0.0 || !pivot.is_finite() {
        Err(Error::SingularMatrix { row, pivot })
    } else {
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
