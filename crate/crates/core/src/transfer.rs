//! Time interpolation between local grids and L2 projection between interface meshes.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Field values at increasing time stops.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHistory {
    stops: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TimeHistory {
    pub fn new(stops: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if stops.is_empty() || stops.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: stops.len(),
                got: values.len(),
            });
        }
        if stops.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("history stops must be strictly increasing".into()));
        }
        let width = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: bad.len(),
            });
        }
        Ok(TimeHistory { stops, values })
    }

    pub fn stops(&self) -> &[f64] {
        &self.stops
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn span(&self) -> f64 {
        self.stops[self.stops.len() - 1] - self.stops[0]
    }

    /// Linear interpolation between the bracketing stops.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>> {
        let first = self.stops[0];
        let last = self.stops[self.stops.len() - 1];
        let snap = 1e-12 * self.span().max(f64::MIN_POSITIVE);
        if t < first - snap || t > last + snap {
            return Err(Error::OutOfInterval {
                t,
                start: first,
                end: last,
            });
        }
        if let Some(i) = self.stops.iter().position(|s| (s - t).abs() <= snap) {
            return Ok(self.values[i].clone());
        }
        let j = self.stops.partition_point(|s| *s < t);
        let (t0, t1) = (self.stops[j - 1], self.stops[j]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.values[j - 1]
            .iter()
            .zip(&self.values[j])
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect())
    }
}

pub fn interpolate_history(history: &TimeHistory, t_query: f64) -> Result<Vec<f64>> {
    history.interpolate(t_query)
}

/// Contact-boundary discretization on a shared 1D parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum InterfaceMesh {
    Point,
    Segment(Vec<f64>),
}

impl InterfaceMesh {
    pub fn segment(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DegenerateInterface("segment mesh needs two nodes".into()));
        }
        if coords.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DegenerateInterface("zero-measure or unordered segment".into()));
        }
        Ok(InterfaceMesh::Segment(coords))
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            InterfaceMesh::Point => 1,
            InterfaceMesh::Segment(c) => c.len(),
        }
    }
}

/// Linear shape-function values at `s`, as (first node, weights of it and the next).
fn shape_at(coords: &[f64], s: f64) -> (usize, f64, f64) {
    let e = coords
        .partition_point(|c| *c <= s)
        .saturating_sub(1)
        .min(coords.len() - 2);
    let w = (s - coords[e]) / (coords[e + 1] - coords[e]);
    (e, 1.0 - w, w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    pub w: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub p_dirichlet: DMatrix<f64>,
    pub p_neumann: DMatrix<f64>,
    point: bool,
}

impl TransferOperator {
    pub fn point() -> Self {
        let one = DMatrix::from_element(1, 1, 1.0);
        TransferOperator {
            w: one.clone(),
            l: one.clone(),
            h: one.clone(),
            p_dirichlet: one.clone(),
            p_neumann: one,
            point: true,
        }
    }

    pub fn is_point(&self) -> bool {
        self.point
    }

    pub fn src_len(&self) -> usize {
        self.h.nrows()
    }

    pub fn dst_len(&self) -> usize {
        self.w.nrows()
    }
}

pub fn build_operators(src: &InterfaceMesh, dst: &InterfaceMesh) -> Result<TransferOperator> {
    let (sc, dc) = match (src, dst) {
        (InterfaceMesh::Point, InterfaceMesh::Point) => return Ok(TransferOperator::point()),
        (InterfaceMesh::Segment(s), InterfaceMesh::Segment(d)) => (s, d),
        _ => {
            return Err(Error::DegenerateInterface(
                "cannot pair a point interface with a segment".into(),
            ))
        }
    };
    let span_tol = 1e-12 * (dc[dc.len() - 1] - dc[0]);
    if (sc[0] - dc[0]).abs() > span_tol || (sc[sc.len() - 1] - dc[dc.len() - 1]).abs() > span_tol {
        return Err(Error::DegenerateInterface("source and destination spans differ".into()));
    }
    let mut breaks: Vec<f64> = sc.iter().chain(dc.iter()).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= span_tol);

    let (ns, nd) = (sc.len(), dc.len());
    let mut w = DMatrix::zeros(nd, nd);
    let mut l = DMatrix::zeros(nd, ns);
    let mut h = DMatrix::zeros(ns, ns);
    let g = 0.5 / 3f64.sqrt();
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = b - a;
        if len <= span_tol {
            continue;
        }
        for xi in [0.5 - g, 0.5 + g] {
            let s = a + xi * len;
            let wq = 0.5 * len;
            let (ed, d0, d1) = shape_at(dc, s);
            let (es, s0, s1) = shape_at(sc, s);
            let nd_v = [(ed, d0), (ed + 1, d1)];
            let ns_v = [(es, s0), (es + 1, s1)];
            for &(i, ni) in &nd_v {
                for &(j, nj) in &nd_v {
                    w[(i, j)] += wq * ni * nj;
                }
                for &(j, nj) in &ns_v {
                    l[(i, j)] += wq * ni * nj;
                }
            }
            for &(i, ni) in &ns_v {
                for &(j, nj) in &ns_v {
                    h[(i, j)] += wq * ni * nj;
                }
            }
        }
    }
    let w_lu = w.clone().lu();
    let p_dirichlet = w_lu
        .solve(&l)
        .ok_or_else(|| Error::DegenerateInterface("W is singular".into()))?;
    // L H⁻¹ = (H⁻¹ Lᵀ)ᵀ since H is symmetric
    let p_neumann = h
        .clone()
        .lu()
        .solve(&l.transpose())
        .ok_or_else(|| Error::DegenerateInterface("H is singular".into()))?
        .transpose();
    Ok(TransferOperator {
        w,
        l,
        h,
        p_dirichlet,
        p_neumann,
        point: false,
    })
}

fn apply(op: &TransferOperator, p: &DMatrix<f64>, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != op.src_len() {
        return Err(Error::DimensionMismatch {
            expected: op.src_len(),
            got: values.len(),
        });
    }
    if op.point {
        return Ok(values.to_vec());
    }
    Ok((0..p.nrows())
        .map(|i| (0..p.ncols()).map(|j| p[(i, j)] * values[j]).sum())
        .collect())
}

/// Kinematic field values from source nodes to destination nodes, `W⁻¹L`.
pub fn project_dirichlet(op: &TransferOperator, src_values: &[f64]) -> Result<Vec<f64>> {
    apply(op, &op.p_dirichlet, src_values)
}

/// Nodal contact forces from source to destination, `L H⁻¹`; total force is preserved.
pub fn project_neumann(op: &TransferOperator, src_values: &[f64]) -> Result<Vec<f64>> {
    apply(op, &op.p_neumann, src_values)
}
