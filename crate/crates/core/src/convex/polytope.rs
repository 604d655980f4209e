use nalgebra::{DMatrix, DVector};

use super::{check_dir, ConvexDomain, DomainError, Membership, Side};
use crate::proj::{AffineChart, ProjHyperplane};

/// Bounded intersection of open half-spaces in an affine chart.
///
/// Each face is stored affinely as `w·a < β`.
#[derive(Clone, Debug)]
pub struct Polytope {
    chart: AffineChart,
    normals: Vec<DVector<f64>>,
    offsets: Vec<f64>,
    interior: DVector<f64>,
    lo: DVector<f64>,
    hi: DVector<f64>,
    tol: f64,
}

/// Solves the square system `rows · a = rhs`, or `None` when singular.
fn solve(rows: &[&DVector<f64>], rhs: &[f64]) -> Option<DVector<f64>> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.lu();
    if lu.determinant().abs() < 1e-12 {
        return None;
    }
    lu.solve(&DVector::from_column_slice(rhs))
}

fn combinations(total: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > total {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + total - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl Polytope {
    /// Polytope `{a : w_i·a < β_i}` in the standard chart.
    pub fn from_inequalities(faces: &[(Vec<f64>, f64)]) -> Result<Self, DomainError> {
        let n = faces.first().map(|f| f.0.len()).ok_or(DomainError::Unbounded)?;
        let normals: Vec<DVector<f64>> = faces.iter().map(|f| DVector::from_column_slice(&f.0)).collect();
        let offsets: Vec<f64> = faces.iter().map(|f| f.1).collect();
        Self::build(AffineChart::standard(n), normals, offsets)
    }

    /// Polytope from projective half-spaces: `side` selects where the covector,
    /// evaluated on chart coordinates `(a, 1)`, is negative or positive.
    pub fn from_halfspaces(chart: AffineChart, halfspaces: &[(ProjHyperplane, Side)]) -> Result<Self, DomainError> {
        let n = chart.dim();
        let mut normals = Vec::with_capacity(halfspaces.len());
        let mut offsets = Vec::with_capacity(halfspaces.len());
        for (h, side) in halfspaces {
            if h.dim() != n {
                return Err(DomainError::DimensionMismatch {
                    expected: n,
                    found: h.dim(),
                });
            }
            // inside means side.sign()·(c·(a,1)) > 0, i.e. −s c_a · a < s c_n
            let c = chart.covector_to_chart(h.covector()) * side.sign();
            normals.push(-c.rows(0, n).into_owned());
            offsets.push(c[n]);
        }
        Self::build(chart, normals, offsets)
    }

    /// The cube `[−r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Self {
        let mut faces = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut w = vec![0.0; n];
                w[i] = s;
                faces.push((w, r));
            }
        }
        Self::from_inequalities(&faces).expect("cube is bounded")
    }

    fn build(chart: AffineChart, normals: Vec<DVector<f64>>, offsets: Vec<f64>) -> Result<Self, DomainError> {
        let n = chart.dim();
        // normalize faces so the membership margin is a Euclidean distance
        let mut nn = Vec::with_capacity(normals.len());
        let mut oo = Vec::with_capacity(offsets.len());
        for (w, b) in normals.iter().zip(&offsets) {
            if w.len() != n {
                return Err(DomainError::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                });
            }
            let norm = w.norm();
            if norm == 0.0 {
                return Err(DomainError::ZeroVector);
            }
            nn.push(w / norm);
            oo.push(b / norm);
        }
        if Self::has_recession_direction(&nn) {
            return Err(DomainError::Unbounded);
        }
        let vertices = Self::enumerate_vertices(&nn, &oo);
        if vertices.len() < n + 1 {
            return Err(DomainError::EmptyInterior);
        }
        let mut interior = DVector::zeros(n);
        let mut lo = vertices[0].clone();
        let mut hi = vertices[0].clone();
        for v in &vertices {
            interior += v;
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        interior /= vertices.len() as f64;
        let margin = nn
            .iter()
            .zip(&oo)
            .map(|(w, b)| b - w.dot(&interior))
            .fold(f64::INFINITY, f64::min);
        if !(margin > 1e-9) {
            return Err(DomainError::EmptyInterior);
        }
        Ok(Self {
            chart,
            normals: nn,
            offsets: oo,
            interior,
            lo,
            hi,
            tol: 1e-9,
        })
    }

    /// True when some nonzero `v` satisfies `w_i·v ≤ 0` for every face.
    fn has_recession_direction(normals: &[DVector<f64>]) -> bool {
        let n = normals[0].len();
        if normals.len() < n + 1 {
            return true;
        }
        if n == 1 {
            let pos = normals.iter().any(|w| w[0] > 0.0);
            let neg = normals.iter().any(|w| w[0] < 0.0);
            return !(pos && neg);
        }
        // extreme rays of the recession cone are cut out by n−1 tight faces
        for combo in combinations(normals.len(), n - 1) {
            let m = DMatrix::from_fn(n - 1, n, |i, j| normals[combo[i]][j]);
            // generalized cross product spans the kernel
            let dir = DVector::from_fn(n, |j, _| {
                let minor = m.clone().remove_column(j).determinant();
                if j % 2 == 0 {
                    minor
                } else {
                    -minor
                }
            });
            if dir.norm() < 1e-12 {
                continue;
            }
            for sign in [1.0, -1.0] {
                let d = &dir * sign;
                if normals.iter().all(|w| w.dot(&d) <= 1e-12) {
                    return true;
                }
            }
        }
        false
    }

    fn enumerate_vertices(normals: &[DVector<f64>], offsets: &[f64]) -> Vec<DVector<f64>> {
        let n = normals[0].len();
        let mut out: Vec<DVector<f64>> = Vec::new();
        for combo in combinations(normals.len(), n) {
            let rows: Vec<&DVector<f64>> = combo.iter().map(|i| &normals[*i]).collect();
            let rhs: Vec<f64> = combo.iter().map(|i| offsets[*i]).collect();
            let Some(v) = solve(&rows, &rhs) else { continue };
            let feasible = normals.iter().zip(offsets).all(|(w, b)| w.dot(&v) <= b + 1e-9);
            if feasible && !out.iter().any(|u| (u - &v).norm() < 1e-9) {
                out.push(v);
            }
        }
        out
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Faces as `(unit normal, offset)` pairs.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        Self::enumerate_vertices(&self.normals, &self.offsets)
    }

    pub fn faces(&self) -> impl Iterator<Item = (&DVector<f64>, f64)> {
        self.normals.iter().zip(self.offsets.iter().copied())
    }

    /// Smallest signed distance to a face; positive inside.
    pub fn margin(&self, a: &DVector<f64>) -> f64 {
        self.faces().map(|(w, b)| b - w.dot(a)).fold(f64::INFINITY, f64::min)
    }
}

impl ConvexDomain for Polytope {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn chart(&self) -> &AffineChart {
        &self.chart
    }

    fn membership(&self, a: &DVector<f64>) -> Membership {
        let m = self.margin(a);
        if m > self.tol {
            Membership::Inside
        } else if m >= -self.tol {
            Membership::OnBoundary
        } else {
            Membership::Outside
        }
    }

    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError> {
        check_dir(v, self.dim())?;
        if self.margin(a) <= 0.0 {
            return Err(DomainError::NotInterior);
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (w, b) in self.faces() {
            let rate = w.dot(v);
            let gap = b - w.dot(a);
            if rate > 0.0 {
                hi = hi.min(gap / rate);
            } else if rate < 0.0 {
                lo = lo.max(gap / rate);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(DomainError::Unbounded);
        }
        Ok((lo, hi))
    }

    fn interior_point(&self) -> DVector<f64> {
        self.interior.clone()
    }

    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        (self.lo.clone(), self.hi.clone())
    }

    fn tol(&self) -> f64 {
        self.tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn square_diagonal_chord() {
        let sq = Polytope::cube(2, 1.0);
        let d = v(&[1.0, 1.0]) / 2f64.sqrt();
        let (lo, hi) = sq.chord_params(&v(&[0.0, 0.0]), &d).unwrap();
        let p = &d * lo;
        let q = &d * hi;
        assert!((p - v(&[-1.0, -1.0])).amax() < 1e-15);
        assert!((q - v(&[1.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn unbounded_and_empty_are_rejected() {
        let half = Polytope::from_inequalities(&[(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0), (vec![0.0, -1.0], 1.0)]);
        assert_eq!(half.unwrap_err(), DomainError::Unbounded);
        let empty = Polytope::from_inequalities(&[
            (vec![1.0, 0.0], -1.0),
            (vec![-1.0, 0.0], -1.0),
            (vec![0.0, 1.0], 1.0),
            (vec![0.0, -1.0], 1.0),
        ]);
        assert_eq!(empty.unwrap_err(), DomainError::EmptyInterior);
    }

    #[test]
    fn halfspaces_in_projective_form() {
        // |x| < 1, |y| < 1 as sides of canonical covectors on (x, y, 1)
        let hs: Vec<(ProjHyperplane, Side)> = [
            ([1.0, 0.0, -1.0], Side::Negative),
            ([1.0, 0.0, 1.0], Side::Positive),
            ([0.0, 1.0, -1.0], Side::Negative),
            ([0.0, 1.0, 1.0], Side::Positive),
        ]
        .iter()
        .map(|(c, s)| (ProjHyperplane::from_slice(c).unwrap(), *s))
        .collect();
        let sq = Polytope::from_halfspaces(AffineChart::standard(2), &hs).unwrap();
        assert_eq!(sq.membership(&v(&[0.5, -0.5])), Membership::Inside);
        assert_eq!(sq.membership(&v(&[1.0, 0.2])), Membership::OnBoundary);
        assert_eq!(sq.membership(&v(&[1.5, 0.0])), Membership::Outside);
        assert!(sq.interior_point().norm() < 1e-12);
    }

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 3).len(), 10);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}
