//! Projective-sphere linear algebra.
//!
//! Points and hyperplanes are stored through a canonical representative in
//! `R^{n+1}`: unit Euclidean norm with the first non-negligible coordinate
//! positive. Maps are determinant-one matrices acting on representatives.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default numerical tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Geometric predicates (incidence, on-boundary bands, collinearity).
    pub predicate: f64,
    /// Linear-algebra residuals.
    pub linalg: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            predicate: 1e-9,
            linalg: 1e-12,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjError {
    #[error("zero vector has no projective class")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("determinant {det} is not 1")]
    NotUnimodular { det: f64 },
    #[error("points are not collinear (residual {residual:e})")]
    NonCollinear { residual: f64 },
    #[error("degenerate cross-ratio configuration")]
    DegenerateConfiguration,
    #[error("point lies on the hyperplane at infinity of the chart")]
    AtInfinity,
    #[error("quadratic form is singular")]
    SingularForm,
    #[error("hyperplane is tangent to the quadric")]
    TangentWall,
}

/// Relative threshold below which a coordinate counts as zero when picking the
/// sign of a canonical representative.
const SIGN_EPS: f64 = 1e-12;

fn canonicalize(v: &DVector<f64>) -> Result<DVector<f64>, ProjError> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(ProjError::ZeroVector);
    }
    let mut u = v / norm;
    if let Some(first) = u.iter().find(|c| c.abs() > SIGN_EPS) {
        if *first < 0.0 {
            u.neg_mut();
        }
    }
    Ok(u)
}

fn rep_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // Up to sign: canonical representatives of nearly equal classes can land on
    // opposite sides of the sign rule when the leading coordinate is ~0.
    (a - b).norm().min((a + b).norm())
}

/// A point of the projective space, stored as a canonical unit representative.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint {
    rep: DVector<f64>,
}

impl ProjPoint {
    pub fn new(v: DVector<f64>) -> Result<Self, ProjError> {
        Ok(Self { rep: canonicalize(&v)? })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, ProjError> {
        Self::new(DVector::from_column_slice(v))
    }

    /// Point with affine coordinates `a` in the standard chart `x_{n+1} = 1`.
    pub fn from_affine(a: &[f64]) -> Self {
        let mut v = DVector::from_element(a.len() + 1, 1.0);
        v.rows_mut(0, a.len()).copy_from_slice(a);
        Self::new(v).expect("affine lift is never zero")
    }

    pub fn rep(&self) -> &DVector<f64> {
        &self.rep
    }

    /// Projective dimension `n` (representatives live in `R^{n+1}`).
    pub fn dim(&self) -> usize {
        self.rep.len() - 1
    }

    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        self.rep.len() == other.rep.len() && rep_distance(&self.rep, &other.rep) <= tol
    }

    /// Distance between canonical representatives, sign-insensitive.
    pub fn rep_distance(&self, other: &ProjPoint) -> f64 {
        rep_distance(&self.rep, &other.rep)
    }
}

/// A projective hyperplane, stored through its canonical covector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjHyperplane {
    covector: DVector<f64>,
}

impl ProjHyperplane {
    pub fn new(covector: DVector<f64>) -> Result<Self, ProjError> {
        Ok(Self {
            covector: canonicalize(&covector)?,
        })
    }

    pub fn from_slice(c: &[f64]) -> Result<Self, ProjError> {
        Self::new(DVector::from_column_slice(c))
    }

    pub fn covector(&self) -> &DVector<f64> {
        &self.covector
    }

    pub fn dim(&self) -> usize {
        self.covector.len() - 1
    }

    /// Value of the covector on the canonical representative of `x`.
    pub fn pairing(&self, x: &ProjPoint) -> f64 {
        self.covector.dot(x.rep())
    }

    pub fn incident(&self, x: &ProjPoint, tol: f64) -> bool {
        self.pairing(x).abs() < tol
    }

    pub fn approx_eq(&self, other: &ProjHyperplane, tol: f64) -> bool {
        self.covector.len() == other.covector.len() && rep_distance(&self.covector, &other.covector) <= tol
    }

    /// Hyperplane through the given points (exactly `n` of them in `P^n`).
    pub fn through(points: &[ProjPoint]) -> Result<Self, ProjError> {
        let dim = points.first().map(|p| p.rep.len()).ok_or(ProjError::ZeroVector)?;
        let m = DMatrix::from_fn(points.len(), dim, |i, j| points[i].rep[j]);
        let svd = m.svd(false, true);
        let v_t = svd.v_t.ok_or(ProjError::DegenerateConfiguration)?;
        // smallest singular direction of the stacked representatives
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
        let row = if points.len() < dim {
            v_t.row(v_t.nrows() - 1).transpose()
        } else {
            v_t.row(idx).transpose()
        };
        Self::new(row)
    }
}

/// Determinant-one linear map of `R^{n+1}` acting projectively.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjMap {
    mat: DMatrix<f64>,
}

impl ProjMap {
    /// Wraps a matrix whose determinant is 1 within `1e-9`.
    pub fn new(mat: DMatrix<f64>) -> Result<Self, ProjError> {
        if !mat.is_square() {
            return Err(ProjError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let det = mat.determinant();
        if (det - 1.0).abs() > 1e-9 * (1.0 + mat.norm().powi(mat.nrows() as i32)).min(1e6) {
            return Err(ProjError::NotUnimodular { det });
        }
        Ok(Self { mat })
    }

    /// Rescales an invertible matrix to determinant one. Matrices of even size
    /// with negative determinant have no such rescaling.
    pub fn normalized(mat: DMatrix<f64>) -> Result<Self, ProjError> {
        if !mat.is_square() {
            return Err(ProjError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let size = mat.nrows() as f64;
        let det = mat.determinant();
        if det == 0.0 || !det.is_finite() || (det < 0.0 && mat.nrows().is_multiple_of(2)) {
            return Err(ProjError::NotUnimodular { det });
        }
        let scale = det.signum() * det.abs().powf(1.0 / size);
        Ok(Self { mat: mat / scale })
    }

    /// Trusted constructor for matrices that are unimodular by construction.
    pub(crate) fn from_unimodular(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n + 1, n + 1),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows() - 1
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &ProjMap) -> ProjMap {
        ProjMap {
            mat: &self.mat * &other.mat,
        }
    }

    pub fn inverse(&self) -> ProjMap {
        let inv = self
            .mat
            .clone()
            .try_inverse()
            .expect("determinant-one matrices are invertible");
        ProjMap { mat: inv }
    }

    pub fn apply(&self, x: &ProjPoint) -> ProjPoint {
        ProjPoint::new(&self.mat * x.rep()).expect("invertible map sends nonzero to nonzero")
    }

    /// Image of a hyperplane: covector transforms by the inverse transpose.
    pub fn apply_hyperplane(&self, h: &ProjHyperplane) -> ProjHyperplane {
        let inv_t = self.inverse().mat.transpose();
        ProjHyperplane::new(inv_t * h.covector()).expect("invertible map")
    }

    /// Pushes a quadratic form forward: `g^{-T} Q g^{-1}`.
    pub fn push_form(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let inv = self.inverse().mat;
        inv.transpose() * q * inv
    }

    pub fn max_abs_diff(&self, other: &ProjMap) -> f64 {
        (&self.mat - &other.mat).amax()
    }

    pub fn power(&self, k: i32) -> ProjMap {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = ProjMap::identity(self.dim());
        for _ in 0..k.unsigned_abs() {
            out = out.compose(&base);
        }
        out
    }
}

pub fn apply_map(g: &ProjMap, x: &ProjPoint) -> ProjPoint {
    g.apply(x)
}

/// Affine chart: the complement of a hyperplane, with affine coordinates given
/// by a frame of covectors whose last row is the hyperplane at infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineChart {
    frame: DMatrix<f64>,
    frame_inv: DMatrix<f64>,
}

impl AffineChart {
    /// The chart `x_{n+1} = 1`.
    pub fn standard(n: usize) -> Self {
        Self {
            frame: DMatrix::identity(n + 1, n + 1),
            frame_inv: DMatrix::identity(n + 1, n + 1),
        }
    }

    /// Chart from an invertible frame whose last row is the covector at infinity.
    pub fn from_frame(frame: DMatrix<f64>) -> Result<Self, ProjError> {
        if !frame.is_square() {
            return Err(ProjError::NotSquare {
                rows: frame.nrows(),
                cols: frame.ncols(),
            });
        }
        let frame_inv = frame.clone().try_inverse().ok_or(ProjError::SingularForm)?;
        Ok(Self { frame, frame_inv })
    }

    /// Chart whose hyperplane at infinity is `h`, with an orthonormal frame on
    /// the complement.
    pub fn with_infinity(h: &DVector<f64>) -> Result<Self, ProjError> {
        let dim = h.len();
        let hn = h.normalize();
        let mut rows: Vec<DVector<f64>> = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut e = DVector::zeros(dim);
            e[i] = 1.0;
            let mut w = &e - &hn * hn.dot(&e);
            for r in &rows {
                w -= r * r.dot(&w);
            }
            if w.norm() > 1e-6 {
                rows.push(w.normalize());
            }
            if rows.len() == dim - 1 {
                break;
            }
        }
        let mut frame = DMatrix::zeros(dim, dim);
        for (i, r) in rows.iter().enumerate() {
            frame.set_row(i, &r.transpose());
        }
        frame.set_row(dim - 1, &h.transpose());
        Self::from_frame(frame)
    }

    /// Chart in which the ellipsoid of a signature `(n,1)` form `q` is the
    /// unit ball centred at the interior point `x`.
    pub fn centered(q: &DMatrix<f64>, x: &DVector<f64>) -> Result<Self, ProjError> {
        let dim = q.nrows();
        let eig = q.clone().symmetric_eigen();
        let neg = (0..dim).filter(|i| eig.eigenvalues[*i] < 0.0).collect::<Vec<_>>();
        if neg.len() != 1 || eig.eigenvalues.iter().any(|e| e.abs() < 1e-12) {
            return Err(ProjError::SingularForm);
        }
        // orthonormalizing frame, timelike direction last
        let order: Vec<usize> = (0..dim).filter(|i| *i != neg[0]).chain(neg.iter().copied()).collect();
        let mut f0 = DMatrix::zeros(dim, dim);
        for (row, &i) in order.iter().enumerate() {
            let scale = eig.eigenvalues[i].abs().sqrt();
            f0.set_row(row, &(eig.eigenvectors.column(i).transpose() * scale));
        }
        let mut y = &f0 * x;
        let n = dim - 1;
        let norm2 = y[n] * y[n] - y.rows(0, n).norm_squared();
        if !(norm2 > 0.0) {
            return Err(ProjError::DegenerateConfiguration);
        }
        y /= norm2.sqrt() * y[n].signum();
        // Lorentz boost taking y to the last basis vector
        let u = y.rows(0, n).into_owned();
        let gamma = y[n];
        let mut boost = DMatrix::identity(dim, dim);
        let un = u.norm();
        if un > 0.0 {
            let uh = &u / un;
            let block = DMatrix::identity(n, n) + &uh * uh.transpose() * (gamma - 1.0);
            boost.view_mut((0, 0), (n, n)).copy_from(&block);
        }
        boost.view_mut((0, n), (n, 1)).copy_from(&(-&u));
        boost.view_mut((n, 0), (1, n)).copy_from(&(-u.transpose()));
        boost[(n, n)] = gamma;
        Self::from_frame(boost * f0)
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows() - 1
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn frame_inv(&self) -> &DMatrix<f64> {
        &self.frame_inv
    }

    pub fn infinity(&self) -> ProjHyperplane {
        ProjHyperplane::new(self.frame.row(self.dim()).transpose()).expect("frame row is nonzero")
    }

    /// Homogeneous chart coordinates `F · v`.
    pub fn to_chart_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.frame * v
    }

    pub fn from_chart_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.frame_inv * v
    }

    /// A linear map expressed in chart coordinates: `F M F^{-1}`.
    pub fn map_to_chart(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.frame * m * &self.frame_inv
    }

    /// A quadratic form expressed in chart coordinates: `F^{-T} Q F^{-1}`.
    pub fn form_to_chart(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        self.frame_inv.transpose() * q * &self.frame_inv
    }

    /// A covector expressed in chart coordinates: `F^{-T} ν`.
    pub fn covector_to_chart(&self, c: &DVector<f64>) -> DVector<f64> {
        self.frame_inv.transpose() * c
    }

    /// Inverse of [`Self::covector_to_chart`].
    pub fn covector_from_chart(&self, c: &DVector<f64>) -> DVector<f64> {
        self.frame.transpose() * c
    }

    pub fn project(&self, x: &ProjPoint, tol: f64) -> Result<DVector<f64>, ProjError> {
        let y = self.to_chart_coords(x.rep());
        let n = self.dim();
        if y[n].abs() < tol * y.norm() {
            return Err(ProjError::AtInfinity);
        }
        Ok(y.rows(0, n) / y[n])
    }

    pub fn embed(&self, a: &DVector<f64>) -> ProjPoint {
        ProjPoint::new(self.from_chart_coords(&lift_affine(a))).expect("affine lift is never zero")
    }
}

/// `(a, 1)`.
pub fn lift_affine(a: &DVector<f64>) -> DVector<f64> {
    let n = a.len();
    let mut v = DVector::from_element(n + 1, 1.0);
    v.rows_mut(0, n).copy_from(a);
    v
}

pub fn chart_project(chart: &AffineChart, x: &ProjPoint) -> Result<DVector<f64>, ProjError> {
    chart.project(x, Tolerances::default().predicate)
}

pub fn chart_embed(chart: &AffineChart, a: &DVector<f64>) -> ProjPoint {
    chart.embed(a)
}

/// Cross-ratio of four collinear scalars on an affine line,
/// `|p−y|·|q−x| / (|p−x|·|q−y|)`.
pub fn cross_ratio_scalars(p: f64, x: f64, y: f64, q: f64) -> f64 {
    ((p - y).abs() * (q - x).abs()) / ((p - x).abs() * (q - y).abs())
}

/// Ratio of the third to the first singular value of the stacked
/// representatives; zero for collinear points.
pub fn collinearity_residual(points: &[&ProjPoint]) -> f64 {
    let dim = points[0].rep().len();
    let m = DMatrix::from_fn(points.len(), dim, |i, j| points[i].rep()[j]);
    let sv = m.singular_values();
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if s.len() < 3 {
        0.0
    } else {
        s[2] / s[0]
    }
}

/// Cross-ratio `[p:x:y:q]` of four collinear points.
///
/// Evaluated with 2×2 determinants of coordinates in the plane spanned by the
/// line, which equals the distance ratio in every affine chart containing the
/// four points.
pub fn cross_ratio(p: &ProjPoint, x: &ProjPoint, y: &ProjPoint, q: &ProjPoint, tol: f64) -> Result<f64, ProjError> {
    let dim = p.rep().len();
    for z in [x, y, q] {
        if z.rep().len() != dim {
            return Err(ProjError::DimensionMismatch {
                expected: dim,
                found: z.rep().len(),
            });
        }
    }
    let pts = [p, x, y, q];
    let m = DMatrix::from_fn(4, dim, |i, j| pts[i].rep()[j]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].partial_cmp(&svd.singular_values[*a]).unwrap());
    let s0 = svd.singular_values[order[0]];
    if order.len() > 2 {
        let residual = svd.singular_values[order[2]] / s0;
        if residual > tol {
            return Err(ProjError::NonCollinear { residual });
        }
    }
    let u1 = v_t.row(order[0]).transpose();
    let u2 = v_t.row(order[1]).transpose();
    let c: Vec<(f64, f64)> = pts.iter().map(|z| (z.rep().dot(&u1), z.rep().dot(&u2))).collect();
    let det = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    let (cp, cx, cy, cq) = (c[0], c[1], c[2], c[3]);
    let px = det(cp, cx);
    let qy = det(cq, cy);
    if px.abs() < tol || qy.abs() < tol {
        return Err(ProjError::DegenerateConfiguration);
    }
    Ok((det(cp, cy) * det(cq, cx)).abs() / (px * qy).abs())
}

fn check_form(q: &DMatrix<f64>) -> Result<(), ProjError> {
    if !q.is_square() {
        return Err(ProjError::NotSquare {
            rows: q.nrows(),
            cols: q.ncols(),
        });
    }
    let eig = q.clone().symmetric_eigenvalues();
    let max = eig.amax();
    let min = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    if max == 0.0 || min / max < 1e-12 {
        return Err(ProjError::SingularForm);
    }
    Ok(())
}

/// Pole of a hyperplane with respect to a nondegenerate quadratic form: the
/// point `Q^{-1} ν`.
pub fn pole(h: &ProjHyperplane, q: &DMatrix<f64>, tol: f64) -> Result<ProjPoint, ProjError> {
    check_form(q)?;
    if q.nrows() != h.covector().len() {
        return Err(ProjError::DimensionMismatch {
            expected: q.nrows(),
            found: h.covector().len(),
        });
    }
    let p = q.clone().lu().solve(h.covector()).ok_or(ProjError::SingularForm)?;
    let p = ProjPoint::new(p)?;
    let scale = q.norm();
    if (p.rep().transpose() * q * p.rep())[0].abs() < tol * scale {
        return Err(ProjError::TangentWall);
    }
    Ok(p)
}

/// Polar hyperplane of a point: covector `Q p`.
pub fn polar(p: &ProjPoint, q: &DMatrix<f64>) -> Result<ProjHyperplane, ProjError> {
    ProjHyperplane::new(q * p.rep())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sl(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> ProjMap {
        loop {
            let m = DMatrix::from_fn(n + 1, n + 1, |i, j| {
                (if i == j { 1.0 } else { 0.0 }) + spread * (rng.random::<f64>() - 0.5)
            });
            if m.determinant() > 0.1 {
                return ProjMap::normalized(m).unwrap();
            }
        }
    }

    #[test]
    fn centred_chart_makes_the_unit_ball() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, -0.5]);
        let x = DVector::from_vec(vec![0.1, -0.2, 1.0]);
        let chart = AffineChart::centered(&q, &x).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        assert!((chart.form_to_chart(&q) - want).amax() < 1e-12);
        let a = chart.project(&ProjPoint::new(x).unwrap(), 1e-12).unwrap();
        assert!(a.norm() < 1e-12);
    }

    #[test]
    fn cross_ratio_of_affine_scalars() {
        let pts: Vec<ProjPoint> = [0.0, 1.0, 2.0, 4.0]
            .iter()
            .map(|s| ProjPoint::from_affine(&[*s]))
            .collect();
        let cr = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3], 1e-9).unwrap();
        assert!((cr - 3.0).abs() < 1e-12);
        assert_eq!(cross_ratio_scalars(0.0, 1.0, 2.0, 4.0), 3.0);
    }

    #[test]
    fn cross_ratio_coincident_middle_points() {
        let p = ProjPoint::from_affine(&[-1.0, 0.5]);
        let x = ProjPoint::from_affine(&[0.0, 0.5]);
        let q = ProjPoint::from_affine(&[3.0, 0.5]);
        let cr = cross_ratio(&p, &x, &x, &q, 1e-9).unwrap();
        assert!((cr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_ratio_errors() {
        let p = ProjPoint::from_affine(&[0.0, 0.0]);
        let x = ProjPoint::from_affine(&[1.0, 0.0]);
        let y = ProjPoint::from_affine(&[2.0, 0.3]);
        let q = ProjPoint::from_affine(&[3.0, 0.0]);
        assert!(matches!(
            cross_ratio(&p, &x, &y, &q, 1e-9),
            Err(ProjError::NonCollinear { .. })
        ));
        let y = ProjPoint::from_affine(&[2.0, 0.0]);
        assert_eq!(
            cross_ratio(&p, &p, &y, &q, 1e-9),
            Err(ProjError::DegenerateConfiguration)
        );
    }

    #[test]
    fn cross_ratio_projective_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let base = DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5);
            let dir = DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5);
            let mut s: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let pts: Vec<ProjPoint> = s.iter().map(|t| ProjPoint::new(&base + &dir * *t).unwrap()).collect();
            let Ok(before) = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3], 1e-9) else {
                continue;
            };
            let g = random_sl(&mut rng, 2, 1.0);
            let img: Vec<ProjPoint> = pts.iter().map(|p| g.apply(p)).collect();
            let after = cross_ratio(&img[0], &img[1], &img[2], &img[3], 1e-9).unwrap();
            worst = worst.max((before - after).abs() / before.max(1.0));
        }
        assert!(worst < 1e-9, "worst residual {worst}");
    }

    #[test]
    fn canonicalization_is_scale_invariant_and_idempotent() {
        let v = DVector::from_vec(vec![0.0, -2.0, 3.0]);
        let a = ProjPoint::new(v.clone()).unwrap();
        let b = ProjPoint::new(v * -7.5).unwrap();
        assert!(a.approx_eq(&b, 1e-15));
        assert!((a.rep().norm() - 1.0).abs() < 1e-12);
        assert!(a.rep()[1] > 0.0);
        let again = ProjPoint::new(a.rep().clone()).unwrap();
        assert_eq!(again, a);
        assert_eq!(ProjPoint::from_slice(&[0.0, 0.0]), Err(ProjError::ZeroVector));
    }

    #[test]
    fn apply_map_identity_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = ProjPoint::from_affine(&[0.2, -0.7]);
        assert!(ProjMap::identity(2).apply(&x).approx_eq(&x, 1e-15));
        for _ in 0..100 {
            let g = random_sl(&mut rng, 2, 1.5);
            let h = random_sl(&mut rng, 2, 1.5);
            let x = ProjPoint::new(DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5)).unwrap();
            let lhs = g.compose(&h).apply(&x);
            let rhs = g.apply(&h.apply(&x));
            assert!(lhs.rep_distance(&rhs) < 1e-9);
            let id = g.inverse().compose(&g);
            assert!(id.max_abs_diff(&ProjMap::identity(2)) < 1e-9);
        }
    }

    #[test]
    fn projmap_rejects_non_unimodular() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0]));
        assert!(matches!(ProjMap::new(m.clone()), Err(ProjError::NotUnimodular { .. })));
        let g = ProjMap::normalized(m).unwrap();
        assert!((g.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_chart_projection() {
        let chart = AffineChart::standard(2);
        let x = ProjPoint::from_slice(&[0.3, -0.4, 1.0]).unwrap();
        let a = chart_project(&chart, &x).unwrap();
        assert!((a[0] - 0.3).abs() < 1e-15 && (a[1] + 0.4).abs() < 1e-15);
        let inf = ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(chart_project(&chart, &inf), Err(ProjError::AtInfinity));
    }

    #[test]
    fn chart_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = DVector::from_vec(vec![0.2, -0.1, 1.0]);
        let chart = AffineChart::with_infinity(&h).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let a = DVector::from_fn(2, |_, _| 4.0 * rng.random::<f64>() - 2.0);
            let back = chart.project(&chart.embed(&a), 1e-12).unwrap();
            worst = worst.max((back - a).amax());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn pole_of_diameter_and_secant() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let h = ProjHyperplane::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let p = pole(&h, &q, 1e-9).unwrap();
        assert!(p.approx_eq(&ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap(), 1e-15));

        let h = ProjHyperplane::from_slice(&[1.0, 0.0, -0.5]).unwrap();
        let p = pole(&h, &q, 1e-9).unwrap();
        let a = chart_project(&AffineChart::standard(2), &p).unwrap();
        assert!((a[0] - 2.0).abs() < 1e-12 && a[1].abs() < 1e-12);
        // tangent lines from (2,0) touch the circle at x = 1/2, which is H ∩ circle
        let touch = (0.5_f64, (0.75_f64).sqrt());
        let tangent_dir = (touch.0 - 2.0, touch.1);
        assert!((tangent_dir.0 * touch.0 + tangent_dir.1 * touch.1).abs() < 1e-12);
        // the polar of the pole is H again
        let back = polar(&p, &q).unwrap();
        assert!(back.approx_eq(&h, 1e-12));
    }

    #[test]
    fn pole_errors() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let tangent = ProjHyperplane::from_slice(&[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(pole(&tangent, &q, 1e-9), Err(ProjError::TangentWall));
        let singular = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, -1.0]));
        let h = ProjHyperplane::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(pole(&h, &singular, 1e-9), Err(ProjError::SingularForm));
    }

    #[test]
    fn pole_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        for _ in 0..200 {
            let g = random_sl(&mut rng, 2, 0.8);
            let h = ProjHyperplane::new(DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5)).unwrap();
            let Ok(p) = pole(&h, &q, 1e-6) else { continue };
            let gh = g.apply_hyperplane(&h);
            let gq = g.push_form(&q);
            let gp = pole(&gh, &gq, 1e-9).unwrap();
            assert!(gp.rep_distance(&g.apply(&p)) < 1e-9);
        }
    }
}
