use nalgebra::{DMatrix, DVector};

use super::{check_dir, ConvexDomain, DomainError, Membership};
use crate::proj::{AffineChart, ProjPoint};

/// The ellipsoid `{x : xᵀQx < 0}` of a form of signature `(n,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadricDomain {
    form: DMatrix<f64>,
    chart: AffineChart,
    // affine description in the chart: f(a) = aᵀMa + 2bᵀa + c
    m: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    center: DVector<f64>,
    half_widths: DVector<f64>,
    tol: f64,
}

/// Counts of positive and negative eigenvalues, relative threshold `1e-12`.
pub(crate) fn signature(q: &DMatrix<f64>) -> (usize, usize) {
    let eig = q.clone().symmetric_eigenvalues();
    let scale = eig.amax();
    let pos = eig.iter().filter(|e| **e > 1e-12 * scale).count();
    let neg = eig.iter().filter(|e| **e < -1e-12 * scale).count();
    (pos, neg)
}

fn symmetrize(q: &DMatrix<f64>) -> DMatrix<f64> {
    (q + q.transpose()) * 0.5
}

impl QuadricDomain {
    /// Ellipsoid of `q`, in the standard chart when that chart contains its
    /// closure and otherwise in the chart whose hyperplane at infinity is the
    /// polar of the timelike eigendirection.
    pub fn new(q: DMatrix<f64>) -> Result<Self, DomainError> {
        let q = Self::checked_form(q)?;
        let dim = q.nrows();
        let n = dim - 1;
        let standard = AffineChart::standard(n);
        match Self::with_chart(q.clone(), standard) {
            Ok(d) => Ok(d),
            Err(DomainError::Unbounded) => {
                let eig = q.clone().symmetric_eigen();
                let (idx, _) = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (i, e)| if *e < acc.1 { (i, *e) } else { acc });
                let c = eig.eigenvectors.column(idx).into_owned();
                let chart = AffineChart::with_infinity(&(&q * c))?;
                Self::with_chart(q, chart)
            }
            Err(e) => Err(e),
        }
    }

    /// The Klein model: `q = x₁² + … + x_n² − x_{n+1}²`.
    pub fn klein(n: usize) -> Self {
        let mut d = DVector::from_element(n + 1, 1.0);
        d[n] = -1.0;
        Self::new(DMatrix::from_diagonal(&d)).expect("Klein form is valid")
    }

    fn checked_form(q: DMatrix<f64>) -> Result<DMatrix<f64>, DomainError> {
        if !q.is_square() || q.nrows() < 2 {
            return Err(DomainError::DimensionMismatch {
                expected: q.nrows().max(2),
                found: q.ncols(),
            });
        }
        let q = symmetrize(&q);
        let (pos, neg) = signature(&q);
        let n = q.nrows() - 1;
        if pos != n || neg != 1 {
            return Err(DomainError::SignatureMismatch { pos, neg, expected: n });
        }
        Ok(q)
    }

    /// Ellipsoid of `q` described in a given chart, which must contain its
    /// closure.
    pub fn with_chart(q: DMatrix<f64>, chart: AffineChart) -> Result<Self, DomainError> {
        let q = Self::checked_form(q)?;
        let n = q.nrows() - 1;
        if chart.dim() != n {
            return Err(DomainError::DimensionMismatch {
                expected: n,
                found: chart.dim(),
            });
        }
        let qc = chart.form_to_chart(&q);
        let m = qc.view((0, 0), (n, n)).into_owned();
        let b = qc.view((0, n), (n, 1)).column(0).into_owned();
        let c = qc[(n, n)];
        let chol = m.clone().cholesky().ok_or(DomainError::Unbounded)?;
        let m_inv = chol.inverse();
        let center = -(&m_inv * &b);
        let kappa = b.dot(&(&m_inv * &b)) - c;
        if !(kappa > 0.0) {
            return Err(DomainError::EmptyInterior);
        }
        let half_widths = DVector::from_fn(n, |i, _| (kappa * m_inv[(i, i)]).sqrt());
        Ok(Self {
            form: q,
            chart,
            m,
            b,
            c,
            center,
            half_widths,
            tol: 1e-9,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// The form `Q` in homogeneous coordinates.
    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// `f(a) = (a,1)ᵀ Q_chart (a,1)`.
    pub fn value(&self, a: &DVector<f64>) -> f64 {
        a.dot(&(&self.m * a)) + 2.0 * self.b.dot(a) + self.c
    }

    pub fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        (&self.m * a + &self.b) * 2.0
    }

    /// Image of the ellipsoid under a projective map, kept in the same chart.
    pub fn transformed(&self, g: &crate::proj::ProjMap) -> Result<Self, DomainError> {
        Self::with_chart(g.push_form(&self.form), self.chart.clone()).map(|d| d.with_tol(self.tol))
    }
}

impl ConvexDomain for QuadricDomain {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn chart(&self) -> &AffineChart {
        &self.chart
    }

    fn membership(&self, a: &DVector<f64>) -> Membership {
        let f = self.value(a);
        let g = self.gradient(a).norm();
        if f.abs() <= self.tol * g {
            Membership::OnBoundary
        } else if f < 0.0 {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }

    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError> {
        check_dir(v, self.dim())?;
        let mv = &self.m * v;
        let aa = v.dot(&mv);
        let bb = mv.dot(a) + v.dot(&self.b);
        let cc = self.value(a);
        if !(cc < 0.0) {
            return Err(DomainError::NotInterior);
        }
        let disc = (bb * bb - aa * cc).sqrt();
        // numerically stable pair of roots of aa s² + 2 bb s + cc
        if bb >= 0.0 {
            let q = -bb - disc;
            Ok((q / aa, cc / q))
        } else {
            let q = -bb + disc;
            Ok((cc / q, q / aa))
        }
    }

    fn interior_point(&self) -> DVector<f64> {
        self.center.clone()
    }

    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        (&self.center - &self.half_widths, &self.center + &self.half_widths)
    }

    fn tol(&self) -> f64 {
        self.tol
    }
}

/// Member `Q + s·ττᵀ` of the pencil spanned by `∂E` and its tangent hyperplane
/// `τ = Q p` at `p`. Positive `s` gives members inside `E`, negative `s`
/// members containing it; all are tangent to `∂E` at `p`.
pub fn pencil_ellipsoid(e: &QuadricDomain, p: &ProjPoint, s: f64) -> Result<QuadricDomain, DomainError> {
    let q = e.form();
    let ph = p.rep();
    if ph.len() != q.nrows() {
        return Err(DomainError::DimensionMismatch {
            expected: q.nrows(),
            found: ph.len(),
        });
    }
    let scale = q.norm();
    if (ph.transpose() * q * ph)[0].abs() > e.tol() * scale {
        return Err(DomainError::NotOnBoundary);
    }
    let tau = q * ph;
    let qs = q + &tau * tau.transpose() * s;
    let (pos, neg) = signature(&qs);
    if pos != e.dim() || neg != 1 {
        return Err(DomainError::SignatureLost);
    }
    QuadricDomain::with_chart(qs, e.chart().clone()).map(|d| d.with_tol(e.tol()))
}

/// Smallest `s ∈ [0, s_max]`, up to `1e-9·s_max`, whose pencil member at `p`
/// has all `samples` sampled boundary points in the closure of `omega`.
///
/// Members shrink monotonically with `s`, so the containment test is
/// bisected. The test is sampled and certifies nothing between samples.
pub fn inner_pencil_member(
    omega: &dyn ConvexDomain,
    e: &QuadricDomain,
    p: &ProjPoint,
    s_max: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, QuadricDomain), DomainError> {
    let n = e.dim();
    let mut r = crate::sampling::rng(seed);
    let dirs: Vec<DVector<f64>> = (0..samples).map(|_| crate::sampling::unit_vector(&mut r, n)).collect();
    let inside = |m: &QuadricDomain| {
        let c = m.center();
        dirs.iter().all(|u| {
            let Ok((_, hi)) = m.chord_params(c, u) else {
                return false;
            };
            let x = m.chart().embed(&(c + u * hi));
            omega.contains(&x) != Membership::Outside
        })
    };
    let top = pencil_ellipsoid(e, p, s_max)?;
    if !inside(&top) {
        return Err(DomainError::NotContained);
    }
    if let Ok(whole) = pencil_ellipsoid(e, p, 0.0) {
        if inside(&whole) {
            return Ok((0.0, whole));
        }
    }
    let (mut lo, mut hi) = (0.0, s_max);
    let mut best = top;
    while hi - lo > 1e-9 * s_max {
        let mid = 0.5 * (lo + hi);
        let m = pencil_ellipsoid(e, p, mid)?;
        if inside(&m) {
            hi = mid;
            best = m;
        } else {
            lo = mid;
        }
    }
    Ok((hi, best))
}
