use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

use super::{GroupError, Representation, Word};
use crate::convex::ConvexDomain;
use crate::proj::{ProjMap, ProjPoint};
use crate::sampling;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Hyperbolic,
    ParabolicOrUnipotent,
    EllipticOrIdentity,
}

#[derive(Clone, Debug)]
pub struct ElementClass {
    pub kind: ElementKind,
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_radius: f64,
    /// Eigenvalues of `g²` are simple and positive.
    pub loxodromic: bool,
    /// Fixed points of the top and bottom real eigenvalues, for hyperbolic `g`.
    pub attracting: Option<ProjPoint>,
    pub repelling: Option<ProjPoint>,
}

/// Exact-arithmetic-friendly characteristic polynomial of a 3×3 matrix,
/// `λ³ + a λ² + b λ + c`.
fn char_poly_3(m: &DMatrix<f64>) -> (f64, f64, f64) {
    let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    (-tr, minors, -det)
}

/// Roots of `λ³ + a λ² + b λ + c`.
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<Complex<f64>> {
    let shift = -a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    if p == 0.0 && q == 0.0 {
        return vec![Complex::new(shift, 0.0); 3];
    }
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        let re = -(u + v) / 2.0;
        let im = (u - v) * 3f64.sqrt() / 2.0;
        vec![
            Complex::new(u + v + shift, 0.0),
            Complex::new(re + shift, im),
            Complex::new(re + shift, -im),
        ]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| {
                let y = 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                Complex::new(y + shift, 0.0)
            })
            .collect()
    }
}

/// Eigenvalues, closed form for 3×3 matrices and Schur-based otherwise.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.nrows() == 3 {
        let (a, b, c) = char_poly_3(m);
        cubic_roots(a, b, c)
    } else {
        m.clone().complex_eigenvalues().iter().copied().collect()
    }
}

/// Characteristic polynomial coefficients by Faddeev–LeVerrier, leading
/// coefficient first.
fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    let size = m.nrows();
    let mut coeffs = vec![1.0];
    let mut mk = DMatrix::<f64>::zeros(size, size);
    let mut c = 1.0;
    for k in 1..=size {
        mk = m * (mk + DMatrix::identity(size, size) * c);
        c = -mk.trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Distance of the characteristic polynomial from `(λ − 1)^{n+1}`.
fn unipotency_residual(m: &DMatrix<f64>) -> f64 {
    let size = m.nrows();
    char_poly(m)
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let want = binomial(size, k) * if k % 2 == 0 { 1.0 } else { -1.0 };
            (c - want).abs()
        })
        .fold(0.0, f64::max)
}

fn null_direction(m: &DMatrix<f64>, lambda: f64) -> Option<ProjPoint> {
    let size = m.nrows();
    let shifted = m - DMatrix::identity(size, size) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    ProjPoint::new(v_t.row(idx).transpose()).ok()
}

/// Sharpens an eigendirection by a few power steps.
fn power_refine(m: &DMatrix<f64>, x: ProjPoint, steps: usize) -> ProjPoint {
    let mut v: DVector<f64> = x.rep().clone();
    for _ in 0..steps {
        v = (m * v).normalize();
    }
    ProjPoint::new(v).unwrap_or(x)
}

/// Classifies `g` by its spectrum.
pub fn classify_element(g: &ProjMap, tol: f64) -> ElementClass {
    let m = g.matrix();
    let eig = eigenvalues(m);
    let spectral_radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let real_tol = 1e-9 * spectral_radius.max(1.0);
    let mut reals: Vec<f64> = eig.iter().filter(|z| z.im.abs() <= real_tol).map(|z| z.re).collect();
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let loxodromic = reals.len() == eig.len() && {
        let mut sq: Vec<f64> = reals.iter().map(|r| r * r).collect();
        sq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sq.windows(2).all(|w| w[1] - w[0] > tol * w[1].max(1.0)) && sq[0] > 0.0
    };
    let near_one = eig.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < tol);
    let unipotent = near_one || unipotency_residual(m) < tol;
    let top = reals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hyperbolic = !unipotent && spectral_radius > 1.0 + tol && (top - spectral_radius).abs() <= real_tol;
    let size = m.nrows();
    let identity = (m - DMatrix::<f64>::identity(size, size)).amax() < tol;
    let kind = if hyperbolic {
        ElementKind::Hyperbolic
    } else if unipotent && !identity {
        ElementKind::ParabolicOrUnipotent
    } else {
        ElementKind::EllipticOrIdentity
    };
    let (attracting, repelling) = if hyperbolic {
        let inv = g.inverse();
        let bottom = reals.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
        let a = null_direction(m, top).map(|x| power_refine(m, x, 4));
        let r = null_direction(m, bottom).map(|x| power_refine(inv.matrix(), x, 4));
        (a, r)
    } else {
        (None, None)
    };
    ElementClass {
        kind,
        eigenvalues: eig,
        spectral_radius,
        loxodromic,
        attracting,
        repelling,
    }
}

/// Numerical rank of the span of `{ρ(w) : |w| ≤ max_word_len}` in matrix
/// space, at relative threshold `1e-8`.
pub fn irreducibility_dimension(rho: &Representation, max_word_len: usize) -> usize {
    let dim = rho.dim() + 1;
    let words = rho.reduced_words(max_word_len.max(1));
    let rows: Vec<DVector<f64>> = words
        .iter()
        .map(|w| {
            let m = rho.eval(w).expect("own generators");
            let v = DVector::from_iterator(dim * dim, m.matrix().iter().copied());
            let norm = v.norm();
            v / norm
        })
        .collect();
    let stacked = DMatrix::from_fn(rows.len(), dim * dim, |i, j| rows[i][j]);
    let sv = stacked.singular_values();
    let top = sv.max();
    sv.iter().filter(|s| **s > 1e-8 * top).count()
}

/// Random freely reduced word of length in `1..=max_len`.
pub(crate) fn random_word(rho: &Representation, max_len: usize, r: &mut impl Rng) -> Word {
    let letters: Vec<(String, i32)> = rho
        .generators()
        .iter()
        .flat_map(|g| [(g.clone(), 1), (g.clone(), -1)])
        .collect();
    let len = r.random_range(1..=max_len.max(1));
    let mut out: Vec<(String, i32)> = Vec::with_capacity(len);
    while out.len() < len {
        let l = &letters[r.random_range(0..letters.len())];
        if let Some(last) = out.last() {
            if last.0 == l.0 && last.1 == -l.1 {
                continue;
            }
        }
        out.push(l.clone());
    }
    Word::from_letters(out)
}

/// Attracting fixed points of random hyperbolic words.
pub fn limit_set_sample<D: ConvexDomain + ?Sized>(
    rho: &Representation,
    omega: &D,
    word_len: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<ProjPoint>, GroupError> {
    Ok(limit_set_words(rho, omega, word_len, count, seed)?
        .into_iter()
        .map(|(_, p)| p)
        .collect())
}

/// Like [`limit_set_sample`], keeping the word that produced each point.
pub fn limit_set_words<D: ConvexDomain + ?Sized>(
    rho: &Representation,
    omega: &D,
    word_len: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(Word, ProjPoint)>, GroupError> {
    let chart = omega.chart();
    let mut r = sampling::rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < count * 50 + 100 {
        attempts += 1;
        let w = random_word(rho, word_len, &mut r);
        let g = rho.eval(&w)?;
        let class = classify_element(&g, 1e-9);
        if let (ElementKind::Hyperbolic, Some(p)) = (class.kind, class.attracting) {
            // finite in the domain's chart
            if chart.project(&p, 1e-12).is_ok() {
                out.push((w, p));
            }
        }
    }
    if out.is_empty() {
        return Err(GroupError::NoHyperbolicFound);
    }
    Ok(out)
}
