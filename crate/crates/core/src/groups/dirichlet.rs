use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{GroupError, Representation, Word};
use crate::convex::{ConvexDomain, DomainError, Membership, QuadricDomain};
use crate::proj::{lift_affine, AffineChart, ProjHyperplane, ProjMap, ProjPoint};
use crate::sampling;

const PERTURB_RETRIES: usize = 5;

/// Bisector of `[x₀, ρ(word)·x₀]`, oriented nonnegative on the `x₀` side.
#[derive(Clone, Debug)]
pub struct DirichletWall {
    pub word: Word,
    pub hyperplane: ProjHyperplane,
    // chart covector scaled to a unit affine normal
    chart_covector: DVector<f64>,
    pub active: bool,
}

impl DirichletWall {
    /// Signed Euclidean distance in the chart, positive on the `x₀` side.
    pub fn margin(&self, a: &DVector<f64>) -> f64 {
        self.chart_covector.dot(&lift_affine(a))
    }
}

/// `{x ∈ Ω : d(x, x₀) ≤ d(x, γx₀)}` over the words evaluated.
#[derive(Clone, Debug)]
pub struct DirichletDomain {
    base: QuadricDomain,
    x0: DVector<f64>,
    walls: Vec<DirichletWall>,
    tol: f64,
}

fn unit_lift(qc: &DMatrix<f64>, a: &DVector<f64>) -> DVector<f64> {
    let l = lift_affine(a);
    let norm = (-l.dot(&(qc * &l))).sqrt();
    l / norm
}

/// Dirichlet domain of `ρ` centred at `x₀` in the ellipsoid `Ω`, over the
/// reduced words of length at most `word_len`. A base point with a nontrivial
/// stabilizer is perturbed a few times before giving up.
pub fn dirichlet_domain(
    rho: &Representation,
    omega: &QuadricDomain,
    x0: &ProjPoint,
    word_len: usize,
) -> Result<DirichletDomain, GroupError> {
    let chart = omega.chart().clone();
    let a0 = chart.project(x0, 1e-12)?;
    if omega.membership(&a0) != Membership::Inside {
        return Err(GroupError::NotInterior);
    }
    let words = rho.reduced_words(word_len);
    let maps: Vec<(Word, ProjMap)> = words
        .into_iter()
        .skip(1)
        .map(|w| {
            let g = rho.eval(&w).expect("own generators");
            (w, g)
        })
        .filter(|(_, g)| g.max_abs_diff(&ProjMap::identity(g.dim())) > 1e-9)
        .collect();
    let mut r = sampling::rng(0x0d1c);
    let mut a = a0.clone();
    for attempt in 0..=PERTURB_RETRIES {
        match build(omega, &chart, &a, &maps) {
            Some(d) => return Ok(d),
            None if attempt < PERTURB_RETRIES => {
                let (lo, hi) = omega.bounding_box();
                let scale = 1e-3 * (hi - lo).amax();
                let step = sampling::unit_vector(&mut r, a.len()) * (scale * r.random::<f64>());
                if omega.membership(&(&a0 + &step)) == Membership::Inside {
                    a = &a0 + step;
                }
            }
            None => break,
        }
    }
    Err(GroupError::StabilizerNontrivial)
}

fn build(
    omega: &QuadricDomain,
    chart: &AffineChart,
    a0: &DVector<f64>,
    maps: &[(Word, ProjMap)],
) -> Option<DirichletDomain> {
    let qc = chart.form_to_chart(omega.form());
    let n = a0.len();
    let x_hat = unit_lift(&qc, a0);
    let x0 = chart.embed(a0);
    let mut walls: Vec<DirichletWall> = Vec::new();
    for (w, g) in maps {
        let y = g.apply(&x0);
        let b = chart.project(&y, 1e-12).ok()?;
        let y_hat = unit_lift(&qc, &b);
        if (&y_hat - &x_hat).norm() < 1e-9 {
            return None;
        }
        let nu = &qc * (&x_hat - &y_hat);
        let scale = nu.rows(0, n).norm();
        let nu = nu / scale;
        if walls.iter().any(|v| (&v.chart_covector - &nu).amax() < 1e-9) {
            continue;
        }
        let hyperplane = ProjHyperplane::new(chart.covector_from_chart(&nu)).ok()?;
        walls.push(DirichletWall {
            word: w.clone(),
            hyperplane,
            chart_covector: nu,
            active: false,
        });
    }
    let mut d = DirichletDomain {
        base: omega.clone(),
        x0: a0.clone(),
        walls,
        tol: omega.tol(),
    };
    d.mark_active();
    Some(d)
}

impl DirichletDomain {
    pub fn base(&self) -> &QuadricDomain {
        &self.base
    }

    /// Chart coordinates of the base point actually used.
    pub fn center(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn walls(&self) -> &[DirichletWall] {
        &self.walls
    }

    pub fn active_walls(&self) -> impl Iterator<Item = &DirichletWall> {
        self.walls.iter().filter(|w| w.active)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Portion `[s⁻, s⁺]` of the wall line `p + s·d` kept by every other wall.
    fn clip_line(&self, skip: usize, p: &DVector<f64>, d: &DVector<f64>) -> Option<(f64, f64)> {
        let f0 = self.base.value(p);
        let fp = self.base.value(&(p + d));
        let fm = self.base.value(&(p - d));
        let qa = 0.5 * (fp + fm) - f0;
        let qb = 0.5 * (fp - fm);
        let disc = qb * qb - 4.0 * qa * f0;
        if !(qa > 0.0) || disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let (mut lo, mut hi) = ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa));
        for (k, w) in self.walls.iter().enumerate() {
            if k == skip {
                continue;
            }
            let m0 = w.margin(p);
            let slope = w.chart_covector.rows(0, p.len()).dot(d);
            if slope.abs() < 1e-15 {
                if m0 < 0.0 {
                    return None;
                }
                continue;
            }
            let s = -m0 / slope;
            if slope > 0.0 {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
        (hi - lo > 1e-12).then_some((lo, hi))
    }

    fn mark_active(&mut self) {
        let n = self.x0.len();
        let mut flags = vec![false; self.walls.len()];
        if n == 2 {
            for (k, w) in self.walls.iter().enumerate() {
                let normal = w.chart_covector.rows(0, 2).into_owned();
                let p = &normal * (-w.chart_covector[2]);
                let d = DVector::from_vec(vec![-normal[1], normal[0]]);
                flags[k] = self.clip_line(k, &p, &d).is_some();
            }
        } else {
            let mut r = sampling::rng(0xd1);
            let (lo, hi) = self.base.bounding_box();
            for (k, w) in self.walls.iter().enumerate() {
                let normal = w.chart_covector.rows(0, n).into_owned();
                flags[k] = (0..4000).any(|_| {
                    let a = sampling::uniform_in_box(&mut r, &lo, &hi);
                    let a = &a - &normal * w.margin(&a);
                    self.base.membership(&a) == Membership::Inside
                        && self.walls.iter().enumerate().all(|(j, v)| j == k || v.margin(&a) > 0.0)
                });
            }
        }
        for (w, f) in self.walls.iter_mut().zip(flags) {
            w.active = f;
        }
    }

    /// Smallest wall margin at `a`, `+∞` without walls.
    pub fn wall_margin(&self, a: &DVector<f64>) -> f64 {
        self.walls.iter().map(|w| w.margin(a)).fold(f64::INFINITY, f64::min)
    }

    /// Membership of `a` in the translate `g·D`.
    pub fn translate_membership(&self, g: &ProjMap, a: &DVector<f64>) -> Membership {
        let chart = self.base.chart();
        let x = g.inverse().apply(&chart.embed(a));
        match chart.project(&x, 1e-12) {
            Ok(b) => self.membership(&b),
            Err(_) => Membership::Outside,
        }
    }

    /// Fraction of `samples` uniform chart points of the ellipsoid, within
    /// hyperbolic distance `radius` of the centre, lying in the closure of
    /// some translate `ρ(w)·D`, `w ∈ words`.
    pub fn covering_fraction(
        &self,
        rho: &Representation,
        words: &[Word],
        radius: f64,
        samples: usize,
        seed: u64,
    ) -> f64 {
        let maps: Vec<ProjMap> = words.iter().map(|w| rho.eval(w).expect("own generators")).collect();
        let pts = self.sample_ball(radius, samples, seed);
        let hit = pts
            .iter()
            .filter(|a| {
                maps.iter()
                    .any(|g| self.translate_membership(g, a) != Membership::Outside)
            })
            .count();
        hit as f64 / pts.len().max(1) as f64
    }

    /// Number of sampled points interior to translates by two distinct group
    /// elements among `words`.
    pub fn overlap_count(&self, rho: &Representation, words: &[Word], samples: usize, seed: u64) -> usize {
        let mut maps: Vec<ProjMap> = Vec::new();
        for w in words {
            let g = rho.eval(w).expect("own generators");
            if maps.iter().all(|h| h.max_abs_diff(&g) > 1e-9) {
                maps.push(g);
            }
        }
        let mut r = sampling::rng(seed);
        let (lo, hi) = self.base.bounding_box();
        let mut count = 0;
        for _ in 0..samples {
            let a = sampling::uniform_in_box(&mut r, &lo, &hi);
            if self.base.membership(&a) != Membership::Inside {
                continue;
            }
            let inside = maps
                .iter()
                .filter(|g| self.translate_membership(g, &a) == Membership::Inside)
                .count();
            if inside > 1 {
                count += 1;
            }
        }
        count
    }

    fn sample_ball(&self, radius: f64, samples: usize, seed: u64) -> Vec<DVector<f64>> {
        let qc = self.base.chart().form_to_chart(self.base.form());
        let x_hat = unit_lift(&qc, &self.x0);
        let bound = radius.cosh();
        let mut r = sampling::rng(seed);
        let (lo, hi) = self.base.bounding_box();
        let mut out = Vec::with_capacity(samples);
        let mut tries = 0;
        while out.len() < samples && tries < samples * 1000 {
            tries += 1;
            let a = sampling::uniform_in_box(&mut r, &lo, &hi);
            if self.base.membership(&a) != Membership::Inside {
                continue;
            }
            let c = -unit_lift(&qc, &a).dot(&(&qc * &x_hat));
            if c <= bound {
                out.push(a);
            }
        }
        out
    }
}

impl ConvexDomain for DirichletDomain {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn chart(&self) -> &AffineChart {
        self.base.chart()
    }

    fn membership(&self, a: &DVector<f64>) -> Membership {
        let base = self.base.membership(a);
        if base == Membership::Outside {
            return Membership::Outside;
        }
        let m = self.wall_margin(a);
        if m < -self.tol {
            Membership::Outside
        } else if m <= self.tol || base == Membership::OnBoundary {
            Membership::OnBoundary
        } else {
            Membership::Inside
        }
    }

    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError> {
        let (mut lo, mut hi) = self.base.chord_params(a, v)?;
        for w in &self.walls {
            let m0 = w.margin(a);
            let slope = w.chart_covector.rows(0, a.len()).dot(v);
            if slope.abs() < 1e-300 {
                continue;
            }
            let s = -m0 / slope;
            if slope > 0.0 {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
        if !(lo < 0.0 && hi > 0.0) {
            return Err(DomainError::NotInterior);
        }
        Ok((lo, hi))
    }

    fn interior_point(&self) -> DVector<f64> {
        self.x0.clone()
    }

    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        self.base.bounding_box()
    }

    fn tol(&self) -> f64 {
        self.tol
    }
}
