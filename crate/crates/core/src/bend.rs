//! Bending maps, single-wall folds and the bent domain builder.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::convex::bent::BentDomain;
use crate::convex::{ConvexDomain, DomainError, Membership, PliDomain, QuadricDomain, Side};
use crate::groups::{GroupError, Representation, Word};
use crate::proj::{AffineChart, ProjError, ProjHyperplane, ProjMap, ProjPoint};
use crate::sampling;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BendError {
    #[error("pole is incident to the wall")]
    IncidentPolePlane,
    #[error("wall does not meet the domain")]
    WallMissesDomain,
    #[error("pole lies in the closed domain")]
    PoleInsideDomain,
    #[error("cone condition failed on a sampled point")]
    ConeConditionFailed,
    #[error("relation {id} violated (residual {residual:e})")]
    RelationViolated { id: String, residual: f64 },
    #[error("walls {0} and {1} cross inside the domain")]
    WallsIntersect(String, String),
    #[error("generator {0} does not preserve the base domain")]
    NotPreserved(String),
    #[error("word {0} does not stabilize the wall")]
    WallNotStabilized(String),
    #[error("no chamber adjacent to the root chamber across a translate of the wall")]
    NoRootChamber,
    #[error(transparent)]
    Proj(#[from] ProjError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// `e^{−t}(I + (e^{(n+1)t} − 1) p νᵀ / (νᵀp))` for representatives `ν`, `p`.
pub fn bending_matrix(nu: &DVector<f64>, p: &DVector<f64>, t: f64) -> DMatrix<f64> {
    let dim = nu.len();
    let scale = (dim as f64 * t).exp_m1() / nu.dot(p);
    (DMatrix::identity(dim, dim) + p * nu.transpose() * scale) * (-t).exp()
}

/// The map `A_{H,p,t}`: the identity on `H`, with eigenvalue ratio
/// `e^{(n+1)t}` on the line of `p`, normalized to determinant one.
pub fn bending_map(h: &ProjHyperplane, p: &ProjPoint, t: f64) -> Result<ProjMap, BendError> {
    if h.covector().len() != p.rep().len() {
        return Err(ProjError::DimensionMismatch {
            expected: h.covector().len(),
            found: p.rep().len(),
        }
        .into());
    }
    if h.pairing(p).abs() < 1e-9 {
        return Err(BendError::IncidentPolePlane);
    }
    Ok(ProjMap::from_unimodular(bending_matrix(h.covector(), p.rep(), t)))
}

/// A wall of a quadric domain together with its pole.
#[derive(Clone, Debug, PartialEq)]
pub struct WallSpec {
    pub hyperplane: ProjHyperplane,
    pub pole: ProjPoint,
    /// Side of the hyperplane left in place by a fold.
    pub side: Side,
}

impl WallSpec {
    pub fn from_quadric(hyperplane: ProjHyperplane, base: &QuadricDomain, side: Side) -> Result<Self, BendError> {
        let pole = crate::proj::pole(&hyperplane, base.form(), 1e-9)?;
        if hyperplane.pairing(&pole).abs() < 1e-9 {
            return Err(BendError::IncidentPolePlane);
        }
        if base.contains(&pole) != Membership::Outside {
            return Err(BendError::PoleInsideDomain);
        }
        Ok(Self { hyperplane, pole, side })
    }
}

/// A chart of `Ω`'s chart family in which `p` is finite: the hyperplane at
/// infinity is tilted towards `p` just enough to keep `Ω̄` affine.
fn apex_chart_covector<D: ConvexDomain + ?Sized>(omega: &D, p: &DVector<f64>) -> DVector<f64> {
    let chart = omega.chart();
    let n = omega.dim();
    let h0 = chart.frame().row(n).transpose();
    let (lo, hi) = omega.bounding_box();
    let radius = lo.abs().sup(&hi.abs()).norm();
    let inv_norm = chart.frame_inv().norm();
    let eps = 0.5 / (inv_norm * (1.0 + radius * radius).sqrt());
    let sign = if h0.dot(p) >= 0.0 { 1.0 } else { -1.0 };
    h0 + p.normalize() * (sign * eps)
}

/// Sampled test that `Ω` lies in the half-cone with apex `p` over `H ∩ Ω`.
pub fn cone_condition<D: ConvexDomain + ?Sized>(
    omega: &D,
    h: &ProjHyperplane,
    p: &ProjPoint,
    samples: usize,
    seed: u64,
) -> Result<bool, BendError> {
    let nu = h.covector();
    let pv = p.rep();
    if h.pairing(p).abs() < 1e-9 {
        return Err(BendError::IncidentPolePlane);
    }
    if omega.contains(p) != Membership::Outside {
        return Err(BendError::PoleInsideDomain);
    }
    let chart = omega.chart();
    let n = omega.dim();
    let hcov = apex_chart_covector(omega, pv);
    let nu_p = nu.dot(pv);
    let mut r = sampling::rng(seed);
    let (lo, hi) = omega.bounding_box();
    let mut signs = [false, false];
    let mut violated = false;
    let mut tested = 0;
    let mut attempts = 0;
    while tested < samples && attempts < samples * 50 {
        attempts += 1;
        let a = sampling::uniform_in_box(&mut r, &lo, &hi);
        if omega.membership(&a) != Membership::Inside {
            continue;
        }
        tested += 1;
        let x = chart.from_chart_coords(&crate::proj::lift_affine(&a));
        let nx = nu.dot(&x);
        signs[(nx > 0.0) as usize] = true;
        if violated {
            continue;
        }
        // z = line(p, x) ∩ H
        let z = pv * nx - &x * nu_p;
        let zc = chart.to_chart_coords(&z);
        if zc[n].abs() < 1e-12 * zc.norm() {
            violated = true;
            continue;
        }
        let za = zc.rows(0, n) / zc[n];
        if omega.membership(&za) == Membership::Outside {
            violated = true;
            continue;
        }
        // x = αP̂ + βẐ with lifts positive in the apex chart; need β > 0
        let sz = hcov.dot(&z).signum();
        let sx = hcov.dot(&x).signum();
        let beta = -sz / nu_p * sx;
        if beta <= 0.0 {
            violated = true;
        }
    }
    if !(signs[0] && signs[1]) {
        return Err(BendError::WallMissesDomain);
    }
    Ok(!violated)
}

/// What to do when the sampled cone condition fails before a fold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeGuard {
    Enforce,
    Proceed,
}

/// `Ω_q ∪ A_{H,p,t}(Ω_q̄)` for the wall `H` with pole `p`, `q` being
/// `wall.side`.
pub fn pli(
    omega: Box<dyn ConvexDomain>,
    wall: &WallSpec,
    t: f64,
    samples: usize,
    seed: u64,
    guard: ConeGuard,
) -> Result<PliDomain, BendError> {
    let ok = cone_condition(omega.as_ref(), &wall.hyperplane, &wall.pole, samples, seed)?;
    if !ok && guard == ConeGuard::Enforce {
        return Err(BendError::ConeConditionFailed);
    }
    let a = bending_map(&wall.hyperplane, &wall.pole, t)?;
    Ok(PliDomain::new(omega, &wall.hyperplane, &a, wall.side)?)
}

/// Bending parameter and truncation of the chamber tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BendParams {
    pub t: f64,
    /// Maximum number of wall crossings from the root chamber.
    pub depth: usize,
    /// Longest word used to enumerate wall translates.
    pub max_word_len: usize,
    /// Walls farther than this hyperbolic distance from the root are dropped.
    pub max_wall_distance: f64,
}

impl Default for BendParams {
    fn default() -> Self {
        Self {
            t: 0.0,
            depth: 6,
            max_word_len: 8,
            max_wall_distance: 8.0,
        }
    }
}

impl BendParams {
    pub fn new(t: f64, depth: usize) -> Self {
        Self {
            t,
            depth,
            ..Self::default()
        }
    }
}

/// Van Kampen data of the cut along the wall's hypersurface.
#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition {
    /// Separating case: generators on the left side keep their image, those
    /// on the right side are conjugated by the bending map.
    Amalgam {
        left: Vec<String>,
        right: Vec<String>,
        wall_subgroup: Vec<Word>,
    },
    /// Non-separating case with stable letter `stable`; each pair `(γ_g, γ_d)`
    /// satisfies `γ_g = stable⁻¹ γ_d stable`. `cut_group` generates the
    /// fundamental group of the cut manifold.
    Hnn {
        stable: String,
        pairs: Vec<(Word, Word)>,
        cut_group: Vec<Word>,
        wall_subgroup: Vec<Word>,
    },
}

impl Decomposition {
    pub fn wall_subgroup(&self) -> &[Word] {
        match self {
            Decomposition::Amalgam { wall_subgroup, .. } | Decomposition::Hnn { wall_subgroup, .. } => wall_subgroup,
        }
    }
}

/// Translates of the initial wall used to build the chamber tree.
#[derive(Clone, Debug)]
pub struct WallEnumeration {
    /// Word `w` with wall `ρ₀(w)·H₀`, shortest first.
    pub words: Vec<Word>,
    /// Equivariantly oriented covectors `ρ₀(w)^{-T} ν₀`, unit norm.
    pub covectors: Vec<DVector<f64>>,
    /// Root point in the base chart.
    pub root: DVector<f64>,
}

/// Output of [`build_bent_domain`].
#[derive(Clone, Debug)]
pub struct BentBuild {
    pub domain: BentDomain,
    pub rho_t: Representation,
    pub a_t: ProjMap,
    pub walls: WallEnumeration,
    pub params: BendParams,
    /// Decomposition relation residuals, `(id, residual)`.
    pub relations: Vec<(String, f64)>,
}

pub const RELATION_TOL: f64 = 1e-9;

fn foot_on_wall(q_inv: &DMatrix<f64>, nu: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let pole = q_inv * nu;
    x - &pole * (nu.dot(x) / nu.dot(&pole))
}

/// Hyperbolic distance from `x` (timelike lift) to the wall `ν`.
fn point_distance(q: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let xy = (x.transpose() * q * y)[0];
    let xx = (x.transpose() * q * x)[0];
    let yy = (y.transpose() * q * y)[0];
    (xy.abs() / (xx * yy).sqrt()).max(1.0).acosh()
}

fn wall_distance(q: &DMatrix<f64>, q_inv: &DMatrix<f64>, nu: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let xx = -(x.transpose() * q * x)[0];
    let nn = (nu.transpose() * q_inv * nu)[0];
    (nu.dot(x).abs() / (xx * nn).sqrt()).asinh()
}

/// Cosine-like invariant of two walls; `|c| < 1` iff they cross inside.
fn wall_cosine(q_inv: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ab = (a.transpose() * q_inv * b)[0];
    let aa = (a.transpose() * q_inv * a)[0];
    let bb = (b.transpose() * q_inv * b)[0];
    ab / (aa * bb).sqrt()
}

fn chart_point(chart: &AffineChart, x: &DVector<f64>) -> DVector<f64> {
    let c = chart.to_chart_coords(x);
    let n = c.len() - 1;
    c.rows(0, n) / c[n]
}

fn positive_lift(chart: &AffineChart, x: DVector<f64>) -> DVector<f64> {
    if chart.to_chart_coords(&x)[x.len() - 1] < 0.0 {
        -x
    } else {
        x
    }
}

struct Dedup {
    cells: HashMap<Vec<i64>, Vec<usize>>,
    grid: f64,
}

impl Dedup {
    fn key(&self, c: &DVector<f64>) -> Vec<i64> {
        c.iter().map(|v| (v / self.grid).round() as i64).collect()
    }

    fn canonical(v: &DVector<f64>) -> DVector<f64> {
        ProjHyperplane::new(v.clone()).expect("nonzero").covector().clone()
    }

    /// Index of a stored covector within the grid tolerance, if any.
    fn find(&self, c: &DVector<f64>, stored: &[DVector<f64>]) -> Option<usize> {
        let base = self.key(c);
        let dim = base.len();
        for code in 0..3usize.pow(dim as u32) {
            let mut k = base.clone();
            let mut rest = code;
            for ki in k.iter_mut() {
                *ki += (rest % 3) as i64 - 1;
                rest /= 3;
            }
            if let Some(list) = self.cells.get(&k) {
                for &i in list {
                    if (Self::canonical(&stored[i]) - c).amax() < self.grid {
                        return Some(i);
                    }
                }
            }
        }
        None
    }
}

/// Enumerates the translates `ρ₀(w)·H₀` over reduced words, rooted in the
/// chamber adjacent to `H₀` across which the decomposition pairs the wall.
pub fn enumerate_walls(
    rho0: &Representation,
    dec: &Decomposition,
    base: &QuadricDomain,
    wall0: &WallSpec,
    params: &BendParams,
) -> Result<WallEnumeration, BendError> {
    let q = base.form();
    let q_inv = q.clone().try_inverse().ok_or(DomainError::SignatureLost)?;
    let chart = base.chart();
    let nu0 = wall0.hyperplane.covector().clone();

    // generators whose image fixes H₀ do not create new walls at the end of a word
    let stabilizing: Vec<String> = rho0
        .generators()
        .iter()
        .filter(|g| {
            let m = rho0.image(g).expect("own generator");
            m.apply_hyperplane(&wall0.hyperplane).approx_eq(&wall0.hyperplane, 1e-9)
        })
        .cloned()
        .collect();

    let mut words = Vec::new();
    let mut covectors: Vec<DVector<f64>> = Vec::new();
    let mut dedup = Dedup {
        cells: HashMap::new(),
        grid: 1e-6,
    };
    for w in rho0.reduced_words(params.max_word_len) {
        if let Some((last, _)) = w.letters().last() {
            if stabilizing.contains(last) {
                continue;
            }
        }
        let g = rho0.eval(&w)?;
        let nu = (g.inverse().matrix().transpose() * &nu0).normalize();
        let canon = Dedup::canonical(&nu);
        if dedup.find(&canon, &covectors).is_some() {
            continue;
        }
        let key = dedup.key(&canon);
        dedup.cells.entry(key).or_default().push(covectors.len());
        covectors.push(nu);
        words.push(w);
    }

    // root chamber: between H₀ and an adjacent translate
    let centre = positive_lift(chart, chart.from_chart_coords(&crate::proj::lift_affine(base.center())));
    let m0 = positive_lift(chart, foot_on_wall(&q_inv, &nu0, &centre));
    let candidates: Vec<Word> = match dec {
        Decomposition::Hnn { stable, .. } => vec![
            Word::from_letters(vec![(stable.clone(), -1)]),
            Word::from_letters(vec![(stable.clone(), 1)]),
        ],
        Decomposition::Amalgam { left, .. } => left
            .iter()
            .flat_map(|g| {
                [
                    Word::from_letters(vec![(g.clone(), 1)]),
                    Word::from_letters(vec![(g.clone(), -1)]),
                ]
            })
            .collect(),
    };
    let mut root = None;
    for cand in candidates {
        let g = rho0.eval(&cand)?;
        let nu1 = g.inverse().matrix().transpose() * &nu0;
        if ProjHyperplane::new(nu1.clone())?.approx_eq(&wall0.hyperplane, 1e-9) {
            continue;
        }
        let m1 = positive_lift(chart, foot_on_wall(&q_inv, &nu1, &centre));
        let same = |c: &DVector<f64>| {
            let h = ProjHyperplane::new(c.clone()).expect("nonzero");
            h.approx_eq(&wall0.hyperplane, 1e-6)
                || h.approx_eq(&ProjHyperplane::new(nu1.clone()).expect("nonzero"), 1e-6)
        };
        let separated = covectors
            .iter()
            .any(|c| !same(c) && (c.dot(&m0) > 0.0) != (c.dot(&m1) > 0.0));
        if separated {
            continue;
        }
        let a0 = chart_point(chart, &m0);
        let a1 = chart_point(chart, &m1);
        root = Some((a0 + a1) * 0.5);
        break;
    }
    let root = root.ok_or(BendError::NoRootChamber)?;
    let r = chart.from_chart_coords(&crate::proj::lift_affine(&root));

    // orient ν₀ so the root is on its negative side; ρ₀ pushes the orientation
    let flip = if nu0.dot(&r) > 0.0 { -1.0 } else { 1.0 };
    let mut kept_words = Vec::new();
    let mut kept = Vec::new();
    for (w, nu) in words.into_iter().zip(covectors) {
        if wall_distance(q, &q_inv, &nu, &r) <= params.max_wall_distance {
            kept_words.push(w);
            kept.push(nu * flip);
        }
    }
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            if wall_cosine(&q_inv, &kept[i], &kept[j]).abs() < 1.0 - 1e-9 {
                return Err(BendError::WallsIntersect(
                    kept_words[i].to_string(),
                    kept_words[j].to_string(),
                ));
            }
        }
    }
    Ok(WallEnumeration {
        words: kept_words,
        covectors: kept,
        root,
    })
}

fn max_abs(a: &ProjMap, b: &ProjMap) -> f64 {
    a.max_abs_diff(b)
}

/// The deformed representation: `ρ_t = ρ₀` on the left (or cut) group, the
/// right side conjugated by `a_t`, or the stable letter premultiplied by it.
pub fn deform(rho0: &Representation, dec: &Decomposition, a_t: &ProjMap) -> Result<Representation, BendError> {
    let a_inv = a_t.inverse();
    let mut images = Vec::new();
    let mut inverses = Vec::new();
    for g in rho0.generators() {
        let m = rho0.image(g).expect("own generator");
        let m_inv = rho0.eval(&Word::from_letters(vec![(g.clone(), -1)]))?;
        let (img, inv) = match dec {
            Decomposition::Amalgam { right, .. } if right.contains(g) => {
                (a_t.compose(m).compose(&a_inv), a_t.compose(&m_inv).compose(&a_inv))
            }
            Decomposition::Hnn { stable, .. } if stable == g => (a_t.compose(m), m_inv.compose(&a_inv)),
            _ => (m.clone(), m_inv),
        };
        images.push(img);
        inverses.push(inv);
    }
    Ok(Representation::with_inverses(rho0.generators().to_vec(), images, inverses)?.with_decomposition(dec.clone()))
}

/// Residuals of the decomposition relations for `ρ_t` against `ρ₀`.
pub fn relation_residuals(
    rho0: &Representation,
    rho_t: &Representation,
    dec: &Decomposition,
    a_t: &ProjMap,
) -> Result<Vec<(String, f64)>, BendError> {
    let mut out = Vec::new();
    match dec {
        Decomposition::Hnn {
            stable,
            pairs,
            cut_group,
            ..
        } => {
            let alpha = Word::from_letters(vec![(stable.clone(), 1)]);
            let at = rho_t.eval(&alpha)?;
            let at_inv = at.inverse();
            for (k, (g, d)) in pairs.iter().enumerate() {
                // ρ_t restricted to the cut group is ρ₀
                let lhs = rho0.eval(g)?;
                let rhs = at_inv.compose(&rho0.eval(d)?).compose(&at);
                out.push((format!("hnn.pair.{k}"), max_abs(&lhs, &rhs)));
                let lhs_t = rho_t.eval(g)?;
                let rhs_t = at_inv.compose(&rho_t.eval(d)?).compose(&at);
                out.push((format!("hnn.pair_words.{k}"), max_abs(&lhs_t, &rhs_t)));
            }
            for (k, w) in cut_group.iter().enumerate() {
                out.push((format!("hnn.cut.{k}"), max_abs(&rho_t.eval(w)?, &rho0.eval(w)?)));
            }
        }
        Decomposition::Amalgam { wall_subgroup, .. } => {
            let a_inv = a_t.inverse();
            for (k, h) in wall_subgroup.iter().enumerate() {
                let m = rho0.eval(h)?;
                out.push((
                    format!("amalgam.wall.{k}"),
                    max_abs(&a_t.compose(&m).compose(&a_inv), &m),
                ));
            }
        }
    }
    Ok(out)
}

/// Builds `ρ_t` and the truncated bent domain `Ω_t`.
pub fn build_bent_domain(
    rho0: &Representation,
    dec: &Decomposition,
    base: &QuadricDomain,
    wall0: &WallSpec,
    params: &BendParams,
) -> Result<BentBuild, BendError> {
    let q = base.form();
    let scale = q.amax();
    for g in rho0.generators() {
        let m = rho0.image(g).expect("own generator");
        let pushed = m.push_form(q);
        if (&pushed - q).amax() > 1e-9 * scale {
            return Err(BendError::NotPreserved(g.clone()));
        }
    }
    for h in dec.wall_subgroup() {
        let m = rho0.eval(h)?;
        if !m.apply_hyperplane(&wall0.hyperplane).approx_eq(&wall0.hyperplane, 1e-9) {
            return Err(BendError::WallNotStabilized(h.to_string()));
        }
    }
    if let Decomposition::Hnn { stable, pairs, .. } = dec {
        let alpha = rho0.eval(&Word::from_letters(vec![(stable.clone(), 1)]))?;
        for (k, (g, d)) in pairs.iter().enumerate() {
            let lhs = rho0.eval(g)?;
            let rhs = alpha.inverse().compose(&rho0.eval(d)?).compose(&alpha);
            let residual = max_abs(&lhs, &rhs);
            if residual > RELATION_TOL {
                return Err(BendError::RelationViolated {
                    id: format!("rho0.hnn.pair.{k}"),
                    residual,
                });
            }
        }
    }

    let a_t = bending_map(&wall0.hyperplane, &wall0.pole, params.t)?;
    let rho_t = deform(rho0, dec, &a_t)?;
    let relations = relation_residuals(rho0, &rho_t, dec, &a_t)?;
    if let Some((id, residual)) = relations.iter().find(|(_, r)| *r > RELATION_TOL) {
        return Err(BendError::RelationViolated {
            id: id.clone(),
            residual: *residual,
        });
    }

    let walls = enumerate_walls(rho0, dec, base, wall0, params)?;
    // the root-centred chart keeps every pole on the far side of its wall
    let root = base.chart().from_chart_coords(&crate::proj::lift_affine(&walls.root));
    let chart = AffineChart::centered(base.form(), &root)?;
    let centred = QuadricDomain::with_chart(base.form().clone(), chart)?.with_tol(base.tol());
    let root_c = centred.chart().project(&ProjPoint::new(root)?, 1e-12)?;
    let domain = BentDomain::new(centred, root_c, &walls.covectors, params.t, params.depth)?;
    let domain = if params.t == 0.0 {
        domain
    } else {
        equivariant_maps(domain, rho0, &rho_t, &walls.words)?
    };
    Ok(BentBuild {
        domain,
        rho_t,
        a_t,
        walls,
        params: *params,
        relations,
    })
}

/// Largest relative residual of `T_{g·c} ρ₀(g) = ρ_t(g) T_c` over chambers
/// containing orbit points `ρ₀(w)·root` for words up to `word_len`, skipping
/// chambers deeper than `depth_limit`.
pub fn equivariance_residual(
    build: &BentBuild,
    rho0: &Representation,
    word_len: usize,
    depth_limit: usize,
) -> Result<(f64, usize), BendError> {
    let dom = &build.domain;
    let chart = dom.base().chart();
    let r = chart.from_chart_coords(&crate::proj::lift_affine(dom.root()));
    let q = dom.base().form();
    let far = |y: &DVector<f64>| point_distance(q, &r, y) > build.params.max_wall_distance;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let letters: Vec<Word> = rho0
        .generators()
        .iter()
        .flat_map(|g| {
            [
                Word::from_letters(vec![(g.clone(), 1)]),
                Word::from_letters(vec![(g.clone(), -1)]),
            ]
        })
        .collect();
    for w in rho0.reduced_words(word_len) {
        let x = rho0.eval(&w)?.matrix() * &r;
        let c = dom.locate_base(&x);
        if far(&x) || dom.chambers()[c].depth > depth_limit {
            continue;
        }
        for g in &letters {
            let g0 = rho0.eval(g)?;
            let gt = build.rho_t.eval(g)?;
            let gx = g0.matrix() * &x;
            let c2 = dom.locate_base(&gx);
            if far(&gx) || dom.chambers()[c2].depth > depth_limit {
                continue;
            }
            let lhs = dom.chambers()[c2].map.compose(&g0);
            let rhs = gt.compose(&dom.chambers()[c].map);
            let scale = lhs.matrix().amax().max(1.0);
            worst = worst.max(lhs.max_abs_diff(&rhs) / scale);
            checked += 1;
        }
    }
    Ok((worst, checked))
}

// Chamber maps from T_{ρ₀(w)c'} = ρ_t(w) T_{c'} ρ₀(w)⁻¹ with c' next to the
// initial wall: word products stay far better conditioned than long chains of
// bending matrices.
fn equivariant_maps(
    domain: BentDomain,
    rho0: &Representation,
    rho_t: &Representation,
    words: &[Word],
) -> Result<BentDomain, BendError> {
    let chambers = domain.chambers();
    let across = chambers
        .iter()
        .find(|c| c.wall.is_some_and(|w| words[w].is_empty()))
        .map(|c| (c.map.clone(), c.map.inverse()));
    let Some((across, across_inv)) = across else {
        return Ok(domain);
    };
    let mut maps = Vec::with_capacity(chambers.len());
    for c in chambers {
        let map = match c.wall {
            Some(w) if !words[w].is_empty() => {
                let id = ProjMap::identity(domain.dim());
                let (near, near_inv) = if c.sign > 0.0 {
                    (&across, &across_inv)
                } else {
                    (&id, &id)
                };
                let w_inv = words[w].inverse();
                let map = rho_t.eval(&words[w])?.compose(near).compose(&rho0.eval(&w_inv)?);
                let inv = rho0.eval(&words[w])?.compose(near_inv).compose(&rho_t.eval(&w_inv)?);
                (map, inv)
            }
            _ => (c.map.clone(), c.map.inverse()),
        };
        maps.push(map);
    }
    Ok(domain.with_maps(maps)?)
}

/// Word of length at most `max_len` maximizing `|tr ρ_t(w) − tr ρ₀(w)|`.
pub fn trace_separation(
    rho0: &Representation,
    rho_t: &Representation,
    max_len: usize,
) -> Result<(Word, f64), BendError> {
    let mut best = (Word::identity(), 0.0);
    for w in rho0.reduced_words(max_len) {
        let d = (rho_t.eval(&w)?.matrix().trace() - rho0.eval(&w)?.matrix().trace()).abs();
        if d > best.1 {
            best = (w, d);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1_wall() -> (ProjHyperplane, ProjPoint) {
        (
            ProjHyperplane::from_slice(&[1.0, 0.0, 0.0]).unwrap(),
            ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap(),
        )
    }

    #[test]
    fn bending_map_diagonal_case() {
        let (h, p) = e1_wall();
        let a = bending_map(&h, &p, 0.1).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2f64.exp(), (-0.1f64).exp(), (-0.1f64).exp()]));
        assert!((a.matrix() - want).amax() < 1e-15);
    }

    #[test]
    fn bending_map_identity_at_zero_and_additive() {
        let h = ProjHyperplane::from_slice(&[1.0, 0.3, -0.5]).unwrap();
        let p = ProjPoint::from_slice(&[2.0, 0.1, 1.0]).unwrap();
        assert_eq!(bending_map(&h, &p, 0.0).unwrap(), ProjMap::identity(2));
        for (t, s) in [(0.1, 0.2), (-0.3, 0.7), (1.0, -1.0)] {
            let lhs = bending_map(&h, &p, t)
                .unwrap()
                .compose(&bending_map(&h, &p, s).unwrap());
            let rhs = bending_map(&h, &p, t + s).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-9);
            assert!((rhs.matrix().determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bending_map_fixes_wall_and_pole() {
        let h = ProjHyperplane::from_slice(&[1.0, 0.3, -0.5]).unwrap();
        let p = ProjPoint::from_slice(&[2.0, 0.1, 1.0]).unwrap();
        let a = bending_map(&h, &p, 0.4).unwrap();
        assert!(a.apply(&p).approx_eq(&p, 1e-12));
        for x in [[0.5, 0.0, 1.0], [0.0, 5.0, 3.0]] {
            let x = ProjPoint::from_slice(&x).unwrap();
            assert!(a.apply(&x).approx_eq(&x, 1e-12));
        }
        let on_h = ProjPoint::from_slice(&[0.5, 0.0, 1.0]).unwrap();
        assert!(h.incident(&on_h, 1e-12));
        let incident = ProjPoint::from_slice(&[0.0, 5.0, 3.0]).unwrap();
        assert_eq!(bending_map(&h, &incident, 0.1), Err(BendError::IncidentPolePlane));
    }

    #[test]
    fn cone_condition_examples() {
        let disk = QuadricDomain::klein(2);
        let (h, pole) = e1_wall();
        assert_eq!(cone_condition(&disk, &h, &pole, 2000, 1), Ok(true));
        let apex = ProjPoint::from_affine(&[2.0, 0.0]);
        assert_eq!(cone_condition(&disk, &h, &apex, 2000, 1), Ok(false));
        let far = ProjHyperplane::from_slice(&[1.0, 0.0, -3.0]).unwrap();
        let far_pole = ProjPoint::from_affine(&[1.0 / 3.0, 0.0]);
        assert_eq!(
            cone_condition(&disk, &far, &far_pole, 200, 1),
            Err(BendError::PoleInsideDomain)
        );
        let far_apex = ProjPoint::from_affine(&[5.0, 0.0]);
        assert_eq!(
            cone_condition(&disk, &far, &far_apex, 200, 1),
            Err(BendError::WallMissesDomain)
        );
    }

    #[test]
    fn pli_at_zero_is_unchanged_and_glues_on_the_wall() {
        let disk = QuadricDomain::klein(2);
        let (h, _) = e1_wall();
        let wall = WallSpec::from_quadric(h, &disk, Side::Negative).unwrap();
        let flat = pli(Box::new(disk.clone()), &wall, 0.0, 1000, 3, ConeGuard::Enforce).unwrap();
        let mut r = sampling::rng(5);
        for _ in 0..1000 {
            let a = sampling::uniform_in_box(&mut r, &DVector::from_element(2, -1.2), &DVector::from_element(2, 1.2));
            assert_eq!(flat.membership(&a), disk.membership(&a));
        }
        let bent = pli(Box::new(disk.clone()), &wall, 0.3, 1000, 3, ConeGuard::Enforce).unwrap();
        // the wall is fixed pointwise, so its chord survives unchanged
        for k in 0..50 {
            let y = -1.0 + 2.0 * (k as f64 + 0.5) / 50.0;
            let a = DVector::from_vec(vec![0.0, y]);
            assert_eq!(bent.membership(&a), Membership::Inside, "y = {y}");
        }
        for y in [-1.0, 1.0] {
            let a = DVector::from_vec(vec![0.0, y]);
            assert_eq!(bent.membership(&a), Membership::OnBoundary);
        }
    }

    #[test]
    fn pli_output_is_convex() {
        let disk = QuadricDomain::klein(2);
        let (h, _) = e1_wall();
        let wall = WallSpec::from_quadric(h, &disk, Side::Negative).unwrap();
        let bent = pli(Box::new(disk), &wall, 0.3, 1000, 3, ConeGuard::Enforce).unwrap();
        assert_eq!(crate::convex::midpoint_violations(&bent, 10_000, 9), 0);
    }

    #[test]
    fn pli_chords_match_bisection() {
        let disk = QuadricDomain::klein(2);
        let (h, _) = e1_wall();
        let wall = WallSpec::from_quadric(h, &disk, Side::Negative).unwrap();
        let bent = pli(Box::new(disk), &wall, 0.3, 1000, 3, ConeGuard::Enforce).unwrap();
        let mut r = sampling::rng(12);
        for _ in 0..200 {
            let a = crate::convex::random_interior(&bent, &mut r);
            let u = sampling::unit_vector(&mut r, 2);
            let (_, hi) = bent.chord_params(&a, &u).unwrap();
            let b = crate::convex::bisect_exit(&bent, &a, &u, 0.1).unwrap();
            assert!((hi - b).abs() < 1e-8, "{hi} vs {b}");
        }
    }
}
