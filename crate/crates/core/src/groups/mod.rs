//! Finitely generated representations into `SL(n+1, R)`.

mod classify;
mod dirichlet;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bend::{Decomposition, WallSpec};
use crate::convex::{QuadricDomain, Side};
use crate::proj::{ProjError, ProjHyperplane, ProjMap};

pub use classify::{
    classify_element, eigenvalues, irreducibility_dimension, limit_set_sample, limit_set_words, ElementClass,
    ElementKind,
};
pub use dirichlet::{dirichlet_domain, DirichletDomain, DirichletWall};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("cannot parse word: {0}")]
    Parse(String),
    #[error("generator images have inconsistent sizes")]
    DimensionMismatch,
    #[error("no sampled word is hyperbolic")]
    NoHyperbolicFound,
    #[error("base point is not interior")]
    NotInterior,
    #[error("base point has a nontrivial stabilizer")]
    StabilizerNontrivial,
    #[error("duplicate generator name {0}")]
    DuplicateGenerator(String),
    #[error(transparent)]
    Proj(#[from] ProjError),
}

/// A word in generators and their inverses, read left to right.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<(String, i32)>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Letters with exponents `±1`; other exponents are expanded.
    pub fn from_letters(letters: Vec<(String, i32)>) -> Self {
        let mut out = Vec::new();
        for (g, e) in letters {
            for _ in 0..e.unsigned_abs() {
                out.push((g.clone(), e.signum()));
            }
        }
        Self { letters: out }
    }

    /// Parses whitespace-separated tokens `X`, `X^-1` or `X^k`; the empty
    /// string and `1` denote the identity.
    pub fn parse(s: &str) -> Result<Self, GroupError> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(Self::identity());
        }
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (n, e.parse::<i32>().map_err(|_| GroupError::Parse(tok.to_string()))?),
                None => (tok, 1),
            };
            if name.is_empty() || exp == 0 {
                return Err(GroupError::Parse(tok.to_string()));
            }
            letters.push((name.to_string(), exp));
        }
        Ok(Self::from_letters(letters))
    }

    pub fn letters(&self) -> &[(String, i32)] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|(g, e)| (g.clone(), -e)).collect(),
        }
    }

    /// Concatenation with free reduction at the junction.
    pub fn concat(&self, other: &Word) -> Self {
        let mut letters = self.letters.clone();
        for l in &other.letters {
            match letters.last() {
                Some(last) if last.0 == l.0 && last.1 == -l.1 => {
                    letters.pop();
                }
                _ => letters.push(l.clone()),
            }
        }
        Self { letters }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|(g, e)| if *e == 1 { g.clone() } else { format!("{g}^{e}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Generator images in `SL(n+1, R)`, with optional decomposition data.
#[derive(Clone, Debug)]
pub struct Representation {
    generators: Vec<String>,
    images: Vec<ProjMap>,
    inverses: Vec<ProjMap>,
    decomposition: Option<Decomposition>,
}

impl Representation {
    pub fn new(generators: Vec<String>, images: Vec<ProjMap>) -> Result<Self, GroupError> {
        let inverses = images.iter().map(|m| m.inverse()).collect();
        Self::with_inverses(generators, images, inverses)
    }

    /// Like [`Self::new`] with inverse images supplied, for inputs whose
    /// inverses are known exactly.
    pub fn with_inverses(
        generators: Vec<String>,
        images: Vec<ProjMap>,
        inverses: Vec<ProjMap>,
    ) -> Result<Self, GroupError> {
        if generators.len() != images.len() || images.len() != inverses.len() {
            return Err(GroupError::DimensionMismatch);
        }
        let dim = images.first().map(|m| m.dim());
        if images.iter().chain(&inverses).any(|m| Some(m.dim()) != dim) {
            return Err(GroupError::DimensionMismatch);
        }
        for (i, g) in generators.iter().enumerate() {
            if generators[..i].contains(g) {
                return Err(GroupError::DuplicateGenerator(g.clone()));
            }
        }
        for m in &images {
            ProjMap::new(m.matrix().clone())?;
        }
        Ok(Self {
            generators,
            images,
            inverses,
            decomposition: None,
        })
    }

    /// Every generator sent to the identity of `SL(n+1)`.
    pub fn trivial(generators: &[&str], n: usize) -> Self {
        let names: Vec<String> = generators.iter().map(|s| s.to_string()).collect();
        let images = vec![ProjMap::identity(n); names.len()];
        Self::new(names, images).expect("identity images")
    }

    pub fn with_decomposition(mut self, dec: Decomposition) -> Self {
        self.decomposition = Some(dec);
        self
    }

    pub fn decomposition(&self) -> Option<&Decomposition> {
        self.decomposition.as_ref()
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.images.first().map(|m| m.dim()).unwrap_or(0)
    }

    pub fn image(&self, name: &str) -> Option<&ProjMap> {
        self.generators.iter().position(|g| g == name).map(|i| &self.images[i])
    }

    fn letter(&self, name: &str, exp: i32) -> Result<&ProjMap, GroupError> {
        let i = self
            .generators
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| GroupError::UnknownGenerator(name.to_string()))?;
        Ok(if exp > 0 { &self.images[i] } else { &self.inverses[i] })
    }

    pub fn eval(&self, w: &Word) -> Result<ProjMap, GroupError> {
        let mut out = ProjMap::identity(self.dim());
        for (g, e) in w.letters() {
            out = out.compose(self.letter(g, *e)?);
        }
        Ok(out)
    }

    /// All freely reduced words of length at most `max_len`, shortest first,
    /// starting with the identity.
    pub fn reduced_words(&self, max_len: usize) -> Vec<Word> {
        let letters: Vec<(String, i32)> = self
            .generators
            .iter()
            .flat_map(|g| [(g.clone(), 1), (g.clone(), -1)])
            .collect();
        let mut out = vec![Word::identity()];
        let mut frontier = vec![Word::identity()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for l in &letters {
                    if let Some(last) = w.letters.last() {
                        if last.0 == l.0 && last.1 == -l.1 {
                            continue;
                        }
                    }
                    let mut v = w.clone();
                    v.letters.push(l.clone());
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

/// `‖gᵀ q g − q‖_∞ < tol`.
pub fn so_q_membership(g: &ProjMap, q: &DMatrix<f64>, tol: f64) -> bool {
    let m = g.matrix();
    (m.transpose() * q * m - q).amax() < tol
}

/// Adjoint action of an `SL(2)` matrix on `sl(2)` in the basis
/// `(x, y, z) ↦ [[x, y+z], [y−z, −x]]`, which preserves `x² + y² − z²`.
pub fn adjoint_sl2(m: [[f64; 2]; 2]) -> DMatrix<f64> {
    let [[a, b], [c, d]] = m;
    let det = a * d - b * c;
    let inv = [[d / det, -b / det], [-c / det, a / det]];
    let basis = [
        [[1.0, 0.0], [0.0, -1.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, 1.0], [-1.0, 0.0]],
    ];
    let mul = |p: [[f64; 2]; 2], q: [[f64; 2]; 2]| {
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
            }
        }
        r
    };
    let mut out = DMatrix::zeros(3, 3);
    for (col, e) in basis.iter().enumerate() {
        let x = mul(mul(m, *e), inv);
        out[(0, col)] = x[0][0];
        out[(1, col)] = 0.5 * (x[0][1] + x[1][0]);
        out[(2, col)] = 0.5 * (x[0][1] - x[1][0]);
    }
    out
}

fn sl2_inverse(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let [[a, b], [c, d]] = m;
    [[d, -b], [-c, a]]
}

pub const TORUS_A: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, 2.0]];
pub const TORUS_B: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 2.0]];

/// The once-punctured torus group on the Klein disk: generators `A`, `B` as
/// adjoint images of the pair above, split along the closed geodesic of `A`
/// with stable letter `B`.
pub fn punctured_torus_rep() -> Representation {
    let images = vec![
        ProjMap::from_unimodular(adjoint_sl2(TORUS_A)),
        ProjMap::from_unimodular(adjoint_sl2(TORUS_B)),
    ];
    let inverses = vec![
        ProjMap::from_unimodular(adjoint_sl2(sl2_inverse(TORUS_A))),
        ProjMap::from_unimodular(adjoint_sl2(sl2_inverse(TORUS_B))),
    ];
    let w = |s: &str| Word::parse(s).expect("literal word");
    let dec = Decomposition::Hnn {
        stable: "B".into(),
        pairs: vec![(w("B^-1 A B"), w("A"))],
        cut_group: vec![w("A"), w("B^-1 A B")],
        wall_subgroup: vec![w("A")],
    };
    Representation::with_inverses(vec!["A".into(), "B".into()], images, inverses)
        .expect("unimodular images")
        .with_decomposition(dec)
}

/// Base quadric, wall and pole of [`punctured_torus_rep`]: the wall is the
/// axis of `A`, its pole the fixed line of `A` off the axis.
pub fn punctured_torus_wall() -> (QuadricDomain, WallSpec) {
    let base = QuadricDomain::klein(2);
    // traceless part of A, fixed by its own adjoint action
    let [[a, b], [c, d]] = TORUS_A;
    let half = 0.5 * (a - d);
    let pole = DVector::from_vec(vec![half, 0.5 * (b + c), 0.5 * (b - c)]);
    let nu = base.form() * pole;
    let wall = WallSpec::from_quadric(ProjHyperplane::new(nu).expect("nonzero"), &base, Side::Negative)
        .expect("axis of a hyperbolic element");
    (base, wall)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_parse_and_display() {
        let w = Word::parse("B^-1 A B").unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.to_string(), "B^-1 A B");
        assert_eq!(Word::parse("A^2").unwrap().to_string(), "A A");
        assert_eq!(Word::parse("").unwrap(), Word::identity());
        assert!(Word::parse("A^x").is_err());
        assert_eq!(w.concat(&w.inverse()), Word::identity());
    }

    #[test]
    fn torus_commutator_trace_is_minus_two() {
        let m = |p: [[f64; 2]; 2], q: [[f64; 2]; 2]| {
            let mut r = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
                }
            }
            r
        };
        let c = m(m(TORUS_A, TORUS_B), m(sl2_inverse(TORUS_A), sl2_inverse(TORUS_B)));
        assert_eq!(c[0][0] + c[1][1], -2.0);
    }

    #[test]
    fn adjoint_images_preserve_the_klein_form() {
        let rho = punctured_torus_rep();
        let q = QuadricDomain::klein(2).form().clone();
        for g in ["A", "B"] {
            let m = rho.image(g).unwrap();
            assert!((m.matrix().transpose() * &q * m.matrix() - &q).amax() < 1e-12);
            assert!(so_q_membership(m, &q, 1e-12));
        }
        let a = rho.image("A").unwrap().matrix();
        let want = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, -3.0, 1.0, 1.5, -1.5, -3.0, -1.5, 3.5]);
        assert_eq!(a, &want);
    }

    #[test]
    fn exact_inverses() {
        let rho = punctured_torus_rep();
        let w = Word::parse("A B A^-1 B^-1").unwrap();
        let c = rho.eval(&w).unwrap();
        let back = c.compose(&rho.eval(&w.inverse()).unwrap());
        assert_eq!(back, ProjMap::identity(2));
    }

    #[test]
    fn reduced_word_counts() {
        let rho = punctured_torus_rep();
        // 1 + 4 + 12 + 36
        assert_eq!(rho.reduced_words(3).len(), 53);
    }

    #[test]
    fn wall_passes_through_the_axis_endpoints() {
        let (base, wall) = punctured_torus_wall();
        let a = punctured_torus_rep().image("A").unwrap().clone();
        let class = classify_element(&a, 1e-9);
        for p in [class.attracting.unwrap(), class.repelling.unwrap()] {
            assert!(wall.hyperplane.incident(&p, 1e-9));
            assert!((p.rep().transpose() * base.form() * p.rep())[0].abs() < 1e-9);
        }
        assert!(a.apply(&wall.pole).approx_eq(&wall.pole, 1e-12));
    }
}
