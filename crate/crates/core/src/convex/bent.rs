//! Piecewise-projective domains obtained by bending an ellipsoid along a finite
//! family of pairwise disjoint walls.
//!
//! The walls cut the ellipsoid into chambers whose adjacency is a tree rooted
//! at a chosen base point. Each chamber carries the product of the bending
//! maps met on the way from the root; the bent domain is the union of the
//! chamber images. All per-chamber queries are closed-form: an image quadric
//! and the image wall covectors, all in the base chart.

use nalgebra::{DMatrix, DVector};

use super::{check_dir, ConvexDomain, DomainError, Membership, QuadricDomain};
use crate::bend::bending_matrix;
use crate::proj::{lift_affine, AffineChart, ProjHyperplane, ProjMap};

/// One chamber of the tree.
#[derive(Clone, Debug)]
pub struct Chamber {
    pub id: usize,
    /// Number of walls crossed from the root.
    pub depth: usize,
    /// Cumulative bending cocycle value.
    pub map: ProjMap,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Index of the entry wall in the wall list.
    pub wall: Option<usize>,
    /// Wall shared with the parent.
    pub entry: Option<ProjHyperplane>,
    /// Covector of the entry wall, negative at the root.
    pub entry_covector: Option<DVector<f64>>,
    /// `+1` when the entry wall's equivariant covector is negative at the root.
    pub sign: f64,
    // chart data
    inv: DMatrix<f64>,
    image_entry: Option<DVector<f64>>,
}

/// Bent domain truncated to a finite wall family.
#[derive(Clone, Debug)]
pub struct BentDomain {
    base: QuadricDomain,
    // base form in chart coordinates, evaluated on chamber preimages
    form: DMatrix<f64>,
    chambers: Vec<Chamber>,
    root: DVector<f64>,
    t: f64,
    lo: DVector<f64>,
    hi: DVector<f64>,
    tol: f64,
}

/// Stable smallest `δ ≥ 0` where `Aδ² + 2Bδ + C` turns positive, given `C ≤ 0`.
fn upward_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = b * b - a * c;
    if a > 0.0 {
        let d = disc.max(0.0).sqrt();
        let r = if b >= 0.0 { c / (-b - d) } else { (-b + d) / a };
        r.max(0.0)
    } else {
        if b <= 0.0 || disc < 0.0 {
            return f64::INFINITY;
        }
        (c / (-b - disc.sqrt())).max(0.0)
    }
}

impl BentDomain {
    /// Bends `base` along `walls` (equivariantly oriented covectors in
    /// homogeneous coordinates) by parameter `t`, rooted at the affine point
    /// `root`. Walls more than `max_depth` crossings from the root are dropped.
    pub fn new(
        base: QuadricDomain,
        root: DVector<f64>,
        walls: &[DVector<f64>],
        t: f64,
        max_depth: usize,
    ) -> Result<Self, DomainError> {
        let n = base.dim();
        if base.membership(&root) != Membership::Inside {
            return Err(DomainError::NotInterior);
        }
        let chart = base.chart().clone();
        let q = base.form().clone();
        let q_inv = q.clone().try_inverse().ok_or(DomainError::SignatureLost)?;
        let r = chart.from_chart_coords(&lift_affine(&root));

        // root-oriented covectors, bending signs and feet of perpendiculars
        let mut mu = Vec::with_capacity(walls.len());
        let mut signs = Vec::with_capacity(walls.len());
        let mut feet = Vec::with_capacity(walls.len());
        for nu in walls {
            if nu.len() != n + 1 {
                return Err(DomainError::DimensionMismatch {
                    expected: n + 1,
                    found: nu.len(),
                });
            }
            let at_root = nu.dot(&r);
            let sign = if at_root < 0.0 { 1.0 } else { -1.0 };
            let m_w = nu * sign;
            let pole = &q_inv * &m_w;
            let mut foot = &r - &pole * (m_w.dot(&r) / m_w.dot(&pole));
            if chart.to_chart_coords(&foot)[n] < 0.0 {
                foot.neg_mut();
            }
            mu.push(m_w);
            signs.push(sign);
            feet.push(foot);
        }

        // walls separating each wall from the root
        let count = walls.len();
        let mut separators: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (w, foot) in feet.iter().enumerate() {
            for (v, m_v) in mu.iter().enumerate() {
                if v != w && m_v.dot(foot) > 0.0 {
                    separators[w].push(v);
                }
            }
        }
        let mut order: Vec<usize> = (0..count).filter(|w| separators[*w].len() < max_depth).collect();
        order.sort_by_key(|w| (separators[*w].len(), *w));

        let mut chambers = vec![Chamber {
            id: 0,
            depth: 0,
            map: ProjMap::identity(n),
            parent: None,
            children: Vec::new(),
            wall: None,
            entry: None,
            entry_covector: None,
            sign: 1.0,
            inv: DMatrix::identity(n + 1, n + 1),
            image_entry: None,
        }];
        let mut chamber_of = vec![usize::MAX; count];
        for w in order {
            let parent = separators[w]
                .iter()
                .max_by_key(|v| separators[**v].len())
                .map(|v| chamber_of[*v])
                .unwrap_or(0);
            if parent == usize::MAX {
                continue;
            }
            let pole = &q_inv * &mu[w];
            let a = bending_matrix(&mu[w], &pole, signs[w] * t);
            let mat = chambers[parent].map.matrix() * a;
            let map = ProjMap::from_unimodular(mat);
            let id = chambers.len();
            let chart_map = chart.map_to_chart(map.matrix());
            let inv = chart_map.clone().try_inverse().ok_or(DomainError::NumericalFailure)?;
            let parent_inv = &chambers[parent].inv;
            let image_entry = parent_inv.transpose() * chart.covector_to_chart(&mu[w]);
            chambers[parent].children.push(id);
            chambers.push(Chamber {
                id,
                depth: chambers[parent].depth + 1,
                map,
                parent: Some(parent),
                children: Vec::new(),
                wall: Some(w),
                entry: Some(ProjHyperplane::new(mu[w].clone())?),
                entry_covector: Some(mu[w].clone()),
                sign: signs[w],
                inv,
                image_entry: Some(image_entry),
            });
            chamber_of[w] = id;
        }

        let mut out = Self {
            form: chart.form_to_chart(&q),
            lo: DVector::zeros(n),
            hi: DVector::zeros(n),
            base,
            chambers,
            root,
            t,
            tol: 1e-12,
        };
        out.compute_box()?;
        Ok(out)
    }

    fn compute_box(&mut self) -> Result<(), DomainError> {
        let n = self.dim();
        let c = self.root.clone();
        let mut lo = c.clone();
        let mut hi = c.clone();
        let rays = if n == 2 { 720 } else { 4000 };
        let mut r = crate::sampling::rng(0x5eed);
        for k in 0..rays {
            let u = if n == 2 {
                let a = std::f64::consts::TAU * k as f64 / rays as f64;
                DVector::from_vec(vec![a.cos(), a.sin()])
            } else {
                crate::sampling::unit_vector(&mut r, n)
            };
            let (_, s) = self.chord_params(&c, &u)?;
            let p = &c + u * s;
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        let pad = (&hi - &lo) * 0.02;
        self.lo = lo - &pad;
        self.hi = hi + pad;
        Ok(())
    }

    /// Replaces the chamber maps by `maps` (same order), each paired with its
    /// inverse, for instance maps obtained from equivariance rather than from
    /// bending products.
    pub fn with_maps(mut self, maps: Vec<(ProjMap, ProjMap)>) -> Result<Self, DomainError> {
        if maps.len() != self.chambers.len() {
            return Err(DomainError::DimensionMismatch {
                expected: self.chambers.len(),
                found: maps.len(),
            });
        }
        let chart = self.base.chart().clone();
        for (id, (map, map_inv)) in maps.into_iter().enumerate() {
            let inv = chart.map_to_chart(map_inv.matrix());
            let c = &self.chambers[id];
            if let (Some(p), Some(mu)) = (c.parent, &c.entry_covector) {
                let e = self.chambers[p].inv.transpose() * chart.covector_to_chart(mu);
                self.chambers[id].image_entry = Some(e);
            }
            self.chambers[id].map = map;
            self.chambers[id].inv = inv;
        }
        self.compute_box()?;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn base(&self) -> &QuadricDomain {
        &self.base
    }

    pub fn chambers(&self) -> &[Chamber] {
        &self.chambers
    }

    pub fn root(&self) -> &DVector<f64> {
        &self.root
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn max_depth(&self) -> usize {
        self.chambers.iter().map(|c| c.depth).max().unwrap_or(0)
    }

    /// Walls bounding a chamber in the base: its entry wall and its children's.
    pub fn base_walls(&self, id: usize) -> Vec<ProjHyperplane> {
        let c = &self.chambers[id];
        c.entry
            .iter()
            .cloned()
            .chain(c.children.iter().filter_map(|k| self.chambers[*k].entry.clone()))
            .collect()
    }

    /// Chamber whose image contains the chart point with homogeneous lift `y`.
    fn locate_lift(&self, y: &DVector<f64>) -> usize {
        let mut c = 0;
        'walk: loop {
            for k in &self.chambers[c].children {
                let e = self.chambers[*k].image_entry.as_ref().expect("non-root");
                if e.dot(y) > 0.0 {
                    c = *k;
                    continue 'walk;
                }
            }
            return c;
        }
    }

    /// Chamber whose image contains the affine chart point `a`.
    pub fn locate(&self, a: &DVector<f64>) -> usize {
        self.locate_lift(&lift_affine(a))
    }

    /// Chamber containing the base point with homogeneous representative `x`
    /// (before bending).
    pub fn locate_base(&self, x: &DVector<f64>) -> usize {
        let chart = self.base.chart();
        let mut x = x.clone();
        if chart.to_chart_coords(&x)[self.dim()] < 0.0 {
            x.neg_mut();
        }
        let mut c = 0;
        'walk: loop {
            for k in &self.chambers[c].children {
                let e = self.chambers[*k].entry_covector.as_ref().expect("non-root");
                if e.dot(&x) > 0.0 {
                    c = *k;
                    continue 'walk;
                }
            }
            return c;
        }
    }

    /// Signed distance estimate to the boundary of the located chamber's image
    /// ellipsoid: negative inside.
    pub fn margin(&self, a: &DVector<f64>) -> f64 {
        let n = self.dim();
        let y = lift_affine(a);
        let c = &self.chambers[self.locate_lift(&y)];
        if (c.inv.row(n) * &y)[0] <= 0.0 {
            return f64::INFINITY;
        }
        let x = &c.inv * &y;
        let qx = &self.form * &x;
        let g = x.dot(&qx);
        let grad = (c.inv.columns(0, n).transpose() * &qx).norm() * 2.0;
        g / grad
    }

    fn forward(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<f64, DomainError> {
        let n = self.dim();
        let y0 = lift_affine(a);
        let mut vh = DVector::zeros(n + 1);
        vh.rows_mut(0, n).copy_from(v);
        let mut c = self.locate_lift(&y0);
        let mut s = 0.0;
        for _ in 0..=self.chambers.len() + 1 {
            let ch = &self.chambers[c];
            let y = &y0 + &vh * s;
            let xv = &ch.inv * &vh;
            let xy = &ch.inv * &y;
            let qv = &self.form * &xv;
            let qa = xv.dot(&qv);
            let qb = qv.dot(&xy);
            let qc = xy.dot(&(&self.form * &xy)).min(0.0);
            let mut best = s + upward_root(qa, qb, qc);
            let mut on_quadric = true;
            let mut next = None;
            // leaving the positive half of the chart lift
            let kappa = ch.inv.row(n).transpose();
            let kv = kappa.dot(&vh);
            if kv < 0.0 {
                let sk = s - kappa.dot(&y) / kv;
                if sk < best {
                    best = sk;
                    on_quadric = false;
                }
            }
            if let (Some(e), Some(p)) = (&ch.image_entry, ch.parent) {
                let ev = e.dot(&vh);
                if ev < 0.0 {
                    let sw = s - e.dot(&y) / ev;
                    if sw < best {
                        best = sw;
                        next = Some(p);
                    }
                }
            }
            for k in &ch.children {
                let e = self.chambers[*k].image_entry.as_ref().expect("non-root");
                let ev = e.dot(&vh);
                if ev > 0.0 {
                    let sw = s - e.dot(&y) / ev;
                    if sw < best {
                        best = sw;
                        next = Some(*k);
                    }
                }
            }
            match next {
                None if on_quadric && best.is_finite() => {
                    let yb = &y0 + &vh * best;
                    let xb = &ch.inv * &yb;
                    let g = xb.dot(&(&self.form * &xb));
                    let dg = 2.0 * qv.dot(&xb);
                    // one Newton step on the chamber quadric
                    return Ok(if dg > 0.0 { best - g / dg } else { best });
                }
                None => return Ok(best),
                Some(k) => {
                    s = best.max(s);
                    c = k;
                }
            }
        }
        Err(DomainError::NumericalFailure)
    }

    /// Largest disagreement between the maps of adjacent chambers on points of
    /// their shared wall, over `per_edge` points per wall.
    pub fn wall_consistency(&self, per_edge: usize) -> f64 {
        let n = self.dim();
        let chart = self.base.chart();
        let q = self.base.form();
        let mut worst: f64 = 0.0;
        for ch in &self.chambers[1..] {
            let parent = &self.chambers[ch.parent.expect("non-root")];
            let mu = ch.entry_covector.as_ref().expect("non-root");
            for x in wall_points(&self.base, chart, q, mu, per_edge, n) {
                let a = ProjMap::apply(&parent.map, &x);
                let b = ProjMap::apply(&ch.map, &x);
                worst = worst.max(a.rep_distance(&b));
            }
        }
        worst
    }
}

/// Points of `H ∩ Ω` for the wall with covector `mu`, spread along the chord
/// (or a circle of directions when `n > 2`).
pub(crate) fn wall_points(
    base: &QuadricDomain,
    chart: &AffineChart,
    q: &DMatrix<f64>,
    mu: &DVector<f64>,
    count: usize,
    n: usize,
) -> Vec<crate::proj::ProjPoint> {
    let q_inv = q.clone().try_inverse().expect("nondegenerate");
    let pole = &q_inv * mu;
    let centre = chart.from_chart_coords(&lift_affine(base.center()));
    let mut foot = &centre - &pole * (mu.dot(&centre) / mu.dot(&pole));
    let foot_c = chart.to_chart_coords(&foot);
    if foot_c[n] < 0.0 {
        foot.neg_mut();
    }
    let fc = chart.to_chart_coords(&foot);
    let f = fc.rows(0, n) / fc[n];
    let mc = chart.covector_to_chart(mu);
    let normal = mc.rows(0, n).into_owned();
    // directions inside the wall: project coordinate axes off the normal
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let mut w = &e - &normal * (normal.dot(&e) / normal.norm_squared());
        for d in &dirs {
            w -= d * d.dot(&w);
        }
        if w.norm() > 1e-6 {
            dirs.push(w.normalize());
        }
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let frac = (k as f64 + 0.5) / count as f64;
        let dir = if dirs.len() == 1 {
            dirs[0].clone()
        } else {
            let a = std::f64::consts::TAU * frac;
            (&dirs[0] * a.cos() + &dirs[1] * a.sin()).normalize()
        };
        let Ok((lo, hi)) = base.chord_params(&f, &dir) else {
            continue;
        };
        let s = if dirs.len() == 1 {
            lo + (hi - lo) * frac
        } else {
            hi * 0.999 * frac
        };
        out.push(chart.embed(&(&f + dir * s)));
    }
    out
}

impl ConvexDomain for BentDomain {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn chart(&self) -> &AffineChart {
        self.base.chart()
    }

    fn membership(&self, a: &DVector<f64>) -> Membership {
        let m = self.margin(a);
        if m.abs() <= self.tol {
            Membership::OnBoundary
        } else if m < 0.0 {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }

    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError> {
        check_dir(v, self.dim())?;
        if self.margin(a) >= 0.0 {
            return Err(DomainError::NotInterior);
        }
        let hi = self.forward(a, v)?;
        let lo = -self.forward(a, &(-v))?;
        Ok((lo, hi))
    }

    fn interior_point(&self) -> DVector<f64> {
        self.root.clone()
    }

    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        (self.lo.clone(), self.hi.clone())
    }

    fn tol(&self) -> f64 {
        self.tol
    }
}
