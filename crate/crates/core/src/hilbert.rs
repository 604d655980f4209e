//! The Hilbert metric of a properly convex domain and the quantities built on
//! it: Finsler norm, Busemann volume and a slim-triangle hyperbolicity
//! estimate.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::convex::{random_interior, ConvexDomain, DomainError, Membership};
use crate::proj::{AffineChart, ProjError, ProjPoint};
use crate::sampling;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("point is not interior to the domain")]
    NotInterior,
    #[error("zero tangent vector")]
    ZeroVector,
    #[error("region is not contained in the domain")]
    RegionNotContained,
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Proj(#[from] ProjError),
}

/// A domain together with the chart its oracles use.
#[derive(Clone, Copy)]
pub struct MetricContext<'a> {
    domain: &'a dyn ConvexDomain,
    tol: f64,
}

/// Directions over which the unit tangent ball is integrated.
const ANGULAR_RAYS_2D: usize = 32;
const MC_RAYS: usize = 128;

impl<'a> MetricContext<'a> {
    pub fn new(domain: &'a dyn ConvexDomain) -> Self {
        Self {
            domain,
            tol: domain.tol(),
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn domain(&self) -> &'a dyn ConvexDomain {
        self.domain
    }

    pub fn chart(&self) -> &'a AffineChart {
        self.domain.chart()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn interior(&self, x: &ProjPoint) -> Result<DVector<f64>, HilbertError> {
        let a = self.chart().project(x, 1e-12).map_err(|_| HilbertError::NotInterior)?;
        if self.domain.membership(&a) != Membership::Inside {
            return Err(HilbertError::NotInterior);
        }
        Ok(a)
    }

    /// Hilbert distance between interior points.
    pub fn distance(&self, x: &ProjPoint, y: &ProjPoint) -> Result<f64, HilbertError> {
        let a = self.interior(x)?;
        let b = self.interior(y)?;
        self.distance_affine(&a, &b)
    }

    /// Hilbert distance between interior points given in chart coordinates.
    pub fn distance_affine(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64, HilbertError> {
        let v = b - a;
        if v.norm() == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = self.domain.chord_params(a, &v)?;
        if !(hi > 1.0 && lo < 0.0) {
            return Err(HilbertError::NotInterior);
        }
        Ok(chord_distance(lo, hi))
    }

    /// `½(1/‖x−p⁻‖ + 1/‖x−p⁺‖)·‖v‖` for the chord through `x` along `v`.
    pub fn finsler_norm(&self, x: &ProjPoint, v: &DVector<f64>) -> Result<f64, HilbertError> {
        let a = self.interior(x)?;
        self.finsler_norm_affine(&a, v)
    }

    pub fn finsler_norm_affine(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<f64, HilbertError> {
        if !(v.norm() > 0.0) {
            return Err(HilbertError::ZeroVector);
        }
        let (lo, hi) = self.domain.chord_params(a, v)?;
        Ok(0.5 * (1.0 / -lo + 1.0 / hi))
    }

    /// Lebesgue volume of the unit Finsler ball at `a` divided by that of the
    /// Euclidean unit ball.
    pub fn unit_ball_ratio(&self, a: &DVector<f64>, dirs: &[DVector<f64>]) -> Result<f64, HilbertError> {
        let n = a.len() as i32;
        let mut acc = 0.0;
        for u in dirs {
            let (lo, hi) = self.domain.chord_params(a, u)?;
            let f = 0.5 * (1.0 / -lo + 1.0 / hi);
            // u and −u have the same Finsler norm
            acc += 2.0 * f.powi(-n);
        }
        Ok(acc / (2 * dirs.len()) as f64)
    }

    /// Busemann density with respect to chart Lebesgue measure.
    pub fn busemann_density(&self, a: &DVector<f64>, dirs: &[DVector<f64>]) -> Result<f64, HilbertError> {
        Ok(1.0 / self.unit_ball_ratio(a, dirs)?)
    }

    /// Deterministic angular rule in the plane, random directions otherwise.
    pub fn density_directions(&self, seed: u64) -> Vec<DVector<f64>> {
        let n = self.domain.dim();
        if n == 2 {
            (0..ANGULAR_RAYS_2D)
                .map(|k| {
                    let th = std::f64::consts::PI * k as f64 / ANGULAR_RAYS_2D as f64;
                    DVector::from_vec(vec![th.cos(), th.sin()])
                })
                .collect()
        } else {
            let mut r = sampling::stream(seed, u64::MAX);
            (0..MC_RAYS).map(|_| sampling::unit_vector(&mut r, n)).collect()
        }
    }
}

/// `½ ln[(1−s⁻)s⁺ / ((−s⁻)(s⁺−1))]` for a segment from parameter 0 to 1 on a
/// chord with boundary parameters `s⁻ < 0 < 1 < s⁺`.
pub fn chord_distance(lo: f64, hi: f64) -> f64 {
    0.5 * ((-lo).ln_1p() + hi.ln() - (-lo).ln() - (hi - 1.0).ln())
}

/// Parameter `s ∈ (0, s⁺)` at Hilbert distance `r` from `0` on a chord.
pub fn param_at_distance(lo: f64, hi: f64, r: f64) -> f64 {
    let k = (2.0 * r).exp();
    let a = -lo;
    a * hi * (k - 1.0) / (hi + k * a)
}

/// Hilbert distance between interior points of `domain`.
pub fn distance<D: ConvexDomain>(domain: &D, x: &ProjPoint, y: &ProjPoint) -> Result<f64, HilbertError> {
    MetricContext::new(domain).distance(x, y)
}

pub fn finsler_norm<D: ConvexDomain>(domain: &D, x: &ProjPoint, v: &DVector<f64>) -> Result<f64, HilbertError> {
    MetricContext::new(domain).finsler_norm(x, v)
}

/// Region integrated by [`busemann_volume`].
#[derive(Clone, Copy)]
pub enum Region<'a> {
    Empty,
    /// The whole domain.
    Whole,
    /// Closed Hilbert ball around an interior point.
    Ball {
        center: &'a ProjPoint,
        radius: f64,
    },
    /// A convex subset, sharing the domain's chart.
    Domain(&'a dyn ConvexDomain),
}

struct Sampler<'a> {
    ctx: MetricContext<'a>,
    region: Region<'a>,
    center: Option<DVector<f64>>,
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl<'a> Sampler<'a> {
    fn new(ctx: MetricContext<'a>, region: Region<'a>) -> Result<Option<Self>, HilbertError> {
        let (center, (lo, hi)) = match region {
            Region::Empty => return Ok(None),
            Region::Whole => (None, ctx.domain.bounding_box()),
            Region::Domain(d) => (None, d.bounding_box()),
            Region::Ball { center, radius } => {
                let c = ctx.interior(center)?;
                (Some(c.clone()), ball_box(&ctx, &c, radius)?)
            }
        };
        Ok(Some(Self {
            ctx,
            region,
            center,
            lo,
            hi,
        }))
    }

    fn box_volume(&self) -> f64 {
        (&self.hi - &self.lo).iter().product()
    }

    fn inside(&self, a: &DVector<f64>) -> Result<bool, HilbertError> {
        let in_domain = self.ctx.domain.membership(a) == Membership::Inside;
        match self.region {
            Region::Empty => Ok(false),
            Region::Whole => Ok(in_domain),
            Region::Domain(d) => {
                let inside = d.membership(a) == Membership::Inside;
                if inside && !in_domain {
                    return Err(HilbertError::RegionNotContained);
                }
                Ok(inside)
            }
            Region::Ball { radius, .. } => {
                if !in_domain {
                    return Ok(false);
                }
                let c = self.center.as_ref().expect("ball has a centre");
                Ok(self.ctx.distance_affine(c, a)? <= radius)
            }
        }
    }
}

/// Box around a Hilbert ball from its radial extent in many directions.
fn ball_box(ctx: &MetricContext, c: &DVector<f64>, radius: f64) -> Result<(DVector<f64>, DVector<f64>), HilbertError> {
    let n = c.len();
    let dirs: Vec<DVector<f64>> = if n == 2 {
        (0..720)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / 720.0;
                DVector::from_vec(vec![th.cos(), th.sin()])
            })
            .collect()
    } else {
        let mut r = sampling::rng(0xba11);
        (0..4000).map(|_| sampling::unit_vector(&mut r, n)).collect()
    };
    let mut lo = c.clone();
    let mut hi = c.clone();
    for u in &dirs {
        let (s_lo, s_hi) = ctx.domain.chord_params(c, u)?;
        let p = c + u * param_at_distance(s_lo, s_hi, radius);
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    let (dlo, dhi) = ctx.domain.bounding_box();
    let pad = (&hi - &lo) * 0.05;
    Ok(((lo - &pad).sup(&dlo), (hi + pad).inf(&dhi)))
}

/// Monte-Carlo Busemann volume of a region, as `(estimate, stderr)`.
///
/// Samples are uniform in a box around the region; each is weighted by the
/// Busemann density, computed from the Finsler norm along a fixed set of
/// directions.
pub fn busemann_volume(
    ctx: &MetricContext,
    region: Region,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), HilbertError> {
    let Some(sampler) = Sampler::new(*ctx, region)? else {
        return Ok((0.0, 0.0));
    };
    if samples == 0 {
        return Ok((0.0, 0.0));
    }
    let dirs = ctx.density_directions(seed);
    let chunks: Vec<(u64, usize)> = sampling::chunks(samples).collect();
    let sums = chunks
        .par_iter()
        .map(|(idx, count)| {
            let mut r = sampling::stream(seed, *idx);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..*count {
                let a = sampling::uniform_in_box(&mut r, &sampler.lo, &sampler.hi);
                if sampler.inside(&a)? {
                    let w = ctx.busemann_density(&a, &dirs)?;
                    s += w;
                    s2 += w * w;
                }
            }
            Ok((s, s2))
        })
        .collect::<Result<Vec<(f64, f64)>, HilbertError>>()?;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    let vol = sampler.box_volume();
    Ok((vol * mean, vol * (var / n).sqrt()))
}

/// Sampling settings for [`delta_estimate_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaConfig {
    pub triangles: usize,
    pub points_per_side: usize,
    /// Vertices sit this fraction of the way from the domain's interior point
    /// to the boundary.
    pub shrink: f64,
    pub search_iters: usize,
    /// Boundary points to build triangles from; empty means boundary points
    /// in random directions.
    pub anchors: Vec<DVector<f64>>,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self {
            triangles: 64,
            points_per_side: 100,
            shrink: 0.999,
            search_iters: 48,
            anchors: Vec::new(),
        }
    }
}

/// Distance from `u` to the segment `[x, y]`, by golden-section search along
/// the segment. Hilbert balls are convex, so the distance is unimodal.
fn distance_to_segment(ctx: &MetricContext, u: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>, iters: usize) -> f64 {
    let at = |s: f64| ctx.distance_affine(u, &(x + (y - x) * s)).unwrap_or(f64::INFINITY);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (at(c), at(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = at(d);
        }
    }
    fc.min(fd).min(at(0.0)).min(at(1.0))
}

fn triangle_defect(ctx: &MetricContext, v: &[DVector<f64>; 3], cfg: &DeltaConfig) -> f64 {
    let mut worst: f64 = 0.0;
    for side in 0..3 {
        let (p, q, o) = (&v[side], &v[(side + 1) % 3], &v[(side + 2) % 3]);
        for k in 1..cfg.points_per_side {
            let s = k as f64 / cfg.points_per_side as f64;
            let u = p + (q - p) * s;
            let d1 = distance_to_segment(ctx, &u, q, o, cfg.search_iters);
            let d2 = distance_to_segment(ctx, &u, o, p, cfg.search_iters);
            worst = worst.max(d1.min(d2));
        }
    }
    worst
}

/// Empirical slim-triangle constant: over random triangles, the largest
/// distance from a point of one side to the union of the other two.
pub fn delta_estimate(ctx: &MetricContext, triangles: usize, seed: u64) -> f64 {
    delta_estimate_with(
        ctx,
        &DeltaConfig {
            triangles,
            ..DeltaConfig::default()
        },
        seed,
    )
}

pub fn delta_estimate_with(ctx: &MetricContext, cfg: &DeltaConfig, seed: u64) -> f64 {
    let c = ctx.domain.interior_point();
    (0..cfg.triangles)
        .into_par_iter()
        .map(|i| {
            let mut r = sampling::stream(seed, i as u64);
            let n = ctx.domain.dim();
            let vertex = |r: &mut rand_chacha::ChaCha8Rng| {
                if cfg.anchors.is_empty() {
                    let u = sampling::unit_vector(r, n);
                    let hi = ctx.domain.chord_params(&c, &u).map(|p| p.1).unwrap_or(0.0);
                    &c + u * (hi * cfg.shrink)
                } else {
                    let b = &cfg.anchors[r.random_range(0..cfg.anchors.len())];
                    &c + (b - &c) * cfg.shrink
                }
            };
            let v = [vertex(&mut r), vertex(&mut r), vertex(&mut r)];
            triangle_defect(ctx, &v, cfg)
        })
        .reduce(|| 0.0, f64::max)
}

/// δ-estimates along a sequence of shrink factors approaching 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaStability {
    pub shrinks: Vec<f64>,
    pub estimates: Vec<f64>,
    /// The last estimate is finite and within 20% of the one before.
    pub stable: bool,
}

/// Runs `base` at each shrink factor in turn.
pub fn delta_stability(ctx: &MetricContext, base: &DeltaConfig, seed: u64, shrinks: &[f64]) -> DeltaStability {
    let estimates: Vec<f64> = shrinks
        .iter()
        .map(|&shrink| {
            let cfg = DeltaConfig { shrink, ..base.clone() };
            delta_estimate_with(ctx, &cfg, seed)
        })
        .collect();
    let stable = match estimates.as_slice() {
        [.., prev, last] => last.is_finite() && *last <= 1.2 * prev.max(f64::MIN_POSITIVE),
        [only] => only.is_finite(),
        [] => false,
    };
    DeltaStability {
        shrinks: shrinks.to_vec(),
        estimates,
        stable,
    }
}

/// A uniform interior point; exposed for callers that sample their own pairs.
pub fn sample_interior(ctx: &MetricContext, r: &mut impl Rng) -> DVector<f64> {
    random_interior(ctx.domain, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{Polytope, QuadricDomain};
    use nalgebra::DMatrix;

    fn klein_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let num = 1.0 - a.dot(b);
        let den = ((1.0 - a.norm_squared()) * (1.0 - b.norm_squared())).sqrt();
        (num / den).acosh()
    }

    #[test]
    fn disk_examples() {
        let d = QuadricDomain::klein(2);
        let ctx = MetricContext::new(&d);
        let o = ProjPoint::from_affine(&[0.0, 0.0]);
        let y = ProjPoint::from_affine(&[0.5, 0.0]);
        assert!((ctx.distance(&o, &y).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert_eq!(ctx.distance(&y, &y).unwrap(), 0.0);
        let v = DVector::from_vec(vec![0.6, 0.8]);
        assert!((ctx.finsler_norm(&o, &v).unwrap() - 1.0).abs() < 1e-12);
        let out = ProjPoint::from_affine(&[1.5, 0.0]);
        assert_eq!(ctx.distance(&o, &out), Err(HilbertError::NotInterior));
        assert_eq!(ctx.finsler_norm(&o, &DVector::zeros(2)), Err(HilbertError::ZeroVector));
    }

    #[test]
    fn matches_klein_closed_form() {
        for n in [2, 3] {
            let d = QuadricDomain::klein(n);
            let ctx = MetricContext::new(&d);
            let mut r = sampling::rng(n as u64);
            for _ in 0..1000 {
                let a = sample_interior(&ctx, &mut r);
                let b = sample_interior(&ctx, &mut r);
                let got = ctx.distance_affine(&a, &b).unwrap();
                assert!((got - klein_distance(&a, &b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn chart_independence() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let d1 = QuadricDomain::klein(2);
        let chart = AffineChart::with_infinity(&DVector::from_vec(vec![0.2, -0.1, 1.0])).unwrap();
        let d2 = QuadricDomain::with_chart(q, chart).unwrap();
        let (c1, c2) = (MetricContext::new(&d1), MetricContext::new(&d2));
        let mut r = sampling::rng(5);
        for _ in 0..200 {
            let x = d1.chart().embed(&sample_interior(&c1, &mut r));
            let y = d1.chart().embed(&sample_interior(&c1, &mut r));
            let (a, b) = (c1.distance(&x, &y).unwrap(), c2.distance(&x, &y).unwrap());
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn finsler_norm_is_distance_derivative() {
        let sq = Polytope::cube(2, 1.0);
        let d = QuadricDomain::klein(2);
        let contexts = [MetricContext::new(&d), MetricContext::new(&sq)];
        let mut r = sampling::rng(9);
        let h = 1e-5;
        for ctx in contexts {
            for _ in 0..100 {
                let a = sample_interior(&ctx, &mut r) * 0.9;
                let v = sampling::unit_vector(&mut r, 2);
                let f = ctx.finsler_norm_affine(&a, &v).unwrap();
                let plus = ctx.distance_affine(&a, &(&a + &v * h)).unwrap();
                let minus = ctx.distance_affine(&a, &(&a - &v * h)).unwrap();
                let fd = (plus + minus) / (2.0 * h);
                assert!((f - fd).abs() < 1e-6, "{f} vs {fd}");
                let f2 = ctx.finsler_norm_affine(&a, &(&v * 2.0)).unwrap();
                assert!((f2 - 2.0 * f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_radius_inverse() {
        let (lo, hi) = (-0.3, 2.0);
        for r in [0.1, 1.0, 3.0] {
            let s = param_at_distance(lo, hi, r);
            let d = 0.5 * ((1.0 - lo / s) * hi / s / (-lo / s) / (hi / s - 1.0)).ln();
            assert!((d - r).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_region_has_zero_volume() {
        let d = QuadricDomain::klein(2);
        let ctx = MetricContext::new(&d);
        assert_eq!(busemann_volume(&ctx, Region::Empty, 100, 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn ball_area_is_hyperbolic() {
        let d = QuadricDomain::klein(2);
        let ctx = MetricContext::new(&d);
        let o = ProjPoint::from_affine(&[0.0, 0.0]);
        let (est, err) = busemann_volume(
            &ctx,
            Region::Ball {
                center: &o,
                radius: 1.0,
            },
            100_000,
            3,
        )
        .unwrap();
        let want = std::f64::consts::TAU * (1f64.cosh() - 1.0);
        assert!((est - want).abs() < 4.0 * err + 1e-3, "{est} ± {err} vs {want}");
    }

    #[test]
    fn region_must_be_contained() {
        let d = QuadricDomain::klein(2);
        let ctx = MetricContext::new(&d);
        let big = Polytope::cube(2, 1.0);
        assert_eq!(
            busemann_volume(&ctx, Region::Domain(&big), 10_000, 1),
            Err(HilbertError::RegionNotContained)
        );
    }

    #[test]
    fn disk_delta_is_small_and_square_grows() {
        let d = QuadricDomain::klein(2);
        let cfg = DeltaConfig {
            triangles: 16,
            ..DeltaConfig::default()
        };
        let disk = delta_stability(&MetricContext::new(&d), &cfg, 2, &[0.99, 0.999]);
        assert!(disk.stable, "{disk:?}");
        assert!(disk.estimates[1] < 1.0);
        // triangles on the corners of the square fatten without bound
        let sq = Polytope::cube(2, 1.0);
        let corners = DeltaConfig {
            triangles: 8,
            anchors: sq.vertices(),
            ..DeltaConfig::default()
        };
        let flat = delta_stability(&MetricContext::new(&sq), &corners, 2, &[0.99, 0.999]);
        assert!(!flat.stable, "{flat:?}");
    }
}
