use nalgebra::{DMatrix, DVector};

use super::{check_dir, ConvexDomain, DomainError, Membership, Side};
use crate::proj::{lift_affine, AffineChart, ProjHyperplane, ProjMap};

/// `Ω_q ∪ A(Ω_q̄)`: a domain cut by a hyperplane, with the far half moved by a
/// map fixing the hyperplane pointwise.
pub struct PliDomain {
    base: Box<dyn ConvexDomain>,
    // wall covector and the map, both in chart coordinates
    nu: DVector<f64>,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    kept: Side,
    lo: DVector<f64>,
    hi: DVector<f64>,
    interior: DVector<f64>,
}

impl std::fmt::Debug for PliDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PliDomain")
            .field("nu", &self.nu)
            .field("a", &self.a)
            .field("kept", &self.kept)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Piece {
    Kept,
    Moved,
}

impl PliDomain {
    /// `kept` names the side of `wall` left in place; `map` must fix the wall
    /// pointwise and keep the moved half inside the chart.
    pub fn new(
        base: Box<dyn ConvexDomain>,
        wall: &ProjHyperplane,
        map: &ProjMap,
        kept: Side,
    ) -> Result<Self, DomainError> {
        let chart: &AffineChart = base.chart();
        let n = base.dim();
        let nu = chart.covector_to_chart(wall.covector());
        let a = chart.map_to_chart(map.matrix());
        let a_inv = chart.map_to_chart(map.inverse().matrix());

        let (blo, bhi) = base.bounding_box();
        let mut lo = blo.clone();
        let mut hi = bhi.clone();
        // the image of the box is the hull of its corner images when no corner
        // crosses the chart's hyperplane at infinity
        for mask in 0..(1usize << n) {
            let corner = DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { bhi[i] } else { blo[i] });
            let img = &a * lift_affine(&corner);
            if img[n] <= 1e-12 {
                return Err(DomainError::Unbounded);
            }
            let y = img.rows(0, n) / img[n];
            lo = lo.inf(&y);
            hi = hi.sup(&y);
        }

        let c = base.interior_point();
        let side = kept.sign() * nu.dot(&lift_affine(&c));
        let interior = if side >= 0.0 {
            c
        } else {
            let img = &a * lift_affine(&c);
            img.rows(0, n) / img[n]
        };
        Ok(Self {
            base,
            nu,
            a,
            a_inv,
            kept,
            lo,
            hi,
            interior,
        })
    }

    fn piece_of(&self, y: &DVector<f64>) -> Piece {
        if self.kept.sign() * self.nu.dot(&lift_affine(y)) >= 0.0 {
            Piece::Kept
        } else {
            Piece::Moved
        }
    }

    pub fn base(&self) -> &dyn ConvexDomain {
        self.base.as_ref()
    }

    /// Forward exit parameter of `X0 + s·V` from the base-coordinates piece,
    /// starting at `s_cur`.
    fn exit_in_piece(&self, x0: &DVector<f64>, v: &DVector<f64>, s_cur: f64, piece: Piece) -> Result<f64, DomainError> {
        let n = self.dim();
        let (mut p, mut r) = match piece {
            Piece::Kept => (x0.clone(), v.clone()),
            Piece::Moved => (&self.a_inv * x0, &self.a_inv * v),
        };
        let mut u_h = &p + &r * s_cur;
        if u_h[n] < 0.0 {
            p.neg_mut();
            r.neg_mut();
            u_h.neg_mut();
        }
        let un = u_h[n];
        let u = u_h.rows(0, n) / un;
        let d = (r.rows(0, n) - &u * r[n]) / un;
        let (_, sigma) = self.base.chord_params(&u, &d)?;
        let denom = un - sigma * r[n];
        if denom <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(s_cur + sigma * un / denom)
    }

    fn forward(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<f64, DomainError> {
        let n = self.dim();
        let x0 = lift_affine(a);
        let mut vh = DVector::zeros(n + 1);
        vh.rows_mut(0, n).copy_from(v);
        let rate = self.nu.dot(&vh);
        let s_wall = if rate != 0.0 {
            -self.nu.dot(&x0) / rate
        } else {
            f64::INFINITY
        };
        let mut piece = self.piece_of(a);
        let mut s = 0.0;
        for _ in 0..2 {
            let exit = self.exit_in_piece(&x0, &vh, s, piece)?;
            if s_wall > s && s_wall < exit {
                s = s_wall;
                piece = match piece {
                    Piece::Kept => Piece::Moved,
                    Piece::Moved => Piece::Kept,
                };
                continue;
            }
            return Ok(exit);
        }
        Err(DomainError::NumericalFailure)
    }
}

impl ConvexDomain for PliDomain {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn chart(&self) -> &AffineChart {
        self.base.chart()
    }

    fn membership(&self, y: &DVector<f64>) -> Membership {
        match self.piece_of(y) {
            Piece::Kept => self.base.membership(y),
            Piece::Moved => {
                let n = self.dim();
                let x = &self.a_inv * lift_affine(y);
                if x[n] <= 0.0 {
                    return Membership::Outside;
                }
                self.base.membership(&(x.rows(0, n) / x[n]))
            }
        }
    }

    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError> {
        check_dir(v, self.dim())?;
        if self.membership(a) != Membership::Inside {
            return Err(DomainError::NotInterior);
        }
        let hi = self.forward(a, v)?;
        let lo = -self.forward(a, &(-v))?;
        Ok((lo, hi))
    }

    fn interior_point(&self) -> DVector<f64> {
        self.interior.clone()
    }

    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        (self.lo.clone(), self.hi.clone())
    }

    fn tol(&self) -> f64 {
        self.base.tol()
    }
}
