//! Two affine zones glued along the vertical switching line x = 0:
//! pointwise classification of the line, sliding dynamics, fold points,
//! equilibrium status and the Liénard canonical reduction.

use crate::affine2d::AffineSystem2;
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};

/// Scaled tolerance below which a Lie derivative counts as a tangency.
const TANGENCY_TOL: f64 = 1e-12;
/// Step for the finite-difference cross-check of second Lie derivatives.
const FOLD_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Two affine systems split by the vertical axis: `left` governs x < 0,
/// `right` governs x > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseAffineSystem {
    left: AffineSystem2,
    right: AffineSystem2,
}

/// Classification of a point of the switching line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaClass {
    PositiveCrossing,
    NegativeCrossing,
    Sliding,
    Escaping,
    LeftTangency,
    RightTangency,
    DoubleTangency,
}

/// A maximal interval of the switching line carrying one class.
/// Unbounded ends are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaInterval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub class: SigmaClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPartition {
    pub intervals: Vec<SigmaInterval>,
    /// y-coordinates where a zone field is tangent to the line.
    pub tangency_points: Vec<f64>,
    /// Set when a zone's normal component vanishes identically on the line.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Visible,
    Invisible,
}

/// An order-two tangency of one zone field with the switching line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPoint {
    pub location: Vec2,
    pub side: Side,
    pub order: u32,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Real,
    Virtual,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeType {
    AttractorNode,
    RepellerNode,
    Saddle,
    AttractorFocus,
    RepellerFocus,
    Center,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumStatus {
    pub kind: EquilibriumKind,
    pub point: Vec2,
    pub node: NodeType,
}

/// Per-zone affine maps realizing the Liénard canonical reduction,
/// together with the canonical system and its scalar parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalTransform {
    pub left_matrix: Mat2,
    pub right_matrix: Mat2,
    /// Shared offset; both branches agree on the switching line.
    pub offset: Vec2,
    pub canonical: PiecewiseAffineSystem,
    /// The canonical x-jump parameter `b`.
    pub b: f64,
    pub a_left: f64,
    pub a_right: f64,
}

impl CanonicalTransform {
    /// Apply the transform to a point of the given zone.
    pub fn apply(&self, side: Side, p: Vec2) -> Vec2 {
        let m = match side {
            Side::Left => self.left_matrix,
            Side::Right => self.right_matrix,
        };
        m * p + self.offset
    }
}

impl PiecewiseAffineSystem {
    pub fn new(left: AffineSystem2, right: AffineSystem2) -> Self {
        PiecewiseAffineSystem { left, right }
    }

    pub fn left(&self) -> &AffineSystem2 {
        &self.left
    }

    pub fn right(&self) -> &AffineSystem2 {
        &self.right
    }

    pub fn zone(&self, side: Side) -> &AffineSystem2 {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Lie derivatives of f(x, y) = x along both fields at (0, y):
    /// the x-components of the left and right vector fields.
    pub fn lie_derivatives(&self, y: f64) -> (f64, f64) {
        let p = Vec2::new(0.0, y);
        (self.left.field(p).x, self.right.field(p).x)
    }

    pub fn classify_sigma_point(&self, y: f64) -> SigmaClass {
        let (l, r) = self.lie_derivatives(y);
        let tol = TANGENCY_TOL * (1.0 + y.abs());
        let lt = l.abs() <= tol;
        let rt = r.abs() <= tol;
        match (lt, rt) {
            (true, true) => SigmaClass::DoubleTangency,
            (true, false) => SigmaClass::LeftTangency,
            (false, true) => SigmaClass::RightTangency,
            (false, false) => {
                if l > 0.0 && r > 0.0 {
                    SigmaClass::PositiveCrossing
                } else if l < 0.0 && r < 0.0 {
                    SigmaClass::NegativeCrossing
                } else if l > 0.0 {
                    // left pushes toward the line, right pushes back
                    SigmaClass::Sliding
                } else {
                    SigmaClass::Escaping
                }
            }
        }
    }

    /// y-coordinate where a zone's Lie derivative vanishes, if any.
    fn lie_zero(&self, side: Side) -> Option<f64> {
        let z = self.zone(side);
        let (a12, b1) = (z.matrix().a12, z.offset().x);
        if a12 == 0.0 {
            None
        } else {
            Some(b1 / a12)
        }
    }

    /// Split the switching line into maximal intervals of constant class.
    pub fn partition_sigma(&self) -> SigmaPartition {
        let degenerate = [Side::Left, Side::Right].iter().any(|&s| {
            let z = self.zone(s);
            z.matrix().a12 == 0.0 && z.offset().x == 0.0
        });
        let mut zeros: Vec<f64> = [Side::Left, Side::Right]
            .iter()
            .filter_map(|&s| self.lie_zero(s))
            .collect();
        zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // coincident tangencies collapse to a single boundary point
        zeros.dedup_by(|a, b| (*a - *b).abs() <= TANGENCY_TOL * (1.0 + b.abs()));

        let mut intervals = Vec::new();
        let mut push = |lo: Option<f64>, hi: Option<f64>| {
            let sample = match (lo, hi) {
                (None, None) => 0.0,
                (None, Some(h)) => h - 1.0,
                (Some(l), None) => l + 1.0,
                (Some(l), Some(h)) => 0.5 * (l + h),
            };
            intervals.push(SigmaInterval {
                lo,
                hi,
                class: self.classify_sigma_point(sample),
            });
        };
        if zeros.is_empty() {
            push(None, None);
        } else {
            push(None, Some(zeros[0]));
            for w in zeros.windows(2) {
                push(Some(w[0]), Some(w[1]));
            }
            push(Some(*zeros.last().unwrap()), None);
        }
        SigmaPartition {
            intervals,
            tangency_points: zeros,
            degenerate,
        }
    }

    /// Filippov convex-combination coefficient and sliding y-velocity at (0, y).
    pub fn sliding_field(&self, y: f64) -> Result<(f64, f64)> {
        match self.classify_sigma_point(y) {
            SigmaClass::Sliding | SigmaClass::Escaping => {}
            _ => return Err(Error::NotSlidingPoint { y }),
        }
        let (l, r) = self.lie_derivatives(y);
        let lambda = l / (l - r);
        let p = Vec2::new(0.0, y);
        let combo = self.left.field(p) * (1.0 - lambda) + self.right.field(p) * lambda;
        debug_assert!(combo.x.abs() <= 1e-13 * (1.0 + y.abs()));
        Ok((lambda, combo.y))
    }

    /// Order-two fold points of both zone fields, with visibility.
    ///
    /// The analytic second Lie derivative `a12 (a22 y* - b2)` decides
    /// visibility; a finite difference of the first Lie derivative along the
    /// zone flow cross-checks the sign.
    pub fn fold_points(&self) -> Result<Vec<FoldPoint>> {
        let mut folds = Vec::new();
        for side in [Side::Left, Side::Right] {
            let Some(y_star) = self.lie_zero(side) else {
                continue;
            };
            let z = self.zone(side);
            let m = z.matrix();
            let second_lie = m.a12 * (m.a22 * y_star - z.offset().y);
            if second_lie.abs() <= TANGENCY_TOL * (1.0 + y_star.abs()) {
                return Err(Error::BoundaryEquilibriumCollision { value: second_lie });
            }
            let p = Vec2::new(0.0, y_star);
            // directional derivative of the first Lie derivative along the flow
            let h = FOLD_FD_STEP;
            let fd = (z.field(z.flow(p, h)?).x - z.field(z.flow(p, -h)?).x) / (2.0 * h);
            if fd.signum() != second_lie.signum() {
                return Err(Error::InternalDefect(format!(
                    "second Lie derivative sign mismatch at fold ({side:?}): analytic {second_lie}, finite-difference {fd}"
                )));
            }
            let visible = match side {
                Side::Left => second_lie < 0.0,
                Side::Right => second_lie > 0.0,
            };
            folds.push(FoldPoint {
                location: p,
                side,
                order: 2,
                visibility: if visible {
                    Visibility::Visible
                } else {
                    Visibility::Invisible
                },
            });
        }
        Ok(folds)
    }

    /// Geometric equilibrium status of one zone: real when the rest point
    /// lies strictly inside its own half-plane, boundary when it sits on the
    /// switching line.
    pub fn equilibrium_status(&self, side: Side) -> Result<EquilibriumStatus> {
        let z = self.zone(side);
        let point = z.equilibrium()?;
        let scale = 1.0 + point.norm();
        let kind = if point.x.abs() < 1e-12 * scale {
            EquilibriumKind::Boundary
        } else {
            let inside = match side {
                Side::Left => point.x < 0.0,
                Side::Right => point.x > 0.0,
            };
            if inside {
                EquilibriumKind::Real
            } else {
                EquilibriumKind::Virtual
            }
        };
        Ok(EquilibriumStatus {
            kind,
            point,
            node: node_type(z),
        })
    }

    /// Liénard canonical reduction of both zones by the per-zone affine
    /// homeomorphism; requires the zone fields to cross the line the same way
    /// (`a12^L a12^R > 0`).
    pub fn to_lienard_canonical(&self) -> Result<CanonicalTransform> {
        let (ml, mr) = (self.left.matrix(), self.right.matrix());
        let product = ml.a12 * mr.a12;
        if product <= 0.0 {
            return Err(Error::TangencyDegenerate { product });
        }
        // the reduction formulas are stated for dx/dt = A x + b
        let bl = -self.left.offset();
        let br = -self.right.offset();
        let ratio = ml.a12 / mr.a12;
        let a_left = ml.a12 * bl.y - ml.a22 * bl.x;
        let a_right = ratio * (mr.a12 * br.y - mr.a22 * br.x);
        let b = ratio * br.x - bl.x;
        let left_matrix = Mat2::new(1.0, 0.0, ml.a22, -ml.a12);
        let right_matrix = Mat2::new(ratio, 0.0, ratio * mr.a22, -ml.a12);
        let offset = Vec2::new(0.0, -bl.x);
        let canonical = PiecewiseAffineSystem::new(
            AffineSystem2::new(
                Mat2::new(ml.trace(), -1.0, ml.det(), 0.0),
                Vec2::new(0.0, a_left),
            ),
            AffineSystem2::new(
                Mat2::new(mr.trace(), -1.0, mr.det(), 0.0),
                Vec2::new(-b, a_right),
            ),
        );
        Ok(CanonicalTransform {
            left_matrix,
            right_matrix,
            offset,
            canonical,
            b,
            a_left,
            a_right,
        })
    }
}

fn node_type(z: &AffineSystem2) -> NodeType {
    let det = z.det();
    let tr = z.trace();
    if det == 0.0 {
        NodeType::Degenerate
    } else if det < 0.0 {
        NodeType::Saddle
    } else if z.discriminant() >= 0.0 {
        if tr < 0.0 {
            NodeType::AttractorNode
        } else {
            NodeType::RepellerNode
        }
    } else if tr < 0.0 {
        NodeType::AttractorFocus
    } else if tr > 0.0 {
        NodeType::RepellerFocus
    } else {
        NodeType::Center
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Canonical Welander system of the worked example (alpha = 4/5,
    /// beta = 1/2, k0 = 0, k1 = 1) for a given epsilon.
    fn canonical_41(eps: f64) -> PiecewiseAffineSystem {
        PiecewiseAffineSystem::new(
            AffineSystem2::new(
                Mat2::new(-1.5, -1.0, 0.5, 0.0),
                Vec2::new(0.0, 0.1 - 0.5 * eps),
            ),
            AffineSystem2::new(
                Mat2::new(-3.5, -1.0, 3.0, 0.0),
                Vec2::new(eps, -(0.2 + 3.0 * eps)),
            ),
        )
    }

    #[test]
    fn lie_derivatives_canonical() {
        let pws = canonical_41(-0.01);
        for y in [-0.3, 0.0, 0.004, 0.2] {
            let (l, r) = pws.lie_derivatives(y);
            assert!((l - (-y)).abs() < 1e-15);
            // Z^R_1(0, y) = -y + (k0 - k1) eps with (k0 - k1) eps = 0.01
            assert!((r - (-y + 0.01)).abs() < 1e-15);
        }
    }

    #[test]
    fn lie_derivatives_are_field_components() {
        let pws = canonical_41(0.02);
        for y in [-1.0, 0.37] {
            let (l, r) = pws.lie_derivatives(y);
            assert_eq!(l, pws.left().field(Vec2::new(0.0, y)).x);
            assert_eq!(r, pws.right().field(Vec2::new(0.0, y)).x);
        }
    }

    #[test]
    fn classification_three_cases() {
        // eps > 0: sliding between the folds
        let pws = canonical_41(0.01);
        assert_eq!(pws.classify_sigma_point(-0.005), SigmaClass::Sliding);
        assert_eq!(pws.classify_sigma_point(-0.5), SigmaClass::PositiveCrossing);
        assert_eq!(pws.classify_sigma_point(0.5), SigmaClass::NegativeCrossing);
        // eps < 0: escaping between the folds
        let pws = canonical_41(-0.01);
        assert_eq!(pws.classify_sigma_point(0.005), SigmaClass::Escaping);
        // eps = 0: pure crossing split at the origin
        let pws = canonical_41(0.0);
        assert_eq!(pws.classify_sigma_point(-0.5), SigmaClass::PositiveCrossing);
        assert_eq!(pws.classify_sigma_point(0.5), SigmaClass::NegativeCrossing);
        assert_eq!(pws.classify_sigma_point(0.0), SigmaClass::DoubleTangency);
    }

    #[test]
    fn partition_matches_case_table() {
        let pws = canonical_41(-0.01);
        let part = pws.partition_sigma();
        assert!(!part.degenerate);
        assert_eq!(part.intervals.len(), 3);
        assert_eq!(part.intervals[0].class, SigmaClass::PositiveCrossing);
        assert_eq!(part.intervals[1].class, SigmaClass::Escaping);
        assert_eq!(part.intervals[2].class, SigmaClass::NegativeCrossing);
        assert_eq!(part.tangency_points.len(), 2);
        assert!((part.tangency_points[0] - 0.0).abs() < 1e-15);
        assert!((part.tangency_points[1] - 0.01).abs() < 1e-15);

        let part0 = canonical_41(0.0).partition_sigma();
        assert_eq!(part0.intervals.len(), 2);
        assert_eq!(part0.tangency_points, vec![0.0]);

        let partp = canonical_41(0.02).partition_sigma();
        assert_eq!(partp.intervals.len(), 3);
        assert_eq!(partp.intervals[1].class, SigmaClass::Sliding);
        let len = partp.intervals[1].hi.unwrap() - partp.intervals[1].lo.unwrap();
        assert!((len - 0.02).abs() < 1e-15);
    }

    #[test]
    fn sliding_field_combination_is_tangent() {
        let pws = canonical_41(-0.01);
        // midpoint of the escaping segment (0, 0.01)
        let (lambda, _vy) = pws.sliding_field(0.005).unwrap();
        assert!(lambda > 0.0 && lambda < 1.0);
        let p = Vec2::new(0.0, 0.005);
        let combo = pws.left().field(p) * (1.0 - lambda) + pws.right().field(p) * lambda;
        assert!(combo.x.abs() < 1e-13);
    }

    #[test]
    fn sliding_field_rejects_crossing_points() {
        let pws = canonical_41(-0.01);
        assert!(matches!(
            pws.sliding_field(-0.5),
            Err(Error::NotSlidingPoint { .. })
        ));
    }

    #[test]
    fn pseudo_equilibrium_has_zero_velocity_where_fields_are_parallel() {
        // sliding segment for eps > 0 between y = -0.01 and y = 0
        let pws = canonical_41(0.01);
        // the sliding y-velocity is affine in y; locate its zero by bisection
        let f = |y: f64| pws.sliding_field(y).unwrap().1;
        let (mut lo, mut hi) = (-0.0099, -0.0001);
        if f(lo) * f(hi) < 0.0 {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid
                } else {
                    lo = mid
                }
            }
            let y_star = 0.5 * (lo + hi);
            // anti-parallel fields: cross product of the two zone fields vanishes
            let p = Vec2::new(0.0, y_star);
            let (zl, zr) = (pws.left().field(p), pws.right().field(p));
            assert!((zl.x * zr.y - zl.y * zr.x).abs() < 1e-9);
        }
    }

    #[test]
    fn folds_of_worked_example_are_invisible() {
        let eps = -0.01;
        let folds = canonical_41(eps).fold_points().unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(folds[0].side, Side::Left);
        assert!((folds[0].location.y - 0.0).abs() < 1e-15);
        assert_eq!(folds[0].visibility, Visibility::Invisible);
        assert_eq!(folds[1].side, Side::Right);
        assert!((folds[1].location.y - (-eps)).abs() < 1e-15);
        assert_eq!(folds[1].visibility, Visibility::Invisible);
        for f in folds {
            assert_eq!(f.order, 2);
        }
    }

    #[test]
    fn folds_coincide_at_eps_zero() {
        let folds = canonical_41(0.0).fold_points().unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(folds[0].location, folds[1].location);
    }

    #[test]
    fn fold_flips_visible_when_equilibrium_crosses_the_line() {
        // left fold visibility follows the sign of -a^L; flip a^L negative
        let left = AffineSystem2::new(Mat2::new(-1.5, -1.0, 0.5, 0.0), Vec2::new(0.0, -0.05));
        let right = AffineSystem2::new(Mat2::new(-3.5, -1.0, 3.0, 0.0), Vec2::new(0.0, -0.2));
        let pws = PiecewiseAffineSystem::new(left, right);
        let folds = pws.fold_points().unwrap();
        assert_eq!(folds[0].visibility, Visibility::Visible);
    }

    #[test]
    fn fold_collision_with_boundary_equilibrium_is_error() {
        // a^L = 0: the left equilibrium sits at the origin on the fold
        let left = AffineSystem2::new(Mat2::new(-1.5, -1.0, 0.5, 0.0), Vec2::new(0.0, 0.0));
        let right = AffineSystem2::new(Mat2::new(-3.5, -1.0, 3.0, 0.0), Vec2::new(0.0, -0.2));
        let pws = PiecewiseAffineSystem::new(left, right);
        assert!(matches!(
            pws.fold_points(),
            Err(Error::BoundaryEquilibriumCollision { .. })
        ));
    }

    #[test]
    fn equilibrium_status_worked_example_is_virtual_both_sides() {
        let pws = canonical_41(-0.01);
        let l = pws.equilibrium_status(Side::Left).unwrap();
        let r = pws.equilibrium_status(Side::Right).unwrap();
        assert_eq!(l.kind, EquilibriumKind::Virtual);
        assert_eq!(r.kind, EquilibriumKind::Virtual);
        assert_eq!(l.node, NodeType::AttractorNode);
        assert_eq!(r.node, NodeType::AttractorNode);
        assert!(l.point.x > 0.0 && r.point.x < 0.0);
    }

    #[test]
    fn boundary_equilibrium_detected() {
        // left offset zero puts the equilibrium at the origin
        let left = AffineSystem2::new(Mat2::new(-1.5, -1.0, 0.5, 0.0), Vec2::new(0.0, 0.0));
        let right = AffineSystem2::new(Mat2::new(-3.5, -1.0, 3.0, 0.0), Vec2::new(0.0, -0.2));
        let pws = PiecewiseAffineSystem::new(left, right);
        let st = pws.equilibrium_status(Side::Left).unwrap();
        assert_eq!(st.kind, EquilibriumKind::Boundary);
        assert!(st.point.norm() < 1e-14);
    }

    #[test]
    fn canonical_reduction_requires_matching_crossing_direction() {
        let left = AffineSystem2::new(Mat2::new(-1.0, 1.0, 0.0, -1.0), Vec2::new(0.0, 0.0));
        let right = AffineSystem2::new(Mat2::new(-1.0, -1.0, 0.0, -1.0), Vec2::new(0.0, 0.0));
        let pws = PiecewiseAffineSystem::new(left, right);
        assert!(matches!(
            pws.to_lienard_canonical(),
            Err(Error::TangencyDegenerate { .. })
        ));
    }

    #[test]
    fn canonical_reduction_conjugacy_and_sigma_preservation() {
        // a generic pair with a12 products positive
        let left =
            AffineSystem2::from_plus_forcing(Mat2::new(-0.7, 0.9, 0.3, -1.9), Vec2::new(0.4, -0.2));
        let right = AffineSystem2::from_plus_forcing(
            Mat2::new(-2.1, 0.5, -0.2, -1.1),
            Vec2::new(-0.3, 0.7),
        );
        let pws = PiecewiseAffineSystem::new(left, right);
        let tr = pws.to_lienard_canonical().unwrap();

        // Sigma maps to Sigma and both branches agree there
        for y in [-2.0, -0.1, 0.0, 0.3, 1.5] {
            let p = Vec2::new(0.0, y);
            let hl = tr.apply(Side::Left, p);
            let hr = tr.apply(Side::Right, p);
            assert!(hl.x.abs() < 1e-14 && hr.x.abs() < 1e-14);
            assert!((hl - hr).norm() < 1e-14);
        }

        // conjugacy Dh Z(x) = Z~(h(x)) on a point grid in each zone
        for (side, sys, csys, m) in [
            (Side::Left, pws.left(), tr.canonical.left(), tr.left_matrix),
            (
                Side::Right,
                pws.right(),
                tr.canonical.right(),
                tr.right_matrix,
            ),
        ] {
            for i in -5..5 {
                for j in -5..5 {
                    let sign = if side == Side::Left { -1.0 } else { 1.0 };
                    let p = Vec2::new(sign * (0.1 + 0.3 * (i as f64).abs()), 0.4 * j as f64);
                    let lhs = m * sys.field(p);
                    let rhs = csys.field(tr.apply(side, p));
                    assert!(
                        (lhs - rhs).norm() < 1e-12,
                        "side {side:?} p ({}, {})",
                        p.x,
                        p.y
                    );
                }
            }
        }
    }
}
