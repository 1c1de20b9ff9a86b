//! Half Poincaré maps of the canonical model, their inverses and Taylor
//! data, the displacement function, the crossing-cycle solver, and the
//! trace–area certificate.

use crate::affine2d::psi;
use crate::error::{Error, Result};
use crate::filippov::Side;
use crate::geom::Vec2;
use crate::roots::brent;
use crate::welander::{Regime, WelanderParams};

/// Relative t-tolerance for inverting the time-parametrized maps. Kept near
/// machine precision so finite-difference probes of the maps stay clean.
const INVERSION_RTOL: f64 = 1e-15;
/// Hard cap on the flight-time bracket; beyond it the maps are governed by
/// their asymptotes.
const T_BRACKET_MAX: f64 = 1e3;
/// Scaled distance to the inverse right map's upper endpoint below which the
/// inversion is refused.
const ASYMPTOTE_GUARD: f64 = 1e-13;
/// Scaled tolerance for the full-map resonance test.
const RESONANCE_TOL: f64 = 1e-12;
/// Relative closure tolerance certified on returned cycles.
const CYCLE_CLOSURE_TOL: f64 = 1e-10;
/// Simpson intervals per arc for the area quadrature.
const AREA_SAMPLES: usize = 4096;
/// Switch point between the series-guarded and the grouped large-time
/// evaluation of the reversed-time numerator.
const REVERSED_FORM_SWITCH: f64 = 1.0;

/// One evaluation of a time-parametrized half map: flight time and the two
/// intersections with the switching line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfMapPoint {
    pub t: f64,
    pub y_start: f64,
    pub y_end: f64,
}

/// A certified crossing limit cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingCycle {
    pub y_upper: f64,
    pub y_lower: f64,
    pub t_left: f64,
    pub t_right: f64,
    pub period: f64,
    /// Derivative of the full return map at the fixed point; in (0, 1) for
    /// a stable cycle.
    pub multiplier: f64,
}

/// First four derivatives of a map at its tangency fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorData {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

/// Per-side data of the canonical model needed by the half-map formulas.
struct SideData {
    /// Larger eigenvalue.
    li: f64,
    /// Smaller eigenvalue.
    lj: f64,
    /// Canonical forcing strength of the side.
    a: f64,
    det: f64,
    /// y-offset of the side's switching-line data (0 left, B right).
    shift: f64,
}

fn side_data(p: &WelanderParams, side: Side) -> Result<SideData> {
    if p.beta() == 1.0 {
        return Err(Error::DegenerateBeta);
    }
    let strong = side == Side::Right;
    let k = if strong { p.k1() } else { p.k0() };
    let l1 = -k - p.beta();
    let l2 = -k - 1.0;
    let (li, lj) = if l1 > l2 { (l1, l2) } else { (l2, l1) };
    let a = p.a_param(strong);
    let virtual_node = if strong { a < 0.0 } else { a > 0.0 };
    if !virtual_node {
        return Err(Error::WrongRegime {
            side: side.name(),
            a,
        });
    }
    Ok(SideData {
        li,
        lj,
        a,
        det: (1.0 + k) * (k + p.beta()),
        shift: if strong { p.b_param() } else { 0.0 },
    })
}

impl SideData {
    /// `e^{li t} - e^{lj t}`, evaluated without cancellation. Factoring out
    /// the dominant exponential keeps the product finite for large `t`.
    fn phi_den(&self, t: f64) -> f64 {
        -(self.li * t).exp() * ((self.lj - self.li) * t).exp_m1()
    }

    /// `e^{(li+lj) t} psi(li, lj, -t)`: every exponential decays, so the
    /// grouped form is overflow-free for large `t`; the psi series guards
    /// small `t`.
    fn reversed_numerator(&self, t: f64) -> f64 {
        let (li, lj) = (self.li, self.lj);
        if t < REVERSED_FORM_SWITCH {
            ((li + lj) * t).exp() * psi(li, lj, -t)
        } else {
            (li - lj) * ((li + lj) * t).exp() + lj * (lj * t).exp() - li * (li * t).exp()
        }
    }

    /// Entry intersection relative to the side's shift (full cancellation
    /// accuracy near the tangency).
    fn y_start_rel(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.a * psi(self.li, self.lj, t) / (self.det * self.phi_den(t))
    }

    /// Exit intersection relative to the side's shift.
    fn y_end_rel(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        -self.a * self.reversed_numerator(t) / (self.det * self.phi_den(t))
    }

    /// Entry intersection of the half map at flight time `t`.
    fn y_start(&self, t: f64) -> f64 {
        self.shift + self.y_start_rel(t)
    }

    /// Exit intersection of the half map at flight time `t`.
    fn y_end(&self, t: f64) -> f64 {
        self.shift + self.y_end_rel(t)
    }

    /// Derivative of the half map (exit with respect to entry) at flight
    /// time `t`: `-psi(t) / psi(-t)`, evaluated overflow-free.
    fn map_derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return -1.0;
        }
        -psi(self.li, self.lj, t) * ((self.li + self.lj) * t).exp() / self.reversed_numerator(t)
    }

    /// Solve `f(t) = target` for the monotone map coordinate `f`, doubling
    /// the bracket from `[0, 1]`.
    fn invert<F: Fn(&SideData, f64) -> f64>(&self, f: F, target: f64) -> Result<f64> {
        let g = |t: f64| f(self, t) - target;
        let g0 = g(0.0);
        if g0 == 0.0 {
            return Ok(0.0);
        }
        let mut t_hi = 1.0;
        while g(t_hi).signum() == g0.signum() && t_hi < T_BRACKET_MAX {
            t_hi *= 2.0;
        }
        if g(t_hi).signum() == g0.signum() {
            return Err(Error::InternalDefect(format!(
                "half-map inversion failed to bracket target {target} by t = {t_hi}"
            )));
        }
        brent(g, 0.0, t_hi, INVERSION_RTOL * (1.0 + t_hi.min(16.0)), 200).ok_or_else(|| {
            Error::InternalDefect(format!(
                "half-map inversion did not converge at target {target}"
            ))
        })
    }
}

/// Evaluate one half map at a given flight time.
pub fn half_map_parametric(p: &WelanderParams, side: Side, t: f64) -> Result<HalfMapPoint> {
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!(
            "flight time must be positive (got {t})"
        )));
    }
    let d = side_data(p, side)?;
    Ok(HalfMapPoint {
        t,
        y_start: d.y_start(t),
        y_end: d.y_end(t),
    })
}

/// Left half map: entry at `y0 > 0`, exit below the line's origin; also
/// returns the flight time.
pub fn left_map(p: &WelanderParams, y0: f64) -> Result<(f64, f64)> {
    let d = side_data(p, Side::Left)?;
    if !(y0 > 0.0) {
        return Err(Error::OutOfDomain {
            y0,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let t = d.invert(SideData::y_start, y0)?;
    Ok((d.y_end(t), t))
}

/// Forward right half map: entry at `y0 < B`, exit above `B`.
pub fn right_map(p: &WelanderParams, y0: f64) -> Result<(f64, f64)> {
    let d = side_data(p, Side::Right)?;
    if !(y0 < d.shift) {
        return Err(Error::OutOfDomain {
            y0,
            lo: f64::NEG_INFINITY,
            hi: d.shift,
        });
    }
    let t = d.invert(SideData::y_start, y0)?;
    Ok((d.y_end(t), t))
}

/// Upper endpoint of the inverse right map's domain: `B + a^R / lambda_j^R`.
pub fn right_map_asymptote(p: &WelanderParams) -> Result<f64> {
    let d = side_data(p, Side::Right)?;
    Ok(d.shift + d.a / d.lj)
}

/// Inverse right half map on `(B, B + a^R / lambda_j^R)`; also returns the
/// flight time of the forward trip.
pub fn right_map_inverse(p: &WelanderParams, y0: f64) -> Result<(f64, f64)> {
    let d = side_data(p, Side::Right)?;
    let hi = d.shift + d.a / d.lj;
    if y0 <= d.shift || y0 >= hi {
        return Err(Error::OutOfDomain {
            y0,
            lo: d.shift,
            hi,
        });
    }
    if hi - y0 <= ASYMPTOTE_GUARD * (1.0 + hi.abs()) {
        return Err(Error::AsymptoteReached { y0, asymptote: hi });
    }
    let t = d.invert(SideData::y_end, y0)?;
    Ok((d.y_start(t), t))
}

/// Difference of the left map and the inverse right map; its zeros are
/// crossing cycles.
pub fn displacement(p: &WelanderParams, y0: f64) -> Result<f64> {
    Ok(left_map(p, y0)?.0 - right_map_inverse(p, y0)?.0)
}

/// Locate the unique stable crossing cycle, or report that the regime has
/// none.
pub fn find_cycle(p: &WelanderParams) -> Result<Option<CrossingCycle>> {
    if p.regime() != Regime::UniqueStableCycle {
        return Ok(None);
    }
    let dl = side_data(p, Side::Left)?;
    let dr = side_data(p, Side::Right)?;
    let b = p.b_param();
    let hi = b + dr.a / dr.lj;
    let width = hi - b;

    // the displacement is negative at the lower endpoint and grows without
    // bound at the asymptote; walk the probes toward the endpoints until a
    // sign change is enclosed
    let mut lo = f64::NAN;
    for k in 6..=12 {
        let probe = b + width * 10f64.powi(-k);
        if displacement(p, probe)? < 0.0 {
            lo = probe;
            break;
        }
    }
    let mut hi_b = f64::NAN;
    for k in 3..=11 {
        let probe = hi - width * 10f64.powi(-k);
        match displacement(p, probe) {
            Ok(v) if v > 0.0 => {
                hi_b = probe;
                break;
            }
            // not positive yet: try closer to the asymptote
            Ok(_) => continue,
            // cannot probe any closer
            Err(Error::AsymptoteReached { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if !lo.is_finite() || !hi_b.is_finite() {
        return Err(Error::BracketFailure { lo: b, hi });
    }
    let y_upper = brent(
        |y| displacement(p, y).unwrap_or(f64::NAN),
        lo,
        hi_b,
        INVERSION_RTOL * (1.0 + hi.abs()),
        200,
    )
    .ok_or(Error::BracketFailure { lo, hi: hi_b })?;

    let (y_lower, t_left) = left_map(p, y_upper)?;
    let (_, t_right) = right_map_inverse(p, y_upper)?;
    let multiplier = dl.map_derivative(t_left) * dr.map_derivative(t_right);
    let cycle = CrossingCycle {
        y_upper,
        y_lower,
        t_left,
        t_right,
        period: t_left + t_right,
        multiplier,
    };

    // certify closure against the exact zone flows
    let c = p.canonical_system()?;
    let down = c.left().flow(Vec2::new(0.0, y_upper), t_left)?;
    let up = c.right().flow(Vec2::new(0.0, y_lower), t_right)?;
    let residual = down
        .x
        .abs()
        .max((down.y - y_lower).abs())
        .max(up.x.abs())
        .max((up.y - y_upper).abs());
    if residual > CYCLE_CLOSURE_TOL * (1.0 + y_upper.abs()) {
        return Err(Error::InternalDefect(format!(
            "cycle closure residual {residual} exceeds tolerance"
        )));
    }
    Ok(Some(cycle))
}

/// Closed-form Taylor data of one half map at its tangency fixed point.
pub fn taylor_at_tangency(p: &WelanderParams, side: Side) -> Result<TaylorData> {
    let d = side_data(p, side)?;
    let (li, lj, a) = (d.li, d.lj, d.a);
    let tr = -(li + lj); // 1 + 2k + beta
    Ok(TaylorData {
        d1: -1.0,
        d2: 4.0 * tr / (3.0 * a),
        d3: -8.0 * tr * tr / (3.0 * a * a),
        d4: -16.0
            * (8.0 * li.powi(3) + 15.0 * li * li * lj + 15.0 * li * lj * lj + 8.0 * lj.powi(3))
            / (9.0 * a.powi(3)),
    })
}

/// Compose two quartic jets fixing the origin (Faà di Bruno through order
/// four): the data of `outer ∘ inner`.
pub fn compose_taylor(inner: &TaylorData, outer: &TaylorData) -> TaylorData {
    let (g1, g2, g3, g4) = (inner.d1, inner.d2 / 2.0, inner.d3 / 6.0, inner.d4 / 24.0);
    let (f1, f2, f3, f4) = (outer.d1, outer.d2 / 2.0, outer.d3 / 6.0, outer.d4 / 24.0);
    let c1 = f1 * g1;
    let c2 = f1 * g2 + f2 * g1 * g1;
    let c3 = f1 * g3 + 2.0 * f2 * g1 * g2 + f3 * g1.powi(3);
    let c4 = f1 * g4 + f2 * (2.0 * g1 * g3 + g2 * g2) + 3.0 * f3 * g1 * g1 * g2 + f4 * g1.powi(4);
    TaylorData {
        d1: c1,
        d2: 2.0 * c2,
        d3: 6.0 * c3,
        d4: 24.0 * c4,
    }
}

/// Taylor data of the full return map at its tangency fixed point, defined
/// for a vanishing switching offset (`epsilon = 0`).
///
/// The jet is obtained by composing the closed-form half-map jets. The
/// composed map is orientation-preserving, so the first derivative is +1
/// (each half map contributes a factor of -1). At the resonance
/// `(1+2k1+beta)/a^R = (1+2k0+beta)/a^L` the second and third orders
/// cancel exactly and the quartic closed form is used directly.
pub fn full_map_taylor(p: &WelanderParams) -> Result<TaylorData> {
    if p.epsilon() != 0.0 {
        return Err(Error::NonzeroOffset {
            epsilon: p.epsilon(),
        });
    }
    let dl = side_data(p, Side::Left)?;
    let dr = side_data(p, Side::Right)?;
    let tau_l = -(dl.li + dl.lj) / dl.a;
    let tau_r = -(dr.li + dr.lj) / dr.a;
    if (tau_r - tau_l).abs() <= RESONANCE_TOL * (1.0 + tau_l.abs() + tau_r.abs()) {
        let d4 = 16.0 * tau_r * (dl.det / (dl.a * dl.a) - dr.det / (dr.a * dr.a));
        return Ok(TaylorData {
            d1: 1.0,
            d2: 0.0,
            d3: 0.0,
            d4,
        });
    }
    Ok(compose_taylor(
        &taylor_at_tangency(p, Side::Left)?,
        &taylor_at_tangency(p, Side::Right)?,
    ))
}

/// Gaussian elimination with partial pivoting on a small n×(n+1) augmented
/// system.
pub(crate) fn solve_dense(m: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        m.swap(col, pivot);
        if m[col][col] == 0.0 {
            return None;
        }
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..=n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = m[row][n];
        for c in row + 1..n {
            s -= m[row][c] * x[c];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}

/// One-sided polynomial fit of `f` at nodes `h, 2h, ..., deg·h` with
/// `f(0) = 0`: returns the coefficients of `y, y², …, y^deg`. Serves as the
/// finite-difference oracle for Taylor data at a tangency.
pub fn fit_one_sided<F: FnMut(f64) -> f64>(mut f: F, h: f64, deg: usize) -> Option<Vec<f64>> {
    let nodes: Vec<(f64, f64)> = (1..=deg).map(|k| (k as f64 * h, f(k as f64 * h))).collect();
    fit_through_origin(&nodes)
}

/// Interpolating polynomial through the origin and the given `(y, f)` nodes:
/// returns the coefficients of `y, y², …, y^n` for `n` nodes. The system is
/// solved in the scaled variable `y / max|y|` so the Vandermonde matrix
/// stays well conditioned.
pub fn fit_through_origin(nodes: &[(f64, f64)]) -> Option<Vec<f64>> {
    let n = nodes.len();
    let scale = nodes.iter().fold(0.0f64, |m, &(y, _)| m.max(y.abs()));
    if n == 0 || scale == 0.0 {
        return None;
    }
    let mut rows = Vec::with_capacity(n);
    for &(y, f) in nodes {
        let u = y / scale;
        let mut row = Vec::with_capacity(n + 1);
        let mut p = 1.0;
        for _ in 0..n {
            p *= u;
            row.push(p);
        }
        row.push(f);
        rows.push(row);
    }
    let mut c = solve_dense(&mut rows)?;
    let mut s = 1.0;
    for v in c.iter_mut() {
        s *= scale;
        *v /= s;
    }
    Some(c)
}

/// Richardson-refined variant of [`fit_one_sided`]: combines fits at `h`
/// and `h/2`, cancelling each coefficient's leading truncation order
/// (`h^(deg+1-k)` for the coefficient of `y^k`).
pub fn fit_one_sided_refined<F: FnMut(f64) -> f64>(
    mut f: F,
    h: f64,
    deg: usize,
) -> Option<Vec<f64>> {
    let coarse = fit_one_sided(&mut f, h, deg)?;
    let fine = fit_one_sided(&mut f, 0.5 * h, deg)?;
    Some(
        coarse
            .iter()
            .zip(&fine)
            .enumerate()
            .map(|(i, (c, fv))| {
                let w = 2f64.powi((deg - i) as i32);
                (w * fv - c) / (w - 1.0)
            })
            .collect(),
    )
}

/// Trace–area certificate of a crossing cycle:
/// `tr(A^L) σ^L + tr(A^R) σ^R + b h`, with the zone areas σ obtained by
/// Green's-theorem quadrature along the exact-flow arcs (the chords on the
/// switching line contribute nothing). Vanishes on a genuine cycle.
pub fn area_identity_residual(p: &WelanderParams, cycle: &CrossingCycle) -> Result<f64> {
    let c = p.canonical_system()?;
    let arcs = [
        (c.left(), Vec2::new(0.0, cycle.y_upper), cycle.t_left),
        (c.right(), Vec2::new(0.0, cycle.y_lower), cycle.t_right),
    ];
    let mut lhs = 0.0;
    for (zone, start, t_arc) in arcs {
        let integrand = |t: f64| -> Result<f64> {
            let pos = zone.flow(start, t)?;
            let v = zone.field(pos);
            Ok(0.5 * (pos.x * v.y - pos.y * v.x))
        };
        // composite Simpson over AREA_SAMPLES intervals
        let n = AREA_SAMPLES;
        let dt = t_arc / n as f64;
        let mut sum = integrand(0.0)? + integrand(t_arc)?;
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(k as f64 * dt)?;
        }
        let signed_area = sum * dt / 3.0;
        lhs += zone.trace() * signed_area.abs();
    }
    Ok(lhs + p.b_param() * (cycle.y_upper - cycle.y_lower))
}
