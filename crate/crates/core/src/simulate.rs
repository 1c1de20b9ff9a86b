//! Trajectory generation: an event-driven integrator built on the exact
//! zone flows (including sliding arcs on the switching line) and an
//! independent fixed-step Runge–Kutta oracle for the raw model in both its
//! non-smooth and smoothed forms.

use crate::error::{Error, Result};
use crate::filippov::{PiecewiseAffineSystem, Side, SigmaClass};
use crate::geom::Vec2;
use crate::poincare::CrossingCycle;
use crate::welander::{ConvectionLaw, WelanderParams};

/// Scaled distance below which a state counts as lying on the switching line.
const SIGMA_TOL: f64 = 1e-12;
/// Scaled distance to a real equilibrium at which integration stops.
const EQUILIBRIUM_TOL: f64 = 1e-12;
/// Scaled sliding speed below which a pseudo-equilibrium is declared.
const PSEUDO_EQ_TOL: f64 = 1e-13;
/// Base step of the sliding-arc integrator.
const SLIDE_STEP: f64 = 1e-3;
/// Zone scan resolution as a fraction of the fastest zone time scale.
const ZONE_SCAN_FRACTION: f64 = 0.02;
/// Probe time for deciding which zone a switching-line point flows into.
const ZONE_PROBE_TIME: f64 = 1e-7;
/// Time tolerance when bisecting an oracle step onto the switching line.
const ORACLE_BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    LeftZone,
    RightZone,
    Sliding,
}

/// A maximal arc of one dynamical mode, with a `(t, state)` sample table.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub samples: Vec<(f64, Vec2)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    CrossSigma,
    EnterSliding,
    LeaveSliding,
    ReachEscaping,
    Equilibrated,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub state: Vec2,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<(f64, Vec2)> {
        self.segments.last().and_then(|s| s.samples.last().copied())
    }

    /// Switching-line crossing events in time order.
    pub fn crossings(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::CrossSigma)
    }
}

/// Which raw model the oracle integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleModel {
    Nonsmooth,
    Smooth { a: f64 },
}

/// One row of an epsilon sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub epsilon: f64,
    pub cycle: Option<CrossingCycle>,
    /// Set when the cycle search failed with a defect at this point.
    pub error: Option<String>,
}

enum Mode {
    Zone(Side),
    Slide,
    Done,
}

/// Filippov sliding data at `(0, y)`, evaluated without the classification
/// guard (used internally along sliding arcs, including their endpoints).
fn sliding_velocity(pws: &PiecewiseAffineSystem, y: f64) -> (f64, f64) {
    let p = Vec2::new(0.0, y);
    let (zl, zr) = (pws.left().field(p), pws.right().field(p));
    let lambda = zl.x / (zl.x - zr.x);
    (zl.y + lambda * (zr.y - zl.y), lambda)
}

/// Decide which zone a switching-line point leaves into, by probing the
/// exact zone flows. `heading` breaks grazing ties with the direction of
/// approach along the line.
fn pick_zone(pws: &PiecewiseAffineSystem, y: f64, heading: f64) -> Result<Side> {
    let p = Vec2::new(0.0, y);
    let h = ZONE_PROBE_TIME;
    let left_ok = pws.left().flow(p, h)?.x < 0.0;
    let right_ok = pws.right().flow(p, h)?.x > 0.0;
    match (left_ok, right_ok) {
        (true, false) => Ok(Side::Left),
        (false, true) => Ok(Side::Right),
        _ => {
            let probe = y + heading.signum() * 1e-9 * (1.0 + y.abs());
            match pws.classify_sigma_point(probe) {
                SigmaClass::PositiveCrossing => Ok(Side::Right),
                SigmaClass::NegativeCrossing => Ok(Side::Left),
                c => Err(Error::InternalDefect(format!(
                    "no forward continuation from the switching line at y = {y} (adjacent class {c:?})"
                ))),
            }
        }
    }
}

struct Integrator<'a> {
    pws: &'a PiecewiseAffineSystem,
    horizon: f64,
    dt_sample: f64,
    t: f64,
    state: Vec2,
    trajectory: Trajectory,
}

impl<'a> Integrator<'a> {
    fn event(&mut self, kind: EventKind) {
        self.trajectory.events.push(Event {
            t: self.t,
            kind,
            state: self.state,
        });
    }

    /// Advance inside one zone until the switching line, an equilibrium, or
    /// the horizon. Returns the next mode.
    fn advance_zone(&mut self, side: Side) -> Result<Mode> {
        let zone = self.pws.zone(side);
        let m = zone.matrix();
        let scale = (m.a11.abs() + m.a12.abs())
            .max(m.a21.abs() + m.a22.abs())
            .max(0.1);
        let dt_scan = ZONE_SCAN_FRACTION / scale;
        let zone_sign = if side == Side::Left { -1.0 } else { 1.0 };
        let equilibrium = zone.equilibrium().ok().filter(|e| e.x * zone_sign > 0.0);
        let start = self.state;
        let t0 = self.t;
        let remaining = self.horizon - t0;
        let kind = if side == Side::Left {
            SegmentKind::LeftZone
        } else {
            SegmentKind::RightZone
        };

        if let Some(e) = equilibrium {
            if (start - e).norm() <= EQUILIBRIUM_TOL * (1.0 + e.norm()) {
                self.trajectory.segments.push(Segment {
                    kind,
                    samples: vec![(t0, start)],
                });
                self.event(EventKind::Equilibrated);
                return Ok(Mode::Done);
            }
        }

        let mut kind_samples = vec![(t0, start)];
        let mut next_sample = self.dt_sample;
        let mut tau_prev = 0.0;
        let mut crossing: Option<f64> = None;
        let mut equilibrated = false;
        loop {
            let tau = (tau_prev + dt_scan).min(remaining);
            let x = zone.flow(start, tau)?;
            if x.x * zone_sign < 0.0 {
                // the x-coordinate changed sign inside (tau_prev, tau]
                let tc = zone.crossing_time(start, tau_prev.max(1e-14), tau)?;
                while next_sample < tc {
                    kind_samples.push((t0 + next_sample, zone.flow(start, next_sample)?));
                    next_sample += self.dt_sample;
                }
                crossing = Some(tc);
                break;
            }
            // record the sample grid up to the accepted scan point
            while next_sample < tau {
                kind_samples.push((t0 + next_sample, zone.flow(start, next_sample)?));
                next_sample += self.dt_sample;
            }
            if let Some(e) = equilibrium {
                if (x - e).norm() <= EQUILIBRIUM_TOL * (1.0 + e.norm()) {
                    tau_prev = tau;
                    equilibrated = true;
                    break;
                }
            }
            tau_prev = tau;
            if tau >= remaining {
                break;
            }
        }

        let (tau_end, next) = if let Some(tc) = crossing {
            (tc, None)
        } else {
            (
                tau_prev,
                Some(if equilibrated {
                    EventKind::Equilibrated
                } else {
                    EventKind::TimeLimit
                }),
            )
        };
        let mut end = zone.flow(start, tau_end)?;
        if crossing.is_some() {
            end.x = 0.0;
        }
        kind_samples.push((t0 + tau_end, end));
        self.trajectory.segments.push(Segment {
            kind,
            samples: kind_samples,
        });
        self.t = t0 + tau_end;
        self.state = end;
        if let Some(kind) = next {
            self.event(kind);
            return Ok(Mode::Done);
        }
        // arrived on the switching line: dispatch on the local class
        match self.pws.classify_sigma_point(end.y) {
            SigmaClass::Sliding => {
                self.event(EventKind::EnterSliding);
                Ok(Mode::Slide)
            }
            SigmaClass::Escaping => {
                self.event(EventKind::ReachEscaping);
                Ok(Mode::Done)
            }
            _ => {
                self.event(EventKind::CrossSigma);
                let velocity = zone.field(end).y;
                Ok(Mode::Zone(pick_zone(self.pws, end.y, velocity)?))
            }
        }
    }

    /// Follow the Filippov sliding field along the line until a segment
    /// endpoint, a pseudo-equilibrium, or the horizon.
    fn advance_slide(&mut self) -> Result<Mode> {
        // bounds of the sliding interval containing the current point
        let part = self.pws.partition_sigma();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for iv in &part.intervals {
            let lo_v = iv.lo.unwrap_or(f64::NEG_INFINITY);
            let hi_v = iv.hi.unwrap_or(f64::INFINITY);
            if iv.class == SigmaClass::Sliding
                && self.state.y >= lo_v - SIGMA_TOL
                && self.state.y <= hi_v + SIGMA_TOL
            {
                (lo, hi) = (lo_v, hi_v);
                break;
            }
        }

        let t0 = self.t;
        let mut y = self.state.y;
        let mut samples = vec![(t0, Vec2::new(0.0, y))];
        let mut next_sample = self.dt_sample;
        let mut elapsed = 0.0;
        let remaining = self.horizon - t0;
        let rk4 = |y: f64, h: f64| -> f64 {
            let f = |y: f64| sliding_velocity(self.pws, y).0;
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        };
        let outcome = loop {
            let vs = sliding_velocity(self.pws, y).0;
            if vs.abs() <= PSEUDO_EQ_TOL * (1.0 + y.abs()) {
                break Some(EventKind::Equilibrated);
            }
            if elapsed >= remaining {
                break Some(EventKind::TimeLimit);
            }
            let mut h = SLIDE_STEP.min(remaining - elapsed);
            let mut y_next = rk4(y, h);
            if y_next < lo || y_next > hi {
                // bisect the step onto the violated endpoint
                let bound = if y_next < lo { lo } else { hi };
                let (mut h_in, mut h_out) = (0.0, h);
                for _ in 0..100 {
                    let mid = 0.5 * (h_in + h_out);
                    if (rk4(y, mid) - bound) * (y_next - bound) > 0.0 {
                        h_out = mid;
                    } else {
                        h_in = mid;
                    }
                }
                h = 0.5 * (h_in + h_out);
                y_next = bound;
            }
            elapsed += h;
            y = y_next;
            while next_sample < elapsed {
                samples.push((t0 + next_sample, Vec2::new(0.0, y)));
                next_sample += self.dt_sample;
            }
            if y == lo || y == hi {
                break None; // reached a fold endpoint: leave the line
            }
        };
        samples.push((t0 + elapsed, Vec2::new(0.0, y)));
        self.trajectory.segments.push(Segment {
            kind: SegmentKind::Sliding,
            samples,
        });
        self.t = t0 + elapsed;
        self.state = Vec2::new(0.0, y);
        match outcome {
            Some(kind) => {
                self.event(kind);
                Ok(Mode::Done)
            }
            None => {
                self.event(EventKind::LeaveSliding);
                let heading = sliding_velocity(self.pws, y).0;
                Ok(Mode::Zone(pick_zone(self.pws, y, heading)?))
            }
        }
    }
}

/// Integrate the piecewise system with exact zone flows and Filippov
/// sliding arcs. Sampling density is controlled by `dt_sample`; accuracy is
/// not (arcs are exact).
pub fn integrate(
    pws: &PiecewiseAffineSystem,
    x0: Vec2,
    horizon: f64,
    dt_sample: f64,
) -> Result<Trajectory> {
    if !(horizon > 0.0) || !(dt_sample > 0.0) || !x0.is_finite() {
        return Err(Error::InvalidParams(format!(
            "integration requires a positive horizon and sample step (got {horizon}, {dt_sample})"
        )));
    }
    let mut it = Integrator {
        pws,
        horizon,
        dt_sample,
        t: 0.0,
        state: x0,
        trajectory: Trajectory::default(),
    };
    let mut mode = if x0.x.abs() > SIGMA_TOL * (1.0 + x0.y.abs()) {
        Mode::Zone(if x0.x < 0.0 { Side::Left } else { Side::Right })
    } else {
        let start = Vec2::new(0.0, x0.y);
        it.state = start;
        match pws.classify_sigma_point(x0.y) {
            SigmaClass::Escaping => return Err(Error::EscapingStart { y: x0.y }),
            SigmaClass::Sliding => {
                it.event(EventKind::EnterSliding);
                Mode::Slide
            }
            _ => Mode::Zone(pick_zone(pws, x0.y, 0.0)?),
        }
    };
    loop {
        mode = match mode {
            Mode::Zone(side) => it.advance_zone(side)?,
            Mode::Slide => it.advance_slide()?,
            Mode::Done => return Ok(it.trajectory),
        };
        if it.t >= it.horizon {
            if !matches!(
                it.trajectory.events.last().map(|e| e.kind),
                Some(EventKind::TimeLimit | EventKind::Equilibrated | EventKind::ReachEscaping)
            ) {
                it.event(EventKind::TimeLimit);
            }
            return Ok(it.trajectory);
        }
    }
}

/// Fixed-step fourth-order integration of the raw model. For the non-smooth
/// model, steps that straddle the switching line are bisected onto it
/// before the convection law switches.
pub fn oracle_rk4(
    model: OracleModel,
    params: &WelanderParams,
    x0: Vec2,
    horizon: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(h > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidParams(format!(
            "oracle requires positive horizon and step (got {horizon}, {h})"
        )));
    }
    let law = match model {
        OracleModel::Nonsmooth => ConvectionLaw::Nonsmooth,
        OracleModel::Smooth { a } => ConvectionLaw::Smooth { a },
    };
    // probe the law once so invalid smoothing fails fast
    params.convection_rate(0.0, law)?;
    let (alpha, beta, eps) = (params.alpha(), params.beta(), params.epsilon());
    let rate = |s: Vec2| {
        params
            .convection_rate(s.x + eps, law)
            .expect("law validated above")
    };
    let field_with = |s: Vec2, k: f64| -> Vec2 {
        Vec2::new(
            (-k - beta) * s.x + alpha * (1.0 - beta) * s.y + (beta - alpha - (beta + k) * eps),
            (-1.0 - k) * s.y + 1.0,
        )
    };
    // `frozen` pins the convection rate for a whole step: used when a step
    // ends on the switching line, so that stage points that poke across do
    // not sample the other branch of the law
    let step_with = |s: Vec2, h: f64, frozen: Option<f64>| -> Vec2 {
        let field = |s: Vec2| field_with(s, frozen.unwrap_or_else(|| rate(s)));
        let k1 = field(s);
        let k2 = field(s + k1 * (0.5 * h));
        let k3 = field(s + k2 * (0.5 * h));
        let k4 = field(s + k3 * h);
        s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let step = |s: Vec2, h: f64| step_with(s, h, None);

    let mut tr = Trajectory::default();
    let kind_of = |s: Vec2| {
        if s.x <= 0.0 {
            SegmentKind::LeftZone
        } else {
            SegmentKind::RightZone
        }
    };
    // tag a start on the line by where the first step goes
    let initial_kind = if x0.x == 0.0 {
        kind_of(step(x0, h))
    } else {
        kind_of(x0)
    };
    let mut seg = Segment {
        kind: initial_kind,
        samples: vec![(0.0, x0)],
    };
    let mut t = 0.0;
    let mut s = x0;
    while t < horizon {
        let dt = h.min(horizon - t);
        // the non-smooth law is constant along any arc between crossings,
        // so every step runs with the rate frozen at its departure state;
        // stage points that poke across the line then cannot sample the
        // other branch (which would contaminate near-grazing arcs)
        let frozen = match model {
            OracleModel::Nonsmooth => Some(rate(s)),
            OracleModel::Smooth { .. } => None,
        };
        let mut s_next = step_with(s, dt, frozen);
        let mut dt_used = dt;
        if matches!(model, OracleModel::Nonsmooth) && s.x != 0.0 && s_next.x * s.x < 0.0 {
            // bisect the step length onto the line
            let k_here = frozen.expect("non-smooth branch");
            let (mut a, mut b) = (0.0, dt);
            while b - a > ORACLE_BISECTION_TOL {
                let mid = 0.5 * (a + b);
                if step_with(s, mid, Some(k_here)).x * s.x > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            dt_used = b;
            s_next = step_with(s, dt_used, Some(k_here));
            s_next.x = 0.0;
        }
        t += dt_used;
        s = s_next;
        seg.samples.push((t, s));
        if matches!(model, OracleModel::Nonsmooth) && s.x == 0.0 {
            let (k_lo, k_hi) = (params.k0(), params.k1());
            let on_line = |y: f64| {
                (
                    field_with(Vec2::new(0.0, y), k_lo),
                    field_with(Vec2::new(0.0, y), k_hi),
                )
            };
            let (fl, fr) = on_line(s.y);
            if fl.x > 0.0 && fr.x < 0.0 {
                // both sides push onto the line: follow the Filippov blend
                // until one field releases at a fold (or the horizon)
                tr.events.push(Event {
                    t,
                    kind: EventKind::EnterSliding,
                    state: s,
                });
                tr.segments.push(seg);
                seg = Segment {
                    kind: SegmentKind::Sliding,
                    samples: vec![(t, s)],
                };
                let blend = |y: f64| {
                    let (l, r) = on_line(y);
                    let lambda = l.x / (l.x - r.x);
                    l.y + lambda * (r.y - l.y)
                };
                let mut y = s.y;
                let exit = loop {
                    if t >= horizon {
                        break None;
                    }
                    let dt = h.min(horizon - t);
                    let k1 = blend(y);
                    let k2 = blend(y + 0.5 * dt * k1);
                    let k3 = blend(y + 0.5 * dt * k2);
                    let k4 = blend(y + dt * k3);
                    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    t += dt;
                    seg.samples.push((t, Vec2::new(0.0, y)));
                    let (l, r) = on_line(y);
                    if l.x <= 0.0 {
                        break Some((SegmentKind::LeftZone, k_lo));
                    }
                    if r.x >= 0.0 {
                        break Some((SegmentKind::RightZone, k_hi));
                    }
                };
                s = Vec2::new(0.0, y);
                if let Some((kind, k_exit)) = exit {
                    tr.events.push(Event {
                        t,
                        kind: EventKind::LeaveSliding,
                        state: s,
                    });
                    tr.segments.push(seg);
                    seg = Segment {
                        kind,
                        samples: vec![(t, s)],
                    };
                    // nudge into the releasing zone with its own law
                    s = step_with(s, ORACLE_BISECTION_TOL, Some(k_exit));
                    t += ORACLE_BISECTION_TOL;
                }
            } else {
                // transversal crossing: close the segment at the line and
                // reopen on the other side
                tr.events.push(Event {
                    t,
                    kind: EventKind::CrossSigma,
                    state: s,
                });
                let probe = step(s, 1e-3 * h);
                tr.segments.push(seg);
                seg = Segment {
                    kind: kind_of(probe),
                    samples: vec![(t, s)],
                };
                // nudge off the line so the sign test stays meaningful
                s = step(s, ORACLE_BISECTION_TOL);
                t += ORACLE_BISECTION_TOL;
            }
        }
    }
    tr.segments.push(seg);
    tr.events.push(Event {
        t,
        kind: EventKind::TimeLimit,
        state: s,
    });
    Ok(tr)
}

/// Run the cycle search across an epsilon grid with all other parameters
/// fixed.
pub fn scan_epsilon(base: &WelanderParams, eps_list: &[f64]) -> Vec<ScanRow> {
    eps_list
        .iter()
        .map(|&epsilon| {
            let p = WelanderParams::new(base.alpha(), base.beta(), epsilon, base.k0(), base.k1());
            match p.map(|p| crate::poincare::find_cycle(&p)) {
                Ok(Ok(cycle)) => ScanRow {
                    epsilon,
                    cycle,
                    error: None,
                },
                Ok(Err(e)) | Err(e) => ScanRow {
                    epsilon,
                    cycle: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poincare::find_cycle;

    fn params_41(eps: f64) -> WelanderParams {
        WelanderParams::new(0.8, 0.5, eps, 0.0, 1.0).unwrap()
    }

    #[test]
    fn continuity_and_tag_invariants() {
        let p = params_41(-0.01);
        let c = p.canonical_system().unwrap();
        let tr = integrate(&c, Vec2::new(0.0, 0.2), 20.0, 0.01).unwrap();
        assert!(tr.segments.len() > 4);
        for w in tr.segments.windows(2) {
            let a = *w[0].samples.last().unwrap();
            let b = w[1].samples[0];
            assert!((a.1 - b.1).norm() < 1e-10);
            assert!((a.0 - b.0).abs() < 1e-12);
        }
        for seg in &tr.segments {
            for &(_, s) in &seg.samples {
                match seg.kind {
                    SegmentKind::LeftZone => assert!(s.x <= 1e-12),
                    SegmentKind::RightZone => assert!(s.x >= -1e-12),
                    SegmentKind::Sliding => assert!(s.x.abs() <= 1e-12),
                }
            }
        }
    }

    #[test]
    fn converges_to_the_crossing_cycle() {
        let p = params_41(-0.01);
        let c = p.canonical_system().unwrap();
        let cycle = find_cycle(&p).unwrap().unwrap();
        let tr = integrate(&c, Vec2::new(0.0, 0.2), 40.0, 0.05).unwrap();
        // upward crossings approach the cycle's upper intersection
        let ups: Vec<f64> = tr
            .crossings()
            .filter(|e| e.state.y > 0.0)
            .map(|e| e.state.y)
            .collect();
        assert!(ups.len() >= 4, "{} upward crossings", ups.len());
        let errs: Vec<f64> = ups.iter().map(|y| (y - cycle.y_upper).abs()).collect();
        for w in errs.windows(2).skip(2) {
            assert!(w[1] < w[0] || w[1] < 1e-12, "{errs:?}");
        }
        assert!(*errs.last().unwrap() < 1e-6, "{errs:?}");
    }

    #[test]
    fn sliding_reached_for_positive_epsilon() {
        let p = params_41(0.01);
        let c = p.canonical_system().unwrap();
        let tr = integrate(&c, Vec2::new(0.0, 0.2), 60.0, 0.01).unwrap();
        assert!(tr.segments.iter().any(|s| s.kind == SegmentKind::Sliding));
        assert!(tr.events.iter().any(|e| e.kind == EventKind::EnterSliding));
        // the sliding field has an attracting pseudo-equilibrium here
        assert!(tr.events.iter().any(|e| e.kind == EventKind::Equilibrated));
        let (_, last) = tr.final_state().unwrap();
        assert!(last.x.abs() < 1e-12);
        assert!(last.y > -0.01 && last.y < 0.0, "terminal y = {}", last.y);
    }

    #[test]
    fn escaping_start_is_refused() {
        let p = params_41(-0.01);
        let c = p.canonical_system().unwrap();
        // escaping segment is (0, 0.01)
        assert!(matches!(
            integrate(&c, Vec2::new(0.0, 0.005), 1.0, 0.01),
            Err(Error::EscapingStart { .. })
        ));
    }

    #[test]
    fn equilibrated_at_a_real_equilibrium() {
        // alpha above the left threshold: the left equilibrium is real
        let p = WelanderParams::new(2.0, 0.5, -0.01, 0.0, 1.0).unwrap();
        let c = p.canonical_system().unwrap();
        let e = c.left().equilibrium().unwrap();
        assert!(e.x < 0.0);
        let tr = integrate(&c, e, 5.0, 0.01).unwrap();
        assert_eq!(tr.events[0].kind, EventKind::Equilibrated);
        assert!(tr.events[0].t < 1e-12);
    }

    #[test]
    fn oracle_matches_exact_integration() {
        let p = params_41(-0.01);
        // compare in the raw frame, where the oracle operates
        let raw = p.raw_system();
        let x0 = Vec2::new(-0.05, 0.3);
        let horizon = 10.0;
        let exact = integrate(&raw, x0, horizon, 0.005).unwrap();
        let orc = oracle_rk4(OracleModel::Nonsmooth, &p, x0, horizon, 1e-4).unwrap();
        let (te, se) = exact.final_state().unwrap();
        let (to, so) = orc.final_state().unwrap();
        assert!((te - to).abs() < 1e-9);
        assert!((se - so).norm() < 1e-8, "exact {se:?} vs oracle {so:?}");
    }

    #[test]
    fn oracle_fourth_order_convergence() {
        let p = params_41(-0.01);
        let x0 = Vec2::new(-0.05, 0.3);
        // smooth model: no switching interferes with the order measurement;
        // steps are kept coarse enough that truncation dominates roundoff
        let reference = oracle_rk4(OracleModel::Smooth { a: 0.01 }, &p, x0, 2.0, 1e-4)
            .unwrap()
            .final_state()
            .unwrap()
            .1;
        let err = |h: f64| {
            (oracle_rk4(OracleModel::Smooth { a: 0.01 }, &p, x0, 2.0, h)
                .unwrap()
                .final_state()
                .unwrap()
                .1
                - reference)
                .norm()
        };
        let (e1, e2) = (err(4e-2), err(2e-2));
        let ratio = e1 / e2;
        assert!(
            ratio > 8.0 && ratio < 32.0,
            "order ratio {ratio} (errors {e1}, {e2})"
        );
    }

    #[test]
    fn smooth_oracle_settles_on_a_loop() {
        // the original smooth-model demonstration parameters
        let p = WelanderParams::new(0.8, 0.5, -1.0 / 30.0, 0.0, 1.0).unwrap();
        let tr = oracle_rk4(
            OracleModel::Smooth { a: 1.0 / 500.0 },
            &p,
            Vec2::new(0.0, 0.2),
            60.0,
            1e-3,
        )
        .unwrap();
        // collect upward crossings of x = 0 from the sample sequence
        let samples: Vec<(f64, Vec2)> = tr
            .segments
            .iter()
            .flat_map(|s| s.samples.iter().copied())
            .collect();
        let mut ups = Vec::new();
        for w in samples.windows(2) {
            if w[0].1.x < 0.0 && w[1].1.x >= 0.0 {
                ups.push(w[1].1.y);
            }
        }
        assert!(ups.len() >= 10, "{} returns", ups.len());
        let tail: Vec<f64> = ups.iter().rev().take(3).copied().collect();
        assert!((tail[0] - tail[1]).abs() < 1e-3, "{tail:?}");
    }

    #[test]
    fn scan_rows() {
        let base = params_41(0.0);
        let rows = scan_epsilon(&base, &[-0.05, -0.02, -0.01, 0.0, 0.01]);
        assert_eq!(rows.len(), 5);
        let mut amplitudes = Vec::new();
        for r in &rows {
            assert!(r.error.is_none());
            if r.epsilon < 0.0 {
                let c = r.cycle.as_ref().expect("cycle for negative epsilon");
                amplitudes.push(c.y_upper - c.y_lower);
            } else {
                assert!(r.cycle.is_none());
            }
        }
        // amplitude shrinks toward the boundary
        assert!(amplitudes.windows(2).all(|w| w[1] < w[0]), "{amplitudes:?}");
        assert_eq!(scan_epsilon(&base, &[-0.01]).len(), 1);
    }
}
