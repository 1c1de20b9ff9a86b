//! Subcommand implementations: each builds its report from the core
//! library and hands serialized text to the render layer.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use welander_core::filippov::{
    EquilibriumKind, NodeType, Side, SigmaClass, SigmaInterval, Visibility,
};
use welander_core::geom::Vec2;
use welander_core::poincare::{area_identity_residual, find_cycle};
use welander_core::simulate::{
    integrate, oracle_rk4, scan_epsilon, EventKind, OracleModel, SegmentKind, Trajectory,
};
use welander_core::welander::{Regime, WelanderParams};

use crate::render::{emit, jnum, json_text, sig17};
use crate::Failure;

/// Step size for the fixed-step integrator behind `--smooth` runs; output
/// is thinned to the requested sample spacing afterwards.
const SMOOTH_ORACLE_STEP: f64 = 5e-4;

/// Shared options of the trajectory-producing commands.
pub struct RunOptions {
    pub horizon: f64,
    pub dt_sample: f64,
    pub smooth: Option<f64>,
    pub events_out: Option<PathBuf>,
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::DegenerateNoCycle => "degenerate_no_cycle",
        Regime::RealEquilibriumNoCycle => "real_equilibrium_no_cycle",
        Regime::VirtualNoCycle => "virtual_no_cycle",
        Regime::UniqueStableCycle => "unique_stable_cycle",
    }
}

fn class_name(c: SigmaClass) -> &'static str {
    match c {
        SigmaClass::PositiveCrossing => "positive_crossing",
        SigmaClass::NegativeCrossing => "negative_crossing",
        SigmaClass::Sliding => "sliding",
        SigmaClass::Escaping => "escaping",
        SigmaClass::LeftTangency => "left_tangency",
        SigmaClass::RightTangency => "right_tangency",
        SigmaClass::DoubleTangency => "double_tangency",
    }
}

fn kind_name(k: EquilibriumKind) -> &'static str {
    match k {
        EquilibriumKind::Real => "real",
        EquilibriumKind::Virtual => "virtual",
        EquilibriumKind::Boundary => "boundary",
    }
}

fn node_name(n: NodeType) -> &'static str {
    match n {
        NodeType::AttractorNode => "attractor_node",
        NodeType::RepellerNode => "repeller_node",
        NodeType::Saddle => "saddle",
        NodeType::AttractorFocus => "attractor_focus",
        NodeType::RepellerFocus => "repeller_focus",
        NodeType::Center => "center",
        NodeType::Degenerate => "degenerate",
    }
}

fn segment_name(k: SegmentKind) -> &'static str {
    match k {
        SegmentKind::LeftZone => "left",
        SegmentKind::RightZone => "right",
        SegmentKind::Sliding => "sliding",
    }
}

fn event_name(k: EventKind) -> &'static str {
    match k {
        EventKind::CrossSigma => "cross_sigma",
        EventKind::EnterSliding => "enter_sliding",
        EventKind::LeaveSliding => "leave_sliding",
        EventKind::ReachEscaping => "reach_escaping",
        EventKind::Equilibrated => "equilibrated",
        EventKind::TimeLimit => "time_limit",
    }
}

fn point_json(p: Vec2) -> Value {
    json!([jnum(p.x), jnum(p.y)])
}

fn params_json(p: &WelanderParams) -> Value {
    json!({
        "alpha": jnum(p.alpha()),
        "beta": jnum(p.beta()),
        "epsilon": jnum(p.epsilon()),
        "k0": jnum(p.k0()),
        "k1": jnum(p.k1()),
        "b": jnum(p.b_param()),
    })
}

fn interval_json(iv: &SigmaInterval) -> Value {
    json!({
        "lo": iv.lo.map(jnum).unwrap_or(Value::Null),
        "hi": iv.hi.map(jnum).unwrap_or(Value::Null),
        "class": class_name(iv.class),
    })
}

pub fn analyze(p: &WelanderParams, out: Option<&Path>) -> Result<(), Failure> {
    let th = p.thresholds();
    let raw = p.raw_system();
    let mut zones = serde_json::Map::new();
    for side in [Side::Left, Side::Right] {
        let spec = raw.zone(side).spectrum()?;
        let strong = side == Side::Right;
        zones.insert(
            side.name().to_string(),
            json!({
                "a": jnum(p.a_param(strong)),
                "eigenvalues": [jnum(spec.lambda_i), jnum(spec.lambda_j)],
            }),
        );
    }

    // The switching-line geometry lives in the companion (Liénard) frame;
    // it is undefined when the reduction degenerates.
    let canonical = match p.canonical_system() {
        Err(_) => Value::Null,
        Ok(c) => {
            let mut eq = serde_json::Map::new();
            for side in [Side::Left, Side::Right] {
                let st = c.equilibrium_status(side)?;
                eq.insert(
                    side.name().to_string(),
                    json!({
                        "kind": kind_name(st.kind),
                        "node": node_name(st.node),
                        "location": point_json(st.point),
                    }),
                );
            }
            let folds: Vec<Value> = c
                .fold_points()?
                .iter()
                .map(|f| {
                    json!({
                        "side": f.side.name(),
                        "location": point_json(f.location),
                        "order": f.order,
                        "visibility": match f.visibility {
                            Visibility::Visible => "visible",
                            Visibility::Invisible => "invisible",
                        },
                    })
                })
                .collect();
            let part = c.partition_sigma();
            json!({
                "equilibria": eq,
                "folds": folds,
                "sigma_partition": {
                    "degenerate": part.degenerate,
                    "tangency_points": part.tangency_points.iter().copied()
                        .map(jnum).collect::<Vec<_>>(),
                    "intervals": part.intervals.iter().map(interval_json).collect::<Vec<_>>(),
                },
            })
        }
    };

    let report = json!({
        "command": "analyze",
        "params": params_json(p),
        "thresholds": {
            "alpha_l": jnum(th.alpha_l),
            "alpha_r": jnum(th.alpha_r),
            "eps_star": jnum(th.eps_star),
        },
        "regime": regime_name(p.regime()),
        "zones": zones,
        "canonical": canonical,
    });
    log::info!("analyze: regime {}", regime_name(p.regime()));
    emit(out, &json_text(&report))
}

/// Why the regime rules out a crossing cycle, for the no_cycle report.
fn no_cycle_reason(r: Regime) -> &'static str {
    match r {
        Regime::DegenerateNoCycle => "degenerate_no_cycle",
        Regime::RealEquilibriumNoCycle => "real_equilibrium_no_cycle",
        Regime::VirtualNoCycle => "epsilon_nonnegative",
        Regime::UniqueStableCycle => unreachable!("cycle regime has no no-cycle reason"),
    }
}

pub fn cycle(
    p: &WelanderParams,
    out: Option<&Path>,
    polyline: Option<&Path>,
    dt_sample: f64,
) -> Result<(), Failure> {
    if !(dt_sample > 0.0) {
        return Err(Failure::invalid(format!(
            "--dt-sample must be positive (got {dt_sample})"
        )));
    }
    let report = match find_cycle(p)? {
        None => {
            log::info!("cycle: no cycle ({})", regime_name(p.regime()));
            json!({
                "command": "cycle",
                "params": params_json(p),
                "status": "no_cycle",
                "reason": no_cycle_reason(p.regime()),
                "cycle": Value::Null,
            })
        }
        Some(cy) => {
            let residual = area_identity_residual(p, &cy)?;
            if let Some(path) = polyline {
                let csv = cycle_polyline_csv(p, &cy, dt_sample)?;
                emit(Some(path), &csv)?;
            }
            log::info!("cycle: period {} multiplier {}", cy.period, cy.multiplier);
            json!({
                "command": "cycle",
                "params": params_json(p),
                "status": "cycle",
                "reason": Value::Null,
                "cycle": {
                    "y_upper": jnum(cy.y_upper),
                    "y_lower": jnum(cy.y_lower),
                    "t_left": jnum(cy.t_left),
                    "t_right": jnum(cy.t_right),
                    "period": jnum(cy.period),
                    "multiplier": jnum(cy.multiplier),
                    "area_residual": jnum(residual),
                },
            })
        }
    };
    emit(out, &json_text(&report))
}

/// Sample the closed cycle in the companion frame: the left arc from the
/// upper section followed by the right arc back up, closed exactly.
fn cycle_polyline_csv(
    p: &WelanderParams,
    cy: &welander_core::poincare::CrossingCycle,
    dt: f64,
) -> Result<String, Failure> {
    let c = p.canonical_system()?;
    let mut csv = String::from("t,x,y\n");
    let mut push = |t: f64, s: Vec2| {
        csv.push_str(&format!("{},{},{}\n", sig17(t), sig17(s.x), sig17(s.y)));
    };
    let arcs = [
        (c.left(), Vec2::new(0.0, cy.y_upper), 0.0, cy.t_left),
        (c.right(), Vec2::new(0.0, cy.y_lower), cy.t_left, cy.t_right),
    ];
    for (zone, start, t0, span) in arcs {
        let n = (span / dt).ceil().max(1.0) as usize;
        for i in 0..n {
            let s = span * i as f64 / n as f64;
            push(t0 + s, zone.flow(start, s)?);
        }
    }
    push(cy.period, Vec2::new(0.0, cy.y_upper));
    Ok(csv)
}

pub fn scan(
    p: &WelanderParams,
    from: f64,
    to: f64,
    step: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if !from.is_finite() || !to.is_finite() || !(step > 0.0) {
        return Err(Failure::invalid(format!(
            "epsilon grid requires finite bounds and a positive step \
             (got from {from}, to {to}, step {step})"
        )));
    }
    if to < from {
        return Err(Failure::invalid(format!(
            "epsilon grid is empty: --eps-to {to} is below --eps-from {from}"
        )));
    }
    // Half-a-step slack so a bound like 0.05 = -0.05 + 10 * 0.01 is not
    // lost to rounding.
    let n = ((to - from) / step + 0.5).floor() as usize;
    let eps: Vec<f64> = (0..=n)
        .map(|i| from + step * i as f64)
        .filter(|&e| e <= to + 0.5 * step)
        .collect();
    let rows = scan_epsilon(p, &eps);
    let mut csv = String::from("epsilon,has_cycle,y_upper,y_lower,period,multiplier\n");
    for row in rows {
        if let Some(msg) = row.error {
            return Err(Failure::internal(format!(
                "scan failed at epsilon {}: {msg}",
                row.epsilon
            )));
        }
        match row.cycle {
            Some(cy) => csv.push_str(&format!(
                "{},true,{},{},{},{}\n",
                sig17(row.epsilon),
                sig17(cy.y_upper),
                sig17(cy.y_lower),
                sig17(cy.period),
                sig17(cy.multiplier),
            )),
            None => csv.push_str(&format!("{},false,,,,\n", sig17(row.epsilon))),
        }
    }
    log::info!("scan: {} grid points", eps.len());
    emit(out, &csv)
}

/// Produce the trajectory for one start, honoring the `--smooth` switch.
fn run_trajectory(
    p: &WelanderParams,
    start: (f64, f64),
    opts: &RunOptions,
) -> Result<Trajectory, Failure> {
    let x0 = Vec2::new(start.0, start.1);
    let tr = match opts.smooth {
        None => integrate(&p.raw_system(), x0, opts.horizon, opts.dt_sample)?,
        Some(a) => oracle_rk4(
            OracleModel::Smooth { a },
            p,
            x0,
            opts.horizon,
            SMOOTH_ORACLE_STEP,
        )?,
    };
    Ok(tr)
}

/// Append the sample rows of one trajectory to a CSV body. A `start_id`
/// prefix column is added when given. Smooth-model output is thinned to
/// the requested sample spacing and labeled by the sign of x.
fn push_rows(csv: &mut String, tr: &Trajectory, opts: &RunOptions, start_id: Option<usize>) {
    let smooth = opts.smooth.is_some();
    for (si, seg) in tr.segments.iter().enumerate() {
        let mut next_keep = f64::NEG_INFINITY;
        let last = seg.samples.len().saturating_sub(1);
        for (i, &(t, s)) in seg.samples.iter().enumerate() {
            if smooth && t < next_keep && i != last {
                continue;
            }
            next_keep = t + opts.dt_sample * (1.0 - 1e-9);
            let kind = if smooth {
                if s.x < 0.0 {
                    "left"
                } else {
                    "right"
                }
            } else {
                segment_name(seg.kind)
            };
            if let Some(id) = start_id {
                csv.push_str(&format!("{id},"));
            }
            csv.push_str(&format!(
                "{},{},{},{kind},{si}\n",
                sig17(t),
                sig17(s.x),
                sig17(s.y)
            ));
        }
    }
}

fn events_json(tr: &Trajectory) -> Value {
    let events: Vec<Value> = tr
        .events
        .iter()
        .map(|e| {
            json!({
                "t": jnum(e.t),
                "kind": event_name(e.kind),
                "state": point_json(e.state),
            })
        })
        .collect();
    Value::Array(events)
}

/// Where the companion events JSON goes: an explicit --events-out wins;
/// otherwise it sits next to --out with an `.events.json` extension.
fn events_path(opts: &RunOptions, out: Option<&Path>) -> Option<PathBuf> {
    opts.events_out
        .clone()
        .or_else(|| out.map(|p| p.with_extension("events.json")))
}

pub fn trajectory(
    p: &WelanderParams,
    start: (f64, f64),
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let tr = run_trajectory(p, start, opts)?;
    let mut csv = String::from("t,x,y,segment_kind,segment_index\n");
    push_rows(&mut csv, &tr, opts, None);
    if let Some(path) = events_path(opts, out) {
        let doc = json!({
            "command": "trajectory",
            "params": params_json(p),
            "start": [jnum(start.0), jnum(start.1)],
            "events": events_json(&tr),
        });
        emit(Some(&path), &json_text(&doc))?;
    }
    log::info!(
        "trajectory: {} segments, {} events",
        tr.segments.len(),
        tr.events.len()
    );
    emit(out, &csv)
}

pub fn portrait(
    p: &WelanderParams,
    xs: &[f64],
    ys: &[f64],
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut csv = String::from("start_id,t,x,y,segment_kind,segment_index\n");
    let mut runs = Vec::new();
    let mut start_id = 0usize;
    for &x in xs {
        for &y in ys {
            let tr = run_trajectory(p, (x, y), opts).map_err(|mut f| {
                f.message = format!("start {start_id} at ({x}, {y}): {}", f.message);
                f
            })?;
            push_rows(&mut csv, &tr, opts, Some(start_id));
            runs.push(json!({
                "start_id": start_id,
                "start": [jnum(x), jnum(y)],
                "events": events_json(&tr),
            }));
            start_id += 1;
        }
    }
    if let Some(path) = events_path(opts, out) {
        let doc = json!({
            "command": "portrait",
            "params": params_json(p),
            "trajectories": runs,
        });
        emit(Some(&path), &json_text(&doc))?;
    }
    log::info!("portrait: {} starts", start_id);
    emit(out, &csv)
}
