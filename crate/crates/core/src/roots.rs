//! Bracketed scalar root refinement (Brent's method).

/// Find a root of `f` in `[a, b]`, where `f(a)` and `f(b)` have opposite signs.
///
/// Returns `None` when the bracket is invalid. Combines bisection with
/// secant/inverse-quadratic steps; terminates when the bracket shrinks below
/// `xtol` or after `max_iter` iterations.
pub(crate) fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Option<f64> {
    let (mut xa, mut xb) = (a, b);
    let (mut fa, mut fb) = (f(xa), f(xb));
    if fa == 0.0 {
        return Some(xa);
    }
    if fb == 0.0 {
        return Some(xb);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut xc, mut fc) = (xa, fa);
    let mut d = xb - xa;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            xc = xa;
            fc = fa;
            d = xb - xa;
            e = d;
        }
        if fc.abs() < fb.abs() {
            xa = xb;
            xb = xc;
            xc = xa;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * xb.abs() + 0.5 * xtol;
        let m = 0.5 * (xc - xb);
        if m.abs() <= tol || fb == 0.0 {
            return Some(xb);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // interpolation step
            let s = fb / fa;
            let (mut p, mut q);
            if xa == xc {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (xb - xa) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        xa = xb;
        fa = fb;
        if d.abs() > tol {
            xb += d;
        } else {
            xb += if m > 0.0 { tol } else { -tol };
        }
        fb = f(xb);
    }
    Some(xb)
}
