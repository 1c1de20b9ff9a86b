//! Exact linear algebra for planar affine systems `dx/dt = A x - b`:
//! spectra, equilibria, invariant lines, the psi auxiliary function and the
//! closed-form flow.

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::roots::brent;

/// Scaled threshold below which eigenvalues are treated as repeated.
const REPEATED_EIG_TOL: f64 = 1e-12;
/// |r * t| threshold below which psi and related divided differences switch
/// to their Taylor series (cancellation guard).
const PSI_SERIES_THRESHOLD: f64 = 0.05;
/// Relative tolerance on t for bracketed crossing-time refinement.
const CROSSING_TIME_RTOL: f64 = 1e-13;
const CROSSING_TIME_MAX_ITER: usize = 200;

/// A planar affine system `dx/dt = A x - b`.
///
/// The minus sign matches the canonical-form convention; use
/// [`AffineSystem2::from_plus_forcing`] for systems written `dx/dt = A x + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineSystem2 {
    a: Mat2,
    b: Vec2,
}

/// Ordered real spectrum of a 2×2 matrix: `lambda_i > lambda_j`
/// (equal under the repeated flag), with eigenvectors normalized to first
/// component 1 where possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub lambda_i: f64,
    pub lambda_j: f64,
    pub xi_i: Vec2,
    pub xi_j: Vec2,
    pub repeated: bool,
}

/// A line `y = slope * x + intercept` invariant under the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantLine {
    pub slope: f64,
    pub intercept: f64,
}

impl InvariantLine {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

impl AffineSystem2 {
    /// Build from the `dx/dt = A x - b` convention.
    pub fn new(a: Mat2, b: Vec2) -> Self {
        debug_assert!(a.is_finite() && b.is_finite());
        AffineSystem2 { a, b }
    }

    /// Build from the `dx/dt = A x + b` convention (raw model form).
    pub fn from_plus_forcing(a: Mat2, b_plus: Vec2) -> Self {
        Self::new(a, -b_plus)
    }

    pub fn matrix(&self) -> Mat2 {
        self.a
    }

    /// The forcing vector in the `A x - b` convention.
    pub fn offset(&self) -> Vec2 {
        self.b
    }

    pub fn trace(&self) -> f64 {
        self.a.trace()
    }

    pub fn det(&self) -> f64 {
        self.a.det()
    }

    /// Characteristic discriminant `tr(A)^2 - 4 det(A)`; nonnegative iff the
    /// spectrum is real.
    pub fn discriminant(&self) -> f64 {
        let tr = self.trace();
        tr * tr - 4.0 * self.det()
    }

    /// Whether the system is admissible for the cycle analysis: real,
    /// distinct, nonzero eigenvalues of node type.
    pub fn is_node_admissible(&self) -> bool {
        self.discriminant() > 0.0 && self.det() > 0.0
    }

    /// Vector field value `A x - b`.
    pub fn field(&self, x: Vec2) -> Vec2 {
        self.a * x - self.b
    }

    /// Ordered eigenvalues and eigenvectors.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let disc = self.discriminant();
        if disc < 0.0 {
            return Err(Error::ComplexSpectrum { discriminant: disc });
        }
        let tr = self.trace();
        let s = disc.sqrt();
        let repeated = s <= REPEATED_EIG_TOL * (1.0 + tr.abs());
        let lambda_i = 0.5 * (tr + s);
        let lambda_j = 0.5 * (tr - s);
        Ok(Spectrum {
            lambda_i,
            lambda_j,
            xi_i: self.eigenvector(lambda_i),
            xi_j: self.eigenvector(lambda_j),
            repeated,
        })
    }

    fn eigenvector(&self, lambda: f64) -> Vec2 {
        let m = self.a;
        if m.a12 != 0.0 {
            // (a11 - lambda) v1 + a12 v2 = 0 with v1 = 1
            Vec2::new(1.0, (lambda - m.a11) / m.a12)
        } else if m.a21 != 0.0 {
            Vec2::new((lambda - m.a22) / m.a21, 1.0)
        } else if (lambda - m.a11).abs() <= (lambda - m.a22).abs() {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::new(0.0, 1.0)
        }
    }

    /// The unique rest point `A x = b`.
    pub fn equilibrium(&self) -> Result<Vec2> {
        self.a.solve(self.b).ok_or(Error::SingularMatrix)
    }

    /// Invariant lines through the equilibrium, for systems in canonical
    /// (companion) form: slopes `lambda_j` and `lambda_i`, intercepts
    /// `b2 / lambda - b1`.
    pub fn invariant_lines(&self) -> Result<(InvariantLine, InvariantLine)> {
        let spec = self.spectrum()?;
        if spec.lambda_i == 0.0 || spec.lambda_j == 0.0 {
            return Err(Error::ZeroEigenvalue);
        }
        let l1 = InvariantLine {
            slope: spec.lambda_j,
            intercept: self.b.y / spec.lambda_j - self.b.x,
        };
        let l2 = InvariantLine {
            slope: spec.lambda_i,
            intercept: self.b.y / spec.lambda_i - self.b.x,
        };
        Ok((l1, l2))
    }

    /// Exact solution of `dx/dt = A x - b` at time `t` from `x0`.
    pub fn flow(&self, x0: Vec2, t: f64) -> Result<Vec2> {
        let spec = self.spectrum()?;
        let exp_at = self.matrix_exponential(&spec, t);
        if self.det() != 0.0 {
            let xe = self.equilibrium()?;
            Ok(xe + exp_at * (x0 - xe))
        } else {
            let g = self.exponential_integral(&spec, t);
            Ok(exp_at * x0 - g * self.b)
        }
    }

    /// `exp(A t)` as `c0 I + c1 A`, stable for small `t`.
    fn matrix_exponential(&self, spec: &Spectrum, t: f64) -> Mat2 {
        let (c0, c1) = if spec.repeated {
            let lam = 0.5 * (spec.lambda_i + spec.lambda_j);
            let e = (lam * t).exp();
            (e * (1.0 - lam * t), t * e)
        } else {
            let (li, lj) = (spec.lambda_i, spec.lambda_j);
            // (e^{li t} - e^{lj t}) / (li - lj) without cancellation
            let c1 = t * (lj * t).exp() * phi((li - lj) * t);
            ((lj * t).exp() - lj * c1, c1)
        };
        Mat2::identity() * c0 + self.a * c1
    }

    /// `int_0^t exp(A s) ds` as `d0 I + d1 A` (used only when det(A) = 0).
    fn exponential_integral(&self, spec: &Spectrum, t: f64) -> Mat2 {
        let (d0, d1) = if spec.repeated {
            let lam = 0.5 * (spec.lambda_i + spec.lambda_j);
            if lam == 0.0 {
                (t, 0.5 * t * t)
            } else {
                let g = t * phi(lam * t);
                let d1 = (t * (lam * t).exp() - g) / lam;
                (g - lam * d1, d1)
            }
        } else {
            let (li, lj) = (spec.lambda_i, spec.lambda_j);
            let gi = t * phi(li * t);
            let gj = t * phi(lj * t);
            let d1 = (gi - gj) / (li - lj);
            (gj - lj * d1, d1)
        };
        Mat2::identity() * d0 + self.a * d1
    }

    /// First root of the x-coordinate of the flow inside `[t_lo, t_hi]`.
    ///
    /// The bracket endpoints must produce opposite signs of the x-coordinate.
    pub fn crossing_time(&self, x0: Vec2, t_lo: f64, t_hi: f64) -> Result<f64> {
        let f_lo = self.flow(x0, t_lo)?.x;
        let f_hi = self.flow(x0, t_hi)?.x;
        if f_lo != 0.0 && f_hi != 0.0 && f_lo.signum() == f_hi.signum() {
            return Err(Error::NoSignChange { t_lo, t_hi });
        }
        let xtol = CROSSING_TIME_RTOL * (1.0 + t_hi.abs());
        brent(
            |t| self.flow(x0, t).map(|p| p.x).unwrap_or(f64::NAN),
            t_lo,
            t_hi,
            xtol,
            CROSSING_TIME_MAX_ITER,
        )
        .ok_or(Error::NoSignChange { t_lo, t_hi })
    }
}

/// `phi(z) = (e^z - 1) / z`, continuous at 0.
fn phi(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// Auxiliary function `psi(r1, r2, t) = r1 - r2 + r2 e^{r1 t} - r1 e^{r2 t}`.
///
/// Evaluates its Taylor series when both `|r t|` products are small, where
/// the direct form cancels to a second-order quantity and loses digits.
pub fn psi(r1: f64, r2: f64, t: f64) -> f64 {
    if (r1 * t).abs() < PSI_SERIES_THRESHOLD && (r2 * t).abs() < PSI_SERIES_THRESHOLD {
        // psi = r1 r2 sum_{n>=2} (r1^{n-1} - r2^{n-1}) t^n / n!
        let mut sum = 0.0;
        let mut p1 = r1; // r1^{n-1}
        let mut p2 = r2;
        let mut tn = t * t; // t^n
        let mut fact = 2.0; // n!
        for n in 2..=14 {
            let term = (p1 - p2) * tn / fact;
            sum += term;
            if term.abs() <= f64::EPSILON * sum.abs() {
                break;
            }
            p1 *= r1;
            p2 *= r2;
            tn *= t;
            fact *= (n + 1) as f64;
        }
        r1 * r2 * sum
    } else {
        r1 - r2 + r2 * (r1 * t).exp() - r1 * (r2 * t).exp()
    }
}
