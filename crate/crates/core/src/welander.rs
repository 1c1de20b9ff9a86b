//! The two-box ocean convection model: parameter validation, the piecewise
//! model in both coordinate frames, regime-deciding thresholds, and the
//! smooth/non-smooth convection laws.

use crate::affine2d::AffineSystem2;
use crate::error::{Error, Result};
use crate::filippov::PiecewiseAffineSystem;
use crate::geom::{Mat2, Vec2};

/// Tolerance for the threshold-ordering consistency check.
const THRESHOLD_ORDER_TOL: f64 = 1e-12;

/// Dimensionless model parameters.
///
/// `alpha` couples density to temperature, `beta` is the salinity/temperature
/// relaxation-rate ratio, `epsilon` is the density threshold at which
/// convection switches, and `k0 < k1` are the weak and strong convection
/// rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelanderParams {
    alpha: f64,
    beta: f64,
    epsilon: f64,
    k0: f64,
    k1: f64,
}

/// The two alpha thresholds separating real from virtual equilibria, and the
/// epsilon value at which they coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub alpha_l: f64,
    pub alpha_r: f64,
    pub eps_star: f64,
}

/// Qualitative classification of the parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `alpha (1 - beta) = 0`: the zones decouple and no cycle exists.
    DegenerateNoCycle,
    /// At least one zone has a real (or boundary) equilibrium; no cycle.
    RealEquilibriumNoCycle,
    /// Both equilibria virtual but `epsilon >= 0`; still no crossing cycle.
    VirtualNoCycle,
    /// Both equilibria virtual and `epsilon < 0`: exactly one stable
    /// crossing limit cycle.
    UniqueStableCycle,
}

/// Which convection law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvectionLaw {
    /// Hard switch: `k1` above the density threshold, `k0` at or below it.
    Nonsmooth,
    /// Arctangent regularization with width `a`, ranging over `(k0, k1)` and
    /// converging pointwise to the hard switch as `a -> 0`.
    Smooth { a: f64 },
}

impl WelanderParams {
    pub fn new(alpha: f64, beta: f64, epsilon: f64, k0: f64, k1: f64) -> Result<Self> {
        let all_finite = alpha.is_finite()
            && beta.is_finite()
            && epsilon.is_finite()
            && k0.is_finite()
            && k1.is_finite();
        if !all_finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be positive (got {beta})"
            )));
        }
        if !(k0 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "k0 must be nonnegative (got {k0})"
            )));
        }
        if !(k1 > k0) {
            return Err(Error::InvalidParams(format!(
                "k1 must exceed k0 (got k0 = {k0}, k1 = {k1})"
            )));
        }
        Ok(WelanderParams {
            alpha,
            beta,
            epsilon,
            k0,
            k1,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    /// Convection rate of the chosen zone (`k0` for the weak zone, `k1` for
    /// the strong one).
    fn k(&self, strong: bool) -> f64 {
        if strong {
            self.k1
        } else {
            self.k0
        }
    }

    /// The x-offset of the right zone's switching-line data: `(k0 - k1) epsilon`.
    pub fn b_param(&self) -> f64 {
        (self.k0 - self.k1) * self.epsilon
    }

    /// Canonical forcing strength of one zone:
    /// `a = -alpha (k + beta) - (1 + k)(beta (epsilon - 1) + k epsilon)`.
    pub fn a_param(&self, strong: bool) -> f64 {
        let k = self.k(strong);
        -self.alpha * (k + self.beta)
            - (1.0 + k) * (self.beta * (self.epsilon - 1.0) + k * self.epsilon)
    }

    fn raw_zone(&self, strong: bool) -> AffineSystem2 {
        let k = self.k(strong);
        let a = Mat2::new(
            -k - self.beta,
            self.alpha * (1.0 - self.beta),
            0.0,
            -1.0 - k,
        );
        let b_plus = Vec2::new(self.beta - self.alpha - (self.beta + k) * self.epsilon, 1.0);
        AffineSystem2::from_plus_forcing(a, b_plus)
    }

    /// The model in its original frame, with the shifted density as the
    /// first (switching) coordinate and temperature as the second.
    /// Convection is weak for x < 0 and strong for x > 0.
    pub fn raw_system(&self) -> PiecewiseAffineSystem {
        PiecewiseAffineSystem::new(self.raw_zone(false), self.raw_zone(true))
    }

    fn canonical_zone(&self, strong: bool) -> AffineSystem2 {
        let k = self.k(strong);
        let tr = -(1.0 + 2.0 * k + self.beta);
        let det = (1.0 + k) * (k + self.beta);
        let b1 = if strong { -self.b_param() } else { 0.0 };
        AffineSystem2::new(
            Mat2::new(tr, -1.0, det, 0.0),
            Vec2::new(b1, self.a_param(strong)),
        )
    }

    /// The model reduced to companion (Liénard) form in both zones.
    pub fn canonical_system(&self) -> Result<PiecewiseAffineSystem> {
        if self.alpha * (1.0 - self.beta) == 0.0 {
            return Err(Error::DegenerateAlpha);
        }
        Ok(PiecewiseAffineSystem::new(
            self.canonical_zone(false),
            self.canonical_zone(true),
        ))
    }

    /// Alpha thresholds and the epsilon at which they cross.
    pub fn thresholds(&self) -> Thresholds {
        let (b, e) = (self.beta, self.epsilon);
        let alpha_of = |k: f64| -(1.0 + k) * (b * (e - 1.0) + k * e) / (k + b);
        let t = Thresholds {
            alpha_l: alpha_of(self.k0),
            alpha_r: alpha_of(self.k1),
            eps_star: b * (b - 1.0) / ((self.k0 + b) * (b + self.k1)),
        };
        debug_assert!({
            let gap = t.alpha_r - t.alpha_l;
            let scale = 1.0 + t.alpha_l.abs() + t.alpha_r.abs();
            if (e - t.eps_star).abs() <= THRESHOLD_ORDER_TOL {
                gap.abs() <= 1e-9 * scale
            } else {
                (gap > 0.0) == (e < t.eps_star) || gap.abs() <= THRESHOLD_ORDER_TOL * scale
            }
        });
        t
    }

    /// Qualitative regime of this parameter point. Boundary equalities
    /// (alpha exactly at a threshold, epsilon exactly zero) resolve to the
    /// no-cycle classes.
    pub fn regime(&self) -> Regime {
        if self.alpha * (1.0 - self.beta) == 0.0 {
            return Regime::DegenerateNoCycle;
        }
        let t = self.thresholds();
        if self.alpha >= t.alpha_l || self.alpha <= t.alpha_r {
            Regime::RealEquilibriumNoCycle
        } else if self.epsilon >= 0.0 {
            Regime::VirtualNoCycle
        } else {
            Regime::UniqueStableCycle
        }
    }

    /// Convection rate as a function of density.
    ///
    /// The smooth law is the arctangent profile rescaled onto `(k0, k1)` so
    /// that its `a -> 0` pointwise limit is exactly the non-smooth law.
    pub fn convection_rate(&self, rho: f64, law: ConvectionLaw) -> Result<f64> {
        match law {
            ConvectionLaw::Nonsmooth => Ok(if rho > self.epsilon { self.k1 } else { self.k0 }),
            ConvectionLaw::Smooth { a } => {
                if a <= 0.0 {
                    return Err(Error::NonpositiveSmoothing { a });
                }
                let unit = ((rho - self.epsilon) / a).atan() / std::f64::consts::PI + 0.5;
                Ok(self.k0 + (self.k1 - self.k0) * unit)
            }
        }
    }
}
