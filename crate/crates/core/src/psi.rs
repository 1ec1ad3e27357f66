//! The weight function ψ, its powers ψ_a^ς, and Γ.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::BoundExpr;

const VALIDATION_SAMPLES: usize = 4096;
const INVERSE_SAMPLES: usize = 101;
const NUMERIC_SLOPE_FLOOR: f64 = 1e-5;
const LN_3: f64 = 1.098_612_288_668_109_7;

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::NonPositiveArgument(x));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Γ(x) for arguments already known to be positive.
pub(crate) fn gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    statrs::function::gamma::gamma(x)
}

/// The shape of ψ. Built-in families carry analytic derivatives and inverses.
#[derive(Clone)]
pub enum PsiKind {
    /// ψ(t) = t
    Linear,
    /// ψ(t) = 1 − e^{−ct}
    ExpSaturating { c: f64 },
    /// ψ(t) = 3^{t^ρ + 2t} − 1
    PowerExponential { rho: f64 },
    /// ψ(t) = tan(πt√ρ/4)
    Tangent { rho: f64 },
    /// ψ, ψ′ and ψ⁻¹ given as expressions. `psi` and `prime` are bound to
    /// `(t, r)`, `inverse` to `(tau, r)`, with `r = rho`.
    Custom {
        psi: BoundExpr,
        prime: Option<BoundExpr>,
        inverse: Option<BoundExpr>,
        rho: f64,
    },
}

impl fmt::Debug for PsiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiKind::Linear => write!(f, "Linear"),
            PsiKind::ExpSaturating { c } => write!(f, "ExpSaturating {{ c: {c} }}"),
            PsiKind::PowerExponential { rho } => write!(f, "PowerExponential {{ rho: {rho} }}"),
            PsiKind::Tangent { rho } => write!(f, "Tangent {{ rho: {rho} }}"),
            PsiKind::Custom { psi, rho, .. } => {
                write!(f, "Custom {{ psi: {:?}, rho: {rho} }}", psi.source())
            }
        }
    }
}

/// An increasing C¹ function on [a, T] with positive derivative.
#[derive(Clone, Debug)]
pub struct PsiFunction {
    kind: PsiKind,
    a: f64,
    t_end: f64,
    psi_a: f64,
    psi_t: f64,
}

impl PsiFunction {
    /// Build and validate ψ on [a, T].
    pub fn new(kind: PsiKind, a: f64, t_end: f64) -> Result<Self> {
        if !(a.is_finite() && t_end.is_finite() && a < t_end) {
            return Err(Error::InvalidPsi(format!("interval [{a}, {t_end}] is empty")));
        }
        match &kind {
            PsiKind::ExpSaturating { c } if !(*c > 0.0) => {
                return Err(Error::InvalidPsi(format!("rate c = {c} must be positive")))
            }
            PsiKind::PowerExponential { rho } | PsiKind::Tangent { rho } if !(*rho > 0.0) => {
                return Err(Error::InvalidPsi(format!("rho = {rho} must be positive")))
            }
            _ => {}
        }
        let mut p = PsiFunction {
            kind,
            a,
            t_end,
            psi_a: 0.0,
            psi_t: 0.0,
        };
        p.psi_a = p.raw(a)?;
        p.psi_t = p.raw(t_end)?;
        p.validate()?;
        Ok(p)
    }

    pub fn linear(a: f64, t_end: f64) -> Result<Self> {
        Self::new(PsiKind::Linear, a, t_end)
    }

    pub fn exp_saturating(c: f64, a: f64, t_end: f64) -> Result<Self> {
        Self::new(PsiKind::ExpSaturating { c }, a, t_end)
    }

    pub fn power_exponential(rho: f64, a: f64, t_end: f64) -> Result<Self> {
        Self::new(PsiKind::PowerExponential { rho }, a, t_end)
    }

    pub fn tangent(rho: f64, a: f64, t_end: f64) -> Result<Self> {
        Self::new(PsiKind::Tangent { rho }, a, t_end)
    }

    fn validate(&self) -> Result<()> {
        // A finite-difference slope of a function with a vanishing derivative is
        // O(h) rather than zero, so numeric derivatives get a relative floor.
        let numeric = matches!(&self.kind, PsiKind::Custom { prime: None, .. });
        let mean_slope = (self.psi_t - self.psi_a) / (self.t_end - self.a);
        let floor = if numeric { NUMERIC_SLOPE_FLOOR * mean_slope.abs() } else { 0.0 };
        let mut prev = f64::NEG_INFINITY;
        for j in 0..=VALIDATION_SAMPLES {
            let t = self.sample_point(j, VALIDATION_SAMPLES);
            let v = self.raw(t)?;
            let d = self.raw_prime(t)?;
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::InvalidPsi(format!("non-finite value at t = {t}")));
            }
            if !(d > floor) {
                return Err(Error::InvalidPsi(format!("psi'({t}) = {d} is not positive")));
            }
            if !(v > prev) {
                return Err(Error::InvalidPsi(format!("psi is not strictly increasing near t = {t}")));
            }
            prev = v;
        }
        if let PsiKind::Custom {
            inverse: Some(_), ..
        } = &self.kind
        {
            let tol = 1e-10;
            for j in 0..=INVERSE_SAMPLES {
                let tau = self.psi_a + (self.psi_t - self.psi_a) * j as f64 / INVERSE_SAMPLES as f64;
                let t = self.inverse_hint(tau)?;
                let back = self.raw(t)?;
                if (back - tau).abs() > tol {
                    return Err(Error::InvalidPsi(format!(
                        "inverse hint is inaccurate at tau = {tau}: psi(inverse) = {back}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample_point(&self, j: usize, n: usize) -> f64 {
        if j == n {
            self.t_end
        } else {
            self.a + (self.t_end - self.a) * j as f64 / n as f64
        }
    }

    pub fn kind(&self) -> &PsiKind {
        &self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// ψ(a).
    pub fn tau_a(&self) -> f64 {
        self.psi_a
    }

    /// ψ(T).
    pub fn tau_t(&self) -> f64 {
        self.psi_t
    }

    fn domain_slack(&self) -> f64 {
        1e-12 * (self.t_end - self.a).max(1.0)
    }

    fn clamp_t(&self, t: f64) -> Result<f64> {
        let s = self.domain_slack();
        if !(t >= self.a - s && t <= self.t_end + s) {
            return Err(Error::OutOfDomain(t));
        }
        Ok(t.clamp(self.a, self.t_end))
    }

    fn raw(&self, t: f64) -> Result<f64> {
        Ok(match &self.kind {
            PsiKind::Linear => t,
            PsiKind::ExpSaturating { c } => -(-c * t).exp_m1(),
            PsiKind::PowerExponential { rho } => {
                (LN_3 * (t.powf(*rho) + 2.0 * t)).exp_m1()
            }
            PsiKind::Tangent { rho } => (std::f64::consts::FRAC_PI_4 * t * rho.sqrt()).tan(),
            PsiKind::Custom { psi, rho, .. } => psi.eval(&[t, *rho])?,
        })
    }

    fn raw_prime(&self, t: f64) -> Result<f64> {
        Ok(match &self.kind {
            PsiKind::Linear => 1.0,
            PsiKind::ExpSaturating { c } => c * (-c * t).exp(),
            PsiKind::PowerExponential { rho } => {
                let ln3 = LN_3;
                let lead = if *rho == 1.0 { 1.0 } else { rho * t.powf(rho - 1.0) };
                ln3 * (lead + 2.0) * (ln3 * (t.powf(*rho) + 2.0 * t)).exp()
            }
            PsiKind::Tangent { rho } => {
                let k = std::f64::consts::FRAC_PI_4 * rho.sqrt();
                let c = (k * t).cos();
                k / (c * c)
            }
            PsiKind::Custom {
                psi, prime, rho, ..
            } => match prime {
                Some(d) => d.eval(&[t, *rho])?,
                None => {
                    // central differences, one-sided at the ends of [a, T]
                    let h = 1e-6 * (self.t_end - self.a);
                    let lo = (t - h).max(self.a);
                    let hi = (t + h).min(self.t_end);
                    (psi.eval(&[hi, *rho])? - psi.eval(&[lo, *rho])?) / (hi - lo)
                }
            },
        })
    }

    fn inverse_hint(&self, tau: f64) -> Result<f64> {
        match &self.kind {
            PsiKind::Custom {
                inverse: Some(inv),
                rho,
                ..
            } => Ok(inv.eval(&[tau, *rho])?),
            _ => unreachable!("only custom psi carries an inverse expression"),
        }
    }

    /// ψ(t) for t ∈ [a, T].
    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = self.clamp_t(t)?;
        if t == self.a {
            return Ok(self.psi_a);
        }
        self.raw(t)
    }

    /// ψ′(t) for t ∈ [a, T].
    pub fn prime(&self, t: f64) -> Result<f64> {
        let t = self.clamp_t(t)?;
        self.raw_prime(t)
    }

    /// ψ_a(t) = ψ(t) − ψ(a), clamped at zero.
    pub fn shifted(&self, t: f64) -> Result<f64> {
        Ok((self.eval(t)? - self.psi_a).max(0.0))
    }

    /// The unique t ∈ [a, T] with ψ(t) = tau.
    pub fn inverse(&self, tau: f64) -> Result<f64> {
        let scale = self.psi_t.abs().max(1.0);
        let slack = 1e-12 * scale;
        if !(tau >= self.psi_a - slack && tau <= self.psi_t + slack) {
            return Err(Error::OutOfRange(tau));
        }
        if tau <= self.psi_a {
            return Ok(self.a);
        }
        if tau >= self.psi_t {
            return Ok(self.t_end);
        }
        let t = match &self.kind {
            PsiKind::Linear => tau,
            PsiKind::ExpSaturating { c } => -(-tau).ln_1p() / c,
            PsiKind::Tangent { rho } => tau.atan() / (std::f64::consts::FRAC_PI_4 * rho.sqrt()),
            PsiKind::Custom {
                inverse: Some(_), ..
            } => self.inverse_hint(tau)?,
            _ => return self.bisect(tau, 1e-12 * scale),
        };
        Ok(t.clamp(self.a, self.t_end))
    }

    fn bisect(&self, tau: f64, tol: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.a, self.t_end);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.raw(mid)?;
            if (v - tau).abs() <= tol {
                return Ok(mid);
            }
            if v < tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// ψ_a^ς(t) = (ψ(t) − ψ(a))^ς.
#[derive(Clone, Debug)]
pub struct PsiPower {
    pub base: PsiFunction,
    pub exponent: f64,
}

impl PsiPower {
    pub fn new(base: PsiFunction, exponent: f64) -> Self {
        PsiPower { base, exponent }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        psi_power(&self.base, self.exponent, t)
    }
}

/// (ψ(t) − ψ(a))^ς; errors at t = a when ς < 0.
pub fn psi_power(psi: &PsiFunction, exponent: f64, t: f64) -> Result<f64> {
    let base = psi.shifted(t)?;
    if exponent == 0.0 {
        return Ok(1.0);
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(Error::SingularAtLeftEndpoint);
    }
    Ok(base.powf(exponent))
}
