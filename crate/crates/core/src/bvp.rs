//! Problem data, the boundary determinant Δ, and the fixed-point operator 𝒜 = 𝒜₁ + 𝒜₂.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::expr::BoundExpr;
use crate::frac::{frac_integral_grid, FracOrder, GridFunction, TauGrid};
use crate::psi::{gamma, psi_power, PsiFunction};
use crate::quad::{abel_weights, ToeplitzWeights};

/// Which coefficient multiplies the βᵢ I^{ν−1} terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fidelity {
    /// ψ(ηᵢ), exactly as in the published operator and constants.
    #[default]
    PaperFaithful,
    /// ψ′(ηᵢ), as produced by differentiating the solution representation.
    Corrected,
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-faithful" => Ok(Fidelity::PaperFaithful),
            "corrected" => Ok(Fidelity::Corrected),
            other => Err(Error::InvalidProblem(format!(
                "unknown mode `{other}` (expected paper-faithful or corrected)"
            ))),
        }
    }
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fidelity::PaperFaithful => "paper-faithful",
            Fidelity::Corrected => "corrected",
        })
    }
}

/// User-supplied (𝒱u)(t).
pub type VHook = Arc<dyn Fn(&GridFunction, f64) -> Result<f64> + Send + Sync>;

/// The operator 𝒱 appearing in the second slot of f.
#[derive(Clone)]
pub enum VOperator {
    Identity,
    /// (𝒱u)(t) = u(warp(t)); `warp` is bound to `t`.
    TimeWarp(BoundExpr),
    Custom(VHook),
}

impl fmt::Debug for VOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VOperator::Identity => f.write_str("Identity"),
            VOperator::TimeWarp(w) => write!(f, "TimeWarp({:?})", w.source()),
            VOperator::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl VOperator {
    pub fn apply_at(&self, u: &GridFunction, t: f64) -> Result<f64> {
        match self {
            VOperator::Identity => u.at(t),
            VOperator::TimeWarp(w) => u.at(w.eval(&[t])?),
            VOperator::Custom(hook) => hook(u, t),
        }
    }
}

/// Growth data: |f(t,u,v,w)| ≤ p₁(t)φ₁(|u|) + p₂(t)φ₂(|v|) + p₃(t)φ₃(|w|).
#[derive(Debug, Clone)]
pub struct Growth {
    /// p₁, p₂, p₃ as functions of `t`.
    pub p: [BoundExpr; 3],
    /// φ₁, φ₂, φ₃ as functions of `r`.
    pub phi: [BoundExpr; 3],
}

/// A sequential ψ-Hilfer boundary value problem together with its hypothesis data.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub order: FracOrder,
    pub lambda: f64,
    pub psi: PsiFunction,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub etas: Vec<f64>,
    pub xi: f64,
    /// f bound to `(t, u, v, w)`.
    pub f: BoundExpr,
    /// g bound to `u`.
    pub g: BoundExpr,
    pub v: VOperator,
    /// l₁, l₂, l₃ in |f(t,u,v,w) − f(t,ū,v̄,w̄)| ≤ l₁|u−ū| + l₂|v−v̄| + l₃|w−w̄|, bound to `t`.
    pub lipschitz: Option<[BoundExpr; 3]>,
    /// N in |g(u) − g(ū)| ≤ N|u − ū|.
    pub g_lipschitz: Option<f64>,
    pub growth: Option<Growth>,
    /// Uniform bound |f| ≤ p(t), bound to `t`.
    pub bound_p: Option<BoundExpr>,
    pub fidelity: Fidelity,
}

const WARP_SAMPLES: usize = 1024;

impl ProblemSpec {
    pub fn a(&self) -> f64 {
        self.psi.a()
    }

    pub fn t_end(&self) -> f64 {
        self.psi.t_end()
    }

    pub fn nu(&self) -> f64 {
        self.order.nu()
    }

    pub fn mu(&self) -> f64 {
        self.order.mu()
    }

    pub fn f_at(&self, t: f64, u: f64, v: f64, w: f64) -> Result<f64> {
        Ok(self.f.eval(&[t, u, v, w])?)
    }

    pub fn g_at(&self, u: f64) -> Result<f64> {
        Ok(self.g.eval(&[u])?)
    }

    /// Coefficient of βᵢ I^{ν−1}F(ηᵢ): ψ(ηᵢ) or ψ′(ηᵢ) depending on the mode.
    pub fn beta_coefficient(&self, i: usize) -> Result<f64> {
        match self.fidelity {
            Fidelity::PaperFaithful => self.psi.eval(self.etas[i]),
            Fidelity::Corrected => self.psi.prime(self.etas[i]),
        }
    }

    /// Factor on the βᵢ term of Δ: 1, or ψ′(ηᵢ) in corrected mode.
    pub fn delta_beta_factor(&self, i: usize) -> Result<f64> {
        match self.fidelity {
            Fidelity::PaperFaithful => Ok(1.0),
            Fidelity::Corrected => self.psi.prime(self.etas[i]),
        }
    }

    /// Check the structural hypotheses. Returns advisory notes for conditions that
    /// are reported rather than enforced.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut notes = Vec::new();
        let m = self.etas.len();
        if self.alphas.len() != m || self.betas.len() != m {
            return Err(Error::InvalidProblem(format!(
                "alphas ({}), betas ({}) and etas ({m}) must have equal length",
                self.alphas.len(),
                self.betas.len()
            )));
        }
        for (name, vals) in [("alphas", &self.alphas), ("betas", &self.betas)] {
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProblem(format!("{name} must be finite")));
            }
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidProblem("lambda must be finite".into()));
        }
        let mut prev = self.a();
        for (i, &eta) in self.etas.iter().enumerate() {
            if !(eta > prev) {
                return Err(Error::InvalidProblem(format!(
                    "eta[{i}] = {eta} breaks a < eta_1 < ... < eta_m"
                )));
            }
            prev = eta;
        }
        if !(self.xi > prev && self.xi < self.t_end()) {
            return Err(Error::InvalidProblem(format!(
                "xi = {} must lie strictly between the last eta and T = {}",
                self.xi,
                self.t_end()
            )));
        }
        if let VOperator::TimeWarp(w) = &self.v {
            for j in 0..=WARP_SAMPLES {
                let t = self.a() + (self.t_end() - self.a()) * j as f64 / WARP_SAMPLES as f64;
                let s = w.eval(&[t])?;
                if !(s >= self.a() - 1e-12 && s <= self.t_end() + 1e-12) {
                    return Err(Error::InvalidProblem(format!(
                        "time warp maps t = {t} to {s}, outside [a, T]"
                    )));
                }
            }
        }
        let ga = self.g_at(self.a())?;
        if ga != 0.0 {
            notes.push(format!("g(a) = {ga} is nonzero; the zero condition on g is not met"));
        }
        self.f_at(self.a(), 0.0, 0.0, 0.0)?;
        compute_delta(self)?;
        Ok(notes)
    }
}

/// Δ = ψ_a(T) − Σ (ψ_a^{μ−2}(ηᵢ)/Γ(μ−1)) (αᵢ ψ_a(ηᵢ)/(μ−1) + βᵢ·s_i), with s_i = 1
/// (paper-faithful) or ψ′(ηᵢ) (corrected).
pub fn compute_delta(spec: &ProblemSpec) -> Result<f64> {
    let mu = spec.mu();
    let g1 = gamma(mu - 1.0);
    let mut delta = spec.psi.shifted(spec.t_end())?;
    for i in 0..spec.etas.len() {
        let eta = spec.etas[i];
        let p = psi_power(&spec.psi, mu - 2.0, eta)? / g1;
        let s = spec.delta_beta_factor(i)?;
        delta -= p * (spec.alphas[i] * spec.psi.shifted(eta)? / (mu - 1.0) + spec.betas[i] * s);
    }
    if delta.abs() <= 1e-12 {
        return Err(Error::DegenerateDelta(delta.abs()));
    }
    Ok(delta)
}

/// k = ψ_a^{μ−1}(T) / (|Δ| Γ(μ)).
pub fn k_constant(spec: &ProblemSpec) -> Result<f64> {
    let mu = spec.mu();
    Ok(psi_power(&spec.psi, mu - 1.0, spec.t_end())? / (compute_delta(spec)?.abs() * gamma(mu)))
}

/// 𝒦_t^ν(s) = ψ′(s)(ψ(t) − ψ(s))^{ν−1}/Γ(ν), zero for s ≥ t.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub psi: PsiFunction,
    pub order: f64,
}

impl Kernel {
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        let (pt, ps) = (self.psi.eval(t)?, self.psi.eval(s)?);
        if ps >= pt {
            return Ok(0.0);
        }
        Ok(self.psi.prime(s)? * (pt - ps).powf(self.order - 1.0) / gamma(self.order))
    }
}

/// F_u(t) = f(t, u(t), (𝒱u)(t), I^{2−μ,ψ}u(t)).
pub fn eval_fu(spec: &ProblemSpec, u: &GridFunction, t: f64) -> Result<f64> {
    let order = 2.0 - spec.mu();
    let w = if order == 0.0 {
        u.at(t)?
    } else {
        frac_integral_grid(u, order, t)?
    };
    spec.f_at(t, u.at(t)?, spec.v.apply_at(u, t)?, w)
}

/// Quadrature weights for one interior point ηᵢ.
#[derive(Debug, Clone)]
struct PointWeights {
    nu: Vec<f64>,
    nu_minus_one: Vec<f64>,
    one: Vec<f64>,
}

fn scaled_weights(alpha: f64, taus: &[f64], x: f64) -> Vec<f64> {
    let mut w = Vec::new();
    abel_weights(alpha, taus, x, &mut w);
    let g = gamma(alpha);
    w.iter_mut().for_each(|v| *v /= g);
    w
}

fn dot(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Everything 𝒜 produced for one input, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct OperatorOutput {
    /// 𝒜₁u at the nodes.
    pub a1: Vec<f64>,
    /// 𝒜₂u at the nodes.
    pub a2: Vec<f64>,
    /// F_u (plus any forcing) at the nodes.
    pub forcing: Vec<f64>,
    /// I^{ν}F at the nodes.
    pub integral_nu: Vec<f64>,
    /// I^{1}u at the nodes.
    pub integral_one: Vec<f64>,
    /// The bracket B with 𝒜u(t) = I^νF(t) − λI^1u(t) + P(t)·B, P = ψ_a^{μ−1}/(ΔΓ(μ)).
    pub bracket: f64,
    /// g(u(ξ)).
    pub g_value: f64,
}

impl OperatorOutput {
    pub fn total(&self) -> Vec<f64> {
        self.a1.iter().zip(&self.a2).map(|(a, b)| a + b).collect()
    }
}

/// 𝒜 discretized on a uniform τ-grid, with all quadrature weights precomputed.
pub struct FixedPointOperator {
    spec: ProblemSpec,
    grid: Arc<TauGrid>,
    mode: ExecMode,
    delta: f64,
    prefactor: Vec<f64>,
    toeplitz_nu: ToeplitzWeights,
    scale_nu: f64,
    toeplitz_w: Option<(ToeplitzWeights, f64)>,
    points: Vec<PointWeights>,
    beta_coef: Vec<f64>,
    eta_prime: Vec<f64>,
    end_f: Vec<f64>,
    end_u: Vec<f64>,
    warp_taus: Option<Vec<f64>>,
}

impl fmt::Debug for FixedPointOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedPointOperator")
            .field("n", &self.grid.n())
            .field("delta", &self.delta)
            .field("mode", &self.mode)
            .finish()
    }
}

impl FixedPointOperator {
    pub fn new(spec: &ProblemSpec, n: usize, mode: ExecMode) -> Result<Self> {
        spec.validate()?;
        let grid = TauGrid::new(spec.psi.clone(), n)?;
        let (nu, mu) = (spec.nu(), spec.mu());
        let delta = compute_delta(spec)?;
        let h = grid.h();
        let taus = grid.taus();
        let ta = taus[0];
        let denom = delta * gamma(mu);
        let prefactor = taus.iter().map(|&tau| (tau - ta).powf(mu - 1.0) / denom).collect();

        let toeplitz_nu = ToeplitzWeights::new(nu, n);
        let scale_nu = h.powf(nu) / gamma(nu);
        let w_order = 2.0 - mu;
        let toeplitz_w = (w_order > 0.0)
            .then(|| (ToeplitzWeights::new(w_order, n), h.powf(w_order) / gamma(w_order)));

        let mut points = Vec::with_capacity(spec.etas.len());
        let mut beta_coef = Vec::new();
        let mut eta_prime = Vec::new();
        for (i, &eta) in spec.etas.iter().enumerate() {
            let x = spec.psi.eval(eta)?;
            points.push(PointWeights {
                nu: scaled_weights(nu, taus, x),
                nu_minus_one: scaled_weights(nu - 1.0, taus, x),
                one: scaled_weights(1.0, taus, x),
            });
            beta_coef.push(spec.beta_coefficient(i)?);
            eta_prime.push(spec.psi.prime(eta)?);
        }
        let tt = spec.psi.tau_t();
        let end_f = scaled_weights(2.0 - mu + nu, taus, tt);
        let end_u = scaled_weights(3.0 - mu, taus, tt);

        let warp_taus = match &spec.v {
            VOperator::TimeWarp(w) => Some(
                grid.ts()
                    .iter()
                    .map(|&t| spec.psi.eval(w.eval(&[t])?))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => None,
        };

        Ok(FixedPointOperator {
            spec: spec.clone(),
            grid,
            mode,
            delta,
            prefactor,
            toeplitz_nu,
            scale_nu,
            toeplitz_w,
            points,
            beta_coef,
            eta_prime,
            end_f,
            end_u,
            warp_taus,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<TauGrid> {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mode(&self) -> ExecMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }

    /// P(t) = ψ_a^{μ−1}(t)/(ΔΓ(μ)) at the nodes.
    pub fn prefactor(&self) -> &[f64] {
        &self.prefactor
    }

    /// I^{2−μ}u at every node.
    pub fn integral_w(&self, u: &[f64]) -> Vec<f64> {
        match &self.toeplitz_w {
            Some((tw, scale)) => self.mode.map(u.len(), |k| scale * tw.node_sum(u, k)),
            None => u.to_vec(),
        }
    }

    /// I^{2−μ}v(T) for nodal values v.
    pub fn integral_w_at_end(&self, v: &[f64]) -> f64 {
        match &self.toeplitz_w {
            Some((tw, scale)) => scale * tw.node_sum(v, v.len() - 1),
            None => v[v.len() - 1],
        }
    }

    fn v_values(&self, u: &GridFunction) -> Result<Vec<f64>> {
        match (&self.spec.v, &self.warp_taus) {
            (VOperator::Identity, _) => Ok(u.values().to_vec()),
            (VOperator::TimeWarp(_), Some(taus)) => Ok(taus.iter().map(|&x| u.at_tau(x)).collect()),
            _ => {
                let ts = self.grid.ts();
                self.mode.try_map(ts.len(), |k| self.spec.v.apply_at(u, ts[k]))
            }
        }
    }

    /// 𝒜u, with an optional additive forcing z (one value per node) inside F.
    pub fn apply_with_forcing(&self, u: &GridFunction, z: Option<&[f64]>) -> Result<OperatorOutput> {
        let uv = u.values();
        let n1 = uv.len();
        if n1 != self.grid.taus().len() {
            return Err(Error::InvalidGrid("function lives on a different grid".into()));
        }
        let spec = &self.spec;
        let ts = self.grid.ts();
        let w = self.integral_w(uv);
        let v = self.v_values(u)?;
        let forcing = self.mode.try_map(n1, |k| {
            let fk = spec.f_at(ts[k], uv[k], v[k], w[k])?;
            Ok::<_, Error>(fk + z.map_or(0.0, |z| z[k]))
        })?;
        let integral_nu = self
            .mode
            .map(n1, |k| self.scale_nu * self.toeplitz_nu.node_sum(&forcing, k));
        let h = self.grid.h();
        let mut integral_one = vec![0.0; n1];
        for k in 1..n1 {
            integral_one[k] = integral_one[k - 1] + 0.5 * h * (uv[k - 1] + uv[k]);
        }

        let mut forcing_part = -dot(&self.end_f, &forcing);
        let mut lambda_part = dot(&self.end_u, uv);
        for (i, pw) in self.points.iter().enumerate() {
            let eta = spec.etas[i];
            let u_eta = u.at_cubic(eta)?;
            forcing_part += spec.alphas[i] * dot(&pw.nu, &forcing)
                + spec.betas[i] * self.beta_coef[i] * dot(&pw.nu_minus_one, &forcing);
            lambda_part -= spec.alphas[i] * dot(&pw.one, uv) + spec.betas[i] * self.eta_prime[i] * u_eta;
        }
        let g_value = spec.g_at(u.at_cubic(spec.xi)?)?;
        let lambda = spec.lambda;

        let a1 = (0..n1)
            .map(|k| {
                let p = self.prefactor[k];
                integral_nu[k] + p * forcing_part + lambda * (p * lambda_part - integral_one[k])
            })
            .collect();
        let a2 = self.prefactor.iter().map(|p| p * g_value).collect();
        Ok(OperatorOutput {
            a1,
            a2,
            forcing,
            integral_nu,
            integral_one,
            bracket: forcing_part + lambda * lambda_part + g_value,
            g_value,
        })
    }

    /// (𝒜u) at the nodes.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let out = self.apply_with_forcing(u, None)?;
        GridFunction::new(self.grid.clone(), out.total())
    }

    /// (𝒜₁u, 𝒜₂u) at the nodes.
    pub fn apply_split(&self, u: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        let out = self.apply_with_forcing(u, None)?;
        Ok((
            GridFunction::new(self.grid.clone(), out.a1)?,
            GridFunction::new(self.grid.clone(), out.a2)?,
        ))
    }

    /// (𝒜u)(t) at an arbitrary t, reusing the nodal forcing of `out`.
    pub fn evaluate_at(&self, out: &OperatorOutput, u: &GridFunction, t: f64) -> Result<f64> {
        self.representation_at(out, u, t, out.bracket / self.delta)
    }

    /// I^νF(t) − λI^1u(t) + c₁ψ_a^{μ−1}(t)/Γ(μ), the continuous extension of the
    /// nodal data in `out` and `u` for a given coefficient c₁.
    pub fn representation_at(&self, out: &OperatorOutput, u: &GridFunction, t: f64, c1: f64) -> Result<f64> {
        let x = self.spec.psi.eval(t)?;
        let taus = self.grid.taus();
        let int_nu = dot(&scaled_weights(self.spec.nu(), taus, x), &out.forcing);
        let int_one = dot(&scaled_weights(1.0, taus, x), u.values());
        let mu = self.spec.mu();
        let p = (x - taus[0]).max(0.0).powf(mu - 1.0) / gamma(mu);
        Ok(int_nu - self.spec.lambda * int_one + p * c1)
    }

    /// (I^{2−μ+ν}F(T), I^{3−μ}u(T)) from nodal values.
    pub fn end_integrals(&self, forcing: &[f64], u: &[f64]) -> (f64, f64) {
        (dot(&self.end_f, forcing), dot(&self.end_u, u))
    }

    /// I^{ν−1}F(ηᵢ) from nodal forcing values.
    pub fn integral_nu_minus_one_at_eta(&self, i: usize, forcing: &[f64]) -> f64 {
        dot(&self.points[i].nu_minus_one, forcing)
    }
}
