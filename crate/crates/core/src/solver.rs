//! Picard iteration for u = 𝒜u with residual diagnostics.

use serde::Serialize;

use crate::bvp::{FixedPointOperator, OperatorOutput};
use crate::error::Result;
use crate::frac::GridFunction;
use crate::psi::{gamma, psi_power};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Below this size consecutive differences are rounding noise, not contraction.
const RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Defects of the boundary conditions.
///
/// The primary figures use the continuous extension ũ = I^νF − λI^1u + c₁ψ_a^{μ−1}/Γ(μ)
/// of the nodal solution, with c₁ recovered from u(T); `nonlocal_grid` instead works
/// from the nodal values alone and so also carries the O(h²) interpolation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryResiduals {
    /// |u(a)|.
    pub left: f64,
    /// Nonlocal defect with u′(ηᵢ) from the representation under the active fidelity mode.
    pub nonlocal: f64,
    /// The same defect with u′(ηᵢ) from centered differences of ũ.
    pub nonlocal_fd: f64,
    /// Nonlocal defect from nodal interpolation and quadrature of u.
    pub nonlocal_grid: f64,
    /// max |u′(ηᵢ)_representation − u′(ηᵢ)_fd|.
    pub derivative_gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// The accepted iterate u_k.
    pub u: GridFunction,
    /// k, the index of the accepted iterate.
    pub iterations: usize,
    /// ‖u_{j+1} − u_j‖ for j = 0..=k; the last entry is ‖𝒜u_k − u_k‖.
    pub sup_diffs: Vec<f64>,
    pub fixed_point_residual: f64,
    pub bc_residuals: BoundaryResiduals,
    pub converged: bool,
}

impl SolveResult {
    /// Largest ratio of consecutive differences from the fourth step on, ignoring
    /// differences already at rounding level.
    pub fn contraction_ratio(&self) -> Option<f64> {
        self.sup_diffs
            .windows(2)
            .skip(3)
            .filter(|w| w[0] > RATIO_FLOOR && w[1] > RATIO_FLOOR)
            .map(|w| w[1] / w[0])
            .reduce(f64::max)
    }
}

/// Iterate u_{j+1} = 𝒜u_j from `u0` (default ≡ 0) until ‖𝒜u_k − u_k‖ ≤ tol.
pub fn picard_solve(
    op: &FixedPointOperator,
    opts: &SolveOptions,
    u0: Option<GridFunction>,
) -> Result<SolveResult> {
    picard_solve_forced(op, opts, u0, None)
}

/// [`picard_solve`] with an additive forcing z inside F.
pub fn picard_solve_forced(
    op: &FixedPointOperator,
    opts: &SolveOptions,
    u0: Option<GridFunction>,
    z: Option<&[f64]>,
) -> Result<SolveResult> {
    let grid = op.grid().clone();
    let mut u = u0.unwrap_or_else(|| GridFunction::zeros(grid.clone()));
    let mut out = op.apply_with_forcing(&u, z)?;
    let mut next = GridFunction::new(grid.clone(), out.total())?;
    let mut sup_diffs = vec![next.sup_dist(&u)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter.max(1) {
        u = next;
        iterations += 1;
        out = op.apply_with_forcing(&u, z)?;
        next = GridFunction::new(grid.clone(), out.total())?;
        let d = next.sup_dist(&u);
        sup_diffs.push(d);
        if d <= opts.tol {
            converged = true;
            break;
        }
    }
    let fixed_point_residual = *sup_diffs.last().unwrap_or(&0.0);
    let bc_residuals = boundary_residuals_with(op, &u, &out)?;
    Ok(SolveResult {
        u,
        iterations,
        sup_diffs,
        fixed_point_residual,
        bc_residuals,
        converged,
    })
}

/// ‖u − 𝒜u‖ over the grid.
pub fn fixed_point_residual(op: &FixedPointOperator, u: &GridFunction) -> Result<f64> {
    Ok(op.apply(u)?.sup_dist(u))
}

/// Boundary defects of u; see [`BoundaryResiduals`].
pub fn boundary_residuals(op: &FixedPointOperator, u: &GridFunction) -> Result<BoundaryResiduals> {
    let out = op.apply_with_forcing(u, None)?;
    boundary_residuals_with(op, u, &out)
}

/// Uses `out`, the operator output for u itself, for the forcing integrals.
pub fn boundary_residuals_with(
    op: &FixedPointOperator,
    u: &GridFunction,
    out: &OperatorOutput,
) -> Result<BoundaryResiduals> {
    let spec = op.spec();
    let (mu, lambda) = (spec.mu(), spec.lambda);
    let taus = op.grid().taus();
    let n = taus.len() - 1;
    let uv = u.values();
    let span_t = spec.psi.shifted(spec.t_end())?;
    let c1 = (uv[n] - out.integral_nu[n] + lambda * out.integral_one[n]) * gamma(mu)
        / span_t.powf(mu - 1.0);
    let ext = |t: f64| op.representation_at(out, u, t, c1);

    // I^{2−μ} maps I^ν to I^{2−μ+ν}, I^1 to I^{3−μ} and ψ_a^{μ−1}/Γ(μ) to ψ_a
    let (end_f, end_u) = op.end_integrals(&out.forcing, uv);
    let lhs = end_f - lambda * end_u + c1 * span_t;
    // nodal version: the singular part is still integrated exactly
    let lhs_grid = if mu == 2.0 {
        uv[n]
    } else {
        let regular: Vec<f64> = uv
            .iter()
            .zip(taus)
            .map(|(v, tau)| v - c1 * (tau - taus[0]).powf(mu - 1.0) / gamma(mu))
            .collect();
        op.integral_w_at_end(&regular) + c1 * span_t
    };

    let d = 1e-3 * (spec.t_end() - spec.a());
    let mut rhs = spec.g_at(ext(spec.xi)?)?;
    let mut rhs_fd = rhs;
    let mut rhs_grid = spec.g_at(u.at_cubic(spec.xi)?)?;
    let mut gap: f64 = 0.0;
    for i in 0..spec.etas.len() {
        let eta = spec.etas[i];
        let u_eta = ext(eta)?;
        let u_eta_grid = u.at_cubic(eta)?;
        let integral = op.integral_nu_minus_one_at_eta(i, &out.forcing);
        let singular = spec.delta_beta_factor(i)? * psi_power(&spec.psi, mu - 2.0, eta)? * c1 / gamma(mu - 1.0);
        let lam = lambda * spec.psi.prime(eta)?;
        let deriv = spec.beta_coefficient(i)? * integral - lam * u_eta + singular;
        let deriv_grid = spec.beta_coefficient(i)? * integral - lam * u_eta_grid + singular;
        let fd = (ext(eta + d)? - ext(eta - d)?) / (2.0 * d);
        gap = gap.max((deriv - fd).abs());
        rhs += spec.alphas[i] * u_eta + spec.betas[i] * deriv;
        rhs_fd += spec.alphas[i] * u_eta + spec.betas[i] * fd;
        rhs_grid += spec.alphas[i] * u_eta_grid + spec.betas[i] * deriv_grid;
    }
    Ok(BoundaryResiduals {
        left: uv[0].abs(),
        nonlocal: (lhs - rhs).abs(),
        nonlocal_fd: (lhs - rhs_fd).abs(),
        nonlocal_grid: (lhs_grid - rhs_grid).abs(),
        derivative_gap: gap,
    })
}
