//! Ulam–Hyers experiments: perturb the equation by z with |z| ≤ ε and compare solutions.

use serde::Serialize;

use crate::bvp::FixedPointOperator;
use crate::criteria::{ulam_constant, CriteriaReport};
use crate::error::{Error, Result};
use crate::expr::BoundExpr;
use crate::psi::PsiFunction;
use crate::solver::{picard_solve, picard_solve_forced, SolveOptions, SolveResult};

const BOUND_SAMPLES: usize = 2048;

/// Variables available to a perturbation expression.
pub const Z_VARS: [&str; 3] = ["t", "eps", "psi"];

/// An additive perturbation z(t) of the right-hand side.
#[derive(Debug, Clone)]
pub struct Perturbation {
    /// z bound to `(t, eps, psi)` where `psi` is ψ(t).
    pub z: BoundExpr,
    pub eps: f64,
}

impl Perturbation {
    pub fn new(z: BoundExpr, eps: f64) -> Self {
        Perturbation { z, eps }
    }

    /// z ≡ ε.
    pub fn constant(eps: f64) -> Result<Self> {
        Ok(Perturbation {
            z: BoundExpr::compile("eps", &Z_VARS)?,
            eps,
        })
    }

    /// z = ε·sin(ψ(t)).
    pub fn sine(eps: f64) -> Result<Self> {
        Ok(Perturbation {
            z: BoundExpr::compile("eps*sin(psi)", &Z_VARS)?,
            eps,
        })
    }

    pub fn at(&self, psi: &PsiFunction, t: f64) -> Result<f64> {
        Ok(self.z.eval(&[t, self.eps, psi.eval(t)?])?)
    }

    /// Checks ε ≥ 0 and |z(t)| ≤ ε on a uniform sample of [a, T].
    pub fn validate(&self, psi: &PsiFunction) -> Result<()> {
        let (a, t_end) = (psi.a(), psi.t_end());
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidProblem(format!("eps = {} must be nonnegative", self.eps)));
        }
        for j in 0..=BOUND_SAMPLES {
            let t = a + (t_end - a) * j as f64 / BOUND_SAMPLES as f64;
            let z = self.at(psi, t)?;
            if z.abs() > self.eps * (1.0 + 1e-12) {
                return Err(Error::InvalidProblem(format!(
                    "|z({t})| = {} exceeds eps = {}",
                    z.abs(),
                    self.eps
                )));
            }
        }
        Ok(())
    }
}

/// Solve with F_u + z in place of F_u; the boundary conditions are unchanged.
pub fn perturbed_solve(op: &FixedPointOperator, pert: &Perturbation, opts: &SolveOptions) -> Result<SolveResult> {
    let psi = &op.spec().psi;
    pert.validate(psi)?;
    let z = op
        .grid()
        .ts()
        .iter()
        .map(|&t| pert.at(psi, t))
        .collect::<Result<Vec<_>>>()?;
    picard_solve_forced(op, opts, None, Some(&z))
}

#[derive(Debug, Clone, Serialize)]
pub struct UhOutcome {
    pub z: String,
    pub eps: f64,
    /// ‖u_pert − x‖.
    pub sup_diff: f64,
    /// c_f·ε.
    pub bound: f64,
    pub pass: bool,
    pub iterations: usize,
    pub converged: bool,
}

/// Compare the perturbed solution with `baseline`; pass iff sup_diff ≤ c_f·ε + 2·tol.
pub fn uh_check(
    op: &FixedPointOperator,
    report: &CriteriaReport,
    pert: &Perturbation,
    opts: &SolveOptions,
    baseline: &SolveResult,
) -> Result<UhOutcome> {
    let (_, phi) = ulam_constant(report)?;
    let r = perturbed_solve(op, pert, opts)?;
    let sup_diff = r.u.sup_dist(&baseline.u);
    let bound = phi.eval(pert.eps);
    Ok(UhOutcome {
        z: pert.z.source().to_string(),
        eps: pert.eps,
        sup_diff,
        bound,
        pass: sup_diff <= bound + 2.0 * opts.tol,
        iterations: r.iterations,
        converged: r.converged,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub c_f: f64,
    pub banach_value: f64,
    pub baseline_iterations: usize,
    pub experiments: Vec<UhOutcome>,
    /// For consecutive experiments sharing the same z: (sup_diff ratio)/(ε ratio).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scaling: Vec<f64>,
}

/// Run every perturbation against one unperturbed baseline.
pub fn run_experiments(
    op: &FixedPointOperator,
    report: &CriteriaReport,
    perts: &[Perturbation],
    opts: &SolveOptions,
) -> Result<StabilityReport> {
    let (c_f, _) = ulam_constant(report)?;
    let baseline = picard_solve(op, opts, None)?;
    let experiments = perts
        .iter()
        .map(|p| uh_check(op, report, p, opts, &baseline))
        .collect::<Result<Vec<_>>>()?;
    let scaling = experiments
        .windows(2)
        .filter(|w| w[0].z == w[1].z && w[0].sup_diff > 0.0 && w[1].eps > 0.0)
        .map(|w| (w[1].sup_diff / w[0].sup_diff) / (w[1].eps / w[0].eps))
        .collect();
    Ok(StabilityReport {
        c_f,
        banach_value: report.banach_value.unwrap_or(f64::NAN),
        baseline_iterations: baseline.iterations,
        experiments,
        scaling,
    })
}
