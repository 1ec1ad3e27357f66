//! Closed-form constants and verdicts for the existence and stability theorems.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bvp::{compute_delta, Fidelity, ProblemSpec};
use crate::error::{Error, Result};
use crate::expr::BoundExpr;
use crate::psi::{gamma, psi_power};

/// Uniform samples (plus both endpoints) used for sup-norms over J.
pub const SUP_SAMPLES: usize = 10_000;
pub const ZETA_SAMPLES: usize = 512;
pub const ZETA_TOL: f64 = 1e-8;

/// max |h(t)| over [a, T]: dense sampling, then golden-section refinement
/// around the best sample.
pub fn sup_over(h: &BoundExpr, a: f64, t_end: f64) -> Result<f64> {
    let step = (t_end - a) / SUP_SAMPLES as f64;
    let at = |t: f64| -> Result<f64> { Ok(h.eval(&[t])?.abs()) };
    let mut best = (0, at(a)?);
    for j in 1..=SUP_SAMPLES {
        let t = if j == SUP_SAMPLES { t_end } else { a + step * j as f64 };
        let v = at(t)?;
        if v > best.1 {
            best = (j, v);
        }
    }
    let (mut lo, mut hi) = (
        (a + step * (best.0 as f64 - 1.0)).max(a),
        (a + step * (best.0 as f64 + 1.0)).min(t_end),
    );
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (x1, x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if at(x1)? >= at(x2)? {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    Ok(best.1.max(at(0.5 * (lo + hi))?))
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Verdicts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub banach: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sadovskii: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burton_kirk: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ulam_hyers: Option<Verdict>,
}

/// A published value next to its recomputation.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub published: f64,
    pub computed: f64,
    pub relative_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriteriaReport {
    pub fidelity: Fidelity,
    pub mu: f64,
    pub delta: f64,
    pub theta: f64,
    pub phi: f64,
    pub k: f64,
    #[serde(rename = "lambda_T_mu", skip_serializing_if = "Option::is_none")]
    pub lambda_t_mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_star: Option<[f64; 3]>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub banach_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_const: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_star: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_negative_intervals: Option<Vec<[f64; 2]>>,
    #[serde(rename = "M_bound", skip_serializing_if = "Option::is_none")]
    pub m_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_f: Option<f64>,
    pub verdicts: Verdicts,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub published_comparison: Vec<Comparison>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CriteriaReport {
    /// Look up a scalar field by its JSON name.
    pub fn field(&self, name: &str) -> Option<f64> {
        match name {
            "mu" => Some(self.mu),
            "delta" => Some(self.delta),
            "theta" => Some(self.theta),
            "phi" => Some(self.phi),
            "k" => Some(self.k),
            "lambda_T_mu" => self.lambda_t_mu,
            "N" => self.n,
            "omega" => self.omega,
            "banach_value" => self.banach_value,
            "xi_const" => self.xi_const,
            "r_min" => self.r_min,
            "M_bound" => self.m_bound,
            "c_f" => self.c_f,
            _ => None,
        }
    }

    /// Record published values next to the computed ones, with a note for
    /// every relative gap above 1e-3.
    pub fn compare_with(&mut self, published: &BTreeMap<String, f64>) {
        for (name, &value) in published {
            let Some(computed) = self.field(name) else {
                self.notes.push(format!("published `{name}` has no computed counterpart"));
                continue;
            };
            let relative_delta = (computed - value).abs() / value.abs().max(f64::MIN_POSITIVE);
            if relative_delta > 1e-3 {
                self.notes.push(format!(
                    "{name}: computed {computed} differs from published {value} (relative {relative_delta:.3e})"
                ));
            }
            self.published_comparison.push(Comparison {
                quantity: name.clone(),
                published: value,
                computed,
                relative_delta,
            });
        }
    }
}

/// Θ, Φ, Δ, k and, where the metadata allows, Λ(T,μ), Ω, the Banach value, Ξ, c_f.
pub fn compute_constants(spec: &ProblemSpec) -> Result<CriteriaReport> {
    let (nu, mu) = (spec.nu(), spec.mu());
    let psi = &spec.psi;
    let t = spec.t_end();
    let delta = compute_delta(spec)?;
    let k = psi_power(psi, mu - 1.0, t)? / (delta.abs() * gamma(mu));

    let mut bracket = psi_power(psi, 2.0 - mu + nu, t)? / gamma(3.0 - mu + nu);
    let mut phi_sum = psi_power(psi, 3.0 - mu, t)? / gamma(4.0 - mu);
    for i in 0..spec.etas.len() {
        let eta = spec.etas[i];
        bracket += spec.alphas[i].abs() * psi_power(psi, nu, eta)? / gamma(nu + 1.0)
            + spec.betas[i].abs() * spec.beta_coefficient(i)? * psi_power(psi, nu - 1.0, eta)? / gamma(nu);
        phi_sum += spec.alphas[i].abs() * psi.shifted(eta)? + spec.betas[i].abs() * psi.prime(eta)?;
    }
    let theta = psi_power(psi, nu, t)? / gamma(nu + 1.0) + k * bracket;
    let phi = k * phi_sum + psi.shifted(t)?;

    let l_star = match &spec.lipschitz {
        Some(l) => Some([
            sup_over(&l[0], spec.a(), t)?,
            sup_over(&l[1], spec.a(), t)?,
            sup_over(&l[2], spec.a(), t)?,
        ]),
        None => None,
    };
    let lambda_t_mu = match l_star {
        Some(l) => Some(l[0] + l[1] + l[2] * psi_power(psi, 2.0 - mu, t)? / gamma(3.0 - mu)),
        None => None,
    };
    let lam = spec.lambda.abs();
    let omega = lambda_t_mu.map(|l| l * theta + lam * phi);
    let n = spec.g_lipschitz;
    let banach_value = omega.zip(n).map(|(o, n)| o + k * n);
    let xi_const = n.map(|n| lam * phi + k * n);
    let c_f = banach_value.filter(|&b| b < 1.0).map(|b| theta / (1.0 - b));
    let p_star = match &spec.growth {
        Some(g) => Some([
            sup_over(&g.p[0], spec.a(), t)?,
            sup_over(&g.p[1], spec.a(), t)?,
            sup_over(&g.p[2], spec.a(), t)?,
        ]),
        None => None,
    };

    Ok(CriteriaReport {
        fidelity: spec.fidelity,
        mu,
        delta,
        theta,
        phi,
        k,
        lambda_t_mu,
        l_star,
        n,
        omega,
        banach_value,
        xi_const,
        r_min: None,
        p_star,
        zeta_negative_intervals: None,
        m_bound: None,
        c_f,
        verdicts: Verdicts::default(),
        published_comparison: Vec::new(),
        notes: Vec::new(),
    })
}

fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::MissingMetadata(what.into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct BanachCheck {
    pub holds: bool,
    pub banach_value: f64,
    /// sup |f(t,0,0,0)|.
    pub l_zero: f64,
    pub r_min: Option<f64>,
}

/// Contraction test: banach value < 1, with the invariant-ball radius when it holds.
pub fn check_banach(spec: &ProblemSpec, report: &CriteriaReport) -> Result<BanachCheck> {
    let bv = require(report.banach_value, "lipschitz")?;
    let n = require(report.n, "g_lipschitz")?;
    let l_zero = sup_f_at_zero(spec)?;
    let holds = bv < 1.0;
    let r_min = holds.then(|| (l_zero * report.theta + report.k * n * spec.a().abs()) / (1.0 - bv));
    Ok(BanachCheck {
        holds,
        banach_value: bv,
        l_zero,
        r_min,
    })
}

fn sup_f_at_zero(spec: &ProblemSpec) -> Result<f64> {
    let (a, t) = (spec.a(), spec.t_end());
    let mut best: f64 = 0.0;
    for j in 0..=SUP_SAMPLES {
        let s = if j == SUP_SAMPLES { t } else { a + (t - a) * j as f64 / SUP_SAMPLES as f64 };
        best = best.max(spec.f_at(s, 0.0, 0.0, 0.0)?.abs());
    }
    Ok(best)
}

/// ζ(r) = [(p₁*φ₁(r) + p₂*φ₂(r) + p₃*φ₃(s₃r))Θ + kN|a|]/(1 − Ξ) − r, s₃ = ψ_a^{2−μ}(T)/Γ(3−μ).
#[derive(Debug, Clone)]
pub struct Zeta {
    p_star: [f64; 3],
    phi: [BoundExpr; 3],
    theta: f64,
    xi: f64,
    offset: f64,
    s3: f64,
}

impl Zeta {
    pub fn new(spec: &ProblemSpec, report: &CriteriaReport) -> Result<Self> {
        let growth = require(spec.growth.as_ref(), "growth")?;
        let p_star = require(report.p_star, "growth")?;
        let xi = require(report.xi_const, "g_lipschitz")?;
        let n = require(report.n, "g_lipschitz")?;
        let mu = spec.mu();
        Ok(Zeta {
            p_star,
            phi: growth.phi.clone(),
            theta: report.theta,
            xi,
            offset: report.k * n * spec.a().abs(),
            s3: psi_power(&spec.psi, 2.0 - mu, spec.t_end())? / gamma(3.0 - mu),
        })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let p = &self.p_star;
        let growth = p[0] * self.phi[0].eval(&[r])?
            + p[1] * self.phi[1].eval(&[r])?
            + p[2] * self.phi[2].eval(&[self.s3 * r])?;
        Ok((growth * self.theta + self.offset) / (1.0 - self.xi) - r)
    }

    /// `samples + 1` equally spaced (r, ζ(r)) pairs over [r0, r1].
    pub fn scan(&self, r0: f64, r1: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
        let samples = samples.max(1);
        (0..=samples)
            .map(|j| {
                let r = if j == samples { r1 } else { r0 + (r1 - r0) * j as f64 / samples as f64 };
                Ok((r, self.eval(r)?))
            })
            .collect()
    }

    /// Maximal subintervals of [r0, r1] where ζ < 0, endpoints refined by bisection.
    pub fn negative_intervals(&self, r0: f64, r1: f64) -> Result<Vec<[f64; 2]>> {
        let pts = self.scan(r0, r1, ZETA_SAMPLES)?;
        let mut out = Vec::new();
        let mut start = (pts[0].1 < 0.0).then_some(pts[0].0);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            match (a.1 < 0.0, b.1 < 0.0) {
                (false, true) => start = Some(self.bisect(a.0, b.0)?),
                (true, false) => {
                    let end = self.bisect(a.0, b.0)?;
                    out.push([start.take().unwrap_or(a.0), end]);
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push([s, r1]);
        }
        Ok(out)
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> Result<f64> {
        let neg_lo = self.eval(lo)? < 0.0;
        while hi - lo > ZETA_TOL {
            let mid = 0.5 * (lo + hi);
            if (self.eval(mid)? < 0.0) == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SadovskiiCheck {
    pub holds: bool,
    pub xi_const: f64,
    pub negative_intervals: Vec<[f64; 2]>,
}

/// Ξ < 1 and ζ(r) < 0 somewhere in [r0, r1].
pub fn check_sadovskii(spec: &ProblemSpec, report: &CriteriaReport, r0: f64, r1: f64) -> Result<SadovskiiCheck> {
    let zeta = Zeta::new(spec, report)?;
    let negative_intervals = zeta.negative_intervals(r0, r1)?;
    Ok(SadovskiiCheck {
        holds: zeta.xi < 1.0 && !negative_intervals.is_empty(),
        xi_const: zeta.xi,
        negative_intervals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BurtonKirkCheck {
    pub holds: bool,
    pub xi_const: f64,
    pub p_norm: f64,
    #[serde(rename = "M_bound")]
    pub m_bound: f64,
    /// Sampled (t, u, v, w) where |f| exceeded p(t).
    pub dominance_violations: usize,
}

const DOMINANCE_PROBES: [f64; 5] = [-10.0, -1.0, 0.0, 1.0, 10.0];

/// Ξ < 1, with the a-priori bound M = (Θ‖p‖ + |a|Nk)/(1 − Ξ).
pub fn check_burton_kirk(spec: &ProblemSpec, report: &CriteriaReport) -> Result<BurtonKirkCheck> {
    let p = require(spec.bound_p.as_ref(), "bound_p")?;
    let xi = require(report.xi_const, "g_lipschitz")?;
    let n = require(report.n, "g_lipschitz")?;
    let p_norm = sup_over(p, spec.a(), spec.t_end())?;
    let m_bound = (report.theta * p_norm + spec.a().abs() * n * report.k) / (1.0 - xi);
    let mut dominance_violations = 0;
    for j in 0..=64 {
        let t = spec.a() + (spec.t_end() - spec.a()) * j as f64 / 64.0;
        let bound = p.eval(&[t])?;
        for &u in &DOMINANCE_PROBES {
            for &v in &DOMINANCE_PROBES {
                for &w in &DOMINANCE_PROBES {
                    if spec.f_at(t, u, v, w)?.abs() > bound {
                        dominance_violations += 1;
                    }
                }
            }
        }
    }
    Ok(BurtonKirkCheck {
        holds: xi < 1.0,
        xi_const: xi,
        p_norm,
        m_bound,
        dominance_violations,
    })
}

/// φ_f(ε) = c_f·ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiF {
    pub c_f: f64,
}

impl PhiF {
    pub fn eval(&self, eps: f64) -> f64 {
        self.c_f * eps
    }
}

/// c_f = Θ/(1 − banach value).
pub fn ulam_constant(report: &CriteriaReport) -> Result<(f64, PhiF)> {
    let bv = require(report.banach_value, "lipschitz")?;
    if bv >= 1.0 {
        return Err(Error::NotContractive(bv));
    }
    let c_f = report.theta / (1.0 - bv);
    Ok((c_f, PhiF { c_f }))
}

/// Constants plus every verdict the metadata supports.
pub fn assess(spec: &ProblemSpec, zeta_range: (f64, f64)) -> Result<CriteriaReport> {
    let mut report = compute_constants(spec)?;
    let mut verdicts = Verdicts::default();

    match check_banach(spec, &report) {
        Ok(b) => {
            report.r_min = b.r_min;
            verdicts.banach = Some(Verdict {
                holds: b.holds,
                reason: if b.holds {
                    format!("banach value {} < 1: unique solution", b.banach_value)
                } else {
                    format!("banach value {} >= 1: contraction not established", b.banach_value)
                },
            });
            verdicts.ulam_hyers = Some(match ulam_constant(&report) {
                Ok((c_f, _)) => Verdict {
                    holds: true,
                    reason: format!("c_f = {c_f}"),
                },
                Err(e) => Verdict {
                    holds: false,
                    reason: e.to_string(),
                },
            });
        }
        Err(Error::MissingMetadata(what)) => report.notes.push(format!("banach check skipped: no {what}")),
        Err(e) => return Err(e),
    }

    match check_sadovskii(spec, &report, zeta_range.0, zeta_range.1) {
        Ok(s) => {
            let reason = match (s.xi_const < 1.0, s.negative_intervals.first()) {
                (false, _) => format!("xi = {} >= 1", s.xi_const),
                (true, None) => format!("xi = {} < 1 but zeta has no negative value in range", s.xi_const),
                (true, Some(iv)) => format!("xi = {} < 1 and zeta < 0 on [{}, {}]", s.xi_const, iv[0], iv[1]),
            };
            verdicts.sadovskii = Some(Verdict { holds: s.holds, reason });
            report.zeta_negative_intervals = Some(s.negative_intervals);
        }
        Err(Error::MissingMetadata(what)) => report.notes.push(format!("sadovskii check skipped: no {what}")),
        Err(e) => return Err(e),
    }

    match check_burton_kirk(spec, &report) {
        Ok(b) => {
            report.m_bound = Some(b.m_bound);
            verdicts.burton_kirk = Some(Verdict {
                holds: b.holds,
                reason: if b.holds {
                    format!("xi = {} < 1; a-priori bound M = {}", b.xi_const, b.m_bound)
                } else {
                    format!("xi = {} >= 1", b.xi_const)
                },
            });
            if b.dominance_violations > 0 {
                report.notes.push(format!(
                    "|f| exceeded p(t) at {} sampled points",
                    b.dominance_violations
                ));
            }
        }
        Err(Error::MissingMetadata(what)) => report.notes.push(format!("burton-kirk check skipped: no {what}")),
        Err(e) => return Err(e),
    }

    report.verdicts = verdicts;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::fixtures::*;
    use crate::bvp::Growth;
    use crate::psi::PsiFunction;

    // extended-precision oracle values for the worked example
    const THETA: f64 = 1.340_889_367_248_094_836_7;
    const LAMBDA_T_MU: f64 = 0.668_727_680_831_260_191_64;
    const PHI: f64 = 2.153_800_237_335_157_239_1;
    const OMEGA: f64 = 0.918_227_839_184_465_969_32;
    const BANACH: f64 = 0.981_103_669_586_948_148_81;
    const C_F: f64 = 70.960_304_881_308_145_261;
    const XI: f64 = 0.084_413_832_775_833_751_883;
    const R_MIN: f64 = 82.787_022_361_526_169_471;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    fn growth_ii() -> ProblemSpec {
        let mut s = example(
            "exp(-sqrt(t))/(1+t)*37/500*u + 29/125*(t-t^2)/(2+t)*(3+abs(v)/(1+abs(v))) \
             + 3/10*exp(sin(3*pi*t/7))/sqrt(16+t^2)*(2*w^3+1/4)",
            "ln(1 + u^2*sqrt(3))/10",
            0.01,
            exp_psi(),
        );
        s.lipschitz = None;
        s.growth = Some(Growth {
            p: [
                expr("37/500*exp(-sqrt(t))", &["t"]),
                expr("29/125*(t-t^2)/2", &["t"]),
                expr("3/10*exp(sin(3*pi*t/7))/4", &["t"]),
            ],
            phi: [expr("r", &["r"]), expr("3+r/(1+r)", &["r"]), expr("2*r^3+1/4", &["r"])],
        });
        s
    }

    #[test]
    fn example_constants_match_oracle() {
        let r = compute_constants(&example_i()).unwrap();
        assert!(close(r.theta, THETA, 1e-10));
        assert!(close(r.phi, PHI, 1e-10));
        assert!(close(r.lambda_t_mu.unwrap(), LAMBDA_T_MU, 1e-10));
        assert!(close(r.omega.unwrap(), OMEGA, 1e-10));
        assert!(close(r.banach_value.unwrap(), BANACH, 1e-10));
        assert!(close(r.c_f.unwrap(), C_F, 1e-9));
        assert!(close(r.xi_const.unwrap(), XI, 1e-10));
        let l = r.l_star.unwrap();
        assert!(close(l[0], 0.1, 1e-12) && close(l[1], 4.0 * std::f64::consts::PI / 27.0, 1e-12));
        assert!(close(l[2], 8.0 / 81.0, 1e-12));
    }

    #[test]
    fn printed_constants_within_1e3() {
        let r = compute_constants(&example_i()).unwrap();
        assert!(close(r.lambda_t_mu.unwrap(), 0.668728, 1e-3));
        assert!(close(r.delta, -1.94081, 1e-3));
        assert!(close(r.theta, 1.34089, 1e-3));
    }

    #[test]
    fn published_gap_is_reported() {
        let mut r = compute_constants(&example_i()).unwrap();
        let published = BTreeMap::from([("phi".to_string(), 1.73186), ("theta".to_string(), 1.34089)]);
        r.compare_with(&published);
        assert_eq!(r.published_comparison.len(), 2);
        assert_eq!(r.notes.len(), 1);
        assert!(r.notes[0].starts_with("phi"));
    }

    #[test]
    fn banach_radius() {
        let s = example_i();
        let r = compute_constants(&s).unwrap();
        let b = check_banach(&s, &r).unwrap();
        assert!(b.holds);
        assert!(close(b.l_zero, 7.0 / 6.0, 1e-14));
        assert!(close(b.r_min.unwrap(), R_MIN, 1e-10));
    }

    #[test]
    fn large_n_breaks_contraction() {
        let mut s = example_i();
        s.g_lipschitz = Some(1.0);
        let r = compute_constants(&s).unwrap();
        assert!(!check_banach(&s, &r).unwrap().holds);
        assert!(r.c_f.is_none());
        assert!(matches!(ulam_constant(&r), Err(Error::NotContractive(_))));
    }

    #[test]
    fn missing_metadata_leaves_fields_absent() {
        let mut s = example_i();
        s.lipschitz = None;
        let r = compute_constants(&s).unwrap();
        assert!(r.omega.is_none() && r.banach_value.is_none());
        assert!(r.xi_const.is_some());
        assert!(matches!(check_banach(&s, &r), Err(Error::MissingMetadata(_))));
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("omega"));
    }

    #[test]
    fn reduces_without_boundary_terms() {
        let mut s = example("0", "0", 0.0, exp_psi());
        s.alphas = vec![0.0, 0.0];
        s.betas = vec![0.0, 0.0];
        let r = compute_constants(&s).unwrap();
        let t = s.psi.shifted(s.t_end()).unwrap();
        let expect = t.powf(1.5) / gamma(2.5) + r.k * t.powf(1.75) / gamma(2.75);
        assert!(close(r.theta, expect, 1e-14));
        assert!(close(r.omega.unwrap(), r.lambda_t_mu.unwrap() * r.theta, 1e-15));
    }

    #[test]
    fn zeta_for_growth_example() {
        let s = growth_ii();
        let r = compute_constants(&s).unwrap();
        let z = Zeta::new(&s, &r).unwrap();
        assert!(close(z.eval(0.0).unwrap(), 0.202_055_843_121_288_075_31, 1e-10));
        let check = check_sadovskii(&s, &r, 0.0, 7.0 / 6.0).unwrap();
        assert!(check.holds);
        assert_eq!(check.negative_intervals.len(), 1);
        let [lo, hi] = check.negative_intervals[0];
        assert!((lo - 0.247_723_188_233_194_757_62).abs() < 1e-7);
        assert!((hi - 0.986_848_278_733_162_395_96).abs() < 1e-7);
    }

    #[test]
    fn zero_growth_gives_negative_identity() {
        let mut s = growth_ii();
        let zero = expr("0", &["t"]);
        s.growth.as_mut().unwrap().p = [zero.clone(), zero.clone(), zero];
        s.g_lipschitz = Some(0.0);
        let r = compute_constants(&s).unwrap();
        let z = Zeta::new(&s, &r).unwrap();
        for x in [0.1, 0.5, 1.0] {
            assert!((z.eval(x).unwrap() + x).abs() < 1e-15);
        }
        assert!(check_sadovskii(&s, &r, 0.0, 1.0).unwrap().holds);
    }

    #[test]
    fn burton_kirk_for_constant_forcing() {
        let mut s = example("1", "1", 0.0, PsiFunction::power_exponential(1.1, 0.0, 7.0 / 6.0).unwrap());
        s.lipschitz = None;
        s.g_lipschitz = Some(0.0);
        s.bound_p = Some(expr("exp(t)", &["t"]));
        let r = compute_constants(&s).unwrap();
        let b = check_burton_kirk(&s, &r).unwrap();
        assert!(b.holds);
        assert_eq!(b.dominance_violations, 0);
        assert!(close(b.m_bound, 2_099.686_737_614_255_757_1, 1e-10));
        s.bound_p = Some(expr("0", &["t"]));
        let b = check_burton_kirk(&s, &r).unwrap();
        assert_eq!(b.m_bound, 0.0);
    }

    #[test]
    fn phi_f_vanishes_at_zero() {
        let r = compute_constants(&example_i()).unwrap();
        let (c, phi) = ulam_constant(&r).unwrap();
        assert_eq!(phi.eval(0.0), 0.0);
        assert!(phi.eval(1e-3) <= phi.eval(1e-2));
        assert_eq!(c, r.c_f.unwrap());
    }

    #[test]
    fn assess_fills_verdicts() {
        let r = assess(&example_i(), (0.0, 7.0 / 6.0)).unwrap();
        assert!(r.verdicts.banach.as_ref().unwrap().holds);
        assert!(r.verdicts.ulam_hyers.as_ref().unwrap().holds);
        assert!(r.verdicts.sadovskii.is_none());
        assert_eq!(r.notes.len(), 2);
    }

    #[test]
    fn corrected_constants() {
        let mut s = example_i();
        s.fidelity = Fidelity::Corrected;
        let r = compute_constants(&s).unwrap();
        assert!(close(r.delta, -1.785_812_146_756_532_601_9, 1e-10));
        assert!(close(r.theta, 1.440_925_559_301_768_394_9, 1e-10));
        assert!(close(r.phi, 2.270_614_703_193_077_167_1, 1e-10));
    }
}
