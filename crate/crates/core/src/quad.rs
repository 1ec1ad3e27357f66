//! Product-trapezoid weights for the Abel kernel (x − τ)^{α−1} and a tanh-sinh rule.
//!
//! On a mesh interval [τ_j, τ_{j+1}] of width h whose right end lies at distance
//! B = x − τ_{j+1} from the evaluation point, the integrand is replaced by its linear
//! interpolant and the kernel moments are integrated exactly. With b = B/h,
//!
//! ```text
//! ∫ (x−τ)^{α−1} F(τ) dτ ≈ h^α [ wl(b) F_j + wr(b) F_{j+1} ],
//! wl(b) = ∫₀¹ (b+r)^{α−1} r dr,   wr(b) = ∫₀¹ (b+r)^{α−1} (1−r) dr.
//! ```

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Above this distance ratio the closed forms lose digits to cancellation.
const CLOSED_FORM_LIMIT: f64 = 2.0;

/// Unit-width moments (wl, wr) for an interval whose right end is `b` widths from x.
pub fn unit_weights(alpha: f64, b: f64) -> (f64, f64) {
    debug_assert!(b >= 0.0);
    if b <= CLOSED_FORM_LIMIT {
        let m0 = ((b + 1.0).powf(alpha) - b.powf(alpha)) / alpha;
        let m1 = ((b + 1.0).powf(alpha + 1.0) - b.powf(alpha + 1.0)) / (alpha + 1.0);
        let wl = m1 - b * m0;
        (wl, m0 - wl)
    } else {
        // binomial series of (1 + r/b)^{α−1}; converges geometrically for b > 1
        let lead = b.powf(alpha - 1.0);
        let inv = 1.0 / b;
        let (mut wl, mut wr) = (0.0, 0.0);
        let mut term = 1.0;
        for k in 0..200 {
            let kf = k as f64;
            let l = term / (kf + 2.0);
            wl += l;
            wr += term / (kf + 1.0) - l;
            term *= (alpha - 1.0 - kf) / (kf + 1.0) * inv;
            if term.abs() < 1e-17 * wr.abs() {
                break;
            }
        }
        (lead * wl, lead * wr)
    }
}

/// Weights (left, right) for the partial interval [τ_j, x] of a mesh cell of width h,
/// with d = x − τ_j ∈ [0, h]. Not scaled by h^α.
pub fn partial_weights(alpha: f64, d: f64, h: f64) -> (f64, f64) {
    let da = d.powf(alpha);
    let wr = da * d / (h * alpha * (alpha + 1.0));
    (da / alpha - wr, wr)
}

/// Weights for ∫_{nodes[0]}^{x} (x−τ)^{α−1} F(τ) dτ with F linear between nodes.
///
/// `out[j]` multiplies F(nodes[j]); nodes beyond the cell containing x get no entry.
/// Returns nothing when x ≤ nodes[0].
pub fn abel_weights(alpha: f64, nodes: &[f64], x: f64, out: &mut Vec<f64>) {
    out.clear();
    if nodes.len() < 2 || x <= nodes[0] {
        return;
    }
    // last index with nodes[k] <= x
    let k = match nodes.partition_point(|&v| v <= x) {
        0 => return,
        p => p - 1,
    };
    let last = if k + 1 < nodes.len() && x > nodes[k] { k + 1 } else { k };
    out.resize(last + 1, 0.0);
    for j in 0..k {
        let h = nodes[j + 1] - nodes[j];
        let b = (x - nodes[j + 1]) / h;
        let ha = h.powf(alpha);
        let (wl, wr) = unit_weights(alpha, b.max(0.0));
        out[j] += ha * wl;
        out[j + 1] += ha * wr;
    }
    if last == k + 1 {
        let h = nodes[k + 1] - nodes[k];
        let (wl, wr) = partial_weights(alpha, x - nodes[k], h);
        out[k] += wl;
        out[k + 1] += wr;
    }
}

/// ∫_{nodes[0]}^{x} (x−τ)^{α−1} F(τ) dτ with F linear between nodes.
pub fn abel_integral(alpha: f64, nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let mut w = Vec::new();
    abel_weights(alpha, nodes, x, &mut w);
    w.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Convolution weights for uniform meshes evaluated at mesh nodes.
///
/// At node k of a mesh with spacing h the integral is
/// `h^α (wl[k−1] F_0 + Σ_{j=1}^{k} c[k−j] F_j)`.
#[derive(Debug, Clone)]
pub struct ToeplitzWeights {
    pub alpha: f64,
    pub wl: Vec<f64>,
    pub c: Vec<f64>,
}

impl ToeplitzWeights {
    /// Weights for meshes with up to `n` cells.
    pub fn new(alpha: f64, n: usize) -> Self {
        let (wl, wr): (Vec<f64>, Vec<f64>) = (0..n).map(|d| unit_weights(alpha, d as f64)).unzip();
        let c = (0..n)
            .map(|d| wr[d] + if d >= 1 { wl[d - 1] } else { 0.0 })
            .collect();
        ToeplitzWeights { alpha, wl, c }
    }

    /// Unscaled sum at node k (multiply by h^α).
    #[inline]
    pub fn node_sum(&self, values: &[f64], k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let tail: f64 = self.c[..k].iter().rev().zip(&values[1..=k]).map(|(c, v)| c * v).sum();
        self.wl[k - 1] * values[0] + tail
    }
}

/// Fraction of the index range over which [`graded_mesh`] is quadratic.
const GRADED_CORE: f64 = 0.25;

/// Nodes on [t0, t1] that grow quadratically from t0 over the first quarter of the
/// index range and are evenly spaced afterwards (the join is C¹). The quadratic part
/// keeps second order for integrands behaving like (τ − t0)^p, p > 0; the even part
/// keeps the spacing near t1 close to uniform.
pub fn graded_mesh(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let len = t1 - t0;
    let norm = 1.0 - GRADED_CORE / 2.0;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|j| {
            let s = j as f64 / n as f64;
            let p = if s <= GRADED_CORE {
                s * s / (2.0 * GRADED_CORE)
            } else {
                s - GRADED_CORE / 2.0
            };
            t0 + len * p / norm
        })
        .collect();
    nodes[n] = t1;
    nodes
}

/// Abel weights of [`graded_mesh`]`(0, 1, n)` evaluated at x = 1. Since the mesh and
/// kernel are scale-invariant, the weights for an interval of length L are these times L^α.
type WeightCache = Mutex<HashMap<(u64, usize), Arc<Vec<f64>>>>;

pub fn graded_unit_weights(alpha: f64, n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<WeightCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (alpha.to_bits(), n);
    if let Some(w) = cache.lock().expect("weight cache poisoned").get(&key) {
        return w.clone();
    }
    let mut w = Vec::new();
    abel_weights(alpha, &graded_mesh(0.0, 1.0, n), 1.0, &mut w);
    let w = Arc::new(w);
    let mut guard = cache.lock().expect("weight cache poisoned");
    if guard.len() >= 256 {
        guard.clear();
    }
    guard.insert(key, w.clone());
    w
}

/// Tanh-sinh quadrature over [0, 1]. The integrand receives `(s, 1 − s)` with the
/// complement computed without cancellation, so endpoint singularities are safe.
pub fn tanh_sinh_unit(mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    const STEP: f64 = 1.0 / 64.0;
    const HALF_WIDTH: usize = 416;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut total = 0.0;
    for i in 0..=2 * HALF_WIDTH {
        let x = (i as f64 - HALF_WIDTH as f64) * STEP;
        let u = half_pi * x.sinh();
        let e = (-2.0 * u.abs()).exp();
        let (small, large) = (e / (1.0 + e), 1.0 / (1.0 + e));
        let (s, c) = if u >= 0.0 { (large, small) } else { (small, large) };
        if s < 1e-280 || c < 1e-280 {
            continue;
        }
        let w = std::f64::consts::PI * x.cosh() * s * c;
        total += w * f(s, c);
    }
    total * STEP
}
