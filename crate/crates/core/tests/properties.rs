//! Invariants of the fixed-point operator and the criteria constants.

use hilfer_bvp::bvp::{FixedPointOperator, ProblemSpec};
use hilfer_bvp::config::RunConfig;
use hilfer_bvp::criteria::compute_constants;
use hilfer_bvp::exec::ExecMode;
use hilfer_bvp::frac::GridFunction;
use proptest::prelude::*;

const N: usize = 128;
// sup of Σ|ℓ_j| for four-point Lagrange interpolation on equispaced nodes
const CUBIC_LEBESGUE: f64 = 1.25;

fn example_i() -> ProblemSpec {
    RunConfig::builtin("example-4.1-i").unwrap().build_spec().unwrap().0
}

fn grid_fn(op: &FixedPointOperator, values: Vec<f64>) -> GridFunction {
    GridFunction::new(op.grid().clone(), values).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, N + 1)
}

fn nonzero_gap(u: &[f64], v: &[f64]) -> bool {
    u.iter().zip(v).any(|(a, b)| a != b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_contracts(u in values(), v in values()) {
        prop_assume!(nonzero_gap(&u, &v));
        let spec = example_i();
        let bv = compute_constants(&spec).unwrap().banach_value.unwrap();
        let op = FixedPointOperator::new(&spec, N, ExecMode::Sequential).unwrap();
        let (u, v) = (grid_fn(&op, u), grid_fn(&op, v));
        let d = op.apply(&u).unwrap().sup_dist(&op.apply(&v).unwrap());
        prop_assert!(d <= (bv + 0.01) * u.sup_dist(&v), "{d} vs {}", bv * u.sup_dist(&v));
    }

    #[test]
    fn boundary_part_is_lipschitz(u in values(), v in values()) {
        prop_assume!(nonzero_gap(&u, &v));
        let spec = example_i();
        let r = compute_constants(&spec).unwrap();
        let op = FixedPointOperator::new(&spec, N, ExecMode::Sequential).unwrap();
        let (u, v) = (grid_fn(&op, u), grid_fn(&op, v));
        let (_, au) = op.apply_split(&u).unwrap();
        let (_, av) = op.apply_split(&v).unwrap();
        let bound = r.k * r.n.unwrap() * CUBIC_LEBESGUE * u.sup_dist(&v);
        prop_assert!(au.sup_dist(&av) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn banach_value_grows_with_lambda(l1 in 0.0f64..0.05, l2 in 0.0f64..0.05, sign in prop::bool::ANY) {
        let (lo, hi) = (l1.min(l2), l1.max(l2));
        let s = if sign { 1.0 } else { -1.0 };
        let bv = |lambda: f64| {
            let mut spec = example_i();
            spec.lambda = lambda;
            compute_constants(&spec).unwrap().banach_value.unwrap()
        };
        prop_assert!(bv(s * lo) <= bv(s * hi));
        prop_assert_eq!(bv(lo), bv(-lo));
    }

    #[test]
    fn banach_value_grows_with_g_lipschitz(n1 in 0.0f64..0.2, n2 in 0.0f64..0.2) {
        let (lo, hi) = (n1.min(n2), n1.max(n2));
        let bv = |n: f64| {
            let mut spec = example_i();
            spec.g_lipschitz = Some(n);
            compute_constants(&spec).unwrap().banach_value.unwrap()
        };
        prop_assert!(bv(lo) <= bv(hi));
    }

    #[test]
    fn execution_mode_does_not_change_bits(u in values()) {
        let spec = example_i();
        let seq = FixedPointOperator::new(&spec, N, ExecMode::Sequential).unwrap();
        let par = FixedPointOperator::new(&spec, N, ExecMode::Parallel).unwrap();
        let a = seq.apply(&grid_fn(&seq, u.clone())).unwrap();
        let b = par.apply(&grid_fn(&par, u)).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }
}
