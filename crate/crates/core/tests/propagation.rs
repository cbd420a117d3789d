use boxprop::{
    compile_expression, compile_system, eval_natural, gpa, psi_evaluate, psi_reactivate, BinaryOp, Box64, Csp64,
    Discipline, Expr, Interval64, Outcome, RootRelation, System64, UnaryOp,
};
use proptest::prelude::*;

type I = Interval64;

/// Single-occurrence expressions over positive domains, built from
/// operators that keep every node value bounded and away from zero.
fn positive_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        4 => Just(Expr::var("_")),
        1 => (1u32..40).prop_map(|k| Expr::constant(f64::from(k) / 8.0)),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Mul, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Div, a, b)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Sqrt, a)),
            inner.prop_map(|a| Expr::unary(UnaryOp::Pow(2), a)),
        ]
    })
}

/// Gives every variable placeholder a fresh name.
fn number_vars(e: &Expr) -> Expr {
    let mut k = 0;
    e.map_vars(&mut |_| {
        k += 1;
        format!("x{k}")
    })
}

fn load(e: &Expr, lows: &[f64]) -> (Csp64, Box64, Vec<(String, I)>) {
    let csp = compile_expression::<f64>(e, RootRelation::Free).unwrap();
    let mut b = csp.initial_box();
    let domains: Vec<(String, I)> = e
        .variables()
        .into_iter()
        .enumerate()
        .map(|(k, n)| {
            let lo = lows[k % lows.len()];
            (n, I::new(lo, lo + 1.5))
        })
        .collect();
    for (n, d) in &domains {
        b[csp.var_id(n).unwrap()] = *d;
    }
    (csp, b, domains)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn selective_propagation_evaluates_naturally(e in positive_expr(), lows in proptest::collection::vec(0.25..4.0f64, 1..8)) {
        let e = number_vars(&e);
        prop_assume!(!e.is_constant() && !matches!(e, Expr::Var(_)));
        let (csp, mut b, domains) = load(&e, &lows);
        let stats = psi_evaluate(&csp, &mut b);
        let natural = eval_natural(&e, |n| domains.iter().find(|(m, _)| m == n).map(|(_, d)| *d)).unwrap();
        prop_assert_eq!(b[csp.roots()[0]], natural);
        prop_assert_eq!(stats.outcome, Outcome::Fixpoint);
        prop_assert!(stats.total_activations <= csp.len() as u64);
        prop_assert!(stats.max_activations() <= 1);
    }

    #[test]
    fn selective_start_never_costs_more(e in positive_expr(), lows in proptest::collection::vec(0.25..4.0f64, 1..8)) {
        let e = number_vars(&e);
        prop_assume!(!e.is_constant() && !matches!(e, Expr::Var(_)));
        let (csp, b, _) = load(&e, &lows);
        let mut selective = b.clone();
        let psi = psi_evaluate(&csp, &mut selective);
        let mut full = b.clone();
        let all = gpa(&csp, &mut full, &csp.all_constraints(), Discipline::DeepestFirst);
        prop_assert!(psi.total_activations <= all.total_activations);
        prop_assert_eq!(selective, full);
    }

    #[test]
    fn schedules_agree(e in positive_expr(), lows in proptest::collection::vec(0.25..4.0f64, 1..8), cut in 0.05..0.95f64, seed in any::<u64>()) {
        let e = number_vars(&e);
        prop_assume!(!e.is_constant() && !matches!(e, Expr::Var(_)));
        let (csp, mut b, _) = load(&e, &lows);
        psi_evaluate(&csp, &mut b);
        let root = csp.roots()[0];
        let r = b[root];
        let shrunk = I::new(r.lo(), r.lo() + (r.hi() - r.lo()) * cut);
        prop_assume!(shrunk.is_proper_subset(&r));
        b[root] = shrunk;
        let results: Vec<Box64> = [
            Discipline::Fifo,
            Discipline::DeepestFirst,
            Discipline::ShallowestFirst,
            Discipline::Random(seed),
        ]
        .into_iter()
        .map(|d| {
            let mut run = b.clone();
            gpa(&csp, &mut run, &csp.all_constraints(), d);
            run
        })
        .collect();
        for other in &results[1..] {
            prop_assert_eq!(&results[0], other);
        }
    }

    #[test]
    fn reactivation_matches_restart(e in positive_expr(), lows in proptest::collection::vec(0.25..4.0f64, 1..8), cut in 0.05..0.95f64) {
        let e = number_vars(&e);
        prop_assume!(!e.is_constant() && !matches!(e, Expr::Var(_)));
        let (csp, mut b, _) = load(&e, &lows);
        psi_evaluate(&csp, &mut b);
        let root = csp.roots()[0];
        let r = b[root];
        let shrunk = I::new(r.lo() + (r.hi() - r.lo()) * cut, r.hi());
        prop_assume!(shrunk.is_proper_subset(&r));
        let mut incremental = b.clone();
        psi_reactivate(&csp, &mut incremental, root, shrunk).unwrap();
        let mut restart = b.clone();
        restart[root] = shrunk;
        gpa(&csp, &mut restart, &csp.all_constraints(), Discipline::Fifo);
        prop_assert_eq!(incremental, restart);
    }
}

#[test]
fn systems_with_shared_variables_reach_one_fixpoint() {
    let s = System64::new(
        vec![("x".into(), I::new(-2.0, 2.0)), ("y".into(), I::new(-2.0, 2.0))],
        vec![Expr::parse("x^2 + y^2 - 1").unwrap(), Expr::parse("x - y").unwrap()],
    )
    .unwrap()
    .rewrite_single_occurrence();
    let csp = compile_system(&s).unwrap();
    let mut reference = csp.initial_box();
    for (n, d) in &s.variables {
        reference[csp.var_id(n).unwrap()] = *d;
    }
    let start = reference.clone();
    let outcome = gpa(&csp, &mut reference, &csp.all_constraints(), Discipline::Fifo).outcome;
    assert_eq!(outcome, Outcome::Fixpoint);
    for seed in 0..20 {
        let mut b = start.clone();
        gpa(&csp, &mut b, &csp.all_constraints(), Discipline::Random(seed));
        assert_eq!(b, reference, "seed {seed}");
    }
}
