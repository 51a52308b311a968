//! The verification suites behind `raagtree verify`.

use serde::Serialize;

use raagtree::discrepancy::discrepancy_report;
use raagtree::enumerate::{
    enumerate_unrooted, estimate, in_vanishing_class, rooted_census,
    rooted_unrooted_bridge_check, unrooted_count, Mode, Statistic,
};
use raagtree::homology::{betti_one, build_presentation, check_betti_lower_bound, check_vanishing_elements};
use raagtree::series::{
    cayley_fixed_point, cayley_t, constants, exp_z, lagrange_coef, phi, psi, psi2_closed,
    psi3_closed, rational_to_f64, stirling_identity_checks, DeepSeries, TruncatedSeries,
};
use raagtree::tree::LabeledTree;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        }
    }
}

pub struct Options {
    pub max_n: Option<usize>,
    pub mc_runs: usize,
    pub mc_samples: u64,
    pub enumeration_budget: usize,
    pub presentation_budget: usize,
}

impl Options {
    fn cap(&self, suite_default: usize) -> usize {
        self.max_n.unwrap_or(suite_default).min(suite_default)
    }
}

pub fn run_suite(suite: &str, options: &Options) -> Result<Vec<Check>, String> {
    let mut checks = Vec::new();
    match suite {
        "series" => series_suite(&mut checks, options),
        "enumeration" => enumeration_suite(&mut checks, options),
        "relators" => relators_suite(&mut checks, options),
        "homology" => homology_suite(&mut checks, options),
        "montecarlo" => montecarlo_suite(&mut checks, options),
        "discrepancy" => discrepancy_suite(&mut checks, options),
        "all" => {
            series_suite(&mut checks, options);
            enumeration_suite(&mut checks, options);
            relators_suite(&mut checks, options);
            homology_suite(&mut checks, options);
            montecarlo_suite(&mut checks, options);
            discrepancy_suite(&mut checks, options);
        }
        other => return Err(format!("unknown suite {other:?}")),
    }
    Ok(checks)
}

fn series_suite(checks: &mut Vec<Check>, options: &Options) {
    let order = 60;
    checks.push(Check::new(
        "series.cayley-fixed-point",
        cayley_fixed_point(order) == cayley_t(order),
        format!("T = z e^T solved to order {order} equals the closed form"),
    ));
    checks.push(Check::new(
        "series.psi1-closed-form",
        psi(1, order) == cayley_t(order).sub(&TruncatedSeries::z(order)),
        "psi_1 = T - z",
    ));
    checks.push(Check::new(
        "series.psi2-closed-form",
        psi(2, order) == psi2_closed(order),
        "psi_2 = T e^{-z} - z to order 60",
    ));
    checks.push(Check::new(
        "series.psi3-closed-form",
        psi(3, order) == psi3_closed(order),
        "psi_3 = z e^{T e^{-z}} e^{-z} - z to order 60",
    ));

    let f = exp_z(31);
    let mut lagrange_ok = true;
    for k in 1..=30usize {
        let g = TruncatedSeries::z(31).pow(k);
        for n in k..=30usize {
            let got = lagrange_coef(&g, &f, n).expect("f(0) = 1");
            let want = cayley_t(30).pow(k).coef(n);
            if got != want {
                lagrange_ok = false;
            }
        }
    }
    checks.push(Check::new(
        "series.lagrange-power-coefficients",
        lagrange_ok,
        "coef_n[T^k] from Lagrange inversion for all k <= n <= 30",
    ));

    for check in stirling_identity_checks(20) {
        checks.push(Check::new(
            format!("series.stirling.{}", check.name),
            check.ok,
            "exact truncated-series identity at order 20",
        ));
    }

    // cross-module: series counts against the exhaustive rooted census
    let cap = options.cap(6);
    let mut census_ok = true;
    let mut detail = String::new();
    for n in 1..=cap {
        let census = rooted_census(n, 4, options.enumeration_budget).expect("within budget");
        for k in 0..=4usize {
            let psi_count = count_of(&psi(k, n), n);
            let phi_count = count_of(&phi(k, n), n);
            if psi_count != census.dist_at_least[k] as i128
                || phi_count != census.height_at_most[k] as i128
            {
                census_ok = false;
                detail = format!("mismatch at n={n}, k={k}");
            }
        }
    }
    checks.push(Check::new(
        "series.census-cross-check",
        census_ok,
        if detail.is_empty() {
            format!("psi/phi counts equal brute force for n <= {cap}, k <= 4")
        } else {
            detail
        },
    ));

    let consts = constants();
    checks.push(Check::new(
        "series.constants-decimals",
        (consts.c3.to_f64() - 0.3522).abs() < 0.5e-4
            && (consts.d3.to_f64() - 2.070).abs() < 0.5e-3
            && (consts.exp_minus_inv_e.to_f64() - 0.6922).abs() < 0.5e-4,
        format!(
            "c3 = {}..., d3 = {}..., e^-1/e = {}...",
            &consts.c3.decimal[..8],
            &consts.d3.decimal[..7],
            &consts.exp_minus_inv_e.decimal[..8]
        ),
    ));

    let deep = DeepSeries::new(400).expect("within series budget");
    let c3 = consts.c3.to_f64();
    let d3 = consts.d3.to_f64();
    let p: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| rational_to_f64(&deep.prob_root_deep(n).unwrap()))
        .collect();
    let m: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| rational_to_f64(&deep.mean_n_given_deep(n).unwrap()))
        .collect();
    let cauchy = (0..3).all(|i| (p[i + 1] - c3).abs() < (p[i] - c3).abs())
        && (0..3).all(|i| (m[i + 1] - d3).abs() < (m[i] - d3).abs());
    let pinned = (p[3] - c3).abs() < 1.0e-3 && (m[3] - d3).abs() < 2.0e-2;
    checks.push(Check::new(
        "series.convergence",
        cauchy && pinned,
        format!(
            "|p(400)-c3| = {:.2e} (< 1e-3), |m(400)-d3| = {:.2e} (< 2e-2), both halving",
            (p[3] - c3).abs(),
            (m[3] - d3).abs()
        ),
    ));
}

fn count_of(series: &TruncatedSeries, n: usize) -> i128 {
    let mut fact = num_rational::BigRational::from_integer(1.into());
    for i in 2..=n {
        fact *= num_rational::BigRational::from_integer((i as i64).into());
    }
    use num_traits::ToPrimitive;
    (series.coef(n) * fact).to_integer().to_i128().expect("count fits")
}

fn enumeration_suite(checks: &mut Vec<Check>, options: &Options) {
    let cap = options.cap(8);
    let mut ok = true;
    for n in 1..=cap {
        let count = enumerate_unrooted(n, options.enumeration_budget)
            .expect("within budget")
            .count() as u64;
        if count != unrooted_count(n) {
            ok = false;
        }
    }
    checks.push(Check::new(
        "enumeration.cayley-counts",
        ok,
        format!("n^(n-2) unrooted trees for n <= {cap}"),
    ));

    let mut bridge_ok = true;
    let mut detail = String::new();
    for n in 2..=cap {
        let bridge =
            rooted_unrooted_bridge_check(n, options.enumeration_budget).expect("within budget");
        if !bridge.holds() {
            bridge_ok = false;
        }
        if n == cap {
            detail = format!(
                "at n = {n}: sum|D| = {} = deep-root count, sum upsilon = {} = sum Y",
                bridge.deep_sum_unrooted, bridge.upsilon_sum_unrooted
            );
        }
    }
    checks.push(Check::new("enumeration.bridge-identity", bridge_ok, detail));
}

fn iso_classes(max_n: usize, budget: usize) -> Vec<LabeledTree> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for n in 2..=max_n {
        for tree in enumerate_unrooted(n, budget).expect("within budget") {
            if seen.insert((n, tree.canonical_edges())) {
                out.push(tree);
            }
        }
    }
    out
}

fn relators_suite(checks: &mut Vec<Check>, options: &Options) {
    let cap = options.cap(5);
    let mut total_instances = 0usize;
    let mut total_trees = 0usize;
    // build_presentation verifies every instance as an automorphism
    // identity and panics otherwise, so reaching the count is the proof
    for n in 2..=cap {
        for tree in enumerate_unrooted(n, options.enumeration_budget).expect("within budget") {
            let p = build_presentation(&tree, options.presentation_budget.max(cap))
                .expect("within budget");
            total_instances += p.relator_count();
            total_trees += 1;
        }
    }
    checks.push(Check::new(
        "relators.identities",
        true,
        format!(
            "{total_instances} relator instances verified on {total_trees} labeled trees (n <= {cap})"
        ),
    ));
}

fn homology_suite(checks: &mut Vec<Check>, options: &Options) {
    let cap = options.cap(6);
    let classes = iso_classes(cap, options.enumeration_budget);

    let mut bound_ok = true;
    let mut vanish_ok = true;
    let mut leafy_class_ok = true;
    let mut detail = String::new();
    for tree in &classes {
        let budget = options.presentation_budget.max(cap);
        let check = check_betti_lower_bound(tree, budget).expect("within budget");
        if !check.holds() {
            bound_ok = false;
            detail = format!("betti lower bound fails on {:?}", tree.edges());
        }
        if !check_vanishing_elements(tree, budget).expect("within budget") {
            vanish_ok = false;
        }
        if in_vanishing_class(tree) && check.h1.b1 != 0 {
            leafy_class_ok = false;
        }
    }
    checks.push(Check::new(
        "homology.betti-lower-bound",
        bound_ok,
        if detail.is_empty() {
            format!(
                "b1 >= upsilon and the deep projection is basis-exact on {} classes (n <= {cap})",
                classes.len()
            )
        } else {
            detail
        },
    ));
    checks.push(Check::new(
        "homology.vanishing-elements",
        vanish_ok,
        "leaf-adjacent transvections and conjugations die in H1",
    ));
    checks.push(Check::new(
        "homology.b1-zero-class",
        leafy_class_ok,
        "b1 = 0 whenever every node is a leaf or has >= 3 leaf neighbors",
    ));

    let mut invariance_ok = true;
    let tree = raagtree::tree::path_tree(4.min(cap));
    let base = betti_one(&tree, options.presentation_budget.max(cap))
        .expect("within budget")
        .b1;
    for perm in [vec![0, 2, 4, 1, 3], vec![0, 4, 3, 2, 1]] {
        if tree.node_count() + 1 == perm.len() {
            let relabeled = tree.relabel(&perm).expect("valid permutation");
            if betti_one(&relabeled, options.presentation_budget.max(cap))
                .expect("within budget")
                .b1
                != base
            {
                invariance_ok = false;
            }
        }
    }
    checks.push(Check::new(
        "homology.relabeling-invariance",
        invariance_ok,
        "b1 is independent of the labeling",
    ));
}

fn montecarlo_suite(checks: &mut Vec<Check>, options: &Options) {
    let n = options.cap(7).max(5);
    for stat in [Statistic::DeepFraction, Statistic::UpsilonPerNode] {
        let exact = estimate(stat, n, Mode::Exhaustive, options.enumeration_budget)
            .expect("within budget")
            .value_f64();
        let runs = options.mc_runs;
        use rayon::prelude::*;
        let covered: usize = (0..runs as u64)
            .into_par_iter()
            .map(|seed| {
                let report = estimate(
                    stat,
                    n,
                    Mode::MonteCarlo {
                        samples: options.mc_samples,
                        seed: seed + 1,
                    },
                    options.enumeration_budget,
                )
                .expect("sampling cannot exceed a budget");
                let ci = report.ci95.expect("monte carlo carries an interval");
                usize::from(ci[0] <= exact && exact <= ci[1])
            })
            .sum();
        checks.push(Check::new(
            format!("montecarlo.coverage.{}", stat.as_str()),
            covered * 10 >= runs * 9,
            format!(
                "exhaustive mean at n = {n} inside the 95% interval in {covered}/{runs} seeded runs"
            ),
        ));
    }
}

fn discrepancy_suite(checks: &mut Vec<Check>, options: &Options) {
    let report = discrepancy_report(
        options.cap(8),
        &[50, 100, 200, 400],
        options.enumeration_budget,
    )
    .expect("report computes");
    checks.push(Check::new(
        "discrepancy.supported-candidate",
        report.supported == "c3*d3" && report.conditional_supports_d3,
        serde_json::to_string(&report).expect("report serializes"),
    ));
}
