//! Exhaustive enumeration of labeled trees through Prüfer codes, uniform
//! sampling, and exact or Monte-Carlo evaluation of the tree statistics.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::error::BudgetError;
use crate::series::rational_to_f64;
use crate::tree::{LabeledTree, PruferCode};

/// Default upper bound for exhaustive enumeration (9^7 ≈ 4.8M unrooted trees).
pub const DEFAULT_ENUMERATION_BUDGET: usize = 9;

/// Samples per RNG stream; estimates are independent of how blocks are
/// scheduled because every accumulator is an exact integer sum.
const SAMPLE_BLOCK: u64 = 4096;

/// A labeled tree with a distinguished node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    tree: LabeledTree,
    root: usize,
}

impl RootedTree {
    pub fn new(tree: LabeledTree, root: usize) -> Result<Self, crate::error::TreeError> {
        if root == 0 || root > tree.node_count() {
            return Err(crate::error::TreeError::BadLabel {
                label: root,
                n: tree.node_count(),
            });
        }
        Ok(RootedTree { tree, root })
    }

    pub fn tree(&self) -> &LabeledTree {
        &self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Minimum distance from the root to a childless node, i.e. to a node
    /// with no children once edges are oriented away from the root. The
    /// single-node tree has a childless root, so the distance is 0 there.
    pub fn root_boundary_distance(&self) -> usize {
        root_boundary_distance_of(&self.tree, self.root)
    }

    /// Distance from the root to the nearest leaf of the *unrooted* tree
    /// (a degree-1 node; 0 when the root itself has degree <= 1).
    pub fn unrooted_root_boundary_distance(&self) -> usize {
        unrooted_root_distance_of(&self.tree, self.root)
    }

    /// Number of nodes at distance exactly 2 from the root.
    pub fn second_generation_count(&self) -> usize {
        second_generation_of(&self.tree, self.root)
    }

    /// Maximum distance from the root to any node.
    pub fn height(&self) -> usize {
        height_of(&self.tree, self.root)
    }
}

fn root_boundary_distance_of(tree: &LabeledTree, root: usize) -> usize {
    let n = tree.node_count();
    if n == 1 {
        return 0;
    }
    let dist = tree.distances_from(root);
    (1..=n)
        .filter(|&v| v != root && tree.degree(v) == 1)
        .map(|v| dist[v])
        .min()
        .expect("a tree on >= 2 nodes has a leaf besides the root")
}

fn unrooted_root_distance_of(tree: &LabeledTree, root: usize) -> usize {
    let n = tree.node_count();
    if n == 1 || tree.degree(root) <= 1 {
        return 0;
    }
    let dist = tree.distances_from(root);
    (1..=n)
        .filter(|&v| tree.degree(v) == 1)
        .map(|v| dist[v])
        .min()
        .expect("a tree on >= 2 nodes has a leaf")
}

fn second_generation_of(tree: &LabeledTree, root: usize) -> usize {
    tree.link(root)
        .iter()
        .map(|&w| tree.degree(w) - 1)
        .sum()
}

fn height_of(tree: &LabeledTree, root: usize) -> usize {
    tree.distances_from(root)
        .iter()
        .skip(1)
        .copied()
        .max()
        .unwrap_or(0)
}

fn check_budget(what: &'static str, n: usize, budget: usize) -> Result<(), BudgetError> {
    if n == 0 {
        return Err(BudgetError::TooLarge { what, n, budget });
    }
    if n > budget {
        return Err(BudgetError::TooLarge { what, n, budget });
    }
    Ok(())
}

/// Number of unrooted labeled trees on `n` nodes, `n^(n-2)`.
pub fn unrooted_count(n: usize) -> u64 {
    if n <= 2 {
        1
    } else {
        (n as u64).pow(n as u32 - 2)
    }
}

/// Number of rooted labeled trees on `n` nodes, `n^(n-1)`.
pub fn rooted_count(n: usize) -> u64 {
    (n as u64).pow(n as u32 - 1)
}

fn code_from_index(n: usize, len: usize, mut idx: u64) -> Vec<usize> {
    let mut code = vec![1usize; len];
    for slot in code.iter_mut().rev() {
        *slot = (idx % n as u64) as usize + 1;
        idx /= n as u64;
    }
    code
}

fn tree_from_index(n: usize, idx: u64) -> LabeledTree {
    let len = n.saturating_sub(2);
    PruferCode::new(n, code_from_index(n, len, idx))
        .expect("index-derived code is valid")
        .decode()
        .expect("every code decodes")
}

/// Streams every labeled tree on `n` nodes exactly once, in Prüfer-code order.
pub fn enumerate_unrooted(
    n: usize,
    budget: usize,
) -> Result<impl Iterator<Item = LabeledTree>, BudgetError> {
    check_budget("unrooted enumeration", n, budget)?;
    Ok((0..unrooted_count(n)).map(move |idx| tree_from_index(n, idx)))
}

/// Streams every rooted labeled tree on `n` nodes exactly once.
pub fn enumerate_rooted(
    n: usize,
    budget: usize,
) -> Result<impl Iterator<Item = RootedTree>, BudgetError> {
    check_budget("rooted enumeration", n, budget)?;
    Ok((0..unrooted_count(n)).flat_map(move |idx| {
        let tree = tree_from_index(n, idx);
        (1..=n).map(move |root| RootedTree {
            tree: tree.clone(),
            root,
        })
    }))
}

fn sample_block_rng(seed: u64, block: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn random_tree(n: usize, rng: &mut ChaCha12Rng) -> LabeledTree {
    let code: Vec<usize> = (0..n.saturating_sub(2))
        .map(|_| rng.random_range(1..=n))
        .collect();
    PruferCode::new(n, code)
        .expect("random code is valid")
        .decode()
        .expect("every code decodes")
}

/// i.i.d. uniform labeled trees on `n >= 2` nodes. The stream is a pure
/// function of `(n, seed)`: sample `i` comes from ChaCha12 stream `i / 4096`.
pub fn sample_uniform(n: usize, seed: u64, count: u64) -> impl Iterator<Item = LabeledTree> {
    assert!(n >= 2, "sampling needs n >= 2");
    (0..count).scan(None::<(u64, ChaCha12Rng)>, move |state, i| {
        let block = i / SAMPLE_BLOCK;
        let rng = match state {
            Some((b, rng)) if *b == block => rng,
            _ => {
                *state = Some((block, sample_block_rng(seed, block)));
                &mut state.as_mut().unwrap().1
            }
        };
        Some(random_tree(n, rng))
    })
}

/// Membership in the class where every node is a leaf or has at least
/// three leaf neighbors. All generators of the automorphism subgroup die
/// in its abelianization for such trees; how rare they are is an open
/// empirical question, so their frequency is exposed as a statistic.
pub fn in_vanishing_class(tree: &LabeledTree) -> bool {
    (1..=tree.node_count()).all(|v| {
        tree.is_leaf(v)
            || tree.link(v).iter().filter(|&&w| tree.is_leaf(w)).count() >= 3
    })
}

/// Which mean to take over which uniform ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `|D(T)| / n` averaged over unrooted trees.
    DeepFraction,
    /// `upsilon(T) / n` averaged over unrooted trees.
    UpsilonPerNode,
    /// Probability that a rooted tree has root-to-childless distance >= 3.
    ProbRootDeep,
    /// Mean of `Y = 1{root deep} * (second generation size)` over rooted trees.
    MeanY,
    /// Mean second-generation size conditioned on a deep root.
    MeanNGivenDeep,
    /// Fraction of unrooted trees in the every-node-leafy vanishing class.
    VanishingClassFraction,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::DeepFraction,
        Statistic::UpsilonPerNode,
        Statistic::ProbRootDeep,
        Statistic::MeanY,
        Statistic::MeanNGivenDeep,
        Statistic::VanishingClassFraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::DeepFraction => "deep-fraction",
            Statistic::UpsilonPerNode => "upsilon-per-node",
            Statistic::ProbRootDeep => "prob-root-deep",
            Statistic::MeanY => "mean-y",
            Statistic::MeanNGivenDeep => "mean-n-given-deep",
            Statistic::VanishingClassFraction => "vanishing-class-fraction",
        }
    }

    fn is_rooted(self) -> bool {
        matches!(
            self,
            Statistic::ProbRootDeep | Statistic::MeanY | Statistic::MeanNGivenDeep
        )
    }
}

impl std::str::FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deep-fraction" => Ok(Statistic::DeepFraction),
            "upsilon-per-node" => Ok(Statistic::UpsilonPerNode),
            "prob-root-deep" | "prob-deep-root" => Ok(Statistic::ProbRootDeep),
            "mean-y" => Ok(Statistic::MeanY),
            "mean-n-given-deep" => Ok(Statistic::MeanNGivenDeep),
            "vanishing-class-fraction" => Ok(Statistic::VanishingClassFraction),
            other => Err(format!("unknown statistic {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("conditional statistic undefined: no sampled or enumerated tree satisfies the condition")]
    EmptyCondition,
    #[error("tree statistics need n >= 2 (got {n})")]
    TooSmall { n: usize },
}

/// Either an exact rational (exhaustive and series modes) or a float
/// point estimate (Monte Carlo).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StatValue {
    Exact(String),
    Float(f64),
}

/// One computed statistic with its provenance. Exhaustive and exact-series
/// reports carry an exact rational and no interval.
#[derive(Debug, Clone, Serialize)]
pub struct StatReport {
    pub statistic: String,
    pub n: usize,
    pub mode: String,
    pub value: StatValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip)]
    pub exact: Option<BigRational>,
}

impl StatReport {
    pub fn exact_report(statistic: &str, n: usize, mode: &str, value: BigRational) -> Self {
        StatReport {
            statistic: statistic.to_string(),
            n,
            mode: mode.to_string(),
            value: StatValue::Exact(value.to_string()),
            stderr: None,
            ci95: None,
            samples: None,
            seed: None,
            exact: Some(value),
        }
    }

    /// The estimate as a float, whichever mode produced it.
    pub fn value_f64(&self) -> f64 {
        match &self.value {
            StatValue::Float(x) => *x,
            StatValue::Exact(_) => self
                .exact
                .as_ref()
                .map(rational_to_f64)
                .unwrap_or(f64::NAN),
        }
    }
}

/// Per-tree integer tallies; every estimator below is a ratio of these.
#[derive(Default, Clone, Copy)]
struct Tally {
    count: u64,
    sum: i128,
    sum_sq: i128,
    cond_count: u64,
    cond_sum: i128,
    cond_sum_sq: i128,
}

impl Tally {
    fn add(&mut self, value: i128) {
        self.count += 1;
        self.sum += value;
        self.sum_sq += value * value;
    }

    fn add_conditional(&mut self, selected: bool, value: i128) {
        self.count += 1;
        if selected {
            self.cond_count += 1;
            self.cond_sum += value;
            self.cond_sum_sq += value * value;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.cond_count += other.cond_count;
        self.cond_sum += other.cond_sum;
        self.cond_sum_sq += other.cond_sum_sq;
        self
    }
}

/// Integer observation for one tree: unconditional statistics report
/// `value / denom`, the conditional one reports `value` given `selected`.
fn observe(stat: Statistic, tree: &LabeledTree, root: usize) -> (bool, i128) {
    match stat {
        Statistic::DeepFraction => {
            let profile = tree.boundary_profile().expect("n >= 2");
            (true, profile.deep().len() as i128)
        }
        Statistic::UpsilonPerNode => {
            let profile = tree.boundary_profile().expect("n >= 2");
            (true, profile.upsilon() as i128)
        }
        Statistic::ProbRootDeep => {
            let deep = root_boundary_distance_of(tree, root) >= 3;
            (true, deep as i128)
        }
        Statistic::MeanY => {
            let deep = root_boundary_distance_of(tree, root) >= 3;
            let y = if deep {
                second_generation_of(tree, root) as i128
            } else {
                0
            };
            (true, y)
        }
        Statistic::MeanNGivenDeep => {
            let deep = root_boundary_distance_of(tree, root) >= 3;
            let n2 = second_generation_of(tree, root) as i128;
            (deep, n2)
        }
        Statistic::VanishingClassFraction => (true, in_vanishing_class(tree) as i128),
    }
}

/// Denominator that turns the integer observation into the statistic value.
fn value_denominator(stat: Statistic, n: usize) -> u64 {
    match stat {
        Statistic::DeepFraction | Statistic::UpsilonPerNode => n as u64,
        _ => 1,
    }
}

fn tally_tree(stat: Statistic, tree: &LabeledTree, roots: &[usize], tally: &mut Tally) {
    if stat.is_rooted() {
        for &root in roots {
            let (selected, value) = observe(stat, tree, root);
            if matches!(stat, Statistic::MeanNGivenDeep) {
                tally.add_conditional(selected, value);
            } else {
                tally.add(value);
            }
        }
    } else {
        let (_, value) = observe(stat, tree, 0);
        tally.add(value);
    }
}

fn big(v: i128) -> BigInt {
    BigInt::from(v)
}

/// Computes the point estimate, and for Monte Carlo the standard error and
/// normal 95% interval, from exact integer tallies.
fn tally_report(
    stat: Statistic,
    n: usize,
    tally: &Tally,
    mode_name: &str,
    mc: Option<(u64, u64)>,
) -> Result<StatReport, EstimateError> {
    let denom = value_denominator(stat, n) as i128;
    let (m, sum, sum_sq) = if matches!(stat, Statistic::MeanNGivenDeep) {
        if tally.cond_count == 0 {
            return Err(EstimateError::EmptyCondition);
        }
        (tally.cond_count, tally.cond_sum, tally.cond_sum_sq)
    } else {
        (tally.count, tally.sum, tally.sum_sq)
    };
    let mean = BigRational::new(big(sum), big(m as i128 * denom));
    let mut report = match mc {
        None => StatReport::exact_report(stat.as_str(), n, mode_name, mean),
        Some((samples, seed)) => {
            let mean_f = rational_to_f64(&mean);
            let (stderr, ci) = if m > 1 {
                // variance of value/denom from integer sums, exactly
                let num = (sum_sq as f64 - (sum as f64) * (sum as f64) / m as f64)
                    / ((m - 1) as f64);
                let var = num / (denom as f64 * denom as f64);
                let se = (var / m as f64).sqrt();
                (se, [mean_f - 1.96 * se, mean_f + 1.96 * se])
            } else {
                (f64::NAN, [f64::NAN, f64::NAN])
            };
            StatReport {
                statistic: stat.as_str().to_string(),
                n,
                mode: mode_name.to_string(),
                value: StatValue::Float(mean_f),
                stderr: Some(stderr),
                ci95: Some(ci),
                samples: Some(samples),
                seed: Some(seed),
                exact: None,
            }
        }
    };
    if mc.is_none() {
        report.samples = Some(m);
    }
    Ok(report)
}

/// Exact mean over the full ensemble, or a seeded Monte-Carlo estimate.
///
/// Results are reproducible from `(statistic, n, mode)` alone and do not
/// depend on thread scheduling: all accumulation is exact integer arithmetic
/// over fixed sample blocks.
pub fn estimate(
    stat: Statistic,
    n: usize,
    mode: Mode,
    budget: usize,
) -> Result<StatReport, EstimateError> {
    if n < 2 {
        return Err(EstimateError::TooSmall { n });
    }
    match mode {
        Mode::Exhaustive => {
            check_budget("exhaustive estimation", n, budget)?;
            let roots: Vec<usize> = (1..=n).collect();
            let total = unrooted_count(n);
            let tally = (0..total)
                .into_par_iter()
                .fold(Tally::default, |mut acc, idx| {
                    let tree = tree_from_index(n, idx);
                    tally_tree(stat, &tree, &roots, &mut acc);
                    acc
                })
                .reduce(Tally::default, Tally::merge);
            tally_report(stat, n, &tally, "exhaustive", None)
        }
        Mode::MonteCarlo { samples, seed } => {
            let blocks = samples.div_ceil(SAMPLE_BLOCK);
            let tally = (0..blocks)
                .into_par_iter()
                .fold(Tally::default, |mut acc, block| {
                    let mut rng = sample_block_rng(seed, block);
                    let len = SAMPLE_BLOCK.min(samples - block * SAMPLE_BLOCK);
                    for _ in 0..len {
                        let tree = random_tree(n, &mut rng);
                        let root = if stat.is_rooted() {
                            rng.random_range(1..=n)
                        } else {
                            0
                        };
                        if stat.is_rooted() {
                            let (selected, value) = observe(stat, &tree, root);
                            if matches!(stat, Statistic::MeanNGivenDeep) {
                                acc.add_conditional(selected, value);
                            } else {
                                acc.add(value);
                            }
                        } else {
                            let (_, value) = observe(stat, &tree, 0);
                            acc.add(value);
                        }
                    }
                    acc
                })
                .reduce(Tally::default, Tally::merge);
            tally_report(stat, n, &tally, "montecarlo", Some((samples, seed)))
        }
    }
}

/// Both sides of the rooted/unrooted counting identity, enumerated
/// independently: deep nodes summed over unrooted trees versus rooted trees
/// whose root is deep in the unrooted sense (and the same with the
/// second-generation weights).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BridgeCheck {
    pub n: usize,
    pub deep_sum_unrooted: u64,
    pub deep_root_count_rooted: u64,
    pub upsilon_sum_unrooted: u64,
    pub y_sum_rooted: u64,
}

impl BridgeCheck {
    pub fn holds(&self) -> bool {
        self.deep_sum_unrooted == self.deep_root_count_rooted
            && self.upsilon_sum_unrooted == self.y_sum_rooted
    }
}

pub fn rooted_unrooted_bridge_check(n: usize, budget: usize) -> Result<BridgeCheck, BudgetError> {
    check_budget("bridge check", n, budget)?;
    assert!(n >= 2, "bridge check needs n >= 2");
    let total = unrooted_count(n);
    // Side one: per unrooted tree, read |D| and upsilon off the profile.
    let (deep_sum, upsilon_sum) = (0..total)
        .into_par_iter()
        .fold(
            || (0u64, 0u64),
            |(d, u), idx| {
                let tree = tree_from_index(n, idx);
                let profile = tree.boundary_profile().expect("n >= 2");
                (d + profile.deep().len() as u64, u + profile.upsilon())
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    // Side two: per rooted tree, measure the root with its own BFS.
    let (deep_roots, y_sum) = (0..total)
        .into_par_iter()
        .fold(
            || (0u64, 0u64),
            |(mut d, mut y), idx| {
                let tree = tree_from_index(n, idx);
                for root in 1..=n {
                    if unrooted_root_distance_of(&tree, root) >= 3 {
                        d += 1;
                        y += second_generation_of(&tree, root) as u64;
                    }
                }
                (d, y)
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(BridgeCheck {
        n,
        deep_sum_unrooted: deep_sum,
        deep_root_count_rooted: deep_roots,
        upsilon_sum_unrooted: upsilon_sum,
        y_sum_rooted: y_sum,
    })
}

/// Rooted-tree census used by the series cross-checks: counts of
/// `root_boundary_distance >= k` and `height <= k` for `k = 0..=k_max`,
/// plus the weighted deep-root sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedCensus {
    pub n: usize,
    pub dist_at_least: Vec<u64>,
    pub height_at_most: Vec<u64>,
    pub y_sum: u64,
}

pub fn rooted_census(n: usize, k_max: usize, budget: usize) -> Result<RootedCensus, BudgetError> {
    check_budget("rooted census", n, budget)?;
    let total = unrooted_count(n);
    let zero = || RootedCensus {
        n,
        dist_at_least: vec![0; k_max + 1],
        height_at_most: vec![0; k_max + 1],
        y_sum: 0,
    };
    let census = (0..total)
        .into_par_iter()
        .fold(zero, |mut acc, idx| {
            let tree = tree_from_index(n, idx);
            for root in 1..=n {
                let d = root_boundary_distance_of(&tree, root);
                let h = height_of(&tree, root);
                for k in 0..=k_max {
                    if d >= k {
                        acc.dist_at_least[k] += 1;
                    }
                    if h <= k {
                        acc.height_at_most[k] += 1;
                    }
                }
                if d >= 3 {
                    acc.y_sum += second_generation_of(&tree, root) as u64;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for k in 0..=k_max {
                a.dist_at_least[k] += b.dist_at_least[k];
                a.height_at_most[k] += b.height_at_most[k];
            }
            a.y_sum += b.y_sum;
            a
        });
    Ok(census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{path_tree, star_tree};

    #[test]
    fn cayley_counts_small() {
        for n in 1..=6 {
            let unrooted = enumerate_unrooted(n, 9).unwrap().count() as u64;
            assert_eq!(unrooted, unrooted_count(n), "n = {n}");
            let rooted = enumerate_rooted(n, 9).unwrap().count() as u64;
            assert_eq!(rooted, rooted_count(n), "n = {n}");
        }
        assert_eq!(unrooted_count(3), 3);
        assert_eq!(rooted_count(3), 9);
        assert_eq!(unrooted_count(1), 1);
        assert_eq!(rooted_count(1), 1);
    }

    #[test]
    fn enumeration_budget_guard() {
        assert!(enumerate_unrooted(10, 9).is_err());
        assert!(estimate(Statistic::DeepFraction, 10, Mode::Exhaustive, 9).is_err());
    }

    #[test]
    fn root_distance_examples() {
        let rt = RootedTree::new(path_tree(3), 1).unwrap();
        assert_eq!(rt.root_boundary_distance(), 2);
        let rt = RootedTree::new(LabeledTree::from_edges(1, &[]).unwrap(), 1).unwrap();
        assert_eq!(rt.root_boundary_distance(), 0);
        let rt = RootedTree::new(path_tree(4), 1).unwrap();
        assert_eq!(rt.root_boundary_distance(), 3);
        // unrooted reading differs at a degree-1 root
        assert_eq!(rt.unrooted_root_boundary_distance(), 0);
    }

    #[test]
    fn rooted_census_psi_counts_n3_n4() {
        // 6 rooted trees on 3 nodes have childless distance >= 2,
        // 24 on 4 nodes have distance >= 3 (paths rooted at an end).
        let c3 = rooted_census(3, 3, 9).unwrap();
        assert_eq!(c3.dist_at_least[2], 6);
        assert_eq!(c3.dist_at_least[3], 0);
        let c4 = rooted_census(4, 3, 9).unwrap();
        assert_eq!(c4.dist_at_least[3], 24);
    }

    #[test]
    fn second_generation_examples() {
        let rt = RootedTree::new(path_tree(7), 4).unwrap();
        assert_eq!(rt.second_generation_count(), 2);
        let rt = RootedTree::new(star_tree(4), 1).unwrap();
        assert_eq!(rt.second_generation_count(), 0);
    }

    #[test]
    fn second_generation_equals_degree_sum_n_le_7() {
        for n in 2..=7 {
            for rt in enumerate_rooted(n, 9).unwrap() {
                let formula: usize = rt
                    .tree()
                    .link(rt.root())
                    .iter()
                    .map(|&w| rt.tree().degree(w) - 1)
                    .sum();
                assert_eq!(rt.second_generation_count(), formula);
            }
        }
    }

    #[test]
    fn vanishing_class_fraction_exhaustive() {
        // the class contents by hand: single edge, then stars only
        let expected = [
            (2usize, BigRational::new(BigInt::from(1), BigInt::from(1))),
            (3, BigRational::new(BigInt::from(0), BigInt::from(1))),
            (4, BigRational::new(BigInt::from(4), BigInt::from(16))),
            (5, BigRational::new(BigInt::from(5), BigInt::from(125))),
            (6, BigRational::new(BigInt::from(6), BigInt::from(1296))),
            (7, BigRational::new(BigInt::from(7), BigInt::from(16807))),
        ];
        for (n, want) in expected {
            let report =
                estimate(Statistic::VanishingClassFraction, n, Mode::Exhaustive, 9).unwrap();
            assert_eq!(report.exact.unwrap(), want, "n = {n}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a: Vec<_> = sample_uniform(6, 42, 2000).map(|t| t.edges().to_vec()).collect();
        let b: Vec<_> = sample_uniform(6, 42, 2000).map(|t| t.edges().to_vec()).collect();
        assert_eq!(a, b);
        let c: Vec<_> = sample_uniform(6, 43, 2000).map(|t| t.edges().to_vec()).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_n3_is_uniform() {
        let mut freq = std::collections::HashMap::new();
        let total = 30_000u64;
        for t in sample_uniform(3, 7, total) {
            *freq.entry(t.edges().to_vec()).or_insert(0u64) += 1;
        }
        assert_eq!(freq.len(), 3);
        // 3 sigma around 10000 for a Bernoulli(1/3) count
        let sigma = (total as f64 / 3.0 * (2.0 / 3.0)).sqrt();
        for (_, count) in freq {
            assert!((count as f64 - 10_000.0).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn no_deep_nodes_at_n4() {
        for t in sample_uniform(4, 11, 5000) {
            assert!(t.boundary_profile().unwrap().deep().is_empty());
        }
    }

    #[test]
    fn exhaustive_deep_fraction_n7() {
        // matrix argument: sum |D| over U_7 = 2520, so the mean of |D|/7
        // over the 7^5 trees is 2520 / 7^6
        let report = estimate(Statistic::DeepFraction, 7, Mode::Exhaustive, 9).unwrap();
        let expected = BigRational::new(BigInt::from(2520), BigInt::from(117_649));
        assert_eq!(report.exact.as_ref(), Some(&expected));
    }

    #[test]
    fn bridge_small_cases() {
        let b4 = rooted_unrooted_bridge_check(4, 9).unwrap();
        assert!(b4.holds());
        assert_eq!(b4.deep_sum_unrooted, 0);
        assert_eq!(b4.y_sum_rooted, 0);
        let b7 = rooted_unrooted_bridge_check(7, 9).unwrap();
        assert!(b7.holds());
        assert_eq!(b7.deep_sum_unrooted, 2520);
        assert_eq!(b7.upsilon_sum_unrooted, 5040);
    }

    #[test]
    fn montecarlo_report_shape() {
        let report = estimate(
            Statistic::DeepFraction,
            7,
            Mode::MonteCarlo {
                samples: 20_000,
                seed: 5,
            },
            9,
        )
        .unwrap();
        assert!(report.stderr.is_some());
        let ci = report.ci95.unwrap();
        let exact = 2520.0 / 117_649.0;
        assert!(ci[0] < exact && exact < ci[1], "ci = {ci:?}");
    }

    #[test]
    fn conditional_statistic_empty_at_small_n() {
        let err = estimate(Statistic::MeanNGivenDeep, 3, Mode::Exhaustive, 9).unwrap_err();
        assert_eq!(err, EstimateError::EmptyCondition);
    }

    #[test]
    fn single_node_is_rejected_not_panicking() {
        let err = estimate(Statistic::DeepFraction, 1, Mode::Exhaustive, 9).unwrap_err();
        assert_eq!(err, EstimateError::TooSmall { n: 1 });
        let err = estimate(
            Statistic::MeanY,
            1,
            Mode::MonteCarlo { samples: 10, seed: 0 },
            9,
        )
        .unwrap_err();
        assert_eq!(err, EstimateError::TooSmall { n: 1 });
    }
}
