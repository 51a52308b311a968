//! Exact truncated power series over the rationals: the EGF toolkit behind
//! the labeled-tree statistics.
//!
//! Everything here is coefficient-exact. Floats appear only when a value is
//! finally compared against one of the limiting constants, and the constants
//! themselves are evaluated to arbitrarily many decimal digits with rigorous
//! tail bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::SeriesError;

/// Default cap on truncation orders accepted by the `exact_*` entry points.
pub const SERIES_ORDER_BUDGET: usize = 500;

fn rat_int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

#[cfg(test)]
fn factorial(n: usize) -> BigInt {
    let mut f = BigInt::one();
    for k in 2..=n {
        f *= k as i64;
    }
    f
}

/// Best-effort conversion of an exact rational to `f64`, robust to numerators
/// and denominators far beyond the float range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.numer().is_zero() {
        return 0.0;
    }
    let num = q.numer();
    let den = q.denom();
    let shift = ((den.bits() as i64 - num.bits() as i64) + 64).max(0) as u32;
    let scaled = (num << shift) / den;
    scaled
        .to_f64()
        .map(|x| x * 2f64.powi(-(shift as i32)))
        .unwrap_or(f64::INFINITY)
}

/// A power series truncated at a fixed order, with exact rational
/// coefficients `c_0 .. c_order`.
///
/// Binary operations never silently extend precision: the result order is
/// the minimum of the operand orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    order: usize,
    coeffs: Vec<BigRational>,
}

impl TruncatedSeries {
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty());
        TruncatedSeries {
            order: coeffs.len() - 1,
            coeffs,
        }
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            order,
            coeffs: vec![BigRational::zero(); order + 1],
        }
    }

    pub fn constant(order: usize, value: BigRational) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, BigRational::one())
    }

    /// The monomial `z`.
    pub fn z(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = BigRational::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `z^n`; zero beyond the truncation order.
    pub fn coef(&self, n: usize) -> BigRational {
        self.coeffs.get(n).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    fn min_order(&self, other: &Self) -> usize {
        self.order.min(other.order)
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.min_order(other);
        let coeffs = (0..=order)
            .map(|i| &self.coeffs[i] + &other.coeffs[i])
            .collect();
        TruncatedSeries { order, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.min_order(other);
        let coeffs = (0..=order)
            .map(|i| &self.coeffs[i] - &other.coeffs[i])
            .collect();
        TruncatedSeries { order, coeffs }
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        TruncatedSeries {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: &BigRational) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.min_order(other);
        let mut coeffs = vec![BigRational::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] += a * b;
            }
        }
        TruncatedSeries { order, coeffs }
    }

    /// `self^k` by binary exponentiation, truncated at this series' order.
    pub fn pow(&self, k: usize) -> Self {
        let mut result = Self::one(self.order);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Multiplies by `z^k`, keeping the truncation order fixed.
    pub fn shift_up(&self, k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); self.order + 1];
        if k <= self.order {
            for i in 0..=self.order - k {
                coeffs[i + k] = self.coeffs[i].clone();
            }
        }
        TruncatedSeries {
            order: self.order,
            coeffs,
        }
    }

    pub fn derivative(&self) -> Self {
        if self.order == 0 {
            return Self::zero(0);
        }
        let coeffs = (1..=self.order)
            .map(|i| &self.coeffs[i] * rat_int(i as i64))
            .collect();
        TruncatedSeries {
            order: self.order - 1,
            coeffs,
        }
    }

    /// `exp` of a series with zero constant term, through the recurrence
    /// `(exp a)' = a' * exp a`. A nonzero constant term would make the
    /// result irrational, so it is rejected.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let order = self.order;
        let weighted: Vec<BigRational> = (0..=order)
            .map(|k| &self.coeffs[k] * rat_int(k as i64))
            .collect();
        let mut out = vec![BigRational::zero(); order + 1];
        out[0] = BigRational::one();
        for n in 1..=order {
            let mut acc = BigRational::zero();
            for k in 1..=n {
                if weighted[k].is_zero() || out[n - k].is_zero() {
                    continue;
                }
                acc += &weighted[k] * &out[n - k];
            }
            out[n] = acc / rat_int(n as i64);
        }
        Ok(TruncatedSeries {
            order,
            coeffs: out,
        })
    }

    /// Composition `self(inner)`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let order = self.min_order(inner);
        let mut result = Self::constant(order, self.coef(order));
        for i in (0..order).rev() {
            result = result.mul(inner);
            result.coeffs[0] += &self.coeffs[i];
        }
        Ok(result)
    }
}

/// `exp(z)` truncated at `order`.
pub fn exp_z(order: usize) -> TruncatedSeries {
    TruncatedSeries::z(order).exp().expect("z has zero constant term")
}

/// EGF of rooted labeled trees: coefficient of `z^n` is `n^(n-1) / n!`.
pub fn cayley_t(order: usize) -> TruncatedSeries {
    let mut coeffs = vec![BigRational::zero(); order + 1];
    let mut fact = BigInt::one();
    for n in 1..=order {
        fact *= n as i64;
        coeffs[n] = BigRational::new(BigInt::from(n).pow(n as u32 - 1), fact.clone());
    }
    TruncatedSeries::from_coeffs(coeffs)
}

/// EGF of unrooted labeled trees: coefficient of `z^n` is `n^(n-2) / n!`.
/// No functional equation is assumed for it.
pub fn unrooted_u(order: usize) -> TruncatedSeries {
    let mut coeffs = vec![BigRational::zero(); order + 1];
    let mut fact = BigInt::one();
    for n in 1..=order {
        fact *= n as i64;
        let count = if n <= 2 {
            BigInt::one()
        } else {
            BigInt::from(n).pow(n as u32 - 2)
        };
        coeffs[n] = BigRational::new(count, fact.clone());
    }
    TruncatedSeries::from_coeffs(coeffs)
}

/// Solves `T = z * exp(T)` by iteration; each pass fixes one more
/// coefficient, so the result is exact at the requested order.
pub fn cayley_fixed_point(order: usize) -> TruncatedSeries {
    let mut t = TruncatedSeries::zero(order);
    for _ in 0..=order {
        let next = t.exp().expect("iterate has zero constant term").shift_up(1);
        if next == t {
            break;
        }
        t = next;
    }
    t
}

/// Coefficient extraction through Lagrange inversion: with `h = z * f(h)`
/// and `f(0) != 0`, the coefficient of `z^n` in `g(h(z))` equals the
/// coefficient of `z^(n-1)` in `g'(z) * f(z)^n / n`.
///
/// Panics if the operands are truncated below order `n - 1`.
pub fn lagrange_coef(
    g: &TruncatedSeries,
    f: &TruncatedSeries,
    n: usize,
) -> Result<BigRational, SeriesError> {
    if f.coef(0).is_zero() {
        return Err(SeriesError::BadF);
    }
    assert!(n >= 1, "Lagrange inversion extracts coefficients for n >= 1");
    assert!(
        g.order() >= n && f.order() >= n.saturating_sub(1),
        "operands truncated below the requested coefficient"
    );
    let deriv = g.derivative();
    let fpow = f.pow(n);
    let coef = deriv.mul(&fpow).coef(n - 1);
    Ok(coef / rat_int(n as i64))
}

/// EGF of rooted labeled trees whose root is at distance >= k from the
/// nearest childless node: `psi_0 = T`, `psi_k = z * (exp(psi_{k-1}) - 1)`.
///
/// The truncation stabilizes once `k` exceeds the order (the class is
/// empty there and the zero series is a fixed point), so the recurrence
/// runs at most `order + 2` steps.
pub fn psi(k: usize, order: usize) -> TruncatedSeries {
    let mut cur = cayley_t(order);
    for _ in 0..k.min(order + 2) {
        let e = cur.exp().expect("psi iterates have zero constant term");
        cur = e.add_scalar(&-BigRational::one()).shift_up(1);
    }
    cur
}

/// EGF of rooted labeled trees of height <= k:
/// `phi_0 = z`, `phi_k = z * exp(phi_{k-1})`.
///
/// Height <= k is no constraint on trees with at most `k + 1` nodes, so
/// the truncation stabilizes after `order` steps.
pub fn phi(k: usize, order: usize) -> TruncatedSeries {
    let mut cur = TruncatedSeries::z(order);
    for _ in 0..k.min(order.max(1)) {
        cur = cur.exp().expect("phi iterates have zero constant term").shift_up(1);
    }
    cur
}

/// Closed form `T e^{-z} - z` for `psi(2)`.
pub fn psi2_closed(order: usize) -> TruncatedSeries {
    let t = cayley_t(order);
    let em = TruncatedSeries::z(order).neg().exp().expect("-z is pure");
    t.mul(&em).sub(&TruncatedSeries::z(order))
}

/// Closed form `z e^{T e^{-z}} e^{-z} - z` for `psi(3)`.
pub fn psi3_closed(order: usize) -> TruncatedSeries {
    let t = cayley_t(order);
    let em = TruncatedSeries::z(order).neg().exp().expect("-z is pure");
    let inner = t.mul(&em);
    let e_inner = inner.exp().expect("T e^{-z} has zero constant term");
    e_inner
        .mul(&em)
        .shift_up(1)
        .sub(&TruncatedSeries::z(order))
}

/// The second-generation-weighted EGF over rooted trees with a deep root
/// (childless reading): `W = z^2 (T - z) e^{T-z} e^{z(e^{T-z} - 1)}`.
///
/// Derived by marking one subtree in the set decomposition of the deep-root
/// class; validated against exhaustive enumeration before use.
pub fn weighted_deep_egf(order: usize) -> TruncatedSeries {
    let t = cayley_t(order);
    let tmz = t.sub(&TruncatedSeries::z(order));
    let e_tmz = tmz.exp().expect("T - z has zero constant term");
    let psi2 = e_tmz.add_scalar(&-BigRational::one()).shift_up(1);
    let e_psi2 = psi2.exp().expect("psi_2 has zero constant term");
    tmz.mul(&e_tmz).mul(&e_psi2).shift_up(2)
}

/// Weighted EGF of the leaf-rooted part of the deep class:
/// `z^2 (T - z) e^{T-z}` (the root is a degree-1 node).
pub fn weighted_deep_leaf_egf(order: usize) -> TruncatedSeries {
    let t = cayley_t(order);
    let tmz = t.sub(&TruncatedSeries::z(order));
    let e_tmz = tmz.exp().expect("T - z has zero constant term");
    tmz.mul(&e_tmz).shift_up(2)
}

fn check_series_budget(n: usize, budget: usize) -> Result<(), SeriesError> {
    if n > budget {
        Err(SeriesError::TooLarge { n, budget })
    } else {
        Ok(())
    }
}

/// EGFs of combinatorial classes in integer count form: entry `n` holds
/// `n! * coef_n`, always an integer for the series handled here. Products
/// become binomial convolutions and `exp` a pure-integer recurrence, which
/// avoids the big-gcd cost of rational coefficients at high orders.
#[derive(Debug, Clone, PartialEq, Eq)]
struct CountSeries {
    counts: Vec<BigInt>,
}

struct Binomials {
    rows: Vec<Vec<BigInt>>,
}

impl Binomials {
    fn new(order: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut row = vec![BigInt::one(); n + 1];
            for k in 1..n {
                row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    fn at(&self, n: usize, k: usize) -> &BigInt {
        &self.rows[n][k]
    }
}

impl CountSeries {
    fn zero(order: usize) -> Self {
        CountSeries {
            counts: vec![BigInt::zero(); order + 1],
        }
    }

    fn order(&self) -> usize {
        self.counts.len() - 1
    }

    /// Rooted labeled trees: count `n^(n-1)`.
    fn cayley(order: usize) -> Self {
        let mut s = Self::zero(order);
        for n in 1..=order {
            s.counts[n] = BigInt::from(n).pow(n as u32 - 1);
        }
        s
    }

    fn sub(&self, other: &Self) -> Self {
        CountSeries {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Binomial convolution `c_n = sum_k C(n,k) a_k b_{n-k}`.
    fn mul(&self, other: &Self, binom: &Binomials) -> Self {
        let order = self.order().min(other.order());
        let mut out = Self::zero(order);
        for n in 0..=order {
            let mut acc = BigInt::zero();
            for k in 0..=n {
                if self.counts[k].is_zero() || other.counts[n - k].is_zero() {
                    continue;
                }
                acc += binom.at(n, k) * &self.counts[k] * &other.counts[n - k];
            }
            out.counts[n] = acc;
        }
        out
    }

    /// `exp` of a series with zero constant term:
    /// `b_n = sum_{k=1..n} C(n-1, k-1) a_k b_{n-k}`, `b_0 = 1`.
    fn exp(&self, binom: &Binomials) -> Self {
        assert!(self.counts[0].is_zero(), "count-form exp needs a_0 = 0");
        let order = self.order();
        let mut out = Self::zero(order);
        out.counts[0] = BigInt::one();
        for n in 1..=order {
            let mut acc = BigInt::zero();
            for k in 1..=n {
                if self.counts[k].is_zero() || out.counts[n - k].is_zero() {
                    continue;
                }
                acc += binom.at(n - 1, k - 1) * &self.counts[k] * &out.counts[n - k];
            }
            out.counts[n] = acc;
        }
        out
    }

    /// Multiplication by `z`: `count_n -> n * count_{n-1}`.
    fn shift_up(&self) -> Self {
        let order = self.order();
        let mut out = Self::zero(order);
        for n in 1..=order {
            out.counts[n] = &self.counts[n - 1] * n as i64;
        }
        out
    }

    /// `z * (exp(self) - 1)`, the step of the boundary-distance recurrence.
    fn psi_step(&self, binom: &Binomials) -> Self {
        let mut e = self.exp(binom);
        e.counts[0] -= 1;
        e.shift_up()
    }

    /// The rational EGF coefficient `count_n / n!`.
    #[cfg(test)]
    fn coef(&self, n: usize) -> BigRational {
        BigRational::new(self.counts[n].clone(), factorial(n))
    }
}

/// The deep-root generating functions at a fixed order, with per-`n`
/// extractors. Building this once and querying many `n` values amortizes
/// the series work; everything is exact integer arithmetic in count form.
pub struct DeepSeries {
    order: usize,
    psi3: CountSeries,
    weighted: CountSeries,
    psi3_unrooted: CountSeries,
    weighted_unrooted: CountSeries,
}

impl DeepSeries {
    pub fn new(order: usize) -> Result<Self, SeriesError> {
        check_series_budget(order, SERIES_ORDER_BUDGET)?;
        let binom = Binomials::new(order);
        let t = CountSeries::cayley(order);
        let mut tmz = t;
        if order >= 1 {
            tmz.counts[1] -= 1;
        }
        let e_tmz = tmz.exp(&binom);
        let psi2 = {
            let mut e = e_tmz.clone();
            e.counts[0] -= 1;
            e.shift_up()
        };
        let psi3 = psi2.psi_step(&binom);
        let e_psi2 = psi2.exp(&binom);
        let w_leaf = tmz.mul(&e_tmz, &binom).shift_up().shift_up();
        let weighted = tmz
            .mul(&e_tmz, &binom)
            .mul(&e_psi2, &binom)
            .shift_up()
            .shift_up();
        // A rooted tree whose root is deep as a node of the unrooted tree is
        // a deep-root tree whose root is not a degree-1 node; the degree-1
        // part is z * psi_2 (plain) and z^2 (T-z) e^{T-z} (weighted).
        let psi3_unrooted = psi3.sub(&psi2.shift_up());
        let weighted_unrooted = weighted.sub(&w_leaf);
        Ok(DeepSeries {
            order,
            psi3,
            weighted,
            psi3_unrooted,
            weighted_unrooted,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn check_n(&self, n: usize) -> Result<(), SeriesError> {
        if n == 0 || n > self.order {
            return Err(SeriesError::TooLarge {
                n,
                budget: self.order,
            });
        }
        Ok(())
    }

    /// Count over the `n^(n-1)` rooted trees, as an exact probability/mean.
    fn ratio(&self, series: &CountSeries, n: usize) -> BigRational {
        BigRational::new(series.counts[n].clone(), BigInt::from(n).pow(n as u32 - 1))
    }

    /// `n! * coef_n` of the deep-root EGF (a tree count).
    pub fn deep_root_count(&self, n: usize) -> Result<BigInt, SeriesError> {
        self.check_n(n)?;
        Ok(self.psi3.counts[n].clone())
    }

    /// Probability that a uniform rooted labeled tree on `n` nodes has
    /// root-to-childless distance >= 3.
    pub fn prob_root_deep(&self, n: usize) -> Result<BigRational, SeriesError> {
        self.check_n(n)?;
        Ok(self.ratio(&self.psi3, n))
    }

    /// Mean of `Y = 1{deep root} * (second generation size)`.
    pub fn mean_y(&self, n: usize) -> Result<BigRational, SeriesError> {
        self.check_n(n)?;
        Ok(self.ratio(&self.weighted, n))
    }

    /// Conditional mean of the second generation size given a deep root.
    pub fn mean_n_given_deep(&self, n: usize) -> Result<BigRational, SeriesError> {
        let p = self.prob_root_deep(n)?;
        if p.is_zero() {
            return Err(SeriesError::DivByZero(
                "no rooted tree of this size has a deep root",
            ));
        }
        Ok(self.mean_y(n)? / p)
    }

    /// Probability that the root of a uniform rooted tree is deep as a node
    /// of the unrooted tree; equals the expected deep-node fraction over
    /// unrooted trees, exactly, by the rooted/unrooted counting identity.
    pub fn prob_deep_node(&self, n: usize) -> Result<BigRational, SeriesError> {
        self.check_n(n)?;
        Ok(self.ratio(&self.psi3_unrooted, n))
    }

    /// Expected `upsilon(T) / n` over unrooted trees on `n` nodes, exactly.
    pub fn mean_upsilon_per_node(&self, n: usize) -> Result<BigRational, SeriesError> {
        self.check_n(n)?;
        Ok(self.ratio(&self.weighted_unrooted, n))
    }
}

pub fn exact_prob_root_deep(n: usize) -> Result<BigRational, SeriesError> {
    check_series_budget(n, SERIES_ORDER_BUDGET)?;
    DeepSeries::new(n)?.prob_root_deep(n)
}

pub fn exact_mean_y(n: usize) -> Result<BigRational, SeriesError> {
    check_series_budget(n, SERIES_ORDER_BUDGET)?;
    DeepSeries::new(n)?.mean_y(n)
}

pub fn exact_mean_n_given_deep(n: usize) -> Result<BigRational, SeriesError> {
    check_series_budget(n, SERIES_ORDER_BUDGET)?;
    DeepSeries::new(n)?.mean_n_given_deep(n)
}

pub fn exact_prob_deep_node(n: usize) -> Result<BigRational, SeriesError> {
    check_series_budget(n, SERIES_ORDER_BUDGET)?;
    DeepSeries::new(n)?.prob_deep_node(n)
}

pub fn exact_mean_upsilon_per_node(n: usize) -> Result<BigRational, SeriesError> {
    check_series_budget(n, SERIES_ORDER_BUDGET)?;
    DeepSeries::new(n)?.mean_upsilon_per_node(n)
}

/// Stirling numbers of the second kind, `S(n, k) = k S(n-1, k) + S(n-1, k-1)`.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    max_n: usize,
    max_k: usize,
    values: Vec<BigInt>,
}

impl StirlingTable {
    pub fn new(max_n: usize, max_k: usize) -> Self {
        let width = max_k + 1;
        let mut values = vec![BigInt::zero(); (max_n + 1) * width];
        values[0] = BigInt::one(); // S(0, 0) = 1
        for n in 1..=max_n {
            for k in 1..=max_k.min(n) {
                let up = values[(n - 1) * width + k].clone();
                let diag = values[(n - 1) * width + k - 1].clone();
                values[n * width + k] = up * k as i64 + diag;
            }
        }
        StirlingTable {
            max_n,
            max_k,
            values,
        }
    }

    pub fn get(&self, n: usize, k: usize) -> &BigInt {
        assert!(n <= self.max_n && k <= self.max_k);
        &self.values[n * (self.max_k + 1) + k]
    }
}

/// Bivariate series truncated at `order` in both variables; coefficient
/// `[i][j]` multiplies `x^i y^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BivariateSeries {
    order: usize,
    coeffs: Vec<Vec<BigRational>>,
}

impl BivariateSeries {
    pub fn zero(order: usize) -> Self {
        BivariateSeries {
            order,
            coeffs: vec![vec![BigRational::zero(); order + 1]; order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coef(&self, i: usize, j: usize) -> BigRational {
        self.coeffs
            .get(i)
            .and_then(|row| row.get(j))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigRational) {
        self.coeffs[i][j] = value;
    }

    /// Embeds a univariate series in `x`.
    pub fn from_x_series(s: &TruncatedSeries, order: usize) -> Self {
        let mut out = Self::zero(order);
        for i in 0..=order.min(s.order()) {
            out.coeffs[i][0] = s.coef(i);
        }
        out
    }

    /// The monomial `y`.
    pub fn y(order: usize) -> Self {
        let mut out = Self::zero(order);
        if order >= 1 {
            out.coeffs[0][1] = BigRational::one();
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut out = Self::zero(order);
        for i in 0..=order {
            for j in 0..=order {
                out.coeffs[i][j] = self.coef(i, j) + other.coef(i, j);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut out = Self::zero(order);
        for i1 in 0..=order {
            for j1 in 0..=order {
                let a = &self.coeffs[i1][j1];
                if a.is_zero() {
                    continue;
                }
                for i2 in 0..=order - i1 {
                    for j2 in 0..=order - j1 {
                        let b = &other.coeffs[i2][j2];
                        if b.is_zero() {
                            continue;
                        }
                        out.coeffs[i1 + i2][j1 + j2] += a * b;
                    }
                }
            }
        }
        out
    }

    /// `exp` in the `x` direction; the argument must vanish at `x = 0`.
    pub fn exp_x(&self) -> Result<Self, SeriesError> {
        if self.coeffs[0].iter().any(|c| !c.is_zero()) {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let order = self.order;
        let mut out = Self::zero(order);
        out.coeffs[0][0] = BigRational::one();
        for n in 1..=order {
            // n * b_n = sum_{k=1..n} k * a_k * b_{n-k}, coefficients are y-polynomials
            let mut acc = vec![BigRational::zero(); order + 1];
            for k in 1..=n {
                let a = &self.coeffs[k];
                let b = &out.coeffs[n - k];
                for (ja, av) in a.iter().enumerate() {
                    if av.is_zero() {
                        continue;
                    }
                    for (jb, bv) in b.iter().enumerate().take(order + 1 - ja) {
                        if bv.is_zero() {
                            continue;
                        }
                        acc[ja + jb] += av * bv * rat_int(k as i64);
                    }
                }
            }
            let inv_n = rat_int(n as i64);
            for c in &mut acc {
                if !c.is_zero() {
                    *c = &*c / &inv_n;
                }
            }
            out.coeffs[n] = acc;
        }
        Ok(out)
    }
}

/// Outcome of one named identity check.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub ok: bool,
}

/// Verifies the five Stirling-number identities as exact truncated-series
/// equalities at the given order:
/// the single-variable EGF per `k`, the composition (reciprocal-factorial)
/// sum, the bivariate double sum, and its two derivative variants.
pub fn stirling_identity_checks(order: usize) -> Vec<IdentityCheck> {
    let table = StirlingTable::new(order + 1, order + 1);
    let mut results = Vec::new();

    // sum_n S(n,k)/n! x^n = (e^x - 1)^k / k!   for each k
    let e_minus_one = exp_z(order).add_scalar(&-BigRational::one());
    let mut power = TruncatedSeries::one(order);
    let mut kfact = BigInt::one();
    let mut ok = true;
    let mut fact = vec![BigInt::one(); order + 2];
    for n in 1..=order + 1 {
        fact[n] = &fact[n - 1] * n as i64;
    }
    for k in 1..=order {
        power = power.mul(&e_minus_one);
        kfact *= k as i64;
        for n in 0..=order {
            let lhs = BigRational::new(table.get(n, k).clone(), fact[n].clone());
            let rhs = power.coef(n) / BigRational::from_integer(kfact.clone());
            if lhs != rhs {
                ok = false;
            }
        }
    }
    results.push(IdentityCheck {
        name: "egf-per-k",
        ok,
    });

    // S(n,k)/n! = (1/k!) sum over compositions q_1 + ... + q_k = n, q_i >= 1
    // of 1 / (q_1! ... q_k!), summed by the composition recursion itself.
    let mut comp = vec![vec![BigRational::zero(); order + 1]; order + 1];
    comp[0][0] = BigRational::one();
    for k in 1..=order {
        for n in 1..=order {
            let mut acc = BigRational::zero();
            for q in 1..=n {
                if comp[k - 1][n - q].is_zero() {
                    continue;
                }
                acc += &comp[k - 1][n - q] / BigRational::from_integer(fact[q].clone());
            }
            comp[k][n] = acc;
        }
    }
    let mut ok = true;
    let mut kfact = BigInt::one();
    for k in 1..=order {
        kfact *= k as i64;
        for n in 1..=order {
            let lhs = BigRational::new(table.get(n, k).clone(), fact[n].clone());
            let rhs = &comp[k][n] / BigRational::from_integer(kfact.clone());
            if lhs != rhs {
                ok = false;
            }
        }
    }
    results.push(IdentityCheck {
        name: "composition-sum",
        ok,
    });

    // sum S(n,k) x^n/n! y^k = e^{y(e^x - 1)}
    let y = BivariateSeries::y(order);
    let ex = BivariateSeries::from_x_series(&exp_z(order), order);
    let mut ex_minus_one = ex.clone();
    ex_minus_one.set(0, 0, BigRational::zero());
    let arg = y.mul(&ex_minus_one);
    let rhs_double = arg.exp_x().expect("y(e^x - 1) vanishes at x = 0");
    let mut lhs_double = BivariateSeries::zero(order);
    for n in 0..=order {
        for k in 0..=order.min(n) {
            lhs_double.set(n, k, BigRational::new(table.get(n, k).clone(), fact[n].clone()));
        }
    }
    results.push(IdentityCheck {
        name: "bivariate-double-sum",
        ok: lhs_double == rhs_double,
    });

    // x-derivative: sum_{n>=1} S(n,k) x^{n-1}/(n-1)! y^k = y e^x e^{y(e^x-1)}
    let rhs_dev1 = y.mul(&ex).mul(&rhs_double);
    let mut lhs_dev1 = BivariateSeries::zero(order);
    for n in 1..=order + 1 {
        for k in 0..=order.min(n) {
            if n - 1 <= order {
                lhs_dev1.set(
                    n - 1,
                    k,
                    BigRational::new(table.get(n, k).clone(), fact[n - 1].clone()),
                );
            }
        }
    }
    results.push(IdentityCheck {
        name: "first-derivative",
        ok: lhs_dev1 == rhs_dev1,
    });

    // multiply by x and differentiate again:
    // sum n S(n,k) x^{n-1}/(n-1)! y^k = y e^x e^{y(e^x-1)} (1 + x + x y e^x)
    let x = BivariateSeries::from_x_series(&TruncatedSeries::z(order), order);
    let mut one_biv = BivariateSeries::zero(order);
    one_biv.set(0, 0, BigRational::one());
    let tail = one_biv.add(&x).add(&x.mul(&y).mul(&ex));
    let rhs_dev2 = rhs_dev1.mul(&tail);
    let mut lhs_dev2 = BivariateSeries::zero(order);
    for n in 1..=order + 1 {
        for k in 0..=order.min(n) {
            if n - 1 <= order {
                lhs_dev2.set(
                    n - 1,
                    k,
                    BigRational::new(table.get(n, k) * n as i64, fact[n - 1].clone()),
                );
            }
        }
    }
    results.push(IdentityCheck {
        name: "second-derivative",
        ok: lhs_dev2 == rhs_dev2,
    });

    results
}

pub fn stirling_identities_check(order: usize) -> bool {
    stirling_identity_checks(order).iter().all(|c| c.ok)
}

// ---------------------------------------------------------------------------
// limiting constants

/// `exp` of an exact rational, correct to within `10^-digits`.
fn exp_rational(x: &BigRational, digits: usize) -> BigRational {
    let eps = BigRational::new(BigInt::one(), BigInt::from(10).pow(digits as u32 + 2));
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let mut k: i64 = 1;
    loop {
        term = &term * x / rat_int(k);
        sum += &term;
        // once |x| / (k+1) <= 1/2 the tail is dominated by a geometric
        // series with ratio 1/2, so |tail| <= |term|
        if term.abs() < eps && x.abs() * rat_int(2) < rat_int(k + 1) {
            break;
        }
        k += 1;
        assert!(k < 10_000, "exp series failed to converge");
    }
    round_rational(&sum, digits + 2)
}

/// Rounds to `digits` decimal places, keeping numerators small between steps.
fn round_rational(x: &BigRational, digits: usize) -> BigRational {
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = x * BigRational::from_integer(scale.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded = (scaled + half).floor();
    rounded / BigRational::from_integer(scale)
}

/// Renders `digits` decimal places (round half up), e.g. `0.3522...`.
pub fn decimal_string(x: &BigRational, digits: usize) -> String {
    let neg = x.is_negative();
    let mag = x.abs();
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = (&mag * BigRational::from_integer(scale.clone())
        + BigRational::new(BigInt::one(), BigInt::from(2)))
    .floor()
    .to_integer();
    let int_part = &scaled / &scale;
    let frac_part = &scaled % &scale;
    let frac = format!("{:0width$}", frac_part, width = digits);
    format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac)
}

/// A named limiting constant carried as an exact rational approximation with
/// a stated number of correct decimal places.
#[derive(Debug, Clone)]
pub struct Constant {
    pub name: &'static str,
    pub value: BigRational,
    pub decimal: String,
    pub digits: usize,
}

impl Constant {
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }
}

/// The three limits:
/// `exp_minus_inv_e = e^{-1/e}` (distance >= 2),
/// `c3 = (1/e) e^{-1/e} e^{(e^{1-1/e}-1)/e}` (distance >= 3), and
/// `d3 = 2 - 1/e + (1/e)(1 - 1/e) e^{1-1/e}` (conditional second-generation
/// mean).
#[derive(Debug, Clone)]
pub struct Constants {
    pub c3: Constant,
    pub d3: Constant,
    pub exp_minus_inv_e: Constant,
}

/// Evaluates the constants to `digits` decimal places (>= 50 by default
/// elsewhere). Intermediate precision carries a 15-digit guard band, far
/// beyond the perturbation any of these compositions can introduce.
pub fn constants_with_digits(digits: usize) -> Constants {
    let work = digits + 15;
    let e_inv = exp_rational(&rat_int(-1), work);
    let a = exp_rational(&(-&e_inv), work); // e^{-1/e}
    let b = exp_rational(&(rat_int(1) - &e_inv), work); // e^{1 - 1/e}
    let c3 = &e_inv * &a * exp_rational(&((&b - rat_int(1)) * &e_inv), work);
    let d3 = rat_int(2) - &e_inv + &e_inv * (rat_int(1) - &e_inv) * &b;
    let build = |name: &'static str, value: BigRational| Constant {
        decimal: decimal_string(&value, digits),
        name,
        value,
        digits,
    };
    Constants {
        c3: build("c3", c3),
        d3: build("d3", d3),
        exp_minus_inv_e: build("exp_minus_inv_e", a),
    }
}

/// The constants at the default 60 decimal places.
pub fn constants() -> Constants {
    constants_with_digits(60)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exp_of_z_first_terms() {
        let e = exp_z(5);
        let expected = [r(1, 1), r(1, 1), r(1, 2), r(1, 6), r(1, 24), r(1, 120)];
        for (n, want) in expected.iter().enumerate() {
            assert_eq!(&e.coef(n), want);
        }
    }

    #[test]
    fn exp_rejects_constant_term() {
        let s = TruncatedSeries::one(4);
        assert_eq!(s.exp().unwrap_err(), SeriesError::NonzeroConstantTerm);
    }

    #[test]
    fn compose_at_zero_gives_constant_term() {
        let g = cayley_t(6).add_scalar(&r(7, 2));
        let zero = TruncatedSeries::zero(6);
        let composed = g.compose(&zero).unwrap();
        assert_eq!(composed.coef(0), r(7, 2));
        for n in 1..=6 {
            assert!(composed.coef(n).is_zero());
        }
    }

    #[test]
    fn compose_rejects_nonzero_inner() {
        let g = TruncatedSeries::z(4);
        let inner = TruncatedSeries::one(4);
        assert_eq!(
            g.compose(&inner).unwrap_err(),
            SeriesError::NonzeroConstantTerm
        );
    }

    #[test]
    fn compose_exp_with_t_matches_cayley_identity() {
        // T = z e^T, so exp(T) composed under z* should rebuild T
        let t = cayley_t(20);
        let rebuilt = t.exp().unwrap().shift_up(1);
        assert_eq!(rebuilt, t);
        // and e^z composed with T equals T/z shifted: check via compose
        let et = exp_z(20).compose(&t).unwrap();
        assert_eq!(et.shift_up(1), t);
    }

    #[test]
    fn cayley_coefficients() {
        let t = cayley_t(4);
        assert_eq!(t.coef(1), r(1, 1));
        assert_eq!(t.coef(2), r(1, 1));
        assert_eq!(t.coef(3), r(3, 2));
        assert_eq!(t.coef(4), r(8, 3));
    }

    #[test]
    fn unrooted_coefficients() {
        // n^(n-2)/n!: no functional equation is assumed for this one
        let u = unrooted_u(5);
        assert_eq!(u.coef(1), r(1, 1));
        assert_eq!(u.coef(2), r(1, 2));
        assert_eq!(u.coef(3), r(1, 2));
        assert_eq!(u.coef(4), r(2, 3));
        assert_eq!(u.coef(5), r(25, 24));
    }

    #[test]
    fn fixed_point_matches_closed_form_order_20() {
        assert_eq!(cayley_fixed_point(20), cayley_t(20));
    }

    #[test]
    fn square_of_t_coefficient_four() {
        let t = cayley_t(4);
        assert_eq!(t.mul(&t).coef(4), r(4, 1));
    }

    #[test]
    fn lagrange_recovers_cayley() {
        let g = TruncatedSeries::z(31);
        let f = exp_z(31);
        for n in 1..=30usize {
            let got = lagrange_coef(&g, &f, n).unwrap();
            let want = BigRational::new(BigInt::from(n).pow(n as u32 - 1), factorial(n));
            assert_eq!(got, want, "n = {n}");
        }
    }

    #[test]
    fn lagrange_power_corollary_small() {
        // coef_n[T^k] = (k/n) n^{n-k} / (n-k)!
        let f = exp_z(12);
        for k in 1..=6usize {
            let g = TruncatedSeries::z(12).pow(k);
            for n in k..=12usize {
                let got = lagrange_coef(&g, &f, n).unwrap();
                let want = BigRational::new(
                    BigInt::from(k) * BigInt::from(n).pow((n - k) as u32),
                    BigInt::from(n as i64) * factorial(n - k),
                );
                assert_eq!(got, want, "n = {n}, k = {k}");
            }
        }
        // n = 4, k = 2 agrees with direct multiplication
        let direct = cayley_t(4).pow(2).coef(4);
        let via_lagrange = lagrange_coef(&TruncatedSeries::z(4).pow(2), &exp_z(4), 4).unwrap();
        assert_eq!(direct, via_lagrange);
    }

    #[test]
    fn lagrange_rejects_vanishing_f() {
        let g = TruncatedSeries::z(5);
        let f = TruncatedSeries::z(5);
        assert_eq!(lagrange_coef(&g, &f, 3).unwrap_err(), SeriesError::BadF);
    }

    #[test]
    fn psi_one_is_t_minus_z() {
        let order = 30;
        assert_eq!(
            psi(1, order),
            cayley_t(order).sub(&TruncatedSeries::z(order))
        );
    }

    #[test]
    fn psi_closed_forms_order_30() {
        assert_eq!(psi(2, 30), psi2_closed(30));
        assert_eq!(psi(3, 30), psi3_closed(30));
    }

    #[test]
    fn psi_phi_degenerate_orders() {
        // beyond-order distance classes are empty and the recurrences
        // stabilize, whatever k is
        assert_eq!(psi(1, 0), TruncatedSeries::zero(0));
        assert_eq!(psi(1_000_000, 5), TruncatedSeries::zero(5));
        assert_eq!(phi(1_000_000, 5), cayley_t(5));
        assert_eq!(TruncatedSeries::z(0).shift_up(1), TruncatedSeries::zero(0));
    }

    #[test]
    fn psi_counts_small() {
        let p2 = psi(2, 4);
        assert_eq!(p2.coef(3) * r(6, 1), r(6, 1)); // 3! * coef_3 = 6
        let p3 = psi(3, 4);
        assert_eq!(p3.coef(4) * r(24, 1), r(24, 1) * r(1, 1)); // 4! * coef_4 = 24
        assert!(p3.coef(3).is_zero());
    }

    #[test]
    fn phi_one_counts_stars() {
        let p1 = phi(1, 7);
        for n in 2..=7usize {
            let count = p1.coef(n) * BigRational::from_integer(factorial(n));
            assert_eq!(count, r(n as i64, 1), "n = {n}");
        }
    }

    #[test]
    fn weighted_egf_small_counts() {
        let w = weighted_deep_egf(6);
        assert_eq!(w.coef(4) * BigRational::from_integer(factorial(4)), r(24, 1));
        assert_eq!(w.coef(5) * BigRational::from_integer(factorial(5)), r(180, 1));
        assert_eq!(w.coef(6) * BigRational::from_integer(factorial(6)), r(2640, 1));
    }

    #[test]
    fn exact_prob_root_deep_small() {
        assert!(exact_prob_root_deep(3).unwrap().is_zero());
        // 24 of the 4^3 = 64 rooted trees on 4 nodes have a deep root
        assert_eq!(exact_prob_root_deep(4).unwrap(), r(24, 64));
    }

    #[test]
    fn exact_means_small() {
        assert_eq!(exact_mean_y(4).unwrap(), r(24, 64));
        // conditional mean at n = 4: 24 weighted / 24 trees = 1
        assert_eq!(exact_mean_n_given_deep(4).unwrap(), r(1, 1));
        assert!(matches!(
            exact_mean_n_given_deep(3),
            Err(SeriesError::DivByZero(_))
        ));
    }

    #[test]
    fn unrooted_variants_small() {
        assert!(exact_prob_deep_node(6).unwrap().is_zero());
        assert_eq!(exact_prob_deep_node(7).unwrap(), r(2520, 117_649));
        assert_eq!(exact_mean_upsilon_per_node(7).unwrap(), r(5040, 117_649));
    }

    #[test]
    fn count_form_matches_rational_route_order_40() {
        // the integer count-form pipeline must agree with the rational
        // recurrences coefficient by coefficient
        let order = 40;
        let deep = DeepSeries::new(order).unwrap();
        let psi3_rational = psi(3, order);
        let w_rational = weighted_deep_egf(order);
        for n in 0..=order {
            assert_eq!(deep.psi3.coef(n), psi3_rational.coef(n), "psi3 at {n}");
            assert_eq!(deep.weighted.coef(n), w_rational.coef(n), "W at {n}");
        }
        let psi2 = psi(2, order);
        let unrooted = psi(3, order).sub(&psi2.shift_up(1));
        for n in 0..=order {
            assert_eq!(deep.psi3_unrooted.coef(n), unrooted.coef(n), "unrooted {n}");
        }
    }

    #[test]
    fn series_budget_guard() {
        assert!(matches!(
            exact_prob_root_deep(SERIES_ORDER_BUDGET + 1),
            Err(SeriesError::TooLarge { .. })
        ));
    }

    #[test]
    fn stirling_table_values() {
        let table = StirlingTable::new(6, 6);
        assert_eq!(table.get(4, 2), &BigInt::from(7));
        assert_eq!(table.get(5, 3), &BigInt::from(25));
        assert_eq!(table.get(6, 1), &BigInt::one());
    }

    #[test]
    fn stirling_identities_order_12() {
        for check in stirling_identity_checks(12) {
            assert!(check.ok, "identity {} failed", check.name);
        }
    }

    #[test]
    fn composition_sum_direct_n5_k3() {
        // direct sum over (q1, q2, q3), q_i >= 1, q1+q2+q3 = 5
        let mut acc = BigRational::zero();
        for q1 in 1..=3i64 {
            for q2 in 1..=3i64 {
                let q3 = 5 - q1 - q2;
                if q3 >= 1 {
                    let denom = factorial(q1 as usize) * factorial(q2 as usize)
                        * factorial(q3 as usize);
                    acc += BigRational::new(BigInt::one(), denom);
                }
            }
        }
        let lhs = BigRational::new(StirlingTable::new(5, 3).get(5, 3).clone(), factorial(5));
        assert_eq!(lhs, acc / BigRational::from_integer(factorial(3)));
    }

    #[test]
    fn constants_match_quoted_decimals() {
        let c = constants_with_digits(60);
        assert!(c.c3.decimal.starts_with("0.35219923"));
        assert!(c.d3.decimal.starts_with("2.06967480"));
        assert!(c.exp_minus_inv_e.decimal.starts_with("0.69220062"));
        assert!((c.c3.to_f64() - 0.3522).abs() < 0.5e-4);
        assert!((c.d3.to_f64() - 2.070).abs() < 0.5e-3);
        assert!((c.exp_minus_inv_e.to_f64() - 0.6922).abs() < 0.5e-4);
    }

    #[test]
    fn constants_stable_across_precision() {
        let lo = constants_with_digits(55);
        let hi = constants_with_digits(90);
        assert_eq!(&lo.c3.decimal[..52], &hi.c3.decimal[..52]);
        assert_eq!(&lo.d3.decimal[..52], &hi.d3.decimal[..52]);
        assert_eq!(&lo.exp_minus_inv_e.decimal[..52], &hi.exp_minus_inv_e.decimal[..52]);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&r(1, 4), 3), "0.250");
        assert_eq!(decimal_string(&r(-7, 2), 2), "-3.50");
        assert_eq!(decimal_string(&r(2, 3), 4), "0.6667");
    }
}
