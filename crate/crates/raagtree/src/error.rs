use thiserror::Error;

/// Errors raised by tree construction and the vertex partial order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("label {label} out of range 1..={n}")]
    BadLabel { label: usize, n: usize },
    #[error("operation undefined for trees with fewer than {min} nodes (got {n})")]
    TooSmall { n: usize, min: usize },
}

/// Errors raised by enumeration, sampling and presentation budgets.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BudgetError {
    #[error("{what} for n = {n} exceeds the budget of n <= {budget}")]
    TooLarge {
        what: &'static str,
        n: usize,
        budget: usize,
    },
}

/// Errors raised by the truncated-series engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("series argument has a nonzero constant term; factor it out first")]
    NonzeroConstantTerm,
    #[error("Lagrange inversion requires f(0) != 0")]
    BadF,
    #[error("order {n} exceeds the series budget of {budget}")]
    TooLarge { n: usize, budget: usize },
    #[error("division by zero: {0}")]
    DivByZero(&'static str),
}

/// Errors raised by Whitehead automorphism construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutError {
    #[error("malformed pair: need a in A and a^-1 not in A")]
    MalformedPair,
    #[error("pair (A, a) violates the validity conditions over this tree")]
    InvalidPair,
    #[error("letter vertex {label} out of range 1..={n}")]
    BadLabel { label: usize, n: usize },
    #[error("generator enumeration for n = {n} exceeds the budget of {budget} generators")]
    TooLarge { n: usize, budget: usize },
}
