//! The algorithm family: exponent tuples over derivative orders, dyadic step
//! choices, momentum, and one iteration of any member.
//!
//! A member moves along the monomial direction
//!
//! ```text
//! d(x) = Π_j (f^(j)(x))^ν_j
//! ```
//!
//! In more than one dimension the factors are combined as follows:
//!
//! * minimization: `d = f^ν0 · H^ν2 · (∇f)^∘ν1`, elementwise power on the
//!   gradient, matrix power on the Hessian (negative powers by repeated solves);
//! * root-finding: `d = J^ν1 · f^∘ν0`, elementwise power on the residual vector.
//!
//! Single-step members update `x ← x + α d(x)`. Two-step members first
//! extrapolate `y = x + β (x − x_prev)` and update `x ← y + α d(y)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::expr::EvalError;
use crate::linalg;
use crate::problem::{ProblemKind, ProblemSpec};

/// Point storage; every shipped problem has `n <= 2`.
pub type Point = SmallVec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("zero base raised to a negative power")]
    ZeroBaseNegativePower,
    #[error("singular matrix in linear solve")]
    SingularMatrix,
    #[error("derivative of order {0} is not available for this problem")]
    UnsupportedOrder(usize),
    #[error("non-finite iterate")]
    NonFinite,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Integer exponent per derivative order, indexed by order `j = 0..=j_max`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentTuple(pub Vec<i32>);

impl ExponentTuple {
    pub fn new(nu: impl Into<Vec<i32>>) -> Self {
        ExponentTuple(nu.into())
    }

    pub fn get(&self, j: usize) -> i32 {
        self.0.get(j).copied().unwrap_or(0)
    }

    /// Highest order with a nonzero exponent, if any.
    pub fn highest_order(&self) -> Option<usize> {
        self.0.iter().rposition(|&k| k != 0)
    }
}

impl fmt::Display for ExponentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// A step size `sign · 2^(−abar)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepChoice {
    pub sign: Sign,
    pub abar: u8,
}

impl StepChoice {
    pub fn new(sign: Sign, abar: u8) -> Self {
        StepChoice { sign, abar }
    }

    pub fn value(self) -> f64 {
        let mag = 1.0 / (1u64 << self.abar) as f64;
        match self.sign {
            Sign::Plus => mag,
            Sign::Minus => -mag,
        }
    }

    /// All choices with `abar <= abar_max`, in tie-break order: `+` before `−`,
    /// then ascending `abar`.
    pub fn all(abar_max: u8) -> Vec<StepChoice> {
        [Sign::Plus, Sign::Minus]
            .into_iter()
            .flat_map(|s| (0..=abar_max).map(move |a| StepChoice::new(s, a)))
            .collect()
    }
}

impl fmt::Display for StepChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "{s}{}", self.abar)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {what} `{text}`")]
pub struct FormatError {
    pub what: &'static str,
    pub text: String,
}

impl FromStr for StepChoice {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FormatError {
            what: "step choice",
            text: s.to_string(),
        };
        let t = s.trim();
        let (sign, rest) = match t.as_bytes().first() {
            Some(b'+') => (Sign::Plus, &t[1..]),
            Some(b'-') => (Sign::Minus, &t[1..]),
            _ => return Err(err()),
        };
        let abar: u8 = rest.parse().map_err(|_| err())?;
        if abar > 63 {
            return Err(err());
        }
        Ok(StepChoice::new(sign, abar))
    }
}

impl Serialize for StepChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StepChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `"-0,+3,-1"`; the empty string is the empty schedule.
pub fn parse_schedule(s: &str) -> Result<Vec<StepChoice>, FormatError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(str::parse).collect()
}

pub fn format_schedule(schedule: &[StepChoice]) -> String {
    schedule.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmKind {
    #[serde(rename = "single")]
    SingleStep,
    #[serde(rename = "two-step")]
    TwoStep,
}

impl FromStr for AlgorithmKind {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "single-step" => Ok(AlgorithmKind::SingleStep),
            "two-step" | "two_step" => Ok(AlgorithmKind::TwoStep),
            _ => Err(FormatError {
                what: "family kind",
                text: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub nu: ExponentTuple,
    /// Momentum; zero for single-step members.
    pub beta: f64,
}

impl AlgorithmSpec {
    pub fn single(nu: impl Into<Vec<i32>>) -> Self {
        AlgorithmSpec {
            kind: AlgorithmKind::SingleStep,
            nu: ExponentTuple::new(nu),
            beta: 0.0,
        }
    }

    pub fn two_step(nu: impl Into<Vec<i32>>, beta: f64) -> Self {
        AlgorithmSpec {
            kind: AlgorithmKind::TwoStep,
            nu: ExponentTuple::new(nu),
            beta,
        }
    }

    /// Momentum charged per counted iteration, `None` for single-step members.
    pub fn charged_beta(&self) -> Option<f64> {
        match self.kind {
            AlgorithmKind::SingleStep => None,
            AlgorithmKind::TwoStep => Some(self.beta),
        }
    }

    /// Parses `nu=(a,b,c);beta=q`. The kind is supplied by the caller because
    /// the string form does not carry it.
    pub fn parse(s: &str, kind: AlgorithmKind) -> Result<Self, FormatError> {
        let err = || FormatError {
            what: "algorithm",
            text: s.to_string(),
        };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (nu_part, beta_part) = match compact.split_once(';') {
            Some((a, b)) => (a, Some(b)),
            None => (compact.as_str(), None),
        };
        let inner = nu_part
            .strip_prefix("nu=(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(err)?;
        let nu = inner
            .split(',')
            .map(|t| t.parse::<i32>().map_err(|_| err()))
            .collect::<Result<Vec<_>, _>>()?;
        let beta = match beta_part {
            None => 0.0,
            Some(b) => b
                .strip_prefix("beta=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(err)?,
        };
        if !(0.0..1.0).contains(&beta) {
            return Err(err());
        }
        if kind == AlgorithmKind::SingleStep && beta != 0.0 {
            return Err(err());
        }
        Ok(AlgorithmSpec {
            kind,
            nu: ExponentTuple(nu),
            beta,
        })
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nu={};beta={}", self.nu, self.beta)
    }
}

/// Which part of the family to enumerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: AlgorithmKind,
    pub j_max: usize,
    pub k_min: i32,
    pub k_max: i32,
    /// Ignored for single-step families.
    pub beta_grid: Vec<f64>,
}

pub fn default_beta_grid() -> Vec<f64> {
    (0..8).map(|i| i as f64 / 8.0).collect()
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            kind: AlgorithmKind::SingleStep,
            j_max: 2,
            k_min: -2,
            k_max: 2,
            beta_grid: default_beta_grid(),
        }
    }
}

impl FamilyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=2).contains(&self.j_max) {
            return Err(format!("family j_max must be 1 or 2, got {}", self.j_max));
        }
        if self.k_min > self.k_max {
            return Err(format!("empty exponent range {}..{}", self.k_min, self.k_max));
        }
        if self.kind == AlgorithmKind::TwoStep {
            if self.beta_grid.is_empty() {
                return Err("beta grid is empty".into());
            }
            if let Some(b) = self.beta_grid.iter().find(|b| !(0.0..1.0).contains(*b)) {
                return Err(format!("beta {b} outside [0, 1)"));
            }
        }
        Ok(())
    }
}

/// Cartesian product in lexicographic order: `nu[0]` slowest, then `nu[1]`,
/// …, with `beta` fastest.
pub fn enumerate_algorithms(cfg: &FamilyConfig) -> Vec<AlgorithmSpec> {
    let betas: &[f64] = match cfg.kind {
        AlgorithmKind::SingleStep => &[0.0],
        AlgorithmKind::TwoStep => &cfg.beta_grid,
    };
    let orders = cfg.j_max + 1;
    let width = (cfg.k_max - cfg.k_min + 1) as usize;
    let count = width.pow(orders as u32);
    let mut out = Vec::with_capacity(count * betas.len());
    for idx in 0..count {
        let mut nu = vec![0; orders];
        let mut r = idx;
        for j in (0..orders).rev() {
            nu[j] = cfg.k_min + (r % width) as i32;
            r /= width;
        }
        for &beta in betas {
            out.push(AlgorithmSpec {
                kind: cfg.kind,
                nu: ExponentTuple(nu.clone()),
                beta,
            });
        }
    }
    out
}

fn powi_checked(base: f64, k: i32) -> Result<f64, StepError> {
    if k < 0 && base == 0.0 {
        return Err(StepError::ZeroBaseNegativePower);
    }
    let mut acc = 1.0;
    for _ in 0..k.unsigned_abs() {
        acc *= base;
    }
    Ok(if k < 0 { 1.0 / acc } else { acc })
}

/// The monomial direction at `x`.
pub fn direction(p: &ProblemSpec, nu: &ExponentTuple, x: &[f64]) -> Result<Point, StepError> {
    let order = nu.highest_order().unwrap_or(0);
    if order > p.j_max {
        return Err(StepError::UnsupportedOrder(order));
    }
    let d: Point = match (p.kind, p.n) {
        (_, 1) => {
            let jet = p.exprs[0].eval_order(x, order as u8)?;
            let derivs = [jet.value, jet.gradient.first().copied().unwrap_or(0.0), jet.hessian.first().copied().unwrap_or(0.0)];
            let mut d = 1.0;
            for (j, &k) in nu.0.iter().enumerate() {
                d *= powi_checked(derivs[j], k)?;
            }
            smallvec::smallvec![d]
        }
        (ProblemKind::Minimization, n) => {
            let jet = p.exprs[0].eval_order(x, order as u8)?;
            let scale = powi_checked(jet.value, nu.get(0))?;
            let k1 = nu.get(1);
            let v = if k1 == 0 {
                vec![1.0; n]
            } else {
                jet.gradient
                    .iter()
                    .map(|&g| powi_checked(g, k1))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let w = match nu.get(2) {
                0 => v,
                k2 => linalg::mat_pow_vec(&jet.hessian, n, k2, &v).map_err(|_| StepError::SingularMatrix)?,
            };
            w.into_iter().map(|wi| scale * wi).collect()
        }
        (ProblemKind::RootFinding, n) => {
            let k0 = nu.get(0);
            let k1 = nu.get(1);
            let mut values = Vec::with_capacity(n);
            let mut jac = Vec::with_capacity(if k1 != 0 { n * n } else { 0 });
            for e in &p.exprs {
                let jet = e.eval_order(x, if k1 != 0 { 1 } else { 0 })?;
                values.push(powi_checked(jet.value, k0)?);
                jac.extend_from_slice(&jet.gradient);
            }
            match k1 {
                0 => values.into_iter().collect(),
                k => linalg::mat_pow_vec(&jac, n, k, &values)
                    .map_err(|_| StepError::SingularMatrix)?
                    .into_iter()
                    .collect(),
            }
        }
    };
    if d.iter().any(|v| !v.is_finite()) {
        return Err(StepError::NonFinite);
    }
    Ok(d)
}

/// `x + α d(x)`.
pub fn advance_single(p: &ProblemSpec, nu: &ExponentTuple, alpha: StepChoice, x: &[f64]) -> Result<Point, StepError> {
    let d = direction(p, nu, x)?;
    step_along(x, alpha.value(), &d)
}

fn step_along(x: &[f64], alpha: f64, d: &[f64]) -> Result<Point, StepError> {
    let out: Point = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(StepError::NonFinite);
    }
    Ok(out)
}

/// Two-step state; at the start `x_prev == x`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterState {
    pub x: Point,
    pub x_prev: Point,
}

impl IterState {
    pub fn start(x0: &[f64]) -> Self {
        IterState {
            x: Point::from_slice(x0),
            x_prev: Point::from_slice(x0),
        }
    }

    /// Extrapolated point `x + β (x − x_prev)`; exactly `x` when `β == 0`.
    pub fn extrapolate(&self, beta: f64) -> Point {
        if beta == 0.0 {
            return self.x.clone();
        }
        self.x
            .iter()
            .zip(&self.x_prev)
            .map(|(x, xp)| x + beta * (x - xp))
            .collect()
    }
}

pub fn advance_two_step(
    p: &ProblemSpec,
    nu: &ExponentTuple,
    alpha: StepChoice,
    beta: f64,
    s: &IterState,
) -> Result<IterState, StepError> {
    let y = s.extrapolate(beta);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StepError::NonFinite);
    }
    let x = advance_single(p, nu, alpha, &y)?;
    Ok(IterState { x, x_prev: s.x.clone() })
}
