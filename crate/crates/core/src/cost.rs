//! Cost accounting for iterations and whole trajectories.
//!
//! A counted iteration costs `abar + Σ_j weight(j)·exponent_cost(ν_j)`, plus
//! `β` for two-step members. The iteration whose result first meets the
//! residual tolerance is not counted, so a one-step convergent schedule costs 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{AlgorithmSpec, ExponentTuple, StepChoice};
use crate::search::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("no cost defined for exponent {0}")]
    UnknownExponent(i32),
    #[error("no weight defined for derivative order {0}")]
    UnknownOrder(usize),
    #[error("invalid cost model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    /// Sum of costs of iterations whose result is not yet converged.
    #[default]
    Counted,
    /// Every executed iteration, each weighted by the residual it produces.
    ResidualWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub exponent_cost: BTreeMap<i32, f64>,
    pub order_weight: BTreeMap<usize, f64>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            exponent_cost: [(-2, 3.0), (-1, 2.0), (0, 0.0), (1, 1.0), (2, 1.5)].into_iter().collect(),
            order_weight: [(0, 1.0), (1, 10.0), (2, 100.0)].into_iter().collect(),
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), CostError> {
        match self.exponent_cost.get(&0) {
            Some(&c) if c == 0.0 => {}
            _ => return Err(CostError::Invalid("exponent 0 must cost exactly 0".into())),
        }
        if let Some((k, c)) = self.exponent_cost.iter().find(|(_, c)| !(c.is_finite() && **c >= 0.0)) {
            return Err(CostError::Invalid(format!("exponent {k} has invalid cost {c}")));
        }
        if let Some((j, w)) = self.order_weight.iter().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(CostError::Invalid(format!("order {j} has non-positive weight {w}")));
        }
        Ok(())
    }

    /// Derivative-usage cost of one counted iteration.
    pub fn base_cost(&self, nu: &ExponentTuple) -> Result<f64, CostError> {
        let mut total = 0.0;
        for (j, &k) in nu.0.iter().enumerate() {
            let c = *self.exponent_cost.get(&k).ok_or(CostError::UnknownExponent(k))?;
            if c == 0.0 {
                continue;
            }
            let w = *self.order_weight.get(&j).ok_or(CostError::UnknownOrder(j))?;
            total += w * c;
        }
        Ok(total)
    }

    pub fn iteration_cost(
        &self,
        nu: &ExponentTuple,
        alpha: StepChoice,
        beta: Option<f64>,
        counted: bool,
    ) -> Result<f64, CostError> {
        let base = self.base_cost(nu)?;
        Ok(if counted { unit_cost(alpha, base, beta) } else { 0.0 })
    }

    /// Recomputes the total cost of a trajectory from its schedule, residuals
    /// and counted flags.
    pub fn schedule_cost(&self, alg: &AlgorithmSpec, traj: &Trajectory, mode: CostMode) -> Result<f64, CostError> {
        let base = self.base_cost(&alg.nu)?;
        let beta = alg.charged_beta();
        let mut total = 0.0;
        for (it, &alpha) in traj.schedule.iter().enumerate() {
            total += edge_cost(mode, alpha, base, beta, traj.counted[it], traj.residuals[it + 1]);
        }
        Ok(total)
    }
}

/// `abar + base + β`, in that summation order.
pub(crate) fn unit_cost(alpha: StepChoice, base: f64, beta: Option<f64>) -> f64 {
    f64::from(alpha.abar) + base + beta.unwrap_or(0.0)
}

/// Cost of one executed iteration whose resulting iterate has `residual`.
pub(crate) fn edge_cost(
    mode: CostMode,
    alpha: StepChoice,
    base: f64,
    beta: Option<f64>,
    counted: bool,
    residual: f64,
) -> f64 {
    match mode {
        CostMode::Counted if counted => unit_cost(alpha, base, beta),
        CostMode::Counted => 0.0,
        CostMode::ResidualWeighted => residual * unit_cost(alpha, base, beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Sign;

    fn nu(v: [i32; 3]) -> ExponentTuple {
        ExponentTuple::new(v)
    }

    #[test]
    fn base_costs() {
        let m = CostModel::default();
        assert_eq!(m.base_cost(&nu([1, -1, 0])).unwrap(), 21.0);
        assert_eq!(m.base_cost(&nu([0, 1, 0])).unwrap(), 10.0);
        assert_eq!(m.base_cost(&nu([0, 0, 0])).unwrap(), 0.0);
        assert_eq!(m.base_cost(&nu([1, 1, -1])).unwrap(), 211.0);
        assert_eq!(m.base_cost(&nu([-2, 2, -2])).unwrap(), 3.0 + 15.0 + 300.0);
        assert_eq!(m.base_cost(&nu([3, 0, 0])), Err(CostError::UnknownExponent(3)));
    }

    #[test]
    fn iteration_costs() {
        let m = CostModel::default();
        let a0 = StepChoice::new(Sign::Minus, 0);
        assert_eq!(m.iteration_cost(&nu([1, -1, 0]), a0, None, true).unwrap(), 21.0);
        assert_eq!(m.iteration_cost(&nu([2, 2, 2]), a0, Some(0.5), false).unwrap(), 0.0);
        let a1 = StepChoice::new(Sign::Plus, 1);
        assert_eq!(m.iteration_cost(&nu([0, 1, 0]), a1, Some(0.5), true).unwrap(), 11.5);
    }

    #[test]
    fn validation() {
        assert!(CostModel::default().validate().is_ok());
        let mut m = CostModel::default();
        m.exponent_cost.insert(0, 1.0);
        assert!(m.validate().is_err());
        let mut m = CostModel::default();
        m.order_weight.insert(1, 0.0);
        assert!(m.validate().is_err());
        let mut m = CostModel::default();
        m.exponent_cost.insert(1, -1.0);
        assert!(m.validate().is_err());
    }
}
