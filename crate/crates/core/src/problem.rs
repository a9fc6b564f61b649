//! Root-finding systems and scalar minimization problems, plus the shipped presets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};

/// Residual tolerance used by every preset unless overridden.
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    RootFinding,
    Minimization,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("expression {index}: {source}")]
    Parse {
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Serializable description of a problem; expressions are kept as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDef {
    pub name: String,
    pub kind: ProblemKind,
    pub n: usize,
    pub exprs: Vec<String>,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub initial_points: Vec<Vec<f64>>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_it_max")]
    pub it_max: usize,
    #[serde(default = "default_j_max")]
    pub j_max: usize,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_it_max() -> usize {
    10
}

fn default_j_max() -> usize {
    2
}

/// A validated problem. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub kind: ProblemKind,
    pub n: usize,
    pub exprs: Vec<Expression>,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub initial_points: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub it_max: usize,
    pub j_max: usize,
}

impl ProblemSpec {
    pub fn from_def(def: &ProblemDef) -> Result<Self, ProblemError> {
        let exprs = def
            .exprs
            .iter()
            .enumerate()
            .map(|(index, s)| {
                Expression::parse(s, def.n.max(1)).map_err(|source| ProblemError::Parse { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let spec = ProblemSpec {
            name: def.name.clone(),
            kind: def.kind,
            n: def.n,
            exprs,
            box_lo: def.box_lo.clone(),
            box_hi: def.box_hi.clone(),
            initial_points: def.initial_points.clone(),
            epsilon: def.epsilon,
            it_max: def.it_max,
            j_max: def.j_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_def(&self) -> ProblemDef {
        ProblemDef {
            name: self.name.clone(),
            kind: self.kind,
            n: self.n,
            exprs: self.exprs.iter().map(|e| e.source().to_string()).collect(),
            box_lo: self.box_lo.clone(),
            box_hi: self.box_hi.clone(),
            initial_points: self.initial_points.clone(),
            epsilon: self.epsilon,
            it_max: self.it_max,
            j_max: self.j_max,
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let bad = |m: String| Err(ProblemError::Invalid(m));
        if self.n == 0 {
            return bad("dimension must be positive".into());
        }
        match self.kind {
            ProblemKind::RootFinding if self.exprs.len() != self.n => {
                return bad(format!(
                    "root-finding problem of dimension {} needs {} equations, got {}",
                    self.n,
                    self.n,
                    self.exprs.len()
                ))
            }
            ProblemKind::Minimization if self.exprs.len() != 1 => {
                return bad(format!("minimization needs exactly one objective, got {}", self.exprs.len()))
            }
            _ => {}
        }
        if self.exprs.iter().any(|e| e.n_vars() != self.n) {
            return bad("expression arity does not match dimension".into());
        }
        if self.box_lo.len() != self.n || self.box_hi.len() != self.n {
            return bad("box bounds must have length n".into());
        }
        for i in 0..self.n {
            let (lo, hi) = (self.box_lo[i], self.box_hi[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("box bound {} is empty or non-finite: [{lo}, {hi}]", i + 1));
            }
        }
        if self.initial_points.is_empty() {
            return bad("at least one initial point is required".into());
        }
        for x in &self.initial_points {
            if x.len() != self.n {
                return bad(format!("initial point {x:?} has wrong dimension"));
            }
            if !self.in_box(x) {
                return bad(format!("initial point {x:?} lies outside the box"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.it_max == 0 {
            return bad("it_max must be at least 1".into());
        }
        if !(1..=2).contains(&self.j_max) {
            return bad(format!("j_max must be 1 or 2, got {}", self.j_max));
        }
        if self.kind == ProblemKind::RootFinding && self.n > 1 && self.j_max > 1 {
            return bad("second derivatives of equation systems are not supported; use j_max = 1".into());
        }
        Ok(())
    }

    /// Same problem, different starting point(s).
    pub fn with_initial_points(&self, points: Vec<Vec<f64>>) -> Result<Self, ProblemError> {
        let mut p = self.clone();
        p.initial_points = points;
        p.validate()?;
        Ok(p)
    }

    /// Closed box test.
    pub fn in_box(&self, x: &[f64]) -> bool {
        x.len() == self.n
            && x.iter()
                .zip(self.box_lo.iter().zip(&self.box_hi))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Infinity norm of `f` (root-finding) or of `∇f` (minimization).
    pub fn residual(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self.kind {
            ProblemKind::RootFinding => {
                let mut r = 0.0_f64;
                for e in &self.exprs {
                    r = r.max(e.eval(x)?.abs());
                }
                Ok(r)
            }
            ProblemKind::Minimization => {
                self.exprs[0].gradient_inf_norm(x)
            }
        }
    }

    pub fn is_converged(&self, residual: f64) -> bool {
        residual <= self.epsilon
    }
}

/// Names of the shipped presets, in listing order.
pub const PRESETS: [&str; 9] = [
    "cubic_root",
    "xexp_root",
    "quartic_min",
    "rosenbrock_min",
    "system2d",
    "strongly_convex_1d",
    "quad_2d",
    "expquad_2d",
    "expquad_2d_literal",
];

pub fn builtin_def(name: &str) -> Result<ProblemDef, ProblemError> {
    use ProblemKind::*;
    let def = |kind, n, exprs: &[&str], lo: &[f64], hi: &[f64], x0: &[f64], it_max, j_max| ProblemDef {
        name: name.to_string(),
        kind,
        n,
        exprs: exprs.iter().map(|s| s.to_string()).collect(),
        box_lo: lo.to_vec(),
        box_hi: hi.to_vec(),
        initial_points: vec![x0.to_vec()],
        epsilon: DEFAULT_EPSILON,
        it_max,
        j_max,
    };
    let d = match name {
        "cubic_root" => def(RootFinding, 1, &["x^3-1"], &[-2.0], &[2.0], &[0.1], 10, 2),
        "xexp_root" => def(RootFinding, 1, &["x*exp(x)-1"], &[-2.0], &[2.0], &[0.1], 10, 2),
        "quartic_min" => def(Minimization, 1, &["x^4+x^3-x^2-1"], &[-2.0], &[2.0], &[0.1], 10, 2),
        "rosenbrock_min" => def(
            Minimization,
            2,
            &["100*(x2-x1^2)^2+(1-x1)^2"],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            &[0.7, 0.75],
            20,
            2,
        ),
        "system2d" => def(
            RootFinding,
            2,
            &["x2-x1^2", "5*x2-exp(x1)"],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            &[0.1, 0.1],
            10,
            1,
        ),
        "strongly_convex_1d" => def(Minimization, 1, &["exp(x)+x^2"], &[-2.0], &[2.0], &[0.1], 10, 2),
        "quad_2d" => def(
            Minimization,
            2,
            &["(x1-1)^2+2*x2^2-x1*x2"],
            &[-1.0, -1.0],
            &[2.0, 2.0],
            &[-1.0, -1.0],
            20,
            2,
        ),
        "expquad_2d" => def(
            Minimization,
            2,
            &["exp(x1)+x1^2+exp(x2)+x2^2+x1*x2"],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &[0.5, 0.5],
            20,
            2,
        ),
        "expquad_2d_literal" => def(
            Minimization,
            2,
            &["exp(x1)+x1^2+exp(x2)+x1^2+x1*x2"],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &[0.5, 0.5],
            20,
            2,
        ),
        other => return Err(ProblemError::UnknownPreset(other.to_string())),
    };
    Ok(d)
}

pub fn builtin(name: &str) -> Result<ProblemSpec, ProblemError> {
    ProblemSpec::from_def(&builtin_def(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in PRESETS {
            let p = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(p.name, name);
            assert_eq!(p.epsilon, 1e-3);
        }
        assert!(matches!(builtin("nope"), Err(ProblemError::UnknownPreset(_))));
    }

    #[test]
    fn preset_details() {
        let r = builtin("rosenbrock_min").unwrap();
        assert_eq!(r.initial_points[0], vec![0.7, 0.75]);
        assert_eq!(r.it_max, 20);
        let q = builtin("quartic_min").unwrap();
        assert_eq!((q.box_lo.clone(), q.box_hi.clone()), (vec![-2.0], vec![2.0]));
        assert_eq!(q.it_max, 10);
        assert_eq!(builtin("system2d").unwrap().j_max, 1);
        let q2 = builtin("quad_2d").unwrap();
        assert_eq!((q2.box_lo.clone(), q2.it_max), (vec![-1.0, -1.0], 20));
        assert_eq!(builtin("expquad_2d").unwrap().it_max, 20);
    }

    #[test]
    fn residual_examples() {
        let cubic = builtin("cubic_root").unwrap();
        assert_eq!(cubic.residual(&[1.0]).unwrap(), 0.0);

        let quartic = builtin("quartic_min").unwrap();
        let r = quartic.residual(&[0.1]).unwrap();
        assert!((r - 0.166).abs() < 1e-15);

        let sys = builtin("system2d").unwrap();
        assert_eq!(sys.residual(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn box_is_closed() {
        let p = builtin("quartic_min").unwrap();
        assert!(p.in_box(&[0.1]));
        assert!(p.in_box(&[2.0]));
        assert!(!p.in_box(&[2.0000001]));
        let q = builtin("quad_2d").unwrap();
        assert!(q.in_box(&[-1.0, -1.0]));
    }

    #[test]
    fn expquad_optimum_is_symmetric() {
        // Stationary point reported for the symmetric objective.
        let p = builtin("expquad_2d").unwrap();
        let x = -0.257627653;
        assert!(p.residual(&[x, x]).unwrap() < 1e-8);
        let lit = builtin("expquad_2d_literal").unwrap();
        assert!(lit.residual(&[x, x]).unwrap() > 1e-2);
    }

    #[test]
    fn invalid_problems_rejected() {
        let mut d = builtin_def("quad_2d").unwrap();
        d.initial_points = vec![vec![3.0, 0.0]];
        assert!(ProblemSpec::from_def(&d).is_err());
        let mut d = builtin_def("system2d").unwrap();
        d.exprs.pop();
        assert!(ProblemSpec::from_def(&d).is_err());
        let mut d = builtin_def("cubic_root").unwrap();
        d.epsilon = 0.0;
        assert!(ProblemSpec::from_def(&d).is_err());
        let mut d = builtin_def("cubic_root").unwrap();
        d.box_lo = vec![2.0];
        assert!(ProblemSpec::from_def(&d).is_err());
        let mut d = builtin_def("system2d").unwrap();
        d.j_max = 2;
        assert!(ProblemSpec::from_def(&d).is_err());
        let mut d = builtin_def("cubic_root").unwrap();
        d.exprs = vec!["x^3-".into()];
        assert!(matches!(ProblemSpec::from_def(&d), Err(ProblemError::Parse { index: 0, .. })));
    }
}
