//! Run configuration: JSON file plus command-line overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cost::{CostMode, CostModel};
use crate::family::{AlgorithmKind, FamilyConfig};
use crate::problem::{builtin_def, ProblemDef, ProblemSpec};
use crate::search::SearchConfig;

/// Output directory used when neither `--out` nor the config file names one.
pub const OUT_ENV: &str = "ALGOFORGE_OUT";

/// A preset name or an inline problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Preset(String),
    Inline(ProblemDef),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostOverrides {
    #[serde(default)]
    pub exponent_cost: BTreeMap<i32, f64>,
    #[serde(default)]
    pub order_weight: BTreeMap<usize, f64>,
}

/// Family settings as they appear in a config file; anything left out falls
/// back to the defaults (with `j_max` following the problem).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyOverrides {
    pub kind: Option<AlgorithmKind>,
    pub j_max: Option<usize>,
    pub k_min: Option<i32>,
    pub k_max: Option<i32>,
    pub beta_grid: Option<Vec<f64>>,
}

/// Contents of a `--config` JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<ProblemRef>,
    #[serde(default)]
    pub family: FamilyOverrides,
    #[serde(default)]
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub cost: CostOverrides,
    pub epsilon: Option<f64>,
    pub it_max: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Ensemble start points.
    pub starts: Option<Vec<Vec<f64>>>,
    /// Ensemble candidates as algorithm strings.
    pub shortlist: Option<Vec<String>>,
    /// Ensemble candidates: the `n` cheapest feasible algorithms from the
    /// problem's own start.
    pub shortlist_top: Option<usize>,
}

/// Overrides collected from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub problem: Option<String>,
    pub family: Option<AlgorithmKind>,
    pub j_max: Option<usize>,
    pub beta_grid: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub it_max: Option<usize>,
    pub budget: Option<u64>,
    pub abar_max: Option<u8>,
    pub monotone_residual: bool,
    pub no_box: bool,
    pub cost_mode: Option<CostMode>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings; this is what reports embed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveConfig {
    pub problem: ProblemDef,
    pub family: FamilyConfig,
    pub search: SearchConfig,
    pub cost: CostModel,
}

pub struct Resolved {
    pub effective: EffectiveConfig,
    pub problem: ProblemSpec,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub file: RunConfig,
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: `{t}`")))
        .collect()
}

/// `"a,b;c,d"` → `[[a, b], [c, d]]`.
pub fn parse_points(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';').filter(|t| !t.trim().is_empty()).map(parse_list).collect()
}

pub fn load_file(path: &std::path::Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

pub fn resolve(file: RunConfig, flags: &FlagOverrides) -> Result<Resolved, String> {
    let problem_ref = match (&flags.problem, &file.problem) {
        (Some(name), _) => ProblemRef::Preset(name.clone()),
        (None, Some(p)) => p.clone(),
        (None, None) => return Err("no problem given (use --problem or a config file)".into()),
    };
    let mut def = match problem_ref {
        ProblemRef::Preset(name) => builtin_def(&name).map_err(|e| e.to_string())?,
        ProblemRef::Inline(def) => def,
    };
    if let Some(eps) = flags.epsilon.or(file.epsilon) {
        def.epsilon = eps;
    }
    if let Some(it) = flags.it_max.or(file.it_max) {
        def.it_max = it;
    }
    let problem = ProblemSpec::from_def(&def).map_err(|e| e.to_string())?;

    let defaults = FamilyConfig::default();
    let family = FamilyConfig {
        kind: flags.family.or(file.family.kind).unwrap_or(defaults.kind),
        j_max: flags.j_max.or(file.family.j_max).unwrap_or(problem.j_max),
        k_min: file.family.k_min.unwrap_or(defaults.k_min),
        k_max: file.family.k_max.unwrap_or(defaults.k_max),
        beta_grid: flags
            .beta_grid
            .clone()
            .or_else(|| file.family.beta_grid.clone())
            .unwrap_or(defaults.beta_grid),
    };
    family.validate()?;

    let mut search = file.search.clone().unwrap_or_default();
    if let Some(b) = flags.budget {
        search.node_budget = b;
    }
    if let Some(a) = flags.abar_max {
        search.abar_max = a;
    }
    if flags.monotone_residual {
        search.monotone_residual = true;
    }
    if flags.no_box {
        search.enforce_box = false;
    }
    if let Some(m) = flags.cost_mode {
        search.cost_mode = m;
    }
    search.validate().map_err(|e| e.to_string())?;
    if problem.it_max > crate::search::MAX_SEARCH_DEPTH {
        return Err(format!("it_max may not exceed {}", crate::search::MAX_SEARCH_DEPTH));
    }

    let mut cost = CostModel::default();
    cost.exponent_cost.extend(file.cost.exponent_cost.iter().map(|(k, v)| (*k, *v)));
    cost.order_weight.extend(file.cost.order_weight.iter().map(|(k, v)| (*k, *v)));
    cost.validate().map_err(|e| e.to_string())?;
    for k in family.k_min..=family.k_max {
        if !cost.exponent_cost.contains_key(&k) {
            return Err(format!("cost model has no entry for exponent {k}"));
        }
    }
    for j in 0..=family.j_max {
        if !cost.order_weight.contains_key(&j) {
            return Err(format!("cost model has no weight for derivative order {j}"));
        }
    }

    let workers = flags.workers.or(file.workers).unwrap_or(1);
    if workers == 0 {
        return Err("workers must be at least 1".into());
    }
    let out_dir = flags
        .out
        .clone()
        .or_else(|| file.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(Resolved {
        effective: EffectiveConfig {
            problem: def,
            family,
            search,
            cost,
        },
        problem,
        workers,
        out_dir,
        file,
    })
}
