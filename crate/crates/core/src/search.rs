//! Trajectory simulation and exact search over step-size schedules.
//!
//! For a fixed algorithm the only free choice is the per-iteration step
//! `±2^(−abar)`, so the schedules form a finite tree of depth `it_max` and
//! branching `2·(abar_max+1)`. [`search_schedule`] runs uniform-cost search
//! over that tree with an incumbent bound. Nodes are popped in increasing
//! `(path cost, depth, schedule)` order and that key strictly increases along
//! every edge, so the first goal reached under this order is the optimum
//! together with its tie-break.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use rayon::prelude::*;
use smallvec::SmallVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{edge_cost, CostError, CostMode, CostModel};
use crate::family::{
    direction, AlgorithmSpec, FamilyConfig, IterState, Point, Sign, StepChoice, StepError,
};
use crate::problem::ProblemSpec;

/// Depth capacity of the packed schedule key (5 bits per step in a `u128`).
pub const MAX_SEARCH_DEPTH: usize = 25;
/// Largest `abar` representable in the packed schedule key.
pub const MAX_ABAR: u8 = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("schedule has {len} steps but the problem allows at most {it_max}")]
    ScheduleTooLong { len: usize, it_max: usize },
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Where and why a trajectory stopped without converging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Index of the iteration that failed (0 means the start point itself).
    pub iteration: usize,
    pub kind: FailureKindTag,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKindTag {
    BoxExit,
    StepError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `x⁰ … x^(last)`.
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub schedule: Vec<StepChoice>,
    /// Per executed iteration: whether its resulting iterate still misses the tolerance.
    pub counted: Vec<bool>,
    pub iter_costs: Vec<f64>,
    pub it_con: Option<usize>,
    pub total_cost: f64,
    pub feasible: bool,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub node_budget: u64,
    pub monotone_residual: bool,
    pub enforce_box: bool,
    pub memoize_states: bool,
    pub memo_granularity: f64,
    pub abar_max: u8,
    pub cost_mode: CostMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_budget: 200_000,
            monotone_residual: false,
            enforce_box: true,
            memoize_states: false,
            memo_granularity: 1e-9,
            abar_max: 10,
            cost_mode: CostMode::Counted,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.node_budget == 0 {
            return Err(SearchError::Config("node_budget must be at least 1".into()));
        }
        if !(self.memo_granularity > 0.0 && self.memo_granularity.is_finite()) {
            return Err(SearchError::Config("memo_granularity must be positive".into()));
        }
        if self.abar_max > MAX_ABAR {
            return Err(SearchError::Config(format!("abar_max must be at most {MAX_ABAR}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Feasible,
    Unknown,
    InfeasibleProven,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Unknown => "unknown",
            Status::InfeasibleProven => "infeasible",
        }
    }
}

/// A reason a branch of the schedule tree was cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneRule {
    DepthLimit,
    BoxExit,
    StepError,
    MonotoneResidual,
    Bound,
    Memo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub best: Option<Trajectory>,
    /// Path cost of the best schedule as accumulated by the search.
    pub cost: Option<f64>,
    pub nodes_expanded: u64,
    /// Rules that cut at least one branch.
    pub proof_conditions: Vec<PruneRule>,
    /// The node budget ran out before the search closed.
    pub budget_exhausted: bool,
}

impl Verdict {
    /// Feasible and no cheaper schedule can exist.
    pub fn certified_optimal(&self) -> bool {
        self.status == Status::Feasible && !self.budget_exhausted && !self.proof_conditions.contains(&PruneRule::Memo)
    }
}

fn fail(iteration: usize, kind: FailureKindTag, message: String) -> Option<Failure> {
    Some(Failure { iteration, kind, message })
}

/// Replays `schedule` from `x0`, stopping at the first iterate that meets the
/// tolerance. Failures (step errors, box exits) end the trajectory and are
/// recorded in it.
pub fn simulate(
    p: &ProblemSpec,
    alg: &AlgorithmSpec,
    x0: &[f64],
    schedule: &[StepChoice],
    costs: &CostModel,
    cfg: &SearchConfig,
) -> Result<Trajectory, SearchError> {
    if schedule.len() > p.it_max {
        return Err(SearchError::ScheduleTooLong {
            len: schedule.len(),
            it_max: p.it_max,
        });
    }
    let base = costs.base_cost(&alg.nu)?;
    let beta = alg.charged_beta();
    let mut t = Trajectory {
        points: vec![x0.to_vec()],
        residuals: Vec::new(),
        schedule: Vec::new(),
        counted: Vec::new(),
        iter_costs: Vec::new(),
        it_con: None,
        total_cost: 0.0,
        feasible: false,
        failure: None,
    };
    if cfg.enforce_box && !p.in_box(x0) {
        t.points.clear();
        t.failure = fail(0, FailureKindTag::BoxExit, "start point outside the box".into());
        return Ok(t);
    }
    match p.residual(x0) {
        Ok(r) => t.residuals.push(r),
        Err(e) => {
            t.points.clear();
            t.failure = fail(0, FailureKindTag::StepError, e.to_string());
            return Ok(t);
        }
    }
    if p.is_converged(t.residuals[0]) {
        t.it_con = Some(0);
        t.feasible = true;
        return Ok(t);
    }
    let mut state = IterState::start(x0);
    for (i, &alpha) in schedule.iter().enumerate() {
        let it = i + 1;
        let next = match crate::family::advance_two_step(p, &alg.nu, alpha, alg.beta, &state) {
            Ok(s) => s,
            Err(e) => {
                t.failure = fail(it, FailureKindTag::StepError, e.to_string());
                break;
            }
        };
        if cfg.enforce_box && !p.in_box(&next.x) {
            t.failure = fail(it, FailureKindTag::BoxExit, format!("iterate {:?} left the box", next.x.as_slice()));
            break;
        }
        let r = match p.residual(&next.x) {
            Ok(r) => r,
            Err(e) => {
                t.failure = fail(it, FailureKindTag::StepError, e.to_string());
                break;
            }
        };
        let counted = !p.is_converged(r);
        let c = edge_cost(cfg.cost_mode, alpha, base, beta, counted, r);
        t.points.push(next.x.to_vec());
        t.residuals.push(r);
        t.schedule.push(alpha);
        t.counted.push(counted);
        t.iter_costs.push(c);
        t.total_cost += c;
        state = next;
        if !counted {
            t.it_con = Some(it);
            t.feasible = true;
            break;
        }
    }
    Ok(t)
}

fn step_code(c: StepChoice) -> u128 {
    let s = match c.sign {
        Sign::Plus => 0,
        Sign::Minus => 16,
    };
    (s + c.abar as u128) & 31
}

fn code_step(code: u128) -> StepChoice {
    let sign = if code & 16 != 0 { Sign::Minus } else { Sign::Plus };
    StepChoice::new(sign, (code & 15) as u8)
}

fn key_shift(depth_index: usize) -> u32 {
    5 * (MAX_SEARCH_DEPTH - 1 - depth_index) as u32
}

fn decode_schedule(key: u128, depth: usize) -> Vec<StepChoice> {
    (0..depth).map(|i| code_step((key >> key_shift(i)) & 31)).collect()
}

/// Search-order key: cost, then depth, then lexicographic schedule.
#[derive(Debug, Clone, Copy)]
struct Rank {
    cost: f64,
    depth: u8,
    key: u128,
}

impl PartialEq for Rank {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Rank {}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.depth.cmp(&other.depth))
            .then(self.key.cmp(&other.key))
    }
}

struct Node {
    rank: Rank,
    residual: f64,
    state: IterState,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.rank.cmp(&self.rank)
    }
}

type StateBits = SmallVec<[u64; 4]>;

// Exact identity of a search state. `x_prev` only matters when the step
// extrapolates.
fn state_bits(s: &IterState, two_step: bool) -> StateBits {
    let mut b: StateBits = s.x.iter().map(|v| v.to_bits()).collect();
    if two_step {
        b.extend(s.x_prev.iter().map(|v| v.to_bits()));
    }
    b
}

fn memo_key(depth: u8, s: &IterState, g: f64, two_step: bool) -> (u8, Vec<i64>) {
    let round = |v: &f64| (v / g).round() as i64;
    let mut k: Vec<i64> = s.x.iter().map(round).collect();
    if two_step {
        k.extend(s.x_prev.iter().map(round));
    }
    (depth, k)
}

/// Finds a minimum-cost schedule that drives `x0` to the tolerance within
/// `p.it_max` iterations.
pub fn search_schedule(
    p: &ProblemSpec,
    alg: &AlgorithmSpec,
    x0: &[f64],
    costs: &CostModel,
    cfg: &SearchConfig,
) -> Result<Verdict, SearchError> {
    cfg.validate()?;
    if p.it_max > MAX_SEARCH_DEPTH {
        return Err(SearchError::Config(format!("it_max above {MAX_SEARCH_DEPTH} is not searchable")));
    }
    let base = costs.base_cost(&alg.nu)?;
    let beta = alg.charged_beta();
    let choices = StepChoice::all(cfg.abar_max);
    let two_step = alg.beta != 0.0;

    let mut rules = BTreeSet::new();
    let mut verdict = Verdict {
        status: Status::InfeasibleProven,
        best: None,
        cost: None,
        nodes_expanded: 0,
        proof_conditions: Vec::new(),
        budget_exhausted: false,
    };

    if cfg.enforce_box && !p.in_box(x0) {
        verdict.proof_conditions.push(PruneRule::BoxExit);
        return Ok(verdict);
    }
    let res0 = match p.residual(x0) {
        Ok(r) => r,
        Err(_) => {
            verdict.proof_conditions.push(PruneRule::StepError);
            return Ok(verdict);
        }
    };
    if p.is_converged(res0) {
        verdict.status = Status::Feasible;
        verdict.cost = Some(0.0);
        verdict.best = Some(simulate(p, alg, x0, &[], costs, cfg)?);
        return Ok(verdict);
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        rank: Rank { cost: 0.0, depth: 0, key: 0 },
        residual: res0,
        state: IterState::start(x0),
    });
    let mut incumbent: Option<Rank> = None;
    let mut memo: HashMap<(u8, Vec<i64>), f64> = HashMap::new();
    // Bit-identical states already expanded, with the smallest depth seen.
    // Nodes leave the heap in rank order, so a repeat at the same or a larger
    // depth has the same future with less room and a worse rank: dropping it
    // cannot change the result.
    let mut expanded: HashMap<StateBits, u8> = HashMap::new();

    while let Some(node) = heap.pop() {
        if incumbent.is_some_and(|inc| node.rank >= inc) {
            break;
        }
        if verdict.nodes_expanded >= cfg.node_budget {
            verdict.budget_exhausted = true;
            break;
        }
        match expanded.entry(state_bits(&node.state, two_step)) {
            Entry::Occupied(e) if *e.get() <= node.rank.depth => continue,
            Entry::Occupied(mut e) => {
                e.insert(node.rank.depth);
            }
            Entry::Vacant(e) => {
                e.insert(node.rank.depth);
            }
        }
        verdict.nodes_expanded += 1;

        let y = node.state.extrapolate(alg.beta);
        let dir = if y.iter().all(|v| v.is_finite()) {
            direction(p, &alg.nu, &y)
        } else {
            Err(StepError::NonFinite)
        };
        let Ok(d) = dir else {
            rules.insert(PruneRule::StepError);
            continue;
        };
        let depth = node.rank.depth as usize;
        let child_depth = node.rank.depth + 1;
        for &choice in &choices {
            let a = choice.value();
            let x: Point = y.iter().zip(&d).map(|(yi, di)| yi + a * di).collect();
            if x.iter().any(|v| !v.is_finite()) {
                rules.insert(PruneRule::StepError);
                continue;
            }
            if cfg.enforce_box && !p.in_box(&x) {
                rules.insert(PruneRule::BoxExit);
                continue;
            }
            let Ok(r) = p.residual(&x) else {
                rules.insert(PruneRule::StepError);
                continue;
            };
            if cfg.monotone_residual && !(r < node.residual) {
                rules.insert(PruneRule::MonotoneResidual);
                continue;
            }
            let counted = !p.is_converged(r);
            let rank = Rank {
                cost: node.rank.cost + edge_cost(cfg.cost_mode, choice, base, beta, counted, r),
                depth: child_depth,
                key: node.rank.key | (step_code(choice) << key_shift(depth)),
            };
            if !counted {
                if incumbent.map_or(true, |inc| rank < inc) {
                    incumbent = Some(rank);
                }
                continue;
            }
            if child_depth as usize >= p.it_max {
                rules.insert(PruneRule::DepthLimit);
                continue;
            }
            if incumbent.is_some_and(|inc| rank >= inc) {
                rules.insert(PruneRule::Bound);
                continue;
            }
            let state = IterState {
                x,
                x_prev: node.state.x.clone(),
            };
            if cfg.memoize_states {
                let k = memo_key(child_depth, &state, cfg.memo_granularity, two_step);
                match memo.get(&k) {
                    Some(&seen) if seen <= rank.cost => {
                        rules.insert(PruneRule::Memo);
                        continue;
                    }
                    _ => {
                        memo.insert(k, rank.cost);
                    }
                }
            }
            heap.push(Node { rank, residual: r, state });
        }
    }

    verdict.proof_conditions = rules.into_iter().collect();
    if let Some(inc) = incumbent {
        let schedule = decode_schedule(inc.key, inc.depth as usize);
        verdict.status = Status::Feasible;
        verdict.cost = Some(inc.cost);
        verdict.best = Some(simulate(p, alg, x0, &schedule, costs, cfg)?);
    } else if verdict.budget_exhausted {
        verdict.status = Status::Unknown;
    }
    Ok(verdict)
}

/// Tries every schedule of length `p.it_max` and keeps the cheapest feasible
/// one. Exponential; meant as a reference for small instances.
pub fn brute_force_schedule(
    p: &ProblemSpec,
    alg: &AlgorithmSpec,
    x0: &[f64],
    costs: &CostModel,
    cfg: &SearchConfig,
) -> Result<Option<Trajectory>, SearchError> {
    let choices = StepChoice::all(cfg.abar_max);
    let b = choices.len();
    let total = b.pow(p.it_max as u32);
    let mut best: Option<Trajectory> = None;
    let mut schedule = vec![choices[0]; p.it_max];
    for idx in 0..total {
        let mut r = idx;
        for slot in schedule.iter_mut().rev() {
            *slot = choices[r % b];
            r /= b;
        }
        let t = simulate(p, alg, x0, &schedule, costs, cfg)?;
        if !t.feasible {
            continue;
        }
        if cfg.monotone_residual && t.residuals.windows(2).any(|w| !(w[1] < w[0])) {
            continue;
        }
        if best.as_ref().map_or(true, |bt| t.total_cost < bt.total_cost) {
            best = Some(t);
        }
    }
    Ok(best)
}

/// One algorithm's outcome in a ranked list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    /// Position in the candidate list (enumeration order).
    pub index: usize,
    pub algorithm: String,
    pub verdict: Verdict,
}

fn rank_order(a: &Ranked, b: &Ranked) -> Ordering {
    a.verdict
        .status
        .cmp(&b.verdict.status)
        .then_with(|| match (a.verdict.cost, b.verdict.cost) {
            (Some(x), Some(y)) if a.verdict.status == Status::Feasible => x.total_cmp(&y),
            _ => Ordering::Equal,
        })
        .then(a.index.cmp(&b.index))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, SearchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SearchError::Pool(e.to_string()))
}

/// Searches every candidate from `x0` and sorts: feasible first by cost, then
/// unknown, then proven infeasible; ties keep candidate order.
pub fn rank_candidates(
    p: &ProblemSpec,
    candidates: &[AlgorithmSpec],
    x0: &[f64],
    costs: &CostModel,
    cfg: &SearchConfig,
    workers: usize,
) -> Result<Vec<Ranked>, SearchError> {
    let mut out = pool(workers)?.install(|| {
        candidates
            .par_iter()
            .enumerate()
            .map(|(index, alg)| {
                Ok(Ranked {
                    index,
                    algorithm: alg.to_string(),
                    verdict: search_schedule(p, alg, x0, costs, cfg)?,
                })
            })
            .collect::<Result<Vec<_>, SearchError>>()
    })?;
    out.sort_by(rank_order);
    Ok(out)
}

/// Enumerates the family and ranks it from the problem's first initial point.
pub fn discover(
    p: &ProblemSpec,
    family: &FamilyConfig,
    costs: &CostModel,
    cfg: &SearchConfig,
    workers: usize,
) -> Result<Vec<Ranked>, SearchError> {
    family.validate().map_err(SearchError::Config)?;
    let candidates = crate::family::enumerate_algorithms(family);
    rank_candidates(p, &candidates, &p.initial_points[0], costs, cfg, workers)
}

/// `1 + #{feasible entries with strictly lower cost}`; `None` if not feasible.
pub fn competition_rank(list: &[Ranked], entry: &Ranked) -> Option<usize> {
    let c = entry.verdict.cost.filter(|_| entry.verdict.status == Status::Feasible)?;
    Some(
        1 + list
            .iter()
            .filter(|r| r.verdict.status == Status::Feasible && r.verdict.cost.is_some_and(|o| o < c))
            .count(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub index: usize,
    pub algorithm: String,
    pub n_starts: usize,
    pub n_feasible: usize,
    /// Starts at which this algorithm has competition rank 1.
    pub n_cheapest: usize,
    pub mean_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub starts: Vec<Vec<f64>>,
    pub per_start: Vec<Vec<Ranked>>,
    pub aggregate: Vec<AggregateRow>,
}

/// Ranks `candidates` from each start and aggregates per algorithm.
pub fn ensemble(
    p: &ProblemSpec,
    starts: &[Vec<f64>],
    candidates: &[AlgorithmSpec],
    costs: &CostModel,
    cfg: &SearchConfig,
    workers: usize,
) -> Result<EnsembleResult, SearchError> {
    for s in starts {
        if s.len() != p.n || !p.in_box(s) {
            return Err(SearchError::Config(format!("start {s:?} is not inside the problem box")));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..starts.len())
        .flat_map(|s| (0..candidates.len()).map(move |a| (s, a)))
        .collect();
    let flat = pool(workers)?.install(|| {
        pairs
            .par_iter()
            .map(|&(s, a)| {
                Ok(Ranked {
                    index: a,
                    algorithm: candidates[a].to_string(),
                    verdict: search_schedule(p, &candidates[a], &starts[s], costs, cfg)?,
                })
            })
            .collect::<Result<Vec<_>, SearchError>>()
    })?;
    let mut per_start: Vec<Vec<Ranked>> = flat.chunks(candidates.len().max(1)).map(|c| c.to_vec()).collect();
    per_start.resize(starts.len(), Vec::new());
    for list in &mut per_start {
        list.sort_by(rank_order);
    }

    let aggregate = candidates
        .iter()
        .enumerate()
        .map(|(index, alg)| {
            let mut row = AggregateRow {
                index,
                algorithm: alg.to_string(),
                n_starts: starts.len(),
                n_feasible: 0,
                n_cheapest: 0,
                mean_cost: None,
            };
            let mut sum = 0.0;
            for list in &per_start {
                let entry = list.iter().find(|r| r.index == index).expect("every candidate is ranked");
                if let Some(rank) = competition_rank(list, entry) {
                    row.n_feasible += 1;
                    sum += entry.verdict.cost.unwrap_or(0.0);
                    if rank == 1 {
                        row.n_cheapest += 1;
                    }
                }
            }
            if row.n_feasible > 0 {
                row.mean_cost = Some(sum / row.n_feasible as f64);
            }
            row
        })
        .collect();

    Ok(EnsembleResult {
        starts: starts.to_vec(),
        per_start,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{AlgorithmKind, ExponentTuple};
    use crate::problem::{builtin, ProblemDef, ProblemKind};

    fn sq3(lo: f64, hi: f64) -> ProblemSpec {
        ProblemSpec::from_def(&ProblemDef {
            name: "sq3".into(),
            kind: ProblemKind::RootFinding,
            n: 1,
            exprs: vec!["x^2-3".into()],
            box_lo: vec![lo],
            box_hi: vec![hi],
            initial_points: vec![vec![0.1]],
            epsilon: 1e-3,
            it_max: 10,
            j_max: 2,
        })
        .unwrap()
    }

    #[test]
    fn schedule_key_round_trip() {
        let s = vec![
            StepChoice::new(Sign::Minus, 10),
            StepChoice::new(Sign::Plus, 0),
            StepChoice::new(Sign::Minus, 0),
        ];
        let key = s
            .iter()
            .enumerate()
            .fold(0u128, |k, (i, c)| k | (step_code(*c) << key_shift(i)));
        assert_eq!(decode_schedule(key, 3), s);
        // Lexicographic: + before −, small abar first.
        assert!(step_code(StepChoice::new(Sign::Plus, 10)) < step_code(StepChoice::new(Sign::Minus, 0)));
    }

    #[test]
    fn simulate_records_box_exit() {
        let p = sq3(-2.0, 2.0);
        let alg = AlgorithmSpec::single([1, 1, -1]);
        let sched = vec![StepChoice::new(Sign::Minus, 0); 3];
        let t = simulate(&p, &alg, &[3.0], &sched, &CostModel::default(), &SearchConfig::default()).unwrap();
        assert!(t.points.is_empty());
        assert_eq!(t.failure.unwrap().kind, FailureKindTag::BoxExit);

        let cfg = SearchConfig { enforce_box: false, ..SearchConfig::default() };
        let t = simulate(&p, &alg, &[3.0], &sched, &CostModel::default(), &cfg).unwrap();
        assert_eq!(t.points[1][0], -15.0);
        assert_eq!(t.points[2][0], 3315.0);
        assert!(!t.feasible);
        assert_eq!(t.points.len(), t.schedule.len() + 1);
    }

    #[test]
    fn converged_start_costs_nothing() {
        let p = builtin("cubic_root").unwrap();
        let alg = AlgorithmSpec::single([1, -1, 0]);
        let t = simulate(&p, &alg, &[1.0], &[], &CostModel::default(), &SearchConfig::default()).unwrap();
        assert!(t.feasible);
        assert_eq!((t.it_con, t.total_cost), (Some(0), 0.0));
        let v = search_schedule(&p, &alg, &[1.0], &CostModel::default(), &SearchConfig::default()).unwrap();
        assert_eq!((v.status, v.cost, v.nodes_expanded), (Status::Feasible, Some(0.0), 0));
    }

    #[test]
    fn schedule_too_long_rejected() {
        let p = builtin("cubic_root").unwrap();
        let alg = AlgorithmSpec::single([1, -1, 0]);
        let sched = vec![StepChoice::new(Sign::Minus, 0); 11];
        assert!(matches!(
            simulate(&p, &alg, &[0.1], &sched, &CostModel::default(), &SearchConfig::default()),
            Err(SearchError::ScheduleTooLong { len: 11, it_max: 10 })
        ));
    }

    #[test]
    fn counted_costs_for_newton() {
        // Three counted Newton iterations at abar = 0, 1, 0 cost 21 + 22 + 21.
        let m = CostModel::default();
        let alg = AlgorithmSpec::single([1, -1, 0]);
        let t = Trajectory {
            points: vec![vec![0.0]; 5],
            residuals: vec![1.0, 0.5, 0.2, 0.1, 0.0],
            schedule: vec![
                StepChoice::new(Sign::Minus, 0),
                StepChoice::new(Sign::Minus, 1),
                StepChoice::new(Sign::Minus, 0),
                StepChoice::new(Sign::Minus, 4),
            ],
            counted: vec![true, true, true, false],
            iter_costs: vec![],
            it_con: Some(4),
            total_cost: 0.0,
            feasible: true,
            failure: None,
        };
        assert_eq!(m.schedule_cost(&alg, &t, CostMode::Counted).unwrap(), 64.0);
    }

    #[test]
    fn residual_weighted_cost() {
        let m = CostModel::default();
        let alg = AlgorithmSpec::single([0, 1, 0]);
        let t = Trajectory {
            points: vec![vec![0.0]; 3],
            residuals: vec![1.0, 0.5, 0.01],
            schedule: vec![StepChoice::new(Sign::Minus, 0); 2],
            counted: vec![true, true],
            iter_costs: vec![],
            it_con: Some(2),
            total_cost: 0.0,
            feasible: true,
            failure: None,
        };
        let c = m.schedule_cost(&alg, &t, CostMode::ResidualWeighted).unwrap();
        assert!((c - 5.1).abs() < 1e-12);
    }

    #[test]
    fn steepest_descent_solves_quartic() {
        let p = builtin("quartic_min").unwrap();
        let alg = AlgorithmSpec::single([0, 1, 0]);
        let v = search_schedule(&p, &alg, &p.initial_points[0], &CostModel::default(), &SearchConfig::default())
            .unwrap();
        assert_eq!(v.status, Status::Feasible);
        assert!(v.certified_optimal());
        let best = v.best.unwrap();
        assert!(best.feasible);
        assert_eq!(Some(best.total_cost), v.cost);
    }

    #[test]
    fn tiny_instance_matches_brute_force() {
        let mut p = builtin("quartic_min").unwrap();
        p.it_max = 3;
        let cfg = SearchConfig { abar_max: 2, ..SearchConfig::default() };
        let m = CostModel::default();
        for nu in [[0, 1, 0], [1, 0, 0], [0, 0, 0], [0, 1, -1], [2, -1, 1]] {
            let alg = AlgorithmSpec::single(nu);
            let v = search_schedule(&p, &alg, &[0.1], &m, &cfg).unwrap();
            let bf = brute_force_schedule(&p, &alg, &[0.1], &m, &cfg).unwrap();
            assert_eq!(v.status == Status::Feasible, bf.is_some(), "{alg}");
            assert_eq!(v.cost, bf.map(|t| t.total_cost), "{alg}");
        }
    }

    #[test]
    fn monotone_pruning_is_sound() {
        let p = builtin("strongly_convex_1d").unwrap();
        let cfg = SearchConfig { monotone_residual: true, ..SearchConfig::default() };
        let alg = AlgorithmSpec::two_step([0, 1, 0], 0.25);
        let v = search_schedule(&p, &alg, &[0.1], &CostModel::default(), &cfg).unwrap();
        if let Some(t) = v.best {
            assert!(t.residuals.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn memoization_never_beats_exact() {
        let p = builtin("strongly_convex_1d").unwrap();
        let m = CostModel::default();
        let exact = SearchConfig::default();
        let memo = SearchConfig { memoize_states: true, ..SearchConfig::default() };
        for nu in [[0, 1, 0], [0, 0, 0], [1, 1, 0]] {
            let alg = AlgorithmSpec::single(nu);
            let a = search_schedule(&p, &alg, &[0.1], &m, &exact).unwrap();
            let b = search_schedule(&p, &alg, &[0.1], &m, &memo).unwrap();
            if let (Some(ca), Some(cb)) = (a.cost, b.cost) {
                assert!(cb >= ca);
            }
        }
    }

    #[test]
    fn ensemble_of_one_matches_discover_order() {
        let p = builtin("cubic_root").unwrap();
        let family = FamilyConfig { j_max: 1, ..FamilyConfig::default() };
        let cfg = SearchConfig { node_budget: 2000, ..SearchConfig::default() };
        let m = CostModel::default();
        let d = discover(&p, &family, &m, &cfg, 1).unwrap();
        let cands = crate::family::enumerate_algorithms(&family);
        let e = ensemble(&p, &[vec![0.1]], &cands, &m, &cfg, 1).unwrap();
        assert_eq!(e.per_start[0], d);
        assert!(ensemble(&p, &[vec![5.0]], &cands, &m, &cfg, 1).is_err());
    }

    #[test]
    fn two_step_kind_with_zero_beta_is_single_step() {
        let p = builtin("quad_2d").unwrap();
        let a = AlgorithmSpec::single([0, 1, 0]);
        let b = AlgorithmSpec { kind: AlgorithmKind::TwoStep, nu: ExponentTuple::new([0, 1, 0]), beta: 0.0 };
        let m = CostModel::default();
        let cfg = SearchConfig::default();
        let va = search_schedule(&p, &a, &[-1.0, -1.0], &m, &cfg).unwrap();
        let vb = search_schedule(&p, &b, &[-1.0, -1.0], &m, &cfg).unwrap();
        assert_eq!(va, vb);
    }
}
