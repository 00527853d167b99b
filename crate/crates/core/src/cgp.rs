//! Cartesian genetic programming over single-row gate genomes with a
//! (1 + λ) strategy minimizing area under an error threshold.

use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdderr::{component_error, BddOptions, ErrorMode, ErrorReport, Metric};
use crate::bdd::DEFAULT_NODE_BUDGET;
use crate::error::{Error, Result};
use crate::netlist::{Gate, Netlist, NodeId, Output};
use crate::tech::{CellLibrary, GateKind};

/// Gate kinds available to evolved nodes; a node's function gene indexes this.
pub const FUNCTIONS: [GateKind; 10] = GateKind::ALL;

fn function_index(kind: GateKind) -> u32 {
    FUNCTIONS.iter().position(|&k| k == kind).unwrap() as u32
}

/// Single-row genome with unrestricted levels-back.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome {
    pub inputs: usize,
    /// `(function, fanin a, fanin b)` per node; fanins address primary
    /// inputs (`< inputs`) or earlier nodes (`inputs + j`).
    pub nodes: Vec<[u32; 3]>,
    pub outputs: Vec<u32>,
}

impl Genome {
    /// Places the seed's gates at even positions of a row twice as long and
    /// fills odd positions with random nodes.
    pub fn from_netlist(seed: &Netlist, rng: &mut impl Rng) -> Self {
        let n = seed.num_inputs();
        let g = seed.gates().len();
        let len = (2 * g).max(2);
        let pos = |id: NodeId| -> u32 {
            let id = id as usize;
            if id < n {
                id as u32
            } else {
                (n + 2 * (id - n)) as u32
            }
        };
        let mut nodes = Vec::with_capacity(len);
        for j in 0..len {
            let legal = (n + j) as u32;
            if j % 2 == 0 && j / 2 < g {
                let gate = &seed.gates()[j / 2];
                nodes.push([function_index(gate.kind), pos(gate.fanin[0]), pos(gate.fanin[1])]);
            } else {
                let f = rng.gen_range(0..FUNCTIONS.len() as u32);
                nodes.push([f, rng.gen_range(0..legal.max(1)), rng.gen_range(0..legal.max(1))]);
            }
        }
        let outputs = seed.output_nodes().map(pos).collect();
        Self { inputs: n, nodes, outputs }
    }

    pub fn num_genes(&self) -> usize {
        3 * self.nodes.len() + self.outputs.len()
    }

    /// Number of legal values of gene `g`.
    fn gene_range(&self, g: usize) -> u32 {
        let l = 3 * self.nodes.len();
        if g < l {
            match g % 3 {
                0 => FUNCTIONS.len() as u32,
                _ => (self.inputs + g / 3) as u32,
            }
        } else {
            (self.inputs + self.nodes.len()) as u32
        }
    }

    fn gene(&self, g: usize) -> u32 {
        let l = 3 * self.nodes.len();
        if g < l {
            self.nodes[g / 3][g % 3]
        } else {
            self.outputs[g - l]
        }
    }

    fn set_gene(&mut self, g: usize, v: u32) {
        let l = 3 * self.nodes.len();
        if g < l {
            self.nodes[g / 3][g % 3] = v;
        } else {
            self.outputs[g - l] = v;
        }
    }

    /// Changes `count` distinct genes, each to a different legal value.
    /// Genes with a single legal value are never chosen.
    pub fn mutate(&self, count: usize, rng: &mut impl Rng) -> Genome {
        let mut child = self.clone();
        let mutable: Vec<usize> = (0..self.num_genes()).filter(|&g| self.gene_range(g) > 1).collect();
        let count = count.min(mutable.len());
        for pick in sample(rng, mutable.len(), count) {
            let g = mutable[pick];
            let range = self.gene_range(g);
            let old = self.gene(g);
            let mut v = rng.gen_range(0..range - 1);
            if v >= old {
                v += 1;
            }
            child.set_gene(g, v);
        }
        child
    }

    pub fn is_valid(&self) -> bool {
        self.nodes.iter().enumerate().all(|(j, nd)| {
            let legal = (self.inputs + j) as u32;
            (nd[0] as usize) < FUNCTIONS.len()
                && (nd[1] < legal || FUNCTIONS[nd[0] as usize].arity() == 0 && nd[1] == 0)
                && (nd[2] < legal || FUNCTIONS[nd[0] as usize].arity() < 2 && nd[2] == 0)
        }) && self.outputs.iter().all(|&o| (o as usize) < self.inputs + self.nodes.len())
    }

    /// Active nodes only, in row order.
    pub fn decode(&self, input_names: &[String], output_names: &[String]) -> Result<Netlist> {
        let n = self.inputs;
        let mut active = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = self.outputs.iter().map(|&o| o as usize).collect();
        while let Some(x) = stack.pop() {
            if x < n || active[x - n] {
                continue;
            }
            active[x - n] = true;
            let nd = self.nodes[x - n];
            let arity = FUNCTIONS[nd[0] as usize].arity();
            stack.extend(nd[1..1 + arity].iter().map(|&f| f as usize));
        }
        let mut map = vec![0 as NodeId; n + self.nodes.len()];
        for (i, m) in map.iter_mut().enumerate().take(n) {
            *m = i as NodeId;
        }
        let mut gates = Vec::new();
        for (j, nd) in self.nodes.iter().enumerate() {
            if !active[j] {
                continue;
            }
            let kind = FUNCTIONS[nd[0] as usize];
            let a = if kind.arity() >= 1 { map[nd[1] as usize] } else { 0 };
            let b = if kind.arity() == 2 { map[nd[2] as usize] } else { 0 };
            map[n + j] = (n + gates.len()) as NodeId;
            gates.push(Gate::new(kind, a, b));
        }
        let outputs = self
            .outputs
            .iter()
            .zip(output_names)
            .map(|(&o, name)| Output { name: name.clone(), node: map[o as usize] })
            .collect();
        Netlist::new(input_names.to_vec(), gates, outputs)
    }
}

/// Error measure constrained by the threshold `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    Ep,
    Mde,
    Wcde,
    Mae,
    Wcae,
}

impl ErrorMetric {
    pub fn applies_to(self, metric: Metric) -> bool {
        match self {
            ErrorMetric::Ep => true,
            ErrorMetric::Mde | ErrorMetric::Wcde => metric == Metric::Ltg,
            ErrorMetric::Mae | ErrorMetric::Wcae => metric == Metric::Popcount,
        }
    }

    pub fn value(self, r: &ErrorReport) -> f64 {
        match self {
            ErrorMetric::Ep => r.ep_f64(),
            ErrorMetric::Mde | ErrorMetric::Mae => r.mean_f64(),
            ErrorMetric::Wcde | ErrorMetric::Wcae => r.worst as f64,
        }
    }

    /// Exact `ε ≤ τ` test.
    pub fn satisfied(self, r: &ErrorReport, tau: f64) -> bool {
        let t = BigRational::from_float(tau).unwrap_or_else(|| BigRational::from_integer(BigInt::from(i64::MAX)));
        let k: BigInt = r.domain.clone().into();
        match self {
            ErrorMetric::Ep => BigRational::from_integer(BigInt::from(r.mismatches.clone())) <= t * k,
            ErrorMetric::Mde | ErrorMetric::Mae => BigRational::from_integer(BigInt::from(r.distance_sum.clone())) <= t * k,
            ErrorMetric::Wcde | ErrorMetric::Wcae => BigRational::from_integer(BigInt::from(r.worst)) <= t,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorMetric::Ep => "ep",
            ErrorMetric::Mde => "mde",
            ErrorMetric::Wcde => "wcde",
            ErrorMetric::Mae => "mae",
            ErrorMetric::Wcae => "wcae",
        }
    }
}

impl std::fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ErrorMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ep" => ErrorMetric::Ep,
            "mde" => ErrorMetric::Mde,
            "wcde" => ErrorMetric::Wcde,
            "mae" => ErrorMetric::Mae,
            "wcae" => ErrorMetric::Wcae,
            _ => return Err(Error::Config(format!("unknown error metric `{s}`"))),
        })
    }
}

/// How candidate errors are computed during search. Both engines are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorEngine {
    Bdd,
    Exhaustive,
    /// Exhaustive simulation up to `exhaustive_max_inputs`, BDDs beyond.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgpConfig {
    pub lambda: usize,
    /// Fraction of genes mutated per offspring (at least one).
    pub mutation_rate: f64,
    pub max_iterations: Option<u64>,
    pub time_limit_secs: Option<f64>,
    pub metric: ErrorMetric,
    pub tau: f64,
    pub seed: u64,
    pub engine: ErrorEngine,
    pub exhaustive_max_inputs: usize,
    pub node_budget: usize,
    pub parallel: bool,
}

impl Default for CgpConfig {
    fn default() -> Self {
        Self {
            lambda: 4,
            mutation_rate: 0.01,
            max_iterations: Some(10_000),
            time_limit_secs: None,
            metric: ErrorMetric::Mae,
            tau: 0.0,
            seed: 0,
            engine: ErrorEngine::Auto,
            exhaustive_max_inputs: 20,
            node_budget: DEFAULT_NODE_BUDGET,
            parallel: false,
        }
    }
}

impl CgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda == 0 {
            return Err(Error::Config("lambda must be at least 1".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Config("tau must be non-negative".into()));
        }
        if self.max_iterations.is_none() && self.time_limit_secs.is_none() {
            return Err(Error::Config("set an iteration or time limit".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::Config("mutation rate must lie in [0,1]".into()));
        }
        Ok(())
    }

    pub fn mutation_count(&self, genes: usize) -> usize {
        ((self.mutation_rate * genes as f64).round() as usize).max(1)
    }
}

/// Exhaustive stimulus set with precomputed exact responses.
struct Oracle {
    chunks: Vec<Vec<u64>>,
    lanes: usize,
    /// Per stimulus: `|S| + 1` (LTG) or the exact popcount value.
    reference: Vec<u32>,
    exact_words: Vec<Vec<u64>>,
    metric: Metric,
    inputs: usize,
}

const PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

fn lane_value(words: &[u64], lane: usize) -> u32 {
    words.iter().enumerate().map(|(b, &w)| (((w >> lane) & 1) as u32) << b).sum()
}

impl Oracle {
    fn new(exact: &Netlist, mode: &ErrorMode) -> Self {
        let n = exact.num_inputs();
        let total = 1u64 << n;
        let lanes = total.min(64) as usize;
        let mut chunks = Vec::new();
        let mut exact_words: Vec<Vec<u64>> = Vec::new();
        let mut scratch = Vec::new();
        for c in 0..total.div_ceil(64) {
            let stim: Vec<u64> = (0..n)
                .map(|i| if i < 6 { PATTERNS[i] } else if (c >> (i - 6)) & 1 == 1 { u64::MAX } else { 0 })
                .collect();
            exact.simulate_words_into(&stim, &mut scratch);
            exact_words.push(exact.output_nodes().map(|o| scratch[o as usize]).collect());
            chunks.push(stim);
        }
        let (metric, reference) = match mode {
            ErrorMode::Ltg(spec) => {
                let k = spec.k as usize;
                let mask = (1u64 << k) - 1;
                let signs: Vec<i64> = spec.active_inputs().iter().map(|&i| spec.weights[i] as i64).collect();
                let r = (0..total)
                    .map(|s| {
                        let sum: i64 = signs.iter().enumerate().map(|(j, &w)| w * ((s >> (j * k)) & mask) as i64).sum();
                        sum.unsigned_abs() as u32 + 1
                    })
                    .collect();
                (Metric::Ltg, r)
            }
            ErrorMode::Popcount => {
                let r = (0..total as usize).map(|s| lane_value(&exact_words[s / 64], s % 64)).collect();
                (Metric::Popcount, r)
            }
        };
        Self { chunks, lanes, reference, exact_words, metric, inputs: n }
    }

    /// Full report when the candidate can still satisfy the threshold,
    /// `None` as soon as it cannot.
    fn evaluate(&self, cand: &Netlist, metric: ErrorMetric, tau: f64) -> Option<ErrorReport> {
        let domain = 1u64 << self.inputs;
        let sum_limit = (tau * domain as f64).floor().min(u128::MAX as f64) as u128;
        let worst_limit = tau.floor().min(u64::MAX as f64) as u64;
        let mut scratch = Vec::new();
        let (mut mism, mut sum, mut worst) = (0u64, 0u128, 0u64);
        let mut outs = Vec::with_capacity(cand.num_outputs());
        for (c, stim) in self.chunks.iter().enumerate() {
            cand.simulate_words_into(stim, &mut scratch);
            outs.clear();
            outs.extend(cand.output_nodes().map(|o| scratch[o as usize]));
            let ex = &self.exact_words[c];
            let mut diff = ex.iter().zip(&outs).fold(0, |acc, (a, b)| acc | (a ^ b));
            if self.lanes < 64 {
                diff &= (1u64 << self.lanes) - 1;
            }
            while diff != 0 {
                let lane = diff.trailing_zeros() as usize;
                diff &= diff - 1;
                let s = c * 64 + lane;
                let d = match self.metric {
                    Metric::Ltg => self.reference[s] as u64,
                    Metric::Popcount => (self.reference[s] as i64 - lane_value(&outs, lane) as i64).unsigned_abs(),
                };
                mism += 1;
                sum += d as u128;
                worst = worst.max(d);
            }
            let over = match metric {
                ErrorMetric::Ep => mism as u128 > sum_limit,
                ErrorMetric::Mde | ErrorMetric::Mae => sum > sum_limit,
                ErrorMetric::Wcde | ErrorMetric::Wcae => worst > worst_limit,
            };
            if over {
                return None;
            }
        }
        let report = ErrorReport {
            metric: self.metric,
            domain: BigUint::from(domain),
            mismatches: BigUint::from(mism),
            distance_sum: BigUint::from(sum),
            worst,
            exhaustive: true,
        };
        metric.satisfied(&report, tau).then_some(report)
    }
}

/// Everything fitness evaluation needs besides the candidate.
pub struct FitnessContext<'a> {
    pub exact: &'a Netlist,
    pub mode: ErrorMode,
    pub lib: &'a CellLibrary,
    pub metric: ErrorMetric,
    pub tau: f64,
    pub node_budget: usize,
    oracle: Option<Oracle>,
}

impl<'a> FitnessContext<'a> {
    pub fn new(exact: &'a Netlist, mode: ErrorMode, lib: &'a CellLibrary, cfg: &CgpConfig) -> Result<Self> {
        let kind = match &mode {
            ErrorMode::Ltg(_) => Metric::Ltg,
            ErrorMode::Popcount => Metric::Popcount,
        };
        if !cfg.metric.applies_to(kind) {
            return Err(Error::Config(format!("metric {} does not apply to this component", cfg.metric)));
        }
        let exhaustive = match cfg.engine {
            ErrorEngine::Bdd => false,
            ErrorEngine::Exhaustive => {
                if exact.num_inputs() > crate::bdderr::BRUTE_FORCE_MAX_INPUTS {
                    return Err(Error::Refused("too many inputs for exhaustive evaluation".into()));
                }
                true
            }
            ErrorEngine::Auto => exact.num_inputs() <= cfg.exhaustive_max_inputs,
        };
        let oracle = exhaustive.then(|| Oracle::new(exact, &mode));
        Ok(Self { exact, mode, lib, metric: cfg.metric, tau: cfg.tau, node_budget: cfg.node_budget, oracle })
    }

    /// Exact error report of a candidate via BDDs.
    pub fn report(&self, cand: &Netlist) -> Result<ErrorReport> {
        let opts = BddOptions { node_budget: self.node_budget, order: None };
        component_error(self.exact, cand, &self.mode, &opts)
    }

    /// Error report when the candidate meets the threshold.
    pub fn feasible_report(&self, cand: &Netlist) -> Option<ErrorReport> {
        if let Some(o) = &self.oracle {
            return o.evaluate(cand, self.metric, self.tau);
        }
        match self.report(cand) {
            Ok(r) => self.metric.satisfied(&r, self.tau).then_some(r),
            Err(e) => {
                log::warn!("candidate rejected: {e}");
                None
            }
        }
    }

    /// Area when `ε ≤ τ`, `+∞` otherwise.
    pub fn fitness(&self, cand: &Netlist) -> f64 {
        match self.feasible_report(cand) {
            Some(_) => cand.area(self.lib).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Iterations,
    TimeLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub iteration: u64,
    pub area: f64,
}

#[derive(Clone, Debug)]
pub struct CgpResult {
    pub genome: Genome,
    pub netlist: Netlist,
    pub area: f64,
    pub report: ErrorReport,
    pub iterations: u64,
    pub evaluations: u64,
    pub termination: Termination,
    pub elapsed: Duration,
    /// Best area after each improvement, starting with the seed.
    pub history: Vec<HistoryPoint>,
}

/// Evolves an approximation of `seed` (which must meet the threshold).
pub fn evolve(seed: &Netlist, mode: ErrorMode, lib: &CellLibrary, cfg: &CgpConfig) -> Result<CgpResult> {
    cfg.validate()?;
    let ctx = FitnessContext::new(seed, mode, lib, cfg)?;
    let in_names = seed.input_names().to_vec();
    let out_names: Vec<String> = seed.outputs().iter().map(|o| o.name.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut parent = Genome::from_netlist(seed, &mut rng);
    let mut parent_net = parent.decode(&in_names, &out_names)?;
    let mut parent_fit = ctx.fitness(&parent_net);
    if !parent_fit.is_finite() {
        return Err(Error::Contract("seed circuit does not satisfy the error threshold".into()));
    }
    let mutations = cfg.mutation_count(parent.num_genes());
    let start = Instant::now();
    let limit = cfg.time_limit_secs.map(Duration::from_secs_f64);
    let mut history = vec![HistoryPoint { iteration: 0, area: parent_fit }];
    let mut iterations = 0u64;
    let mut evaluations = 0u64;
    let termination = loop {
        if cfg.max_iterations.is_some_and(|m| iterations >= m) {
            break Termination::Iterations;
        }
        if limit.is_some_and(|l| start.elapsed() >= l) {
            break Termination::TimeLimit;
        }
        iterations += 1;
        let children: Vec<Genome> = (0..cfg.lambda).map(|_| parent.mutate(mutations, &mut rng)).collect();
        let assess = |child: &Genome| -> (f64, Option<Netlist>, bool) {
            let net = match child.decode(&in_names, &out_names) {
                Ok(n) => n,
                Err(_) => return (f64::INFINITY, None, false),
            };
            if net == parent_net {
                return (parent_fit, Some(net), false);
            }
            let area = net.area(lib).unwrap_or(f64::INFINITY);
            if area > parent_fit {
                return (f64::INFINITY, None, false);
            }
            let fit = if ctx.feasible_report(&net).is_some() { area } else { f64::INFINITY };
            (fit, Some(net), true)
        };
        let scored: Vec<(f64, Option<Netlist>, bool)> = if cfg.parallel {
            children.par_iter().map(assess).collect()
        } else {
            children.iter().map(assess).collect()
        };
        evaluations += scored.iter().filter(|s| s.2).count() as u64;
        let mut best: Option<usize> = None;
        for (i, s) in scored.iter().enumerate() {
            if s.0.is_finite() && best.map_or(true, |b| s.0 < scored[b].0) {
                best = Some(i);
            }
        }
        if let Some(b) = best {
            if scored[b].0 <= parent_fit {
                let improved = scored[b].0 < parent_fit;
                parent = children[b].clone();
                parent_fit = scored[b].0;
                parent_net = scored[b].1.clone().unwrap();
                if improved {
                    history.push(HistoryPoint { iteration: iterations, area: parent_fit });
                }
            }
        }
    };
    let report = ctx.report(&parent_net)?;
    Ok(CgpResult {
        genome: parent,
        netlist: parent_net,
        area: parent_fit,
        report,
        iterations,
        evaluations,
        termination,
        elapsed: start.elapsed(),
        history,
    })
}

/// Machine-readable record of one CGP run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: CgpConfig,
    pub termination: Termination,
    pub iterations: u64,
    pub evaluations: u64,
    pub seed_area: f64,
    pub best_area: f64,
    pub report: ErrorReport,
    pub netlist_hash: String,
    pub history: Vec<HistoryPoint>,
}

impl CgpResult {
    pub fn manifest(&self, cfg: &CgpConfig) -> RunManifest {
        RunManifest {
            config: cfg.clone(),
            termination: self.termination,
            iterations: self.iterations,
            evaluations: self.evaluations,
            seed_area: self.history[0].area,
            best_area: self.area,
            report: self.report.clone(),
            netlist_hash: self.netlist.content_hash(),
            history: self.history.clone(),
        }
    }

    /// Writes `<stem>.gnl` and `<stem>.json` into `dir`.
    pub fn write(&self, cfg: &CgpConfig, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.gnl")), self.netlist.to_gnl())?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.manifest(cfg))?)?;
        Ok(())
    }
}

/// Fraction of area saved relative to `reference`.
pub fn area_reduction(area: f64, reference: f64) -> f64 {
    if reference <= 0.0 {
        0.0
    } else {
        1.0 - area / reference
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuitgen::{gen_ltg_exact, gen_popcount_exact, LtgSpec, LtgStyle, PopcountSpec};
    use crate::netlist::Builder;

    fn lib() -> CellLibrary {
        CellLibrary::default_lib()
    }

    fn genes(g: &Genome) -> Vec<u32> {
        (0..g.num_genes()).map(|i| g.gene(i)).collect()
    }

    #[test]
    fn seed_decodes_to_seed() {
        let net = gen_popcount_exact(PopcountSpec::new(5).unwrap()).unwrap();
        let g = Genome::from_netlist(&net, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(g.nodes.len(), 2 * net.gates().len());
        let names: Vec<String> = net.outputs().iter().map(|o| o.name.clone()).collect();
        assert_eq!(g.decode(net.input_names(), &names).unwrap(), net);
    }

    #[test]
    fn mutation_counts() {
        let net = gen_popcount_exact(PopcountSpec::new(4).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Genome::from_netlist(&net, &mut rng);
        assert_eq!(g.mutate(0, &mut rng), g);
        let base = genes(&g);
        for _ in 0..200 {
            let c = g.mutate(1, &mut rng);
            let d = genes(&c).iter().zip(&base).filter(|(a, b)| a != b).count();
            assert_eq!(d, 1);
        }
        let c = g.mutate(5, &mut rng);
        assert_eq!(genes(&c).iter().zip(&base).filter(|(a, b)| a != b).count(), 5);
    }

    #[test]
    fn fitness_examples() {
        let spec = LtgSpec::new(vec![1, 1, -1], 1).unwrap();
        let exact = gen_ltg_exact(&spec, LtgStyle::TwoTree).unwrap();
        let b = Builder::new(exact.input_names().to_vec());
        let one = b.finish([("y", crate::netlist::Sig::ONE)]).unwrap();
        let l = lib();
        for engine in [ErrorEngine::Bdd, ErrorEngine::Exhaustive] {
            let mut cfg = CgpConfig { metric: ErrorMetric::Mde, tau: 0.1, engine, ..Default::default() };
            let ctx = FitnessContext::new(&exact, ErrorMode::Ltg(spec.clone()), &l, &cfg).unwrap();
            assert_eq!(ctx.fitness(&exact), exact.area(&l).unwrap());
            assert!(ctx.fitness(&one).is_infinite());
            cfg.tau = 0.3;
            let ctx = FitnessContext::new(&exact, ErrorMode::Ltg(spec.clone()), &l, &cfg).unwrap();
            assert_eq!(ctx.fitness(&one), 0.0);
            cfg.tau = 0.25;
            let ctx = FitnessContext::new(&exact, ErrorMode::Ltg(spec.clone()), &l, &cfg).unwrap();
            assert_eq!(ctx.fitness(&one), 0.0);
        }
    }

    #[test]
    fn zero_tau_keeps_function() {
        let net = gen_popcount_exact(PopcountSpec::new(4).unwrap()).unwrap();
        let cfg = CgpConfig { tau: 0.0, max_iterations: Some(2000), seed: 5, ..Default::default() };
        let r = evolve(&net, ErrorMode::Popcount, &lib(), &cfg).unwrap();
        assert!(r.area <= net.area(&lib()).unwrap());
        for s in 0..16 {
            assert_eq!(r.netlist.eval_packed(s), net.eval_packed(s));
        }
        assert!(r.history.windows(2).all(|w| w[1].area < w[0].area));
    }

    #[test]
    fn deterministic_under_seed() {
        let net = gen_popcount_exact(PopcountSpec::new(5).unwrap()).unwrap();
        let cfg = CgpConfig { tau: 0.5, max_iterations: Some(1500), seed: 9, ..Default::default() };
        let a = evolve(&net, ErrorMode::Popcount, &lib(), &cfg).unwrap();
        let b = evolve(&net, ErrorMode::Popcount, &lib(), &CgpConfig { parallel: true, ..cfg.clone() }).unwrap();
        assert_eq!(a.genome, b.genome);
        assert_eq!(a.history, b.history);
        assert!(ErrorMetric::Mae.satisfied(&a.report, 0.5));
    }

    #[test]
    fn infeasible_seed_rejected() {
        let spec = LtgSpec::new(vec![1, -1], 1).unwrap();
        let exact = gen_ltg_exact(&spec, LtgStyle::TwoTree).unwrap();
        let cfg = CgpConfig { metric: ErrorMetric::Mae, ..Default::default() };
        assert!(evolve(&exact, ErrorMode::Ltg(spec), &lib(), &cfg).is_err());
        let cfg = CgpConfig { max_iterations: None, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
