//! Libraries of approximate LTG and popcount components: threshold
//! schedules, CGP sweeps, Pareto filtering and on-disk persistence.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdderr::{component_error, BddOptions, ErrorMode, ErrorReport};
use crate::cgp::{evolve, CgpConfig, ErrorMetric};
use crate::circuitgen::{gen_ltg_exact_limited, gen_popcount_exact, LtgKey, LtgStyle, PopcountSpec, DEFAULT_MAX_LTG_BITS};
use crate::error::{Error, Result};
use crate::netlist::Netlist;
use crate::tech::CellLibrary;
use crate::tnn::{ComponentSource, TnnModel};

/// Logarithmically spaced thresholds including both endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSchedule {
    pub metric: ErrorMetric,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl TauSchedule {
    pub fn new(metric: ErrorMetric, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi >= lo) || count == 0 {
            return Err(Error::Config(format!("invalid threshold range [{lo}, {hi}] with {count} points")));
        }
        Ok(Self { metric, lo, hi, count })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    self.lo
                } else if i + 1 == self.count {
                    self.hi
                } else {
                    (a + (b - a) * i as f64 / (self.count - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// Popcount thresholds: mae in `[0.1, 0.5·2^g]` and wcae in `[1, 0.5·2^m]`
/// with `g = ⌈log2 m⌉`.
pub fn popcount_tau_schedule(m: usize, count: usize) -> Result<(TauSchedule, TauSchedule)> {
    if m < 2 {
        return Err(Error::Config("popcount threshold schedules need m >= 2".into()));
    }
    let g = PopcountSpec { m }.log2_ceil();
    Ok((
        TauSchedule::new(ErrorMetric::Mae, 0.1, 0.5 * 2f64.powi(g as i32), count)?,
        TauSchedule::new(ErrorMetric::Wcae, 1.0, 0.5 * 2f64.powi(m as i32), count)?,
    ))
}

/// LTG thresholds scaled by `R = Smax + 1`, the largest possible distance:
/// mde in `[0.001·R, 0.1·R]` and wcde in `[1, 0.5·R]`.
pub fn ltg_tau_schedule(key: LtgKey, count: usize) -> Result<(TauSchedule, TauSchedule)> {
    let r = (key.pos.max(key.neg) as f64) * ((1u64 << key.k) - 1) as f64 + 1.0;
    Ok((
        TauSchedule::new(ErrorMetric::Mde, 0.001 * r, 0.1 * r, count)?,
        TauSchedule::new(ErrorMetric::Wcde, 1.0, (0.5 * r).max(1.0), count)?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentKey {
    Ltg { pos: usize, neg: usize, k: u32 },
    Popcount { m: usize },
}

impl ComponentKey {
    pub fn ltg(key: LtgKey) -> Self {
        ComponentKey::Ltg { pos: key.pos, neg: key.neg, k: key.k }
    }

    /// File-name friendly identity.
    pub fn slug(&self) -> String {
        match *self {
            ComponentKey::Ltg { pos, neg, k } => format!("ltg-p{pos}-n{neg}-k{k}"),
            ComponentKey::Popcount { m } => format!("pc-m{m}"),
        }
    }

    pub fn mode(&self) -> ErrorMode {
        match *self {
            ComponentKey::Ltg { pos, neg, k } => ErrorMode::Ltg(LtgKey { pos, neg, k }.spec()),
            ComponentKey::Popcount { .. } => ErrorMode::Popcount,
        }
    }

    pub fn metrics(&self) -> [ErrorMetric; 2] {
        match self {
            ComponentKey::Ltg { .. } => [ErrorMetric::Mde, ErrorMetric::Wcde],
            ComponentKey::Popcount { .. } => [ErrorMetric::Mae, ErrorMetric::Wcae],
        }
    }
}

impl std::fmt::Display for ComponentKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ComponentKey::Ltg { pos, neg, k } => write!(f, "{}", LtgKey { pos, neg, k }),
            ComponentKey::Popcount { m } => write!(f, "popcount_m{m}"),
        }
    }
}

/// Where a component came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `None` for the exact generator output.
    pub metric: Option<ErrorMetric>,
    pub tau: Option<f64>,
    pub run: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxComponent {
    pub key: ComponentKey,
    pub netlist: Netlist,
    pub hash: String,
    pub area: f64,
    pub report: ErrorReport,
    pub provenance: Provenance,
}

impl ApproxComponent {
    pub fn new(key: ComponentKey, netlist: Netlist, report: ErrorReport, lib: &CellLibrary, provenance: Provenance) -> Result<Self> {
        let area = netlist.area(lib)?;
        Ok(Self { key, hash: netlist.content_hash(), netlist, area, report, provenance })
    }

    pub fn is_exact(&self) -> bool {
        self.report.mismatches == Default::default()
    }

    pub fn meta(&self) -> ComponentMeta {
        ComponentMeta {
            key: self.key,
            hash: self.hash.clone(),
            area: self.area,
            report: self.report.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// JSON sidecar of a stored component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentMeta {
    pub key: ComponentKey,
    pub hash: String,
    pub area: f64,
    pub report: ErrorReport,
    pub provenance: Provenance,
}

/// Exact value of a metric as a rational.
pub fn metric_value(metric: ErrorMetric, r: &ErrorReport) -> BigRational {
    let k: BigInt = r.domain.clone().into();
    match metric {
        ErrorMetric::Ep => BigRational::new(r.mismatches.clone().into(), k),
        ErrorMetric::Mde | ErrorMetric::Mae => BigRational::new(r.distance_sum.clone().into(), k),
        ErrorMetric::Wcde | ErrorMetric::Wcae => BigRational::from_integer(BigInt::from(r.worst)),
    }
}

fn dominates(a: (f64, &BigRational), b: (f64, &BigRational)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Non-dominated subset in (area, metric) among components of one key.
/// Exact components always survive; among identical points the first is kept.
pub fn pareto_filter(components: &[ApproxComponent], metric: ErrorMetric) -> Vec<ApproxComponent> {
    let vals: Vec<BigRational> = components.iter().map(|c| metric_value(metric, &c.report)).collect();
    let mut keep = Vec::new();
    for (i, c) in components.iter().enumerate() {
        let pi = (c.area, &vals[i]);
        let dominated = components.iter().enumerate().any(|(j, d)| {
            let pj = (d.area, &vals[j]);
            j != i && (dominates(pj, pi) || (j < i && pj.0 == pi.0 && pj.1 == pi.1))
        });
        if !dominated || (c.is_exact() && c.provenance.metric.is_none()) {
            keep.push(c.clone());
        }
    }
    keep
}

/// Keeps components that are Pareto-optimal under any metric of their key;
/// the exact one stays first.
pub fn pareto_filter_all(components: &[ApproxComponent]) -> Vec<ApproxComponent> {
    let Some(first) = components.first() else { return Vec::new() };
    let mut keep = HashSet::new();
    for metric in first.key.metrics() {
        for c in pareto_filter(components, metric) {
            keep.insert(c.hash);
        }
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for c in components {
        if keep.contains(&c.hash) && seen.insert(c.hash.clone()) {
            out.push(c.clone());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LibraryConfig {
    /// Base CGP settings; metric, threshold and seed are set per run.
    pub cgp: CgpConfig,
    pub restarts: usize,
    pub tau_points: usize,
    pub style: LtgStyle,
    pub max_ltg_bits: usize,
    pub pareto: bool,
    pub parallel: bool,
    pub seed: u64,
}

impl Default for LibraryConfig {
    fn default() -> Self {
        Self {
            cgp: CgpConfig::default(),
            restarts: 3,
            tau_points: 10,
            style: LtgStyle::TwoTree,
            max_ltg_bits: DEFAULT_MAX_LTG_BITS,
            pareto: true,
            parallel: true,
            seed: 0,
        }
    }
}

/// Mixes a run identity into a 64-bit seed.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3).rotate_left(17);
    }
    // splitmix64 finalizer
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Outcome notes of a library build.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BuildLog {
    pub refused: Vec<(ComponentKey, String)>,
    pub failed_runs: Vec<String>,
    pub runs: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Library {
    /// Components per key; index 0 is the exact circuit.
    pub entries: BTreeMap<ComponentKey, Vec<ApproxComponent>>,
}

struct Job {
    key: ComponentKey,
    metric: ErrorMetric,
    tau: f64,
    label: String,
}

impl Library {
    pub fn components(&self, key: &ComponentKey) -> Option<&[ApproxComponent]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn merge(&mut self, other: Library) {
        for (k, v) in other.entries {
            self.entries.entry(k).or_insert(v);
        }
    }

    fn exact_for(key: ComponentKey, cfg: &LibraryConfig) -> Result<Netlist> {
        match key {
            ComponentKey::Ltg { pos, neg, k } => {
                gen_ltg_exact_limited(&LtgKey { pos, neg, k }.spec(), cfg.style, cfg.max_ltg_bits)
            }
            ComponentKey::Popcount { m } => gen_popcount_exact(PopcountSpec::new(m)?),
        }
    }

    fn schedules(key: ComponentKey, count: usize) -> Result<Vec<TauSchedule>> {
        Ok(match key {
            ComponentKey::Ltg { pos, neg, k } => {
                let (a, b) = ltg_tau_schedule(LtgKey { pos, neg, k }, count)?;
                vec![a, b]
            }
            ComponentKey::Popcount { m } if m >= 2 => {
                let (a, b) = popcount_tau_schedule(m, count)?;
                vec![a, b]
            }
            ComponentKey::Popcount { .. } => Vec::new(),
        })
    }

    /// Runs the threshold sweep for every key. Keys whose exact circuit
    /// cannot be generated are refused and listed in the log.
    pub fn build(keys: &[ComponentKey], cfg: &LibraryConfig, lib: &CellLibrary) -> Result<(Library, BuildLog)> {
        let mut log = BuildLog::default();
        let mut exact = BTreeMap::new();
        let mut jobs = Vec::new();
        let unique: std::collections::BTreeSet<ComponentKey> = keys.iter().copied().collect();
        for key in unique {
            match Self::exact_for(key, cfg) {
                Ok(net) => {
                    exact.insert(key, net);
                }
                Err(e @ (Error::Refused(_) | Error::Contract(_))) => {
                    log::warn!("{key}: {e}");
                    log.refused.push((key, e.to_string()));
                    continue;
                }
                Err(e) => return Err(e),
            }
            for sched in Self::schedules(key, cfg.tau_points)? {
                for (ti, tau) in sched.points().into_iter().enumerate() {
                    for r in 0..cfg.restarts.max(1) {
                        let label = format!("{key}/{}/{ti}/{r}", sched.metric);
                        jobs.push(Job { key, metric: sched.metric, tau, label });
                    }
                }
            }
        }
        log.runs = jobs.len();
        let run = |job: &Job| -> (String, Option<(f64, Netlist)>, Option<String>) {
            let seed_net = &exact[&job.key];
            let rc = CgpConfig {
                metric: job.metric,
                tau: job.tau,
                seed: derive_seed(cfg.seed, &job.label),
                parallel: false,
                ..cfg.cgp.clone()
            };
            match evolve(seed_net, job.key.mode(), lib, &rc) {
                Ok(r) => (job.label.clone(), Some((r.area, r.netlist)), None),
                Err(e) => (job.label.clone(), None, Some(format!("{}: {e}", job.label))),
            }
        };
        let results: Vec<_> = if cfg.parallel { jobs.par_iter().map(run).collect() } else { jobs.iter().map(run).collect() };

        let mut out = Library::default();
        for (key, net) in &exact {
            let report = component_error(net, net, &key.mode(), &BddOptions::default())?;
            let c = ApproxComponent::new(*key, net.clone(), report, lib, Provenance { metric: None, tau: None, run: None })?;
            out.entries.insert(*key, vec![c]);
        }
        // best of the restarts per (key, metric, τ)
        let mut best: BTreeMap<String, (usize, f64, Netlist)> = BTreeMap::new();
        for (i, (label, res, err)) in results.into_iter().enumerate() {
            if let Some(e) = err {
                log::warn!("{e}");
                log.failed_runs.push(e);
                continue;
            }
            let (area, net) = res.unwrap();
            let group = label.rsplit_once('/').unwrap().0.to_string();
            if best.get(&group).map_or(true, |b| area < b.1) {
                best.insert(group, (i, area, net));
            }
        }
        let mut verified: Vec<(usize, ApproxComponent)> = best
            .into_values()
            .collect::<Vec<_>>()
            .into_par_iter()
            .filter_map(|(i, _, net)| {
                let job = &jobs[i];
                let seed_net = &exact[&job.key];
                let report = component_error(seed_net, &net, &job.key.mode(), &BddOptions::default()).ok()?;
                if !job.metric.satisfied(&report, job.tau) {
                    log::warn!("{}: re-verification failed", job.label);
                    return None;
                }
                let prov = Provenance { metric: Some(job.metric), tau: Some(job.tau), run: Some(job.label.clone()) };
                Some((i, ApproxComponent::new(job.key, net, report, lib, prov).ok()?))
            })
            .collect();
        verified.sort_by_key(|(i, _)| *i);
        for (_, c) in verified {
            let list = out.entries.get_mut(&c.key).unwrap();
            if !list.iter().any(|x| x.hash == c.hash) {
                list.push(c);
            }
        }
        if cfg.pareto {
            for list in out.entries.values_mut() {
                *list = pareto_filter_all(list);
            }
        }
        Ok((out, log))
    }

    /// Library for popcount sizes only.
    pub fn build_popcount(sizes: &[usize], cfg: &LibraryConfig, lib: &CellLibrary) -> Result<(Library, BuildLog)> {
        let keys: Vec<ComponentKey> = sizes.iter().map(|&m| ComponentKey::Popcount { m }).collect();
        Self::build(&keys, cfg, lib)
    }

    /// Library for LTG keys only.
    pub fn build_ltg(keys: &[LtgKey], cfg: &LibraryConfig, lib: &CellLibrary) -> Result<(Library, BuildLog)> {
        let keys: Vec<ComponentKey> = keys.iter().map(|&k| ComponentKey::ltg(k)).collect();
        Self::build(&keys, cfg, lib)
    }

    /// Every key a model's neurons need.
    pub fn keys_for_model(model: &TnnModel) -> Vec<ComponentKey> {
        let mut keys: Vec<ComponentKey> = (0..model.hidden_size()).map(|i| ComponentKey::ltg(model.hidden_key(i))).collect();
        keys.extend((0..model.classes()).map(|j| ComponentKey::Popcount { m: model.popcount_size(j) }));
        keys.sort();
        keys.dedup();
        keys
    }

    /// Names the first key the model needs that the library lacks.
    pub fn check_covers(&self, model: &TnnModel) -> Result<()> {
        for key in Self::keys_for_model(model) {
            if !self.entries.contains_key(&key) {
                return Err(Error::Component(format!("library has no components for {key}")));
            }
        }
        Ok(())
    }

    /// Recomputes every error report and area; lists disagreements.
    pub fn audit(&self, lib: &CellLibrary) -> Result<Vec<String>> {
        let mut problems = Vec::new();
        for (key, list) in &self.entries {
            let Some(exact) = list.first() else {
                problems.push(format!("{key}: empty component list"));
                continue;
            };
            if !exact.is_exact() {
                problems.push(format!("{key}: first component is not exact"));
            }
            for (i, c) in list.iter().enumerate() {
                let r = component_error(&exact.netlist, &c.netlist, &key.mode(), &BddOptions::default())?;
                if r != c.report {
                    problems.push(format!("{key}#{i}: stored error report differs from recomputation"));
                }
                if let (Some(m), Some(t)) = (c.provenance.metric, c.provenance.tau) {
                    if !m.satisfied(&r, t) {
                        problems.push(format!("{key}#{i}: violates {m} <= {t}"));
                    }
                }
                if (c.netlist.area(lib)? - c.area).abs() > 1e-9 {
                    problems.push(format!("{key}#{i}: stored area differs"));
                }
                if c.netlist.content_hash() != c.hash {
                    problems.push(format!("{key}#{i}: content hash differs"));
                }
            }
        }
        Ok(problems)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let comp_dir = dir.join("components");
        std::fs::create_dir_all(&comp_dir)?;
        let mut manifest = Manifest { version: 1, entries: Vec::new() };
        for (key, list) in &self.entries {
            for (index, c) in list.iter().enumerate() {
                let gnl = comp_dir.join(format!("{}.gnl", c.hash));
                if !gnl.exists() {
                    write_atomic(&gnl, c.netlist.to_gnl().as_bytes())?;
                }
                write_atomic(&comp_dir.join(format!("{}-{}.json", key.slug(), c.hash)), serde_json::to_string_pretty(&c.meta())?.as_bytes())?;
                manifest.entries.push(ManifestEntry { key: *key, index, hash: c.hash.clone() });
            }
        }
        write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
    }

    /// Loads a saved library; areas are recomputed under `lib`.
    pub fn load(dir: &Path, lib: &CellLibrary) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        let comp_dir = dir.join("components");
        let mut out = Library::default();
        for e in manifest.entries {
            let meta: ComponentMeta =
                serde_json::from_str(&std::fs::read_to_string(comp_dir.join(format!("{}-{}.json", e.key.slug(), e.hash)))?)?;
            let netlist = Netlist::from_gnl(&std::fs::read_to_string(comp_dir.join(format!("{}.gnl", e.hash)))?)?;
            if netlist.content_hash() != e.hash || meta.key != e.key {
                return Err(Error::Component(format!("{}: stored component {} is inconsistent", e.key, e.hash)));
            }
            let c = ApproxComponent {
                key: meta.key,
                area: netlist.area(lib)?,
                netlist,
                hash: meta.hash,
                report: meta.report,
                provenance: meta.provenance,
            };
            let list = out.entries.entry(e.key).or_default();
            if list.len() != e.index {
                return Err(Error::Component(format!("{}: manifest indices out of order", e.key)));
            }
            list.push(c);
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    key: ComponentKey,
    index: usize,
    hash: String,
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

impl ComponentSource for Library {
    fn ltg(&self, key: LtgKey, id: usize) -> Result<&Netlist> {
        self.entries
            .get(&ComponentKey::ltg(key))
            .and_then(|l| l.get(id))
            .map(|c| &c.netlist)
            .ok_or_else(|| Error::Component(format!("{key} #{id}")))
    }

    fn popcount(&self, m: usize, id: usize) -> Result<&Netlist> {
        self.entries
            .get(&ComponentKey::Popcount { m })
            .and_then(|l| l.get(id))
            .map(|c| &c.netlist)
            .ok_or_else(|| Error::Component(format!("popcount m={m} #{id}")))
    }

    fn ltg_count(&self, key: LtgKey) -> usize {
        self.entries.get(&ComponentKey::ltg(key)).map_or(0, Vec::len)
    }

    fn popcount_count(&self, m: usize) -> usize {
        self.entries.get(&ComponentKey::Popcount { m }).map_or(0, Vec::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn approx(fast: f64) -> f64 {
        (fast * 1e9).round() / 1e9
    }

    #[test]
    fn schedules() {
        let (mae, wcae) = popcount_tau_schedule(8, 10).unwrap();
        assert_eq!((mae.lo, mae.hi), (0.1, 4.0));
        assert_eq!((wcae.lo, wcae.hi), (1.0, 128.0));
        assert_eq!(popcount_tau_schedule(2, 3).unwrap().1.hi, 2.0);
        let p = TauSchedule::new(ErrorMetric::Mae, 1.0, 100.0, 3).unwrap().points();
        assert_eq!(p.iter().map(|&x| approx(x)).collect::<Vec<_>>(), vec![1.0, 10.0, 100.0]);
        assert!(popcount_tau_schedule(1, 3).is_err());
        assert!(TauSchedule::new(ErrorMetric::Mae, 0.0, 1.0, 3).is_err());
        let (mde, wcde) = ltg_tau_schedule(LtgKey { pos: 5, neg: 5, k: 2 }, 10).unwrap();
        assert_eq!((approx(mde.lo), approx(mde.hi), wcde.hi), (0.016, 1.6, 8.0));
    }

    fn comp(area: f64, sum: u64, worst: u64, exact: bool) -> ApproxComponent {
        let b = crate::netlist::Builder::new(["a"]);
        let a = b.input(0);
        let net = b.finish([("y", a)]).unwrap();
        ApproxComponent {
            key: ComponentKey::Popcount { m: 1 },
            hash: format!("{area}-{sum}-{worst}"),
            netlist: net,
            area,
            report: ErrorReport {
                metric: crate::bdderr::Metric::Popcount,
                domain: BigUint::from(100u32),
                mismatches: BigUint::from(sum.min(100)),
                distance_sum: BigUint::from(sum),
                worst,
                exhaustive: true,
            },
            provenance: Provenance { metric: if exact { None } else { Some(ErrorMetric::Mae) }, tau: None, run: None },
        }
    }

    #[test]
    fn pareto_examples() {
        let a = vec![comp(10.0, 0, 0, true), comp(12.0, 0, 0, false)];
        let f = pareto_filter(&a, ErrorMetric::Mae);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].area, 10.0);
        let b = vec![comp(5.0, 30, 1, false), comp(6.0, 10, 1, false), comp(7.0, 5, 1, false)];
        assert_eq!(pareto_filter(&b, ErrorMetric::Mae).len(), 3);
        // the exact component survives even when dominated in area
        let c = vec![comp(10.0, 0, 0, true), comp(8.0, 0, 0, false)];
        assert_eq!(pareto_filter(&c, ErrorMetric::Mae).len(), 2);
    }

    #[test]
    fn seeds_differ_by_label() {
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
    }

    #[test]
    fn tiny_popcount_library() {
        let cfg = LibraryConfig {
            cgp: CgpConfig { max_iterations: Some(200), ..Default::default() },
            restarts: 1,
            tau_points: 2,
            ..Default::default()
        };
        let lib = CellLibrary::default_lib();
        let (l, log) = Library::build_popcount(&[3, 1], &cfg, &lib).unwrap();
        assert_eq!(log.runs, 4);
        let list = l.components(&ComponentKey::Popcount { m: 3 }).unwrap();
        assert!(list[0].is_exact());
        assert_eq!(l.components(&ComponentKey::Popcount { m: 1 }).unwrap().len(), 1);
        assert!(l.audit(&lib).unwrap().is_empty());
    }

    #[test]
    fn oversized_ltg_refused() {
        let lib = CellLibrary::default_lib();
        let (l, log) = Library::build_ltg(&[LtgKey { pos: 50, neg: 50, k: 2 }], &LibraryConfig::default(), &lib).unwrap();
        assert!(l.is_empty());
        assert_eq!(log.refused.len(), 1);
        assert!(log.refused[0].1.contains("200 input bits"));
    }
}
