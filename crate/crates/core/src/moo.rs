//! Composition of per-neuron components into accuracy/area trade-offs:
//! additive area model, NSGA-II search, interface-aware system fronts and
//! inverted hypervolume.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuitgen::{assemble_tnn, FixedParts};
use crate::error::{Error, Result};
use crate::netlist::Netlist;
use crate::tech::{CellLibrary, ConverterKind, GateKind, InterfaceCostTable};
use crate::tnn::{argmax, ComponentAssignment, ComponentSource, Evaluator, TnnModel};

type Histogram = BTreeMap<GateKind, usize>;

fn add_hist(acc: &mut Histogram, h: &Histogram) {
    for (&k, &n) in h {
        *acc.entry(k).or_insert(0) += n;
    }
}

/// Precomputed gate histograms of every selectable component and of the
/// fixed parts, so the area of any assignment is a sum of counts.
pub struct AreaModel {
    hidden: Vec<Vec<Histogram>>,
    output: Vec<Vec<Histogram>>,
    fixed: Histogram,
}

impl AreaModel {
    pub fn new(model: &TnnModel, src: &dyn ComponentSource) -> Result<Self> {
        if model.hidden.is_empty() || model.output.is_empty() {
            return Err(Error::Contract("model has no neurons".into()));
        }
        let fixed_parts = FixedParts::for_model(model)?;
        let mut fixed = Histogram::new();
        let inverters = fixed_parts.inverted_hidden.iter().filter(|&&x| x).count();
        if inverters > 0 {
            fixed.insert(GateKind::Not, inverters);
        }
        for z in &fixed_parts.offset_adders {
            add_hist(&mut fixed, &z.gate_histogram());
        }
        add_hist(&mut fixed, &fixed_parts.argmax.gate_histogram());
        let hidden = (0..model.hidden_size())
            .map(|i| {
                let key = model.hidden_key(i);
                (0..src.ltg_count(key)).map(|id| Ok(src.ltg(key, id)?.gate_histogram())).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let output = (0..model.classes())
            .map(|j| {
                let m = model.popcount_size(j);
                (0..src.popcount_count(m)).map(|id| Ok(src.popcount(m, id)?.gate_histogram())).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, h) in hidden.iter().enumerate() {
            if h.is_empty() {
                return Err(Error::Component(format!("no components for hidden neuron {i} ({})", model.hidden_key(i))));
            }
        }
        for (j, h) in output.iter().enumerate() {
            if h.is_empty() {
                return Err(Error::Component(format!("no popcount components with m={}", model.popcount_size(j))));
            }
        }
        Ok(Self { hidden, output, fixed })
    }

    /// Choices per gene (hidden neurons, then output neurons).
    pub fn bounds(&self) -> Vec<usize> {
        self.hidden.iter().chain(&self.output).map(Vec::len).collect()
    }

    pub fn histogram(&self, a: &ComponentAssignment) -> Result<Histogram> {
        if a.hidden.len() != self.hidden.len() || a.output.len() != self.output.len() {
            return Err(Error::Component("assignment length does not match model".into()));
        }
        let mut h = self.fixed.clone();
        for (i, &id) in a.hidden.iter().enumerate() {
            add_hist(&mut h, self.hidden[i].get(id).ok_or_else(|| Error::Component(format!("hidden {i} #{id}")))?);
        }
        for (j, &id) in a.output.iter().enumerate() {
            add_hist(&mut h, self.output[j].get(id).ok_or_else(|| Error::Component(format!("output {j} #{id}")))?);
        }
        Ok(h)
    }

    pub fn area(&self, a: &ComponentAssignment, tech: &CellLibrary) -> Result<f64> {
        tech.histogram_area(&self.histogram(a)?)
    }
}

/// Sum of the selected component areas plus the never-approximated parts
/// (output inverters, `2P + Z` adders and argmax).
pub fn surrogate_area(
    model: &TnnModel,
    assignment: &ComponentAssignment,
    src: &dyn ComponentSource,
    tech: &CellLibrary,
) -> Result<f64> {
    AreaModel::new(model, src)?.area(assignment, tech)
}

/// Full classifier netlist for an assignment.
pub fn assemble_assignment(model: &TnnModel, assignment: &ComponentAssignment, src: &dyn ComponentSource) -> Result<Netlist> {
    let (h, p) = assignment.resolve(model, src)?;
    let h: Vec<Netlist> = h.into_iter().cloned().collect();
    let p: Vec<Netlist> = p.into_iter().cloned().collect();
    assemble_tnn(model, &h, &p)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsgaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene reset probability; `None` means one over the gene count.
    pub mutation_prob: Option<f64>,
    /// Share of the training split used to score accuracy.
    pub eval_fraction: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for NsgaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 100,
            crossover_prob: 0.9,
            mutation_prob: None,
            eval_fraction: 0.2,
            seed: 0,
            parallel: true,
        }
    }
}

/// Last `fraction` of the training indices.
pub fn eval_slice(train: &[usize], fraction: f64) -> Vec<usize> {
    let n = ((train.len() as f64 * fraction).round() as usize).clamp(1.min(train.len()), train.len());
    train[train.len() - n..].to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<usize>,
    /// Accuracy on the evaluation slice.
    pub accuracy: f64,
    pub area: f64,
}

impl Individual {
    fn objectives(&self) -> [f64; 2] {
        [1.0 - self.accuracy, self.area]
    }

    /// Weakly better in both objectives and strictly better in one.
    pub fn dominates(&self, other: &Individual) -> bool {
        let (a, b) = (self.objectives(), other.objectives());
        a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
    }
}

/// Fast non-dominated sorting; returns fronts of indices, best first.
pub fn non_dominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if pop[i].dominates(&pop[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            } else if pop[j].dominates(&pop[i]) {
                dominates[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order).
pub fn crowding_distance(pop: &[Individual], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| pop[front[a]].objectives()[obj].total_cmp(&pop[front[b]].objectives()[obj]));
        let lo = pop[front[order[0]]].objectives()[obj];
        let hi = pop[front[order[n - 1]]].objectives()[obj];
        d[order[0]] = f64::INFINITY;
        d[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..n - 1 {
                let prev = pop[front[order[w - 1]]].objectives()[obj];
                let next = pop[front[order[w + 1]]].objectives()[obj];
                d[order[w]] += (next - prev) / (hi - lo);
            }
        }
    }
    d
}

/// Scores assignments on a fixed sample set, memoizing hidden activations
/// per (neuron, component).
pub struct AssignmentScorer<'a> {
    model: &'a TnnModel,
    src: &'a dyn ComponentSource,
    eval: Evaluator<'a>,
    hidden: Vec<Vec<Vec<u64>>>,
    area: AreaModel,
    tech: &'a CellLibrary,
}

impl<'a> AssignmentScorer<'a> {
    pub fn new(
        model: &'a TnnModel,
        src: &'a dyn ComponentSource,
        tech: &'a CellLibrary,
        codes: Vec<Vec<u8>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::Dataset("empty evaluation split".into()));
        }
        let area = AreaModel::new(model, src)?;
        let eval = Evaluator::new(model, codes, labels)?;
        let hidden = (0..model.hidden_size())
            .into_par_iter()
            .map(|i| {
                let key = model.hidden_key(i);
                (0..src.ltg_count(key)).map(|id| eval.hidden_words(i, src.ltg(key, id)?)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, src, eval, hidden, area, tech })
    }

    pub fn bounds(&self) -> Vec<usize> {
        self.area.bounds()
    }

    pub fn score(&self, genes: &[usize]) -> Result<Individual> {
        let a = ComponentAssignment::from_genes(self.model, genes);
        let area = self.area.area(&a, self.tech)?;
        let hidden: Vec<&[u64]> = a.hidden.iter().enumerate().map(|(i, &id)| self.hidden[i][id].as_slice()).collect();
        let pcs = a
            .output
            .iter()
            .enumerate()
            .map(|(j, &id)| self.src.popcount(self.model.popcount_size(j), id))
            .collect::<Result<Vec<_>>>()?;
        let outs = self.eval.outputs_from_hidden(&hidden, &pcs)?;
        let preds: Vec<usize> = outs.iter().map(|o| argmax(o)).collect();
        let accuracy = self.eval.accuracy_of(&preds)?;
        Ok(Individual { genes: genes.to_vec(), accuracy, area })
    }
}

/// NSGA-II over component assignments; returns the first front of the final
/// population without duplicates, ordered by area.
pub fn nsga2(scorer: &AssignmentScorer, cfg: &NsgaConfig) -> Result<Vec<Individual>> {
    if cfg.population < 2 {
        return Err(Error::Config("population must hold at least two individuals".into()));
    }
    let bounds = scorer.bounds();
    let genes_len = bounds.len();
    let pm = cfg.mutation_prob.unwrap_or(1.0 / genes_len as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache: HashMap<Vec<usize>, Individual> = HashMap::new();

    let evaluate = |batch: Vec<Vec<usize>>, cache: &mut HashMap<Vec<usize>, Individual>| -> Result<Vec<Individual>> {
        let missing: Vec<Vec<usize>> = {
            let mut seen = std::collections::HashSet::new();
            batch.iter().filter(|g| !cache.contains_key(*g) && seen.insert((*g).clone())).cloned().collect()
        };
        let scored: Vec<Individual> = if cfg.parallel {
            missing.par_iter().map(|g| scorer.score(g)).collect::<Result<_>>()?
        } else {
            missing.iter().map(|g| scorer.score(g)).collect::<Result<_>>()?
        };
        for ind in scored {
            cache.insert(ind.genes.clone(), ind);
        }
        Ok(batch.iter().map(|g| cache[g].clone()).collect())
    };

    let mut init = vec![vec![0usize; genes_len]];
    while init.len() < cfg.population {
        init.push(bounds.iter().map(|&b| rng.gen_range(0..b)).collect());
    }
    let mut pop = evaluate(init, &mut cache)?;

    for _ in 0..cfg.generations {
        let fronts = non_dominated_sort(&pop);
        let mut rank = vec![0usize; pop.len()];
        let mut crowd = vec![0.0; pop.len()];
        for (r, f) in fronts.iter().enumerate() {
            let d = crowding_distance(&pop, f);
            for (p, &i) in f.iter().enumerate() {
                rank[i] = r;
                crowd[i] = d[p];
            }
        }
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..pop.len());
            let b = rng.gen_range(0..pop.len());
            if rank[a] < rank[b] || (rank[a] == rank[b] && crowd[a] >= crowd[b]) {
                a
            } else {
                b
            }
        };
        let mut children = Vec::with_capacity(cfg.population);
        while children.len() < cfg.population {
            let p1 = &pop[tournament(&mut rng)].genes;
            let p2 = &pop[tournament(&mut rng)].genes;
            let (mut c1, mut c2) = (p1.clone(), p2.clone());
            if rng.gen_bool(cfg.crossover_prob.clamp(0.0, 1.0)) {
                for g in 0..genes_len {
                    if rng.gen_bool(0.5) {
                        std::mem::swap(&mut c1[g], &mut c2[g]);
                    }
                }
            }
            for c in [&mut c1, &mut c2] {
                for g in 0..genes_len {
                    if bounds[g] > 1 && rng.gen_bool(pm.clamp(0.0, 1.0)) {
                        c[g] = rng.gen_range(0..bounds[g]);
                    }
                }
            }
            children.push(c1);
            if children.len() < cfg.population {
                children.push(c2);
            }
        }
        let offspring = evaluate(children, &mut cache)?;
        let mut seen = std::collections::HashSet::new();
        let combined: Vec<Individual> =
            pop.into_iter().chain(offspring).filter(|ind| seen.insert(ind.genes.clone())).collect();
        let mut next = Vec::with_capacity(cfg.population);
        for f in non_dominated_sort(&combined) {
            if next.len() + f.len() <= cfg.population {
                next.extend(f.iter().map(|&i| combined[i].clone()));
            } else {
                let d = crowding_distance(&combined, &f);
                let mut order: Vec<usize> = (0..f.len()).collect();
                order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
                for &p in order.iter().take(cfg.population - next.len()) {
                    next.push(combined[f[p]].clone());
                }
            }
            if next.len() >= cfg.population {
                break;
            }
        }
        pop = next;
    }
    let fronts = non_dominated_sort(&pop);
    let mut front: Vec<Individual> = fronts[0].iter().map(|&i| pop[i].clone()).collect();
    front.sort_by(|a, b| a.area.total_cmp(&b.area).then(b.accuracy.total_cmp(&a.accuracy)).then(a.genes.cmp(&b.genes)));
    front.dedup_by(|a, b| a.genes == b.genes);
    Ok(front)
}

/// True when no member dominates another.
pub fn is_non_dominated(front: &[Individual]) -> bool {
    front.iter().enumerate().all(|(i, a)| front.iter().enumerate().all(|(j, b)| i == j || !b.dominates(a)))
}

/// A design on a system-level front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub id: String,
    pub k: u32,
    pub interface: ConverterKind,
    /// Test accuracy.
    pub accuracy: f64,
    pub eval_accuracy: f64,
    pub classifier_area: f64,
    pub classifier_power: f64,
    pub interface_area: f64,
    pub interface_power: f64,
    pub total_area: f64,
    pub total_power: f64,
    pub assignment: ComponentAssignment,
}

impl ParetoPoint {
    /// Adds one converter of the precision's kind per input feature.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: String,
        k: u32,
        features: usize,
        accuracy: f64,
        eval_accuracy: f64,
        classifier_area: f64,
        assignment: ComponentAssignment,
        table: &InterfaceCostTable,
        tech: &CellLibrary,
    ) -> Result<Self> {
        let interface = ConverterKind::for_precision(k);
        let cost = table.cost(interface, k)?;
        let classifier_power = tech.estimate_power(classifier_area)?;
        let interface_area = features as f64 * cost.area_mm2;
        let interface_power = features as f64 * cost.power_mw;
        Ok(Self {
            id,
            k,
            interface,
            accuracy,
            eval_accuracy,
            classifier_area,
            classifier_power,
            interface_area,
            interface_power,
            total_area: classifier_area + interface_area,
            total_power: classifier_power + interface_power,
            assignment,
        })
    }

    fn dominates(&self, o: &ParetoPoint) -> bool {
        self.accuracy >= o.accuracy && self.total_area <= o.total_area && (self.accuracy > o.accuracy || self.total_area < o.total_area)
    }
}

/// Merges fronts of several precisions and keeps the designs that are
/// non-dominated in (test accuracy, total area).
pub fn system_pareto(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut out: Vec<ParetoPoint> = points
        .iter()
        .enumerate()
        .filter(|&(i, p)| {
            !points.iter().enumerate().any(|(j, q)| {
                j != i && (q.dominates(p) || (j < i && q.accuracy == p.accuracy && q.total_area == p.total_area))
            })
        })
        .map(|(_, p)| p.clone())
        .collect();
    out.sort_by(|a, b| a.total_area.total_cmp(&b.total_area).then(a.id.cmp(&b.id)));
    out
}

/// Maps (area, error) pairs to `[0,1]²`: area over the exact design's area,
/// error over the largest observed error.
pub fn normalize_front(points: &[(f64, f64)], exact_area: f64) -> Vec<(f64, f64)> {
    let max_err = points.iter().map(|p| p.1).fold(0.0, f64::max);
    points
        .iter()
        .map(|&(a, e)| (if exact_area > 0.0 { a / exact_area } else { 0.0 }, if max_err > 0.0 { e / max_err } else { 0.0 }))
        .collect()
}

/// Area of the region `{u : u ≤ p for some front point p}` (componentwise),
/// i.e. the part of the box below the staircase seen from the origin.
pub fn inverted_hypervolume(front: &[(f64, f64)]) -> Result<f64> {
    if front.is_empty() {
        return Err(Error::Contract("hypervolume of an empty front".into()));
    }
    if front.iter().any(|p| !(p.0 >= 0.0 && p.1 >= 0.0) || !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Contract("front coordinates must be finite and non-negative".into()));
    }
    let mut pts = front.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut total = 0.0;
    let mut ymax: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        ymax = ymax.max(p.1);
        let next_x = pts.get(i + 1).map_or(0.0, |q| q.0);
        total += (p.0 - next_x) * ymax;
    }
    Ok(total)
}

pub fn write_front_csv(path: &Path, points: &[ParetoPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "id",
        "k",
        "interface",
        "accuracy",
        "eval_accuracy",
        "est_area",
        "interface_area",
        "total_area",
        "total_power",
        "assignment",
    ])?;
    for p in points {
        let genes: Vec<String> = p.assignment.genes().iter().map(usize::to_string).collect();
        w.write_record([
            p.id.clone(),
            p.k.to_string(),
            p.interface.to_string(),
            format!("{:.6}", p.accuracy),
            format!("{:.6}", p.eval_accuracy),
            format!("{:.6}", p.classifier_area),
            format!("{:.6}", p.interface_area),
            format!("{:.6}", p.total_area),
            format!("{:.6}", p.total_power),
            genes.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_front_json(path: &Path, points: &[ParetoPoint]) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(points)?)?;
    Ok(())
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Scatter of total area against test accuracy, one colour per precision.
pub fn front_svg(points: &[ParetoPoint], title: &str) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let xmax = points.iter().map(|p| p.total_area).fold(0.0, f64::max).max(1e-9) * 1.05;
    let ymin = points.iter().map(|p| p.accuracy).fold(1.0, f64::min).min(0.95) - 0.05;
    let ymin = ymin.max(0.0);
    let sx = |x: f64| pad + x / xmax * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - ymin) / (1.0 - ymin).max(1e-9) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, xml_escape(title));
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, h - pad, w - pad);
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#, h - pad);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">total area (mm²)</text>"#, w / 2.0, h - 20.0);
    let _ = writeln!(s, r#"<text x="18" y="{}" transform="rotate(-90 18 {})" text-anchor="middle">test accuracy</text>"#, h / 2.0, h / 2.0);
    for t in 0..=4 {
        let xv = xmax * t as f64 / 4.0;
        let yv = ymin + (1.0 - ymin) * t as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.2}</text>"#, sx(xv), h - pad + 16.0, xv);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#, pad - 6.0, sy(yv) + 4.0, yv);
    }
    let mut ks: Vec<u32> = points.iter().map(|p| p.k).collect();
    ks.sort_unstable();
    ks.dedup();
    for (ci, k) in ks.iter().enumerate() {
        let colour = PALETTE[ci % PALETTE.len()];
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{colour}">k={k}</text>"#, w - pad - 40.0, pad + 16.0 * ci as f64);
        for p in points.iter().filter(|p| p.k == *k) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{colour}"/>"#, sx(p.total_area), sy(p.accuracy));
        }
    }
    s.push_str("</svg>\n");
    s
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(acc: f64, area: f64) -> Individual {
        Individual { genes: vec![], accuracy: acc, area }
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(inverted_hypervolume(&[(0.0, 0.0)]).unwrap(), 0.0);
        assert_eq!(inverted_hypervolume(&[(0.0, 1.0), (1.0, 0.0)]).unwrap(), 0.0);
        assert_eq!(inverted_hypervolume(&[(1.0, 1.0)]).unwrap(), 1.0);
        let v = inverted_hypervolume(&[(0.5, 1.0), (1.0, 0.5)]).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
        assert!(inverted_hypervolume(&[]).is_err());
    }

    #[test]
    fn sorting_and_crowding() {
        let pop = vec![ind(0.9, 1.0), ind(0.8, 0.5), ind(0.8, 2.0), ind(0.95, 3.0)];
        let f = non_dominated_sort(&pop);
        assert_eq!(f[0], vec![0, 1, 3]);
        assert_eq!(f[1], vec![2]);
        let d = crowding_distance(&pop, &f[0]);
        assert!(d[1].is_infinite() && d[2].is_infinite() && d[0].is_finite());
    }

    #[test]
    fn abc_cost_example() {
        let tech = CellLibrary::default_lib();
        let table = InterfaceCostTable::default();
        let a = ComponentAssignment { hidden: vec![], output: vec![] };
        let p = ParetoPoint::new("x".into(), 1, 30, 0.9, 0.9, 1.0, a, &table, &tech).unwrap();
        assert!((p.interface_area - 0.15).abs() < 1e-12);
        assert_eq!(p.interface, ConverterKind::Abc);
    }

    #[test]
    fn system_front_filters() {
        let tech = CellLibrary::default_lib();
        let table = InterfaceCostTable::default();
        let a = ComponentAssignment { hidden: vec![], output: vec![] };
        let mk = |id: &str, k, acc, area| ParetoPoint::new(id.into(), k, 4, acc, acc, area, a.clone(), &table, &tech).unwrap();
        let pts = vec![mk("a", 1, 0.9, 1.0), mk("b", 2, 0.85, 1.0), mk("c", 1, 0.8, 0.5)];
        let f = system_pareto(&pts);
        assert_eq!(f.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), vec!["c", "a"]);
    }
}
