//! Datasets, input quantization, ternary network training and integer
//! inference (exact and with substituted approximate components).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuitgen::{gen_ltg_exact, gen_popcount_exact, LtgKey, LtgSpec, LtgStyle, PopcountSpec};
use crate::error::{Error, Result};
use crate::netlist::Netlist;

/// Fraction of samples used for training.
pub const TRAIN_FRACTION: f64 = 0.7;

/// Per-feature min-max constants computed on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    pub fn fit(rows: &[Vec<f64>], idx: &[usize], features: usize) -> Self {
        let mut min = vec![f64::INFINITY; features];
        let mut max = vec![f64::NEG_INFINITY; features];
        for &r in idx {
            for (f, &v) in rows[r].iter().enumerate() {
                min[f] = min[f].min(v);
                max[f] = max[f].max(v);
            }
        }
        for f in 0..features {
            if !min[f].is_finite() {
                min[f] = 0.0;
                max[f] = 0.0;
            }
        }
        Self { min, max }
    }

    /// Scales into `[0,1]`, clamping values outside the fitted range.
    /// Constant features map to 0.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(f, &v)| {
                let span = self.max[f] - self.min[f];
                if span <= 0.0 {
                    0.0
                } else {
                    ((v - self.min[f]) / span).clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// Normalized features in `[0,1]`.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Original label text for each class index.
    pub class_names: Vec<String>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub normalization: Normalization,
}

impl Dataset {
    /// Splits 70/30 under `seed` and normalizes with training statistics.
    pub fn from_raw(
        feature_names: Vec<String>,
        raw: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        seed: u64,
    ) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Dataset("no rows".into()));
        }
        if raw.len() != labels.len() {
            return Err(Error::Dataset("row and label counts differ".into()));
        }
        let nf = feature_names.len();
        if nf == 0 {
            return Err(Error::Dataset("no feature columns".into()));
        }
        if let Some(r) = raw.iter().position(|r| r.len() != nf) {
            return Err(Error::Dataset(format!("row {r} has {} values, expected {nf}", raw[r].len())));
        }
        if labels.iter().any(|&l| l >= class_names.len()) {
            return Err(Error::Dataset("label outside class list".into()));
        }
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((raw.len() as f64 * TRAIN_FRACTION).round() as usize).clamp(1, raw.len());
        let test = order.split_off(cut);
        let train = order;
        let normalization = Normalization::fit(&raw, &train, nf);
        let features = raw.iter().map(|r| normalization.apply(r)).collect();
        Ok(Self { feature_names, features, labels, class_names, train, test, normalization })
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Quantized codes and labels of the given rows.
    pub fn quantized(&self, idx: &[usize], k: u32) -> (Vec<Vec<u8>>, Vec<usize>) {
        let x = idx.iter().map(|&r| quantize_row(&self.features[r], k)).collect();
        let y = idx.iter().map(|&r| self.labels[r]).collect();
        (x, y)
    }
}

/// Reads a numeric CSV with a header row. The label column may hold any
/// text; classes are ordered numerically when every label parses as a
/// number and lexically otherwise.
pub fn ingest_csv(path: &Path, label_column: &str, seed: u64) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Dataset(format!("label column `{label_column}` not found")))?;
    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|&(i, _)| i != label_idx).map(|(_, h)| h.to_string()).collect();
    let mut raw = Vec::new();
    let mut label_text = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(feature_names.len());
        for (i, cell) in rec.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Dataset(format!("non-numeric cell `{cell}` in row {} column {}", line + 2, &headers[i]))
            })?;
            if !v.is_finite() {
                return Err(Error::Dataset(format!("non-finite cell in row {}", line + 2)));
            }
            row.push(v);
        }
        raw.push(row);
        label_text.push(rec.get(label_idx).unwrap_or("").to_string());
    }
    let (labels, class_names) = encode_labels(&label_text);
    Dataset::from_raw(feature_names, raw, labels, class_names, seed)
}

fn encode_labels(text: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut names: Vec<String> = text.to_vec();
    names.sort();
    names.dedup();
    if names.iter().all(|s| s.parse::<f64>().is_ok()) {
        names.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    (text.iter().map(|s| index[s.as_str()]).collect(), names)
}

/// `min(⌊x·2^k⌋, 2^k − 1)` with `x` clamped to `[0,1]`.
pub fn quantize(x: f64, k: u32) -> u32 {
    let levels = 1u32 << k;
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    ((x * levels as f64).floor() as u32).min(levels - 1)
}

pub fn quantize_row(row: &[f64], k: u32) -> Vec<u8> {
    row.iter().map(|&x| quantize(x, k) as u8).collect()
}

/// Ternary network with one sign-activated hidden layer and argmax output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct TnnModel {
    pub k: u32,
    /// `m × n` hidden weights.
    pub hidden: Vec<Vec<i8>>,
    /// `c × m` output weights.
    pub output: Vec<Vec<i8>>,
    pub normalization: Option<Normalization>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    k: u32,
    m: usize,
    hidden: Vec<Vec<i8>>,
    output: Vec<Vec<i8>>,
    z: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<Normalization>,
}

impl From<TnnModel> for ModelFile {
    fn from(t: TnnModel) -> Self {
        let z = (0..t.classes()).map(|j| t.zeros(j)).collect();
        ModelFile { k: t.k, m: t.hidden_size(), hidden: t.hidden, output: t.output, z, normalization: t.normalization }
    }
}

impl TryFrom<ModelFile> for TnnModel {
    type Error = Error;
    fn try_from(f: ModelFile) -> Result<Self> {
        let model = TnnModel::new(f.k, f.hidden, f.output, f.normalization)?;
        if f.m != model.hidden_size() {
            return Err(Error::Contract(format!("model file says m={} but has {} hidden rows", f.m, model.hidden_size())));
        }
        let z: Vec<usize> = (0..model.classes()).map(|j| model.zeros(j)).collect();
        if z != f.z {
            return Err(Error::Contract("stored Z counts disagree with output weights".into()));
        }
        Ok(model)
    }
}

impl TnnModel {
    pub fn new(k: u32, hidden: Vec<Vec<i8>>, output: Vec<Vec<i8>>, normalization: Option<Normalization>) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return Err(Error::Contract(format!("input precision {k} outside 1..=4")));
        }
        if hidden.is_empty() {
            return Err(Error::Contract("model has no hidden neurons".into()));
        }
        if output.len() < 2 {
            return Err(Error::Contract("model needs at least two classes".into()));
        }
        let n = hidden[0].len();
        let m = hidden.len();
        let ternary = |w: &i8| (-1..=1).contains(w);
        if hidden.iter().any(|r| r.len() != n || !r.iter().all(ternary)) {
            return Err(Error::Contract("hidden weights must be a ternary m×n matrix".into()));
        }
        if output.iter().any(|r| r.len() != m || !r.iter().all(ternary)) {
            return Err(Error::Contract("output weights must be a ternary c×m matrix".into()));
        }
        if let Some(i) = hidden.iter().position(|r| r.iter().all(|&w| w == 0)) {
            return Err(Error::Contract(format!("hidden neuron {i} has only zero weights")));
        }
        if let Some(j) = output.iter().position(|r| r.iter().all(|&w| w == 0)) {
            return Err(Error::Contract(format!("output neuron {j} has only zero weights")));
        }
        if let Some(norm) = &normalization {
            if norm.min.len() != n || norm.max.len() != n {
                return Err(Error::Contract("normalization width differs from feature count".into()));
            }
        }
        Ok(Self { k, hidden, output, normalization })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn features(&self) -> usize {
        self.hidden[0].len()
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden.len()
    }

    pub fn classes(&self) -> usize {
        self.output.len()
    }

    /// Zero-weight count `Z` of output neuron `j`.
    pub fn zeros(&self, j: usize) -> usize {
        self.output[j].iter().filter(|&&w| w == 0).count()
    }

    /// Number of popcount inputs of output neuron `j`.
    pub fn popcount_size(&self, j: usize) -> usize {
        self.hidden_size() - self.zeros(j)
    }

    pub fn hidden_spec(&self, i: usize) -> LtgSpec {
        LtgSpec { weights: self.hidden[i].clone(), k: self.k }
    }

    pub fn hidden_key(&self, i: usize) -> LtgKey {
        LtgKey::of(&self.hidden_spec(i))
    }

    /// Feature indices feeding hidden neuron `i` in canonical component
    /// order: positive weights first, then negative ones.
    pub fn canonical_inputs(&self, i: usize) -> Vec<usize> {
        let row = &self.hidden[i];
        let pos = (0..row.len()).filter(|&f| row[f] > 0);
        let neg = (0..row.len()).filter(|&f| row[f] < 0);
        pos.chain(neg).collect()
    }

    /// Exact hidden activations (`true` = +1).
    pub fn hidden_activations(&self, codes: &[u8]) -> Vec<bool> {
        self.hidden
            .iter()
            .map(|row| row.iter().zip(codes).map(|(&w, &x)| w as i64 * x as i64).sum::<i64>() >= 0)
            .collect()
    }

    /// Encoded outputs `o = 2P + Z` for given hidden activations.
    pub fn output_values(&self, y: &[bool]) -> Vec<i64> {
        self.output
            .iter()
            .map(|row| {
                let mut p = 0i64;
                let mut z = 0i64;
                for (&w, &yj) in row.iter().zip(y) {
                    match w {
                        1 => p += yj as i64,
                        -1 => p += !yj as i64,
                        _ => z += 1,
                    }
                }
                2 * p + z
            })
            .collect()
    }

    pub fn normalize_and_quantize(&self, raw: &[f64]) -> Result<Vec<u8>> {
        let norm = self
            .normalization
            .as_ref()
            .ok_or_else(|| Error::Contract("model carries no normalization constants".into()))?;
        if raw.len() != self.features() {
            return Err(Error::Contract(format!("sample has {} features, model has {}", raw.len(), self.features())));
        }
        Ok(quantize_row(&norm.apply(raw), self.k))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[i64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

fn check_sample(model: &TnnModel, codes: &[u8]) -> Result<()> {
    if codes.len() != model.features() {
        return Err(Error::Contract(format!("sample has {} features, model has {}", codes.len(), model.features())));
    }
    let top = (1u32 << model.k) - 1;
    if codes.iter().any(|&c| c as u32 > top) {
        return Err(Error::Contract(format!("input code exceeds {top}")));
    }
    Ok(())
}

pub fn infer_exact(model: &TnnModel, codes: &[u8]) -> Result<usize> {
    check_sample(model, codes)?;
    Ok(argmax(&model.output_values(&model.hidden_activations(codes))))
}

/// Lookup of library components by key and index.
pub trait ComponentSource: Sync {
    fn ltg(&self, key: LtgKey, id: usize) -> Result<&Netlist>;
    fn popcount(&self, m: usize, id: usize) -> Result<&Netlist>;
    fn ltg_count(&self, key: LtgKey) -> usize;
    fn popcount_count(&self, m: usize) -> usize;
}

/// Exact components only, each at index 0.
#[derive(Clone, Debug, Default)]
pub struct ExactComponents {
    pub ltgs: BTreeMap<LtgKey, Netlist>,
    pub popcounts: BTreeMap<usize, Netlist>,
}

impl ExactComponents {
    pub fn for_model(model: &TnnModel, style: LtgStyle) -> Result<Self> {
        let mut out = Self::default();
        for i in 0..model.hidden_size() {
            let key = model.hidden_key(i);
            if !out.ltgs.contains_key(&key) {
                out.ltgs.insert(key, gen_ltg_exact(&key.spec(), style)?);
            }
        }
        for j in 0..model.classes() {
            let m = model.popcount_size(j);
            if !out.popcounts.contains_key(&m) {
                out.popcounts.insert(m, gen_popcount_exact(PopcountSpec::new(m)?)?);
            }
        }
        Ok(out)
    }
}

impl ComponentSource for ExactComponents {
    fn ltg(&self, key: LtgKey, id: usize) -> Result<&Netlist> {
        match self.ltgs.get(&key) {
            Some(n) if id == 0 => Ok(n),
            _ => Err(Error::Component(format!("{key} #{id}"))),
        }
    }

    fn popcount(&self, m: usize, id: usize) -> Result<&Netlist> {
        match self.popcounts.get(&m) {
            Some(n) if id == 0 => Ok(n),
            _ => Err(Error::Component(format!("popcount m={m} #{id}"))),
        }
    }

    fn ltg_count(&self, key: LtgKey) -> usize {
        self.ltgs.contains_key(&key) as usize
    }

    fn popcount_count(&self, m: usize) -> usize {
        self.popcounts.contains_key(&m) as usize
    }
}

/// Chosen library component per hidden neuron and per output popcount.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentAssignment {
    pub hidden: Vec<usize>,
    pub output: Vec<usize>,
}

impl ComponentAssignment {
    pub fn exact(model: &TnnModel) -> Self {
        Self { hidden: vec![0; model.hidden_size()], output: vec![0; model.classes()] }
    }

    /// Flattened gene list: hidden ids followed by output ids.
    pub fn genes(&self) -> Vec<usize> {
        self.hidden.iter().chain(&self.output).copied().collect()
    }

    pub fn from_genes(model: &TnnModel, genes: &[usize]) -> Self {
        let m = model.hidden_size();
        Self { hidden: genes[..m].to_vec(), output: genes[m..].to_vec() }
    }

    pub fn validate(&self, model: &TnnModel, lib: &dyn ComponentSource) -> Result<()> {
        if self.hidden.len() != model.hidden_size() || self.output.len() != model.classes() {
            return Err(Error::Component("assignment length does not match model".into()));
        }
        for (i, &id) in self.hidden.iter().enumerate() {
            lib.ltg(model.hidden_key(i), id)?;
        }
        for (j, &id) in self.output.iter().enumerate() {
            lib.popcount(model.popcount_size(j), id)?;
        }
        Ok(())
    }

    pub fn resolve<'a>(
        &self,
        model: &TnnModel,
        lib: &'a dyn ComponentSource,
    ) -> Result<(Vec<&'a Netlist>, Vec<&'a Netlist>)> {
        self.validate(model, lib)?;
        let hidden = self.hidden.iter().enumerate().map(|(i, &id)| lib.ltg(model.hidden_key(i), id)).collect::<Result<_>>()?;
        let output = self
            .output
            .iter()
            .enumerate()
            .map(|(j, &id)| lib.popcount(model.popcount_size(j), id))
            .collect::<Result<_>>()?;
        Ok((hidden, output))
    }
}

/// Single-sample inference with the assigned component netlists simulated.
pub fn infer_approx(
    model: &TnnModel,
    assignment: &ComponentAssignment,
    lib: &dyn ComponentSource,
    codes: &[u8],
) -> Result<usize> {
    check_sample(model, codes)?;
    let ev = Evaluator::new(model, vec![codes.to_vec()], vec![0])?;
    Ok(ev.predict(assignment, lib)?[0])
}

/// Bit-sliced evaluation of many samples against component assignments.
pub struct Evaluator<'m> {
    model: &'m TnnModel,
    labels: Vec<usize>,
    samples: usize,
    words: usize,
    /// Per hidden neuron, per canonical input bit, `words` packed words.
    hidden_inputs: Vec<Vec<Vec<u64>>>,
    codes: Vec<Vec<u8>>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m TnnModel, codes: Vec<Vec<u8>>, labels: Vec<usize>) -> Result<Self> {
        if codes.len() != labels.len() {
            return Err(Error::Contract("sample and label counts differ".into()));
        }
        for c in &codes {
            check_sample(model, c)?;
        }
        let samples = codes.len();
        let words = samples.div_ceil(64);
        let k = model.k as usize;
        let hidden_inputs = (0..model.hidden_size())
            .map(|i| {
                let mut bits = Vec::new();
                for f in model.canonical_inputs(i) {
                    for b in 0..k {
                        let mut w = vec![0u64; words];
                        for (s, c) in codes.iter().enumerate() {
                            w[s / 64] |= (((c[f] >> b) & 1) as u64) << (s % 64);
                        }
                        bits.push(w);
                    }
                }
                bits
            })
            .collect();
        Ok(Self { model, labels, samples, words, hidden_inputs, codes })
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    /// Packed activations of hidden neuron `i` when realized by `net`.
    pub fn hidden_words(&self, i: usize, net: &Netlist) -> Result<Vec<u64>> {
        let ins = &self.hidden_inputs[i];
        if net.num_inputs() != ins.len() || net.num_outputs() != 1 {
            return Err(Error::Interface(format!(
                "hidden {i}: component has {} inputs/{} outputs, neuron needs {}/1",
                net.num_inputs(),
                net.num_outputs(),
                ins.len()
            )));
        }
        let mut scratch = Vec::new();
        let mut stim = vec![0u64; ins.len()];
        let node = net.outputs()[0].node as usize;
        let mut out = Vec::with_capacity(self.words);
        for w in 0..self.words {
            for (s, bit) in stim.iter_mut().zip(ins) {
                *s = bit[w];
            }
            net.simulate_words_into(&stim, &mut scratch);
            out.push(scratch[node]);
        }
        Ok(out)
    }

    /// Encoded output values (`2P + Z`) per sample.
    pub fn outputs_from_hidden<H: AsRef<[u64]>>(&self, hidden: &[H], popcounts: &[&Netlist]) -> Result<Vec<Vec<i64>>> {
        let model = self.model;
        let c = model.classes();
        let mut values = vec![vec![0i64; c]; self.samples];
        let mut scratch = Vec::new();
        for (j, pc) in popcounts.iter().enumerate() {
            let row = &model.output[j];
            let m = model.popcount_size(j);
            let g = PopcountSpec { m }.width();
            if pc.num_inputs() != m || pc.num_outputs() != g {
                return Err(Error::Interface(format!(
                    "output {j}: popcount has {}/{} inputs/outputs, expected {m}/{g}",
                    pc.num_inputs(),
                    pc.num_outputs()
                )));
            }
            let z = model.zeros(j) as i64;
            let mut stim = Vec::with_capacity(m);
            for w in 0..self.words {
                stim.clear();
                for (h, &wt) in row.iter().enumerate() {
                    match wt {
                        1 => stim.push(hidden[h].as_ref()[w]),
                        -1 => stim.push(!hidden[h].as_ref()[w]),
                        _ => {}
                    }
                }
                pc.simulate_words_into(&stim, &mut scratch);
                let outs: Vec<u64> = pc.output_nodes().map(|n| scratch[n as usize]).collect();
                let end = ((w + 1) * 64).min(self.samples);
                for s in w * 64..end {
                    let bit = s % 64;
                    let p: i64 = outs.iter().enumerate().map(|(b, &o)| (((o >> bit) & 1) as i64) << b).sum();
                    values[s][j] = 2 * p + z;
                }
            }
        }
        Ok(values)
    }

    pub fn outputs(&self, assignment: &ComponentAssignment, lib: &dyn ComponentSource) -> Result<Vec<Vec<i64>>> {
        let (hn, pn) = assignment.resolve(self.model, lib)?;
        let hidden = hn.iter().enumerate().map(|(i, n)| self.hidden_words(i, n)).collect::<Result<Vec<_>>>()?;
        self.outputs_from_hidden(&hidden, &pn)
    }

    pub fn predict(&self, assignment: &ComponentAssignment, lib: &dyn ComponentSource) -> Result<Vec<usize>> {
        Ok(self.outputs(assignment, lib)?.iter().map(|o| argmax(o)).collect())
    }

    pub fn accuracy_of(&self, predictions: &[usize]) -> Result<f64> {
        if self.samples == 0 {
            return Err(Error::Dataset("empty split".into()));
        }
        let hits = predictions.iter().zip(&self.labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / self.samples as f64)
    }

    pub fn accuracy(&self, assignment: &ComponentAssignment, lib: &dyn ComponentSource) -> Result<f64> {
        if self.samples == 0 {
            return Err(Error::Dataset("empty split".into()));
        }
        self.accuracy_of(&self.predict(assignment, lib)?)
    }

    pub fn exact_predictions(&self) -> Vec<usize> {
        self.codes.iter().map(|c| argmax(&self.model.output_values(&self.model.hidden_activations(c)))).collect()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Fraction of correctly classified samples; `None` means exact inference.
pub fn accuracy(
    model: &TnnModel,
    assignment: Option<(&ComponentAssignment, &dyn ComponentSource)>,
    codes: &[Vec<u8>],
    labels: &[usize],
) -> Result<f64> {
    if codes.is_empty() {
        return Err(Error::Dataset("empty split".into()));
    }
    let ev = Evaluator::new(model, codes.to_vec(), labels.to_vec())?;
    match assignment {
        Some((a, lib)) => ev.accuracy(a, lib),
        None => ev.accuracy_of(&ev.exact_predictions()),
    }
}

/// Smallest gap between the two largest encoded outputs over all samples.
pub fn confidence_margin(
    model: &TnnModel,
    assignment: Option<(&ComponentAssignment, &dyn ComponentSource)>,
    codes: &[Vec<u8>],
) -> Result<i64> {
    if model.classes() < 2 {
        return Err(Error::Contract("margin needs at least two classes".into()));
    }
    if codes.is_empty() {
        return Err(Error::Dataset("empty split".into()));
    }
    let values = match assignment {
        Some((a, lib)) => Evaluator::new(model, codes.to_vec(), vec![0; codes.len()])?.outputs(a, lib)?,
        None => codes.iter().map(|c| model.output_values(&model.hidden_activations(c))).collect(),
    };
    Ok(values.iter().map(|o| top_gap(o)).min().unwrap())
}

fn top_gap(o: &[i64]) -> i64 {
    let mut v = o.to_vec();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v[0] - v[1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rates: Vec<f64>,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Fraction of the training split held out for early stopping.
    pub validation_fraction: f64,
    /// Independent initializations per learning rate.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rates: vec![0.01, 0.03, 0.1],
            max_epochs: 30,
            patience: 6,
            batch_size: 32,
            validation_fraction: 0.2,
            restarts: 4,
            seed: 0,
        }
    }
}

/// Training summary for one learning rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainTrace {
    pub learning_rate: f64,
    pub best_epoch: usize,
    pub validation_accuracy: f64,
}

const TERNARY_RATIO: f64 = 0.7;

/// Ternarizes a row with threshold `Δ`; keeps the largest entry when every
/// entry would vanish.
fn ternarize_row(row: &[f64], delta: f64, out: &mut [i8]) {
    let mut any = false;
    for (o, &w) in out.iter_mut().zip(row) {
        *o = if w > delta {
            1
        } else if w < -delta {
            -1
        } else {
            0
        };
        any |= *o != 0;
    }
    if !any {
        let (i, &w) = row.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
        out[i] = if w < 0.0 { -1 } else { 1 };
    }
}

fn ternarize(w: &[Vec<f64>]) -> Vec<Vec<i8>> {
    let count = w.iter().map(Vec::len).sum::<usize>().max(1);
    let delta = TERNARY_RATIO * w.iter().flatten().map(|x| x.abs()).sum::<f64>() / count as f64;
    w.iter()
        .map(|r| {
            let mut out = vec![0i8; r.len()];
            ternarize_row(r, delta, &mut out);
            out
        })
        .collect()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, w: &mut [f64], g: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..w.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g[i] * g[i];
            let step = lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
            w[i] = (w[i] - step).clamp(-1.0, 1.0);
        }
    }
}

fn flat(w: &[Vec<f64>]) -> Vec<f64> {
    w.iter().flatten().copied().collect()
}

fn unflat(flat: &[f64], rows: usize) -> Vec<Vec<f64>> {
    flat.chunks(flat.len() / rows).map(<[f64]>::to_vec).collect()
}

fn exact_accuracy(model: &TnnModel, x: &[Vec<u8>], y: &[usize]) -> f64 {
    let hits = x.iter().zip(y).filter(|(c, &l)| argmax(&model.output_values(&model.hidden_activations(c))) == l).count();
    hits as f64 / x.len().max(1) as f64
}

/// Trains a ternary network with `m` hidden neurons on `k`-bit inputs. Each
/// learning rate of the grid is tried; the checkpoint with the best
/// validation accuracy is returned.
pub fn train(data: &Dataset, k: u32, m: usize, cfg: &TrainConfig) -> Result<(TnnModel, Vec<TrainTrace>)> {
    if !(1..=50).contains(&m) {
        return Err(Error::Config(format!("hidden size {m} outside 1..=50")));
    }
    if !(1..=4).contains(&k) {
        return Err(Error::Config(format!("input precision {k} outside 1..=4")));
    }
    if cfg.learning_rates.is_empty() || cfg.max_epochs == 0 || cfg.max_epochs > 30 {
        return Err(Error::Config("need a learning-rate grid and 1..=30 epochs".into()));
    }
    if data.num_classes() < 2 {
        return Err(Error::Dataset("training needs at least two classes".into()));
    }
    let mut idx = data.train.clone();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed));
    let n_val = ((idx.len() as f64) * cfg.validation_fraction).round() as usize;
    let (fit_idx, val_idx) = if n_val == 0 || n_val >= idx.len() {
        (idx.clone(), idx.clone())
    } else {
        let v = idx.split_off(idx.len() - n_val);
        (idx, v)
    };
    let (fit_x, fit_y) = data.quantized(&fit_idx, k);
    let (val_x, val_y) = data.quantized(&val_idx, k);

    // ranked by validation accuracy, then by accuracy on the fitting rows
    let mut best: Option<((f64, f64), TnnModel)> = None;
    let mut traces = Vec::new();
    for (li, &lr) in cfg.learning_rates.iter().enumerate() {
        for r in 0..cfg.restarts.max(1) {
            let seed = cfg.seed.wrapping_add((li * 1000 + r) as u64 * 0x9e37_79b9);
            let (model, trace) = train_one(data, k, m, lr, seed, cfg, (&fit_x, &fit_y), (&val_x, &val_y))?;
            let score = (trace.validation_accuracy, exact_accuracy(&model, &fit_x, &fit_y));
            if best.as_ref().map_or(true, |(s, _)| score > *s) {
                best = Some((score, model));
            }
            traces.push(trace);
        }
    }
    Ok((best.unwrap().1, traces))
}

#[allow(clippy::too_many_arguments)]
fn train_one(
    data: &Dataset,
    k: u32,
    m: usize,
    lr: f64,
    seed: u64,
    cfg: &TrainConfig,
    fit: (&[Vec<u8>], &[usize]),
    val: (&[Vec<u8>], &[usize]),
) -> Result<(TnnModel, TrainTrace)> {
    let n = data.num_features();
    let c = data.num_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w1: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut w2: Vec<Vec<f64>> = (0..c).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut adam1 = Adam::new(m * n);
    let mut adam2 = Adam::new(c * m);
    let scale = 1.0 / ((1u32 << k) - 1) as f64;
    let fx: Vec<Vec<f64>> = fit.0.iter().map(|r| r.iter().map(|&v| v as f64 * scale).collect()).collect();
    let logit_scale = 2.0 / (m as f64).sqrt();
    let window = (n as f64).sqrt() * 0.5;

    let snapshot = |w1: &[Vec<f64>], w2: &[Vec<f64>]| {
        TnnModel::new(k, ternarize(w1), ternarize(w2), Some(data.normalization.clone()))
    };
    let mut best = snapshot(&w1, &w2)?;
    let mut best_acc = exact_accuracy(&best, val.0, val.1);
    let mut best_epoch = 0;
    let mut order: Vec<usize> = (0..fx.len()).collect();
    let (mut a, mut h, mut o) = (vec![0.0; m], vec![0.0; m], vec![0.0; c]);
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            let t1 = ternarize(&w1);
            let t2 = ternarize(&w2);
            let mut g1 = vec![0.0; m * n];
            let mut g2 = vec![0.0; c * m];
            for &s in batch {
                let x = &fx[s];
                for i in 0..m {
                    a[i] = t1[i].iter().zip(x).map(|(&w, &v)| w as f64 * v).sum();
                    h[i] = if a[i] >= 0.0 { 1.0 } else { -1.0 };
                }
                for j in 0..c {
                    o[j] = logit_scale * t2[j].iter().zip(&h).map(|(&w, &v)| w as f64 * v).sum::<f64>();
                }
                let mx = o.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = o.iter().map(|v| (v - mx).exp()).sum();
                let mut dh = vec![0.0; m];
                for j in 0..c {
                    let p = (o[j] - mx).exp() / z;
                    let d = (p - (fit.1[s] == j) as u8 as f64) * logit_scale;
                    for i in 0..m {
                        g2[j * m + i] += d * h[i];
                        dh[i] += d * t2[j][i] as f64;
                    }
                }
                for i in 0..m {
                    if a[i].abs() <= window {
                        for f in 0..n {
                            g1[i * n + f] += dh[i] * x[f];
                        }
                    }
                }
            }
            let bs = batch.len() as f64;
            g1.iter_mut().for_each(|g| *g /= bs);
            g2.iter_mut().for_each(|g| *g /= bs);
            let mut f1 = flat(&w1);
            let mut f2 = flat(&w2);
            adam1.step(&mut f1, &g1, lr);
            adam2.step(&mut f2, &g2, lr);
            w1 = unflat(&f1, m);
            w2 = unflat(&f2, c);
        }
        if w1.iter().flatten().chain(w2.iter().flatten()).any(|v| !v.is_finite()) {
            log::warn!("training diverged at epoch {epoch}; keeping best checkpoint");
            break;
        }
        let model = snapshot(&w1, &w2)?;
        let acc = exact_accuracy(&model, val.0, val.1);
        if acc > best_acc {
            best_acc = acc;
            best = model;
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    Ok((best, TrainTrace { learning_rate: lr, best_epoch, validation_accuracy: best_acc }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_model() -> TnnModel {
        TnnModel::new(2, vec![vec![1, -1], vec![0, 1]], vec![vec![1, 0], vec![-1, 1]], None).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(1.0, 2), 3);
        assert_eq!(quantize(0.0, 4), 0);
        assert_eq!(quantize(0.5, 2), 2);
        assert_eq!(quantize(1.7, 1), 1);
        assert_eq!(quantize(-0.2, 3), 0);
    }

    #[test]
    fn quantize_monotone_and_surjective() {
        for k in 1..=4 {
            let mut prev = 0;
            let mut seen = std::collections::BTreeSet::new();
            for i in 0..=1000 {
                let q = quantize(i as f64 / 1000.0, k);
                assert!(q >= prev);
                prev = q;
                seen.insert(q);
            }
            assert_eq!(seen.len(), 1 << k);
        }
    }

    #[test]
    fn sign_zero_is_one() {
        let model = toy_model();
        assert_eq!(model.hidden_activations(&[2, 2]), vec![true, true]);
        assert_eq!(model.hidden_activations(&[1, 2]), vec![false, true]);
    }

    #[test]
    fn encoded_outputs_shift_by_m() {
        let model = toy_model();
        for a in 0..4u8 {
            for b in 0..4u8 {
                let y = model.hidden_activations(&[a, b]);
                let o = model.output_values(&y);
                for (j, row) in model.output.iter().enumerate() {
                    let dot: i64 = row.iter().zip(&y).map(|(&w, &v)| w as i64 * if v { 1 } else { -1 }).sum();
                    assert_eq!(o[j], dot + 2);
                }
            }
        }
    }

    #[test]
    fn model_json_round_trip_and_checks() {
        let model = toy_model();
        let text = serde_json::to_string(&model).unwrap();
        assert!(text.contains("\"z\":[1,0]"));
        let back: TnnModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
        let bad = text.replace("\"z\":[1,0]", "\"z\":[0,0]");
        assert!(serde_json::from_str::<TnnModel>(&bad).is_err());
        assert!(TnnModel::new(2, vec![vec![0, 0]], vec![vec![1], vec![1]], None).is_err());
        assert!(TnnModel::new(2, vec![vec![1]], vec![vec![1]], None).is_err());
    }

    #[test]
    fn argmax_tie_lowest() {
        assert_eq!(argmax(&[3, 5, 5]), 1);
        assert_eq!(argmax(&[4, 4]), 0);
    }

    #[test]
    fn margin_and_accuracy_edges() {
        let model = toy_model();
        assert!(accuracy(&model, None, &[], &[]).is_err());
        // o = (2+1, 0+2) for y=(1,1) → gap 1
        assert_eq!(confidence_margin(&model, None, &[vec![3, 3]]).unwrap(), 1);
        let eq = TnnModel::new(1, vec![vec![1]], vec![vec![1], vec![1]], None).unwrap();
        assert_eq!(confidence_margin(&eq, None, &[vec![0]]).unwrap(), 0);
    }

    #[test]
    fn normalization_rules() {
        let raw = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let d = Dataset::from_raw(vec!["a".into(), "b".into()], raw, vec![0, 1], vec!["x".into(), "y".into()], 1).unwrap();
        for r in &d.features {
            assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(r[1], 0.0);
        }
    }

    #[test]
    fn labels_sorted_numerically() {
        let (l, names) = encode_labels(&["10".into(), "9".into(), "10".into()]);
        assert_eq!(names, vec!["9", "10"]);
        assert_eq!(l, vec![1, 0, 1]);
    }
}
