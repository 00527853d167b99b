//! Exact bespoke circuit generators: linear threshold gates, popcount adder
//! trees, truncated popcount baselines, output neurons, argmax and the
//! assembled classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{Builder, Netlist, Sig};
use crate::tnn::TnnModel;

/// Default upper bound on LTG input bits (`n·k`) accepted for generation.
pub const DEFAULT_MAX_LTG_BITS: usize = 90;

pub(crate) fn bit_len(v: u64) -> usize {
    (u64::BITS - v.leading_zeros()) as usize
}

/// An unsigned bus (LSB first) with a known upper bound on its value.
#[derive(Clone, Debug)]
pub struct Bus {
    pub bits: Vec<Sig>,
    pub max: u64,
}

impl Bus {
    pub fn bit(s: Sig) -> Self {
        match s {
            Sig::Const(false) => Bus { bits: vec![], max: 0 },
            _ => Bus { bits: vec![s], max: 1 },
        }
    }

    pub fn word(bits: Vec<Sig>) -> Self {
        let max = if bits.is_empty() { 0 } else { (1u64 << bits.len()) - 1 };
        Bus { bits, max }
    }

    pub fn constant(v: u64) -> Self {
        let bits = (0..bit_len(v)).map(|i| Sig::Const((v >> i) & 1 == 1)).collect();
        Bus { bits, max: v }
    }

    fn get(&self, i: usize) -> Sig {
        self.bits.get(i).copied().unwrap_or(Sig::ZERO)
    }

    /// Bits zero-extended (or truncated) to `width`.
    pub fn widened(&self, width: usize) -> Vec<Sig> {
        (0..width).map(|i| self.get(i)).collect()
    }
}

/// Ripple-carry `x + y + cin`; only the bits the value bound needs are built.
pub fn add(b: &mut Builder, x: &Bus, y: &Bus, cin: Sig) -> Bus {
    let cmax = u64::from(cin != Sig::ZERO);
    let max = x.max + y.max + cmax;
    let width = bit_len(max);
    let mut bits = Vec::with_capacity(width);
    let mut carry = cin;
    for i in 0..width {
        let (p, q) = (x.get(i), y.get(i));
        let t = b.xor(p, q);
        bits.push(b.xor(t, carry));
        if i + 1 < width {
            let g = b.and(p, q);
            let prop = b.and(t, carry);
            carry = b.or(g, prop);
        }
    }
    Bus { bits, max }
}

/// Balanced multi-operand adder tree. A spare single-bit operand, when
/// available, is absorbed as the carry-in of the top adder.
pub fn sum_tree(b: &mut Builder, mut words: Vec<Bus>) -> Bus {
    match words.len() {
        0 => return Bus { bits: vec![], max: 0 },
        1 => return words.pop().unwrap(),
        _ => {}
    }
    let mut cin = Sig::ZERO;
    if words.len() >= 3 {
        if let Some(pos) = words.iter().rposition(|w| w.max <= 1 && w.bits.len() == 1) {
            cin = words.remove(pos).bits[0];
        }
    }
    let right = words.split_off(words.len().div_ceil(2));
    let l = sum_tree(b, words);
    let r = sum_tree(b, right);
    add(b, &l, &r, cin)
}

/// Carry out of `x + ~y + 1` over a common width, i.e. `[x >= y]`.
pub fn ge(b: &mut Builder, x: &Bus, y: &Bus) -> Sig {
    let width = x.bits.len().max(y.bits.len());
    let mut carry = Sig::ONE;
    for i in 0..width {
        let p = x.get(i);
        let q = b.not(y.get(i));
        let t = b.xor(p, q);
        let g = b.and(p, q);
        let prop = b.and(t, carry);
        carry = b.or(g, prop);
    }
    carry
}

/// `[x >= c]` for a constant `c`.
pub fn ge_const(b: &mut Builder, x: &Bus, c: u64) -> Sig {
    if c == 0 {
        return Sig::ONE;
    }
    if c > x.max {
        return Sig::ZERO;
    }
    ge(b, x, &Bus::constant(c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LtgStyle {
    /// Adds positive inputs and inverted negative inputs in one tree, then
    /// compares against the constant offset.
    OneTree,
    /// Sums positive and negative inputs in separate trees and subtracts.
    TwoTree,
}

/// Hidden-neuron configuration: ternary weights and input precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LtgSpec {
    pub weights: Vec<i8>,
    pub k: u32,
}

impl LtgSpec {
    pub fn new(weights: Vec<i8>, k: u32) -> Result<Self> {
        let spec = Self { weights, k };
        spec.validate(usize::MAX)?;
        Ok(spec)
    }

    pub fn validate(&self, max_bits: usize) -> Result<()> {
        if !(1..=4).contains(&self.k) {
            return Err(Error::Contract(format!("input precision {} outside 1..=4", self.k)));
        }
        if self.weights.iter().any(|w| !(-1..=1).contains(w)) {
            return Err(Error::Contract("weights must be ternary".into()));
        }
        if self.nonzero() == 0 {
            return Err(Error::Contract("LTG needs at least one nonzero weight".into()));
        }
        if self.input_bits() > max_bits {
            return Err(Error::Refused(format!(
                "LTG with {} input bits exceeds the {max_bits}-bit limit",
                self.input_bits()
            )));
        }
        Ok(())
    }

    pub fn nonzero(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0).count()
    }

    pub fn input_bits(&self) -> usize {
        self.nonzero() * self.k as usize
    }

    /// Positions of nonzero weights, in order; these are the netlist input words.
    pub fn active_inputs(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] != 0).collect()
    }

    /// Largest |Σ wᵢxᵢ| over the input domain.
    pub fn max_abs_sum(&self) -> u64 {
        let top = (1u64 << self.k) - 1;
        let pos = self.weights.iter().filter(|&&w| w > 0).count() as u64;
        let neg = self.weights.iter().filter(|&&w| w < 0).count() as u64;
        pos.max(neg) * top
    }

    /// Weighted sum for a packed stimulus (netlist input order, LSB-first words).
    pub fn weighted_sum(&self, stimulus: &[bool]) -> i64 {
        let k = self.k as usize;
        self.active_inputs()
            .iter()
            .enumerate()
            .map(|(slot, &i)| {
                let x: i64 = (0..k).map(|b| (stimulus[slot * k + b] as i64) << b).sum();
                self.weights[i] as i64 * x
            })
            .sum()
    }
}

/// Library key of an LTG: weights up to input permutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LtgKey {
    pub pos: usize,
    pub neg: usize,
    pub k: u32,
}

impl LtgKey {
    /// Canonical spec: all positive weights first, then all negative ones.
    pub fn spec(&self) -> LtgSpec {
        let mut w = vec![1i8; self.pos];
        w.extend(std::iter::repeat(-1).take(self.neg));
        LtgSpec { weights: w, k: self.k }
    }

    pub fn of(spec: &LtgSpec) -> Self {
        LtgKey {
            pos: spec.weights.iter().filter(|&&w| w > 0).count(),
            neg: spec.weights.iter().filter(|&&w| w < 0).count(),
            k: spec.k,
        }
    }

    pub fn input_bits(&self) -> usize {
        (self.pos + self.neg) * self.k as usize
    }
}

impl std::fmt::Display for LtgKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ltg_p{}_n{}_k{}", self.pos, self.neg, self.k)
    }
}

fn ltg_input_names(spec: &LtgSpec) -> Vec<String> {
    let mut names = Vec::with_capacity(spec.input_bits());
    for i in spec.active_inputs() {
        for bit in 0..spec.k {
            names.push(format!("x{i}_{bit}"));
        }
    }
    names
}

/// Words of the LTG inputs split by weight sign.
fn ltg_words(b: &Builder, spec: &LtgSpec) -> (Vec<Bus>, Vec<Bus>) {
    let k = spec.k as usize;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (slot, i) in spec.active_inputs().into_iter().enumerate() {
        let bits: Vec<Sig> = (0..k).map(|bit| b.input(slot * k + bit)).collect();
        if spec.weights[i] > 0 {
            pos.push(Bus::word(bits));
        } else {
            neg.push(Bus::word(bits));
        }
    }
    (pos, neg)
}

/// Exact LTG: `y = [Σ wᵢxᵢ >= 0]`.
pub fn gen_ltg_exact(spec: &LtgSpec, style: LtgStyle) -> Result<Netlist> {
    gen_ltg_exact_limited(spec, style, DEFAULT_MAX_LTG_BITS)
}

pub fn gen_ltg_exact_limited(spec: &LtgSpec, style: LtgStyle, max_bits: usize) -> Result<Netlist> {
    spec.validate(max_bits)?;
    let mut b = Builder::new(ltg_input_names(spec));
    let (pos, neg) = ltg_words(&b, spec);
    let y = match style {
        LtgStyle::TwoTree => {
            let p = sum_tree(&mut b, pos);
            let n = sum_tree(&mut b, neg);
            ge(&mut b, &p, &n)
        }
        LtgStyle::OneTree => {
            let top = (1u64 << spec.k) - 1;
            let offset = neg.len() as u64 * top;
            let mut words = pos;
            for w in neg {
                let inv = w.bits.iter().map(|&s| b.not(s)).collect();
                words.push(Bus::word(inv));
            }
            let t = sum_tree(&mut b, words);
            ge_const(&mut b, &t, offset)
        }
    };
    Ok(b.finish([("y", y)])?.pruned())
}

/// Popcount configuration: `m` single-bit inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PopcountSpec {
    pub m: usize,
}

impl PopcountSpec {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Contract("popcount needs at least one input".into()));
        }
        Ok(Self { m })
    }

    /// Output width: enough bits for every value in `0..=m`.
    pub fn width(&self) -> usize {
        bit_len(self.m as u64)
    }

    /// `⌈log2 m⌉`, used for error-threshold schedules.
    pub fn log2_ceil(&self) -> u32 {
        (self.m as u64).next_power_of_two().trailing_zeros()
    }
}

fn popcount_names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("p{i}")).collect()
}

pub fn gen_popcount_exact(spec: PopcountSpec) -> Result<Netlist> {
    PopcountSpec::new(spec.m)?;
    let mut b = Builder::new(popcount_names(spec.m));
    let words = b.inputs().into_iter().map(Bus::bit).collect();
    let sum = sum_tree(&mut b, words);
    let bits = sum.widened(spec.width());
    Ok(b.finish_bus("s", &bits)?.pruned())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Ignore the last `t` inputs.
    DropInputs(usize),
    /// Force the `t` least significant output bits to zero.
    DropLsbs(usize),
}

/// Truncation baseline with the same interface as the exact popcount.
pub fn gen_popcount_truncated(spec: PopcountSpec, trunc: Truncation) -> Result<Netlist> {
    PopcountSpec::new(spec.m)?;
    let width = spec.width();
    let mut b = Builder::new(popcount_names(spec.m));
    let bits = match trunc {
        Truncation::DropInputs(t) => {
            if t >= spec.m {
                return Err(Error::Contract(format!("cannot drop {t} of {} inputs", spec.m)));
            }
            let words = b.inputs().into_iter().take(spec.m - t).map(Bus::bit).collect();
            sum_tree(&mut b, words).widened(width)
        }
        Truncation::DropLsbs(t) => {
            if t >= width {
                return Err(Error::Contract(format!("cannot drop {t} of {width} output bits")));
            }
            let words = b.inputs().into_iter().map(Bus::bit).collect();
            let mut bits = sum_tree(&mut b, words).widened(width);
            bits.iter_mut().take(t).for_each(|s| *s = Sig::ZERO);
            bits
        }
    };
    Ok(b.finish_bus("s", &bits)?.pruned())
}

/// Output-neuron configuration: ternary weights over the hidden outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputNeuronSpec {
    pub weights: Vec<i8>,
}

impl OutputNeuronSpec {
    pub fn new(weights: Vec<i8>) -> Result<Self> {
        if weights.iter().any(|w| !(-1..=1).contains(w)) {
            return Err(Error::Contract("weights must be ternary".into()));
        }
        if weights.iter().all(|&w| w == 0) {
            return Err(Error::Contract("output neuron has no nonzero weight".into()));
        }
        Ok(Self { weights })
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn zeros(&self) -> usize {
        self.weights.iter().filter(|&&w| w == 0).count()
    }

    pub fn popcount_inputs(&self) -> usize {
        self.m() - self.zeros()
    }
}

/// Output width of `2P + Z` for a `g`-bit popcount result.
pub fn offset_width(g: usize, z: usize) -> usize {
    let pmax = if g == 0 { 0 } else { (1u64 << g) - 1 };
    bit_len(2 * pmax + z as u64).max(1)
}

/// `o = 2P + Z` for a `g`-bit `P`, zero-extended to `width` bits.
pub fn gen_offset_adder(g: usize, z: usize, width: usize) -> Result<Netlist> {
    if width < offset_width(g, z) {
        return Err(Error::Interface(format!("width {width} too narrow for 2P+{z} with {g}-bit P")));
    }
    let mut b = Builder::new((0..g).map(|i| format!("s{i}")));
    let p = Bus::word(b.inputs());
    let upper = add(&mut b, &p, &Bus::constant((z >> 1) as u64), Sig::ZERO);
    let mut bits = vec![Sig::Const(z & 1 == 1)];
    bits.extend(upper.widened(width - 1));
    b.finish_bus("o", &bits)
}

/// Standalone output neuron `o = 2·P(p) + Z` around the popcount `pc`.
/// Inputs are all `m` hidden activations; zero-weight ones are unused.
pub fn gen_output_neuron(spec: &OutputNeuronSpec, pc: &Netlist) -> Result<Netlist> {
    OutputNeuronSpec::new(spec.weights.clone())?;
    if pc.num_inputs() != spec.popcount_inputs() {
        return Err(Error::Interface(format!(
            "popcount has {} inputs, neuron needs {}",
            pc.num_inputs(),
            spec.popcount_inputs()
        )));
    }
    let mut b = Builder::new((0..spec.m()).map(|j| format!("y{j}")));
    let mut ps = Vec::new();
    for (j, &w) in spec.weights.iter().enumerate() {
        match w {
            1 => ps.push(b.input(j)),
            -1 => {
                let y = b.input(j);
                let id = b.node(y);
                ps.push(Sig::Node(b.raw(crate::tech::GateKind::Not, id, 0)));
            }
            _ => {}
        }
    }
    let p = b.instantiate(pc, &ps)?;
    let z = spec.zeros();
    let w = offset_width(p.len(), z);
    let adder = gen_offset_adder(p.len(), z, w)?;
    let o = b.instantiate(&adder, &p)?;
    b.finish_bus("o", &o)
}

/// Bits needed for a class index.
pub fn index_width(classes: usize) -> usize {
    bit_len(classes.saturating_sub(1) as u64).max(1)
}

/// Index of the largest of `classes` unsigned `width`-bit operands; ties go
/// to the lowest index. Inputs are `o{i}_{bit}`, operand-major, LSB first.
pub fn gen_argmax(classes: usize, width: usize) -> Result<Netlist> {
    if classes < 2 {
        return Err(Error::Contract("argmax needs at least two operands".into()));
    }
    if width == 0 {
        return Err(Error::Contract("argmax operands need at least one bit".into()));
    }
    let names = (0..classes).flat_map(|i| (0..width).map(move |bit| format!("o{i}_{bit}")));
    let mut b = Builder::new(names);
    let operand = |b: &Builder, i: usize| Bus::word((0..width).map(|bit| b.input(i * width + bit)).collect());
    let iw = index_width(classes);
    let mut best = operand(&b, 0);
    let mut best_idx: Vec<Sig> = vec![Sig::ZERO; iw];
    for i in 1..classes {
        let cand = operand(&b, i);
        // strictly greater keeps the earlier index on ties
        let not_gt = ge(&mut b, &best, &cand);
        let gt = b.not(not_gt);
        let bits = (0..width)
            .map(|bit| b.mux(gt, cand.bits[bit], best.bits[bit]))
            .collect();
        best = Bus::word(bits);
        best_idx = (0..iw)
            .map(|bit| b.mux(gt, Sig::Const((i >> bit) & 1 == 1), best_idx[bit]))
            .collect();
    }
    Ok(b.finish_bus("c", &best_idx)?.pruned())
}

/// Parts of the classifier that are never approximated: one inverter per
/// hidden neuron read with a negative output weight, the `2P + Z` adders and
/// the argmax.
#[derive(Clone, Debug)]
pub struct FixedParts {
    pub inverted_hidden: Vec<bool>,
    pub offset_adders: Vec<Netlist>,
    pub argmax: Netlist,
    pub operand_width: usize,
}

impl FixedParts {
    pub fn for_model(model: &TnnModel) -> Result<Self> {
        let m = model.hidden_size();
        let c = model.classes();
        let mut inverted_hidden = vec![false; m];
        for row in &model.output {
            for (j, &w) in row.iter().enumerate() {
                if w < 0 {
                    inverted_hidden[j] = true;
                }
            }
        }
        let widths: Vec<(usize, usize)> = (0..c)
            .map(|j| {
                let mm = model.popcount_size(j);
                (PopcountSpec { m: mm.max(1) }.width(), model.zeros(j))
            })
            .collect();
        let operand_width = widths.iter().map(|&(g, z)| offset_width(g, z)).max().unwrap_or(1);
        let offset_adders = widths
            .iter()
            .map(|&(g, z)| gen_offset_adder(g, z, operand_width))
            .collect::<Result<_>>()?;
        let argmax = gen_argmax(c, operand_width)?;
        Ok(Self { inverted_hidden, offset_adders, argmax, operand_width })
    }

    pub fn area(&self, lib: &crate::tech::CellLibrary) -> Result<f64> {
        let inv = lib.gate_area(crate::tech::GateKind::Not)?;
        let mut a = inv * self.inverted_hidden.iter().filter(|&&x| x).count() as f64;
        for z in &self.offset_adders {
            a += z.area(lib)?;
        }
        Ok(a + self.argmax.area(lib)?)
    }
}

/// Name of the primary input carrying bit `bit` of feature `feature`.
pub fn feature_input_name(feature: usize, bit: u32) -> String {
    format!("f{feature}_{bit}")
}

/// Full classifier netlist from quantized features to the class index.
///
/// `hidden[i]` must take the canonical LTG interface of neuron `i` (positive
/// inputs first, then negative, `k` bits LSB first each). `popcounts[j]` must
/// take the nonzero-weight activations of output neuron `j` in hidden order.
/// Components are copied verbatim so the total area is the sum of parts.
pub fn assemble_tnn(model: &TnnModel, hidden: &[Netlist], popcounts: &[Netlist]) -> Result<Netlist> {
    let m = model.hidden_size();
    if m == 0 {
        return Err(Error::Contract("model has no hidden neurons".into()));
    }
    if hidden.len() != m || popcounts.len() != model.classes() {
        return Err(Error::Interface(format!(
            "expected {m} hidden and {} output components, got {} and {}",
            model.classes(),
            hidden.len(),
            popcounts.len()
        )));
    }
    let k = model.k;
    let n = model.features();
    let names = (0..n).flat_map(|f| (0..k).map(move |bit| feature_input_name(f, bit)));
    let mut b = Builder::new(names);
    let fixed = FixedParts::for_model(model)?;

    let mut y = Vec::with_capacity(m);
    for (i, net) in hidden.iter().enumerate() {
        let order = model.canonical_inputs(i);
        let ins: Vec<Sig> = order
            .iter()
            .flat_map(|&f| (0..k as usize).map(move |bit| f * k as usize + bit))
            .map(|idx| b.input(idx))
            .collect();
        if net.num_outputs() != 1 {
            return Err(Error::Interface(format!("hidden component {i} must have one output")));
        }
        let out = b.instantiate(net, &ins).map_err(|e| Error::Interface(format!("hidden {i}: {e}")))?;
        y.push(out[0]);
    }
    let mut ybar = vec![None; m];
    for j in 0..m {
        if fixed.inverted_hidden[j] {
            let id = b.node(y[j]);
            ybar[j] = Some(Sig::Node(b.raw(crate::tech::GateKind::Not, id, 0)));
        }
    }

    let mut operands = Vec::new();
    for (j, pc) in popcounts.iter().enumerate() {
        let mut ps = Vec::new();
        for (h, &w) in model.output[j].iter().enumerate() {
            match w {
                1 => ps.push(y[h]),
                -1 => ps.push(ybar[h].expect("inverter allocated")),
                _ => {}
            }
        }
        let expected_g = PopcountSpec { m: ps.len().max(1) }.width();
        if pc.num_outputs() != expected_g {
            return Err(Error::Interface(format!(
                "popcount for output {j} has {} outputs, expected {expected_g}",
                pc.num_outputs()
            )));
        }
        let p = b.instantiate(pc, &ps).map_err(|e| Error::Interface(format!("output {j}: {e}")))?;
        operands.extend(b.instantiate(&fixed.offset_adders[j], &p)?);
    }
    let class = b.instantiate(&fixed.argmax, &operands)?;
    b.finish_bus("class", &class)
}
