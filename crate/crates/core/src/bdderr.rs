//! Exact error analysis of approximate LTG and popcount components through
//! BDDs of a miter circuit, plus an exhaustive simulation oracle.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bdd::{build_bdds, Bdd, BddManager, DEFAULT_NODE_BUDGET};
use crate::circuitgen::{bit_len, sum_tree, Bus, LtgSpec};
use crate::error::{Error, Result};
use crate::netlist::{Builder, Netlist, Sig};

/// Input limit of [`brute_force_error`].
pub const BRUTE_FORCE_MAX_INPUTS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Distance error of a threshold gate; `D = |S| + 1` on mismatch.
    Ltg(LtgSpec),
    /// Arithmetic error of an unsigned popcount result.
    Popcount,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ltg,
    Popcount,
}

/// Exact error counts over a stimulus domain.
///
/// `distance_sum` holds `Σ D` (LTG) or `Σ |P − P̂|` (popcount) and `worst`
/// its maximum. Derived measures are exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ReportFile", try_from = "ReportFile")]
pub struct ErrorReport {
    pub metric: Metric,
    /// Number of stimuli `K`.
    pub domain: BigUint,
    pub mismatches: BigUint,
    pub distance_sum: BigUint,
    pub worst: u64,
    /// `false` when counts come from random sampling.
    pub exhaustive: bool,
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    metric: Metric,
    domain: String,
    mismatches: String,
    distance_sum: String,
    worst: u64,
    exhaustive: bool,
    #[serde(default, skip_deserializing)]
    decimals: Option<serde_json::Map<String, serde_json::Value>>,
}

impl From<ErrorReport> for ReportFile {
    fn from(r: ErrorReport) -> Self {
        let mut d = serde_json::Map::new();
        match r.metric {
            Metric::Ltg => {
                d.insert("ep".into(), r.ep_f64().into());
                d.insert("mde".into(), r.mean_f64().into());
                d.insert("wcde".into(), r.worst.into());
                if let Some(v) = r.epmde() {
                    d.insert("epmde".into(), ratio_f64(&v).into());
                }
            }
            Metric::Popcount => {
                d.insert("mae".into(), r.mean_f64().into());
                d.insert("wcae".into(), r.worst.into());
            }
        }
        ReportFile {
            metric: r.metric,
            domain: r.domain.to_string(),
            mismatches: r.mismatches.to_string(),
            distance_sum: r.distance_sum.to_string(),
            worst: r.worst,
            exhaustive: r.exhaustive,
            decimals: Some(d),
        }
    }
}

impl TryFrom<ReportFile> for ErrorReport {
    type Error = Error;
    fn try_from(f: ReportFile) -> Result<Self> {
        let num = |s: &str| s.parse::<BigUint>().map_err(|e| Error::Contract(format!("bad count `{s}`: {e}")));
        Ok(ErrorReport {
            metric: f.metric,
            domain: num(&f.domain)?,
            mismatches: num(&f.mismatches)?,
            distance_sum: num(&f.distance_sum)?,
            worst: f.worst,
            exhaustive: f.exhaustive,
        })
    }
}

fn ratio_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl ErrorReport {
    pub fn zero(metric: Metric, inputs: usize) -> Self {
        Self {
            metric,
            domain: BigUint::from(1u8) << inputs,
            mismatches: BigUint::zero(),
            distance_sum: BigUint::zero(),
            worst: 0,
            exhaustive: true,
        }
    }

    fn ratio(&self, n: &BigUint) -> BigRational {
        BigRational::new(n.clone().into(), self.domain.clone().into())
    }

    /// Error probability.
    pub fn ep(&self) -> BigRational {
        self.ratio(&self.mismatches)
    }

    /// Mean distance (LTG) or mean absolute error (popcount).
    pub fn mean(&self) -> BigRational {
        self.ratio(&self.distance_sum)
    }

    pub fn ep_f64(&self) -> f64 {
        ratio_f64(&self.ep())
    }

    pub fn mean_f64(&self) -> f64 {
        ratio_f64(&self.mean())
    }

    /// Mean distance over mismatching stimuli; `None` when there are none.
    pub fn epmde(&self) -> Option<BigRational> {
        if self.mismatches.is_zero() {
            None
        } else {
            Some(BigRational::new(self.distance_sum.clone().into(), self.mismatches.clone().into()))
        }
    }

    pub fn mde(&self) -> f64 {
        self.mean_f64()
    }

    pub fn wcde(&self) -> u64 {
        self.worst
    }

    pub fn mae(&self) -> f64 {
        self.mean_f64()
    }

    pub fn wcae(&self) -> u64 {
        self.worst
    }
}

#[derive(Clone, Debug)]
pub struct BddOptions {
    pub node_budget: usize,
    /// Input tested at each BDD level; defaults to the word-wise MSB-first order.
    pub order: Option<Vec<usize>>,
}

impl Default for BddOptions {
    fn default() -> Self {
        Self { node_budget: DEFAULT_NODE_BUDGET, order: None }
    }
}

/// Word-by-word order with the most significant bit of each word first.
pub fn ltg_default_order(spec: &LtgSpec) -> Vec<usize> {
    let k = spec.k as usize;
    (0..spec.nonzero()).flat_map(|s| (0..k).rev().map(move |b| s * k + b)).collect()
}

fn check_pair(exact: &Netlist, approx: &Netlist) -> Result<()> {
    if exact.num_inputs() != approx.num_inputs() || exact.num_outputs() != approx.num_outputs() {
        return Err(Error::Interface(format!(
            "exact has {}/{} inputs/outputs, approximate has {}/{}",
            exact.num_inputs(),
            exact.num_outputs(),
            approx.num_inputs(),
            approx.num_outputs()
        )));
    }
    Ok(())
}

/// `|x − y|` for unsigned buses via a two's-complement difference that is
/// conditionally negated on its sign bit.
fn abs_diff(b: &mut Builder, x: &Bus, y: &Bus) -> Vec<Sig> {
    let w = bit_len(x.max.max(y.max)) + 1;
    let xs = x.widened(w);
    let ys = y.widened(w);
    let mut s = Vec::with_capacity(w);
    let mut carry = Sig::ONE;
    for i in 0..w {
        let q = b.not(ys[i]);
        let t = b.xor(xs[i], q);
        s.push(b.xor(t, carry));
        let g = b.and(xs[i], q);
        let p = b.and(t, carry);
        carry = b.or(g, p);
    }
    let sign = s[w - 1];
    let mut out = Vec::with_capacity(w - 1);
    let mut carry = sign;
    for &bit in &s[..w - 1] {
        let t = b.xor(bit, sign);
        out.push(b.xor(t, carry));
        carry = b.and(t, carry);
    }
    out
}

struct Counts {
    mismatches: BigUint,
    distance_sum: BigUint,
    worst: u64,
}

fn count(mgr: &mut BddManager, mismatch: Bdd, magnitude: &[Bdd], offset: bool) -> Result<Counts> {
    let mismatches = mgr.sat_count(mismatch);
    let mut distance_sum = if offset { mismatches.clone() } else { BigUint::zero() };
    for (i, &bit) in magnitude.iter().enumerate() {
        let f = mgr.and(bit, mismatch)?;
        distance_sum += mgr.sat_count(f) << i;
    }
    let worst = mgr.max_value(magnitude, mismatch)?.map_or(0, |v| v + offset as u64);
    Ok(Counts { mismatches, distance_sum, worst })
}

fn validate_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Interface("variable order is not a permutation of the inputs".into()));
    }
    Ok(())
}

pub fn ltg_error(exact: &Netlist, approx: &Netlist, spec: &LtgSpec) -> Result<ErrorReport> {
    ltg_error_with(exact, approx, spec, &BddOptions::default())
}

/// LTG distance error through the miter `exact ⊕ approx` and a reference
/// magnitude circuit `|S|`.
pub fn ltg_error_with(exact: &Netlist, approx: &Netlist, spec: &LtgSpec, opts: &BddOptions) -> Result<ErrorReport> {
    check_pair(exact, approx)?;
    spec.validate(usize::MAX)?;
    let n = spec.input_bits();
    if exact.num_inputs() != n || exact.num_outputs() != 1 {
        return Err(Error::Interface(format!(
            "LTG needs {n} inputs and 1 output, circuit has {}/{}",
            exact.num_inputs(),
            exact.num_outputs()
        )));
    }
    let order = opts.order.clone().unwrap_or_else(|| ltg_default_order(spec));
    validate_order(&order, n)?;

    let mut b = Builder::new(exact.input_names().to_vec());
    let ins = b.inputs();
    let e = b.instantiate(exact, &ins)?[0];
    let a = b.instantiate(approx, &ins)?[0];
    let miter = b.xor(e, a);
    let k = spec.k as usize;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (slot, i) in spec.active_inputs().into_iter().enumerate() {
        let word = Bus::word(ins[slot * k..(slot + 1) * k].to_vec());
        if spec.weights[i] > 0 {
            pos.push(word);
        } else {
            neg.push(word);
        }
    }
    let p = sum_tree(&mut b, pos);
    let q = sum_tree(&mut b, neg);
    let mag = abs_diff(&mut b, &p, &q);
    let outs: Vec<(String, Sig)> =
        std::iter::once(("m".to_string(), miter)).chain(mag.iter().enumerate().map(|(i, &s)| (format!("s{i}"), s))).collect();
    let net = b.finish(outs)?;

    let mut mgr = BddManager::with_budget(n, opts.node_budget);
    let f = build_bdds(&mut mgr, &net, &order)?;
    let c = count(&mut mgr, f[0], &f[1..], true)?;
    Ok(ErrorReport {
        metric: Metric::Ltg,
        domain: BigUint::from(1u8) << n,
        mismatches: c.mismatches,
        distance_sum: c.distance_sum,
        worst: c.worst,
        exhaustive: true,
    })
}

pub fn popcount_error(exact: &Netlist, approx: &Netlist) -> Result<ErrorReport> {
    popcount_error_with(exact, approx, &BddOptions::default())
}

/// Popcount arithmetic error through a subtract-and-absolute-value miter.
pub fn popcount_error_with(exact: &Netlist, approx: &Netlist, opts: &BddOptions) -> Result<ErrorReport> {
    check_pair(exact, approx)?;
    let n = exact.num_inputs();
    let order = opts.order.clone().unwrap_or_else(|| (0..n).collect());
    validate_order(&order, n)?;

    let mut b = Builder::new(exact.input_names().to_vec());
    let ins = b.inputs();
    let e = Bus::word(b.instantiate(exact, &ins)?);
    let a = Bus::word(b.instantiate(approx, &ins)?);
    let mag = abs_diff(&mut b, &e, &a);
    let mut any = Sig::ZERO;
    for &bit in &mag {
        any = b.or(any, bit);
    }
    let outs: Vec<(String, Sig)> =
        std::iter::once(("m".to_string(), any)).chain(mag.iter().enumerate().map(|(i, &s)| (format!("d{i}"), s))).collect();
    let net = b.finish(outs)?;

    let mut mgr = BddManager::with_budget(n, opts.node_budget);
    let f = build_bdds(&mut mgr, &net, &order)?;
    let c = count(&mut mgr, f[0], &f[1..], false)?;
    Ok(ErrorReport {
        metric: Metric::Popcount,
        domain: BigUint::from(1u8) << n,
        mismatches: c.mismatches,
        distance_sum: c.distance_sum,
        worst: c.worst,
        exhaustive: true,
    })
}

/// Dispatches on the mode.
pub fn component_error(exact: &Netlist, approx: &Netlist, mode: &ErrorMode, opts: &BddOptions) -> Result<ErrorReport> {
    match mode {
        ErrorMode::Ltg(spec) => ltg_error_with(exact, approx, spec, opts),
        ErrorMode::Popcount => popcount_error_with(exact, approx, opts),
    }
}

/// Per-stimulus distance from packed input value `s`, both output words and a lane.
struct Tally {
    mismatches: u64,
    distance_sum: u128,
    worst: u64,
}

fn lane_value(words: &[u64], lane: usize) -> u64 {
    words.iter().enumerate().map(|(b, &w)| ((w >> lane) & 1) << b).sum()
}

fn tally_lanes(mode: &ErrorMode, base: u64, lanes: usize, e: &[u64], a: &[u64], t: &mut Tally) {
    match mode {
        ErrorMode::Ltg(spec) => {
            let diff = e[0] ^ a[0];
            if diff == 0 {
                return;
            }
            let k = spec.k as usize;
            let mask = (1u64 << k) - 1;
            let signs: Vec<i64> = spec.active_inputs().iter().map(|&i| spec.weights[i] as i64).collect();
            for lane in 0..lanes {
                if (diff >> lane) & 1 == 1 {
                    let s = base + lane as u64;
                    let sum: i64 = signs.iter().enumerate().map(|(slot, &w)| w * ((s >> (slot * k)) & mask) as i64).sum();
                    let d = sum.unsigned_abs() + 1;
                    t.mismatches += 1;
                    t.distance_sum += d as u128;
                    t.worst = t.worst.max(d);
                }
            }
        }
        ErrorMode::Popcount => {
            let diff = e.iter().zip(a).fold(0, |acc, (x, y)| acc | (x ^ y));
            if diff == 0 {
                return;
            }
            for lane in 0..lanes {
                if (diff >> lane) & 1 == 1 {
                    let d = lane_value(e, lane).abs_diff(lane_value(a, lane));
                    t.mismatches += 1;
                    t.distance_sum += d as u128;
                    t.worst = t.worst.max(d);
                }
            }
        }
    }
}

fn check_mode(exact: &Netlist, mode: &ErrorMode) -> Result<Metric> {
    match mode {
        ErrorMode::Ltg(spec) => {
            if exact.num_inputs() != spec.input_bits() || exact.num_outputs() != 1 {
                return Err(Error::Interface("circuit does not match the LTG spec".into()));
            }
            Ok(Metric::Ltg)
        }
        ErrorMode::Popcount => Ok(Metric::Popcount),
    }
}

/// Exhaustive word-parallel simulation of both circuits.
pub fn brute_force_error(exact: &Netlist, approx: &Netlist, mode: &ErrorMode) -> Result<ErrorReport> {
    check_pair(exact, approx)?;
    let metric = check_mode(exact, mode)?;
    let n = exact.num_inputs();
    if n > BRUTE_FORCE_MAX_INPUTS {
        return Err(Error::Refused(format!("{n} inputs exceed the {BRUTE_FORCE_MAX_INPUTS}-input enumeration limit")));
    }
    const PATTERNS: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    let total = 1u64 << n;
    let lanes = total.min(64) as usize;
    let chunks = total.div_ceil(64);
    let mut t = Tally { mismatches: 0, distance_sum: 0, worst: 0 };
    let mut stim = vec![0u64; n];
    let (mut se, mut sa) = (Vec::new(), Vec::new());
    for c in 0..chunks {
        for (i, w) in stim.iter_mut().enumerate() {
            *w = if i < 6 { PATTERNS[i] } else if (c >> (i - 6)) & 1 == 1 { u64::MAX } else { 0 };
        }
        exact.simulate_words_into(&stim, &mut se);
        approx.simulate_words_into(&stim, &mut sa);
        let e: Vec<u64> = exact.output_nodes().map(|o| se[o as usize]).collect();
        let a: Vec<u64> = approx.output_nodes().map(|o| sa[o as usize]).collect();
        tally_lanes(mode, c * 64, lanes, &e, &a, &mut t);
    }
    Ok(ErrorReport {
        metric,
        domain: BigUint::from(total),
        mismatches: BigUint::from(t.mismatches),
        distance_sum: BigUint::from(t.distance_sum),
        worst: t.worst,
        exhaustive: true,
    })
}

/// Random-stimulus estimate for circuits whose BDDs exceed the budget.
/// The report is flagged non-exhaustive and its domain is the sample count.
pub fn sampled_error(exact: &Netlist, approx: &Netlist, mode: &ErrorMode, samples: u64, seed: u64) -> Result<ErrorReport> {
    check_pair(exact, approx)?;
    let metric = check_mode(exact, mode)?;
    let n = exact.num_inputs();
    if n > 64 {
        return Err(Error::Refused("sampling supports at most 64 inputs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally { mismatches: 0, distance_sum: 0, worst: 0 };
    let mut done = 0;
    let (mut se, mut sa) = (Vec::new(), Vec::new());
    let mut stim = vec![0u64; n];
    let mut lane_inputs = [0u64; 64];
    while done < samples {
        let lanes = (samples - done).min(64) as usize;
        for v in lane_inputs.iter_mut().take(lanes) {
            *v = if n == 64 { rng.gen() } else { rng.gen_range(0..1u64 << n) };
        }
        for (i, w) in stim.iter_mut().enumerate() {
            *w = (0..lanes).map(|l| ((lane_inputs[l] >> i) & 1) << l).sum();
        }
        exact.simulate_words_into(&stim, &mut se);
        approx.simulate_words_into(&stim, &mut sa);
        let e: Vec<u64> = exact.output_nodes().map(|o| se[o as usize]).collect();
        let a: Vec<u64> = approx.output_nodes().map(|o| sa[o as usize]).collect();
        // lanes hold arbitrary stimuli, so tally one lane at a time
        for l in 0..lanes {
            let e1: Vec<u64> = e.iter().map(|w| (w >> l) & 1).collect();
            let a1: Vec<u64> = a.iter().map(|w| (w >> l) & 1).collect();
            tally_lanes(mode, lane_inputs[l], 1, &e1, &a1, &mut t);
        }
        done += lanes as u64;
    }
    Ok(ErrorReport {
        metric,
        domain: BigUint::from(samples),
        mismatches: BigUint::from(t.mismatches),
        distance_sum: BigUint::from(t.distance_sum),
        worst: t.worst,
        exhaustive: false,
    })
}
