//! Gate-level combinational netlists.
//!
//! Node ids `0..num_inputs` are primary inputs; gate `i` has node id
//! `num_inputs + i`. Gates are stored in topological order, so every fanin
//! id is smaller than the id of its consumer. Multi-bit outputs are listed
//! LSB first.

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tech::{CellLibrary, GateKind};

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    /// Unused fanins (beyond the kind's arity) are always 0.
    pub fanin: [NodeId; 2],
}

impl Gate {
    pub fn new(kind: GateKind, a: NodeId, b: NodeId) -> Self {
        let fanin = match kind.arity() {
            0 => [0, 0],
            1 => [a, 0],
            _ => [a, b],
        };
        Self { kind, fanin }
    }

    pub fn used_fanins(&self) -> &[NodeId] {
        &self.fanin[..self.kind.arity()]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Output {
    pub name: String,
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Netlist {
    inputs: Vec<String>,
    gates: Vec<Gate>,
    outputs: Vec<Output>,
}

impl Netlist {
    pub fn new(inputs: Vec<String>, gates: Vec<Gate>, outputs: Vec<Output>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::Contract("netlist must have at least one output".into()));
        }
        let n = inputs.len();
        for (i, g) in gates.iter().enumerate() {
            let id = (n + i) as NodeId;
            for &f in g.used_fanins() {
                if f >= id {
                    return Err(Error::Contract(format!(
                        "gate {id} reads node {f} which does not precede it"
                    )));
                }
            }
            if g.fanin[g.kind.arity()..].iter().any(|&f| f != 0) {
                return Err(Error::Contract(format!("gate {id} has stray fanins")));
            }
        }
        let total = (n + gates.len()) as NodeId;
        for o in &outputs {
            if o.node >= total {
                return Err(Error::Contract(format!("output `{}` reads missing node {}", o.name, o.node)));
            }
        }
        Ok(Self { inputs, gates, outputs })
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.inputs.len() + self.gates.len()
    }

    pub fn input_names(&self) -> &[String] {
        &self.inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[Output] {
        &self.outputs
    }

    pub fn output_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.outputs.iter().map(|o| o.node)
    }

    /// Evaluates one stimulus (one bit per primary input, in input order).
    pub fn simulate(&self, stimulus: &[bool]) -> Result<Vec<bool>> {
        if stimulus.len() != self.inputs.len() {
            return Err(Error::Contract(format!(
                "stimulus has {} bits, netlist has {} inputs",
                stimulus.len(),
                self.inputs.len()
            )));
        }
        let words: Vec<u64> = stimulus.iter().map(|&b| b as u64).collect();
        Ok(self.simulate_words(&words).into_iter().map(|w| w & 1 == 1).collect())
    }

    /// Evaluates 64 stimuli at once; bit `j` of each word belongs to stimulus `j`.
    pub fn simulate_words(&self, inputs: &[u64]) -> Vec<u64> {
        let mut scratch = Vec::new();
        self.simulate_words_into(inputs, &mut scratch);
        self.outputs.iter().map(|o| scratch[o.node as usize]).collect()
    }

    /// Word-parallel evaluation that leaves every node value in `values`.
    pub fn simulate_words_into(&self, inputs: &[u64], values: &mut Vec<u64>) {
        assert_eq!(inputs.len(), self.inputs.len(), "input word count mismatch");
        values.clear();
        values.extend_from_slice(inputs);
        for g in &self.gates {
            let a = values[g.fanin[0] as usize];
            let b = values[g.fanin[1] as usize];
            values.push(g.kind.eval_word(a, b));
        }
    }

    /// Evaluates with inputs packed LSB-first into an integer and returns the
    /// outputs packed the same way. Limited to 64 inputs/outputs.
    pub fn eval_packed(&self, inputs: u64) -> u64 {
        let words: Vec<u64> = (0..self.inputs.len()).map(|i| (inputs >> i) & 1).collect();
        self.simulate_words(&words)
            .into_iter()
            .enumerate()
            .fold(0, |acc, (i, w)| acc | ((w & 1) << i))
    }

    /// Sum of gate areas, accumulated per gate kind.
    pub fn area(&self, lib: &CellLibrary) -> Result<f64> {
        lib.histogram_area(&self.gate_histogram())
    }

    /// Copy with every gate that does not reach an output removed.
    pub fn pruned(&self) -> Netlist {
        let n = self.inputs.len();
        let mut live = vec![false; self.num_nodes()];
        for o in &self.outputs {
            live[o.node as usize] = true;
        }
        for i in (0..self.gates.len()).rev() {
            if live[n + i] {
                for &f in self.gates[i].used_fanins() {
                    live[f as usize] = true;
                }
            }
        }
        let mut remap: Vec<NodeId> = (0..n as NodeId).collect();
        remap.resize(self.num_nodes(), NodeId::MAX);
        let mut gates = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            if live[n + i] {
                remap[n + i] = (n + gates.len()) as NodeId;
                gates.push(Gate::new(g.kind, remap[g.fanin[0] as usize], remap[g.fanin[1] as usize]));
            }
        }
        let outputs = self
            .outputs
            .iter()
            .map(|o| Output { name: o.name.clone(), node: remap[o.node as usize] })
            .collect();
        Netlist { inputs: self.inputs.clone(), gates, outputs }
    }

    /// Count of gates of each kind.
    pub fn gate_histogram(&self) -> BTreeMap<GateKind, usize> {
        let mut h = BTreeMap::new();
        for g in &self.gates {
            *h.entry(g.kind).or_insert(0) += 1;
        }
        h
    }

    /// Structural text (`.gnl`): declarations, then one `name = KIND(fanins)` per gate.
    pub fn to_gnl(&self) -> String {
        let prefix = self.gate_prefix();
        let name = |id: NodeId| -> String {
            let id = id as usize;
            if id < self.inputs.len() {
                self.inputs[id].clone()
            } else {
                format!("{prefix}{id}")
            }
        };
        let mut s = String::from("# gnl 1\n");
        for i in &self.inputs {
            let _ = writeln!(s, ".input {i}");
        }
        for o in &self.outputs {
            let _ = writeln!(s, ".output {} {}", o.name, name(o.node));
        }
        for (i, g) in self.gates.iter().enumerate() {
            let id = (self.inputs.len() + i) as NodeId;
            let args: Vec<String> = g.used_fanins().iter().map(|&f| name(f)).collect();
            let _ = writeln!(s, "{} = {}({})", name(id), g.kind, args.join(", "));
        }
        s
    }

    fn gate_prefix(&self) -> String {
        let mut prefix = String::from("g");
        while self.inputs.iter().any(|i| i.starts_with(&prefix)) {
            prefix.push('_');
        }
        prefix
    }

    pub fn from_gnl(text: &str) -> Result<Netlist> {
        parse_gnl(text)
    }

    /// SHA-256 of the structural text, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_gnl().as_bytes()))
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '[' || c == ']')
}

struct ParsedGate {
    name: String,
    kind: GateKind,
    args: Vec<String>,
    line: usize,
}

fn parse_gnl(text: &str) -> Result<Netlist> {
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<(String, String, usize)> = Vec::new();
    let mut gates: Vec<ParsedGate> = Vec::new();
    let err = |line: usize, msg: String| Error::Parse { line, msg };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(".input") {
            let name = rest.trim();
            if !is_ident(name) || rest.split_whitespace().count() != 1 {
                return Err(err(line_no, format!("bad input declaration `{line}`")));
            }
            inputs.push(name.to_string());
        } else if let Some(rest) = line.strip_prefix(".output") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 2 || !is_ident(parts[0]) || !is_ident(parts[1]) {
                return Err(err(line_no, format!("bad output declaration `{line}`")));
            }
            outputs.push((parts[0].to_string(), parts[1].to_string(), line_no));
        } else {
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected `name = KIND(...)`, got `{line}`")))?;
            let name = lhs.trim();
            if !is_ident(name) {
                return Err(err(line_no, format!("bad gate name `{name}`")));
            }
            let rhs = rhs.trim();
            let open = rhs.find('(').ok_or_else(|| err(line_no, "missing `(`".into()))?;
            if !rhs.ends_with(')') {
                return Err(err(line_no, "missing `)`".into()));
            }
            let kind: GateKind = rhs[..open]
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("unknown gate kind `{}`", rhs[..open].trim())))?;
            let inner = rhs[open + 1..rhs.len() - 1].trim();
            let args: Vec<String> = if inner.is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|a| a.trim().to_string()).collect()
            };
            if args.len() != kind.arity() {
                return Err(err(
                    line_no,
                    format!("{kind} takes {} fanin(s), got {}", kind.arity(), args.len()),
                ));
            }
            gates.push(ParsedGate { name: name.to_string(), kind, args, line: line_no });
        }
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, name) in inputs.iter().enumerate() {
        if index.insert(name, i).is_some() {
            return Err(err(0, format!("duplicate name `{name}`")));
        }
    }
    let n = inputs.len();
    for (i, g) in gates.iter().enumerate() {
        if index.insert(&g.name, n + i).is_some() {
            return Err(err(g.line, format!("duplicate name `{}`", g.name)));
        }
    }

    // Kahn's algorithm, preferring file order so already-sorted text is kept as is.
    let mut pending = vec![0usize; gates.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    let mut fanin_ids: Vec<Vec<usize>> = Vec::with_capacity(gates.len());
    for (i, g) in gates.iter().enumerate() {
        let mut ids = Vec::new();
        for a in &g.args {
            let &id = index
                .get(a.as_str())
                .ok_or_else(|| err(g.line, format!("undefined signal `{a}`")))?;
            if id >= n {
                pending[i] += 1;
                users[id - n].push(i);
            }
            ids.push(id);
        }
        fanin_ids.push(ids);
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..gates.len()).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &u in &users[i] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.push(Reverse(u));
            }
        }
    }
    if order.len() != gates.len() {
        let stuck = (0..gates.len()).find(|&i| pending[i] > 0).unwrap_or(0);
        return Err(Error::Cycle(gates[stuck].name.clone()));
    }
    let mut new_id = vec![0 as NodeId; n + gates.len()];
    for (i, slot) in new_id.iter_mut().enumerate().take(n) {
        *slot = i as NodeId;
    }
    for (pos, &g) in order.iter().enumerate() {
        new_id[n + g] = (n + pos) as NodeId;
    }
    let out_gates = order
        .iter()
        .map(|&g| {
            let ids = &fanin_ids[g];
            let a = ids.first().map_or(0, |&x| new_id[x]);
            let b = ids.get(1).map_or(0, |&x| new_id[x]);
            Gate::new(gates[g].kind, a, b)
        })
        .collect();
    let mut outs = Vec::new();
    for (name, sig, line) in outputs {
        let &id = index
            .get(sig.as_str())
            .ok_or_else(|| err(line, format!("undefined signal `{sig}`")))?;
        outs.push(Output { name, node: new_id[id] });
    }
    if outs.is_empty() {
        return Err(err(0, "netlist declares no outputs".into()));
    }
    Netlist::new(inputs, out_gates, outs)
}

/// A signal during construction: a known constant or a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sig {
    Const(bool),
    Node(NodeId),
}

impl Sig {
    pub const ZERO: Sig = Sig::Const(false);
    pub const ONE: Sig = Sig::Const(true);
}

/// Incremental netlist construction with constant folding and structural
/// hashing for the logic helpers. [`Builder::raw`] and
/// [`Builder::instantiate`] copy gates verbatim.
pub struct Builder {
    inputs: Vec<String>,
    gates: Vec<Gate>,
    hash: HashMap<Gate, NodeId>,
    consts: [Option<NodeId>; 2],
}

impl Builder {
    pub fn new<S: Into<String>>(inputs: impl IntoIterator<Item = S>) -> Self {
        Self {
            inputs: inputs.into_iter().map(Into::into).collect(),
            gates: Vec::new(),
            hash: HashMap::new(),
            consts: [None, None],
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn input(&self, i: usize) -> Sig {
        assert!(i < self.inputs.len());
        Sig::Node(i as NodeId)
    }

    pub fn inputs(&self) -> Vec<Sig> {
        (0..self.inputs.len()).map(|i| Sig::Node(i as NodeId)).collect()
    }

    /// Appends a gate without simplification.
    pub fn raw(&mut self, kind: GateKind, a: NodeId, b: NodeId) -> NodeId {
        let id = (self.inputs.len() + self.gates.len()) as NodeId;
        self.gates.push(Gate::new(kind, a, b));
        id
    }

    fn hashed(&mut self, kind: GateKind, a: NodeId, b: NodeId) -> Sig {
        let (a, b) = if kind.arity() == 2 && a > b { (b, a) } else { (a, b) };
        let g = Gate::new(kind, a, b);
        if let Some(&id) = self.hash.get(&g) {
            return Sig::Node(id);
        }
        let id = self.raw(kind, a, b);
        self.hash.insert(g, id);
        Sig::Node(id)
    }

    /// Materializes a signal as a node (constants become CONST gates).
    pub fn node(&mut self, s: Sig) -> NodeId {
        match s {
            Sig::Node(id) => id,
            Sig::Const(v) => {
                let slot = v as usize;
                if let Some(id) = self.consts[slot] {
                    return id;
                }
                let kind = if v { GateKind::Const1 } else { GateKind::Const0 };
                let id = self.raw(kind, 0, 0);
                self.consts[slot] = Some(id);
                id
            }
        }
    }

    pub fn not(&mut self, a: Sig) -> Sig {
        match a {
            Sig::Const(v) => Sig::Const(!v),
            Sig::Node(x) => {
                // NOT(NOT(y)) = y
                let idx = x as usize;
                if idx >= self.inputs.len() {
                    let g = self.gates[idx - self.inputs.len()];
                    if g.kind == GateKind::Not {
                        return Sig::Node(g.fanin[0]);
                    }
                }
                self.hashed(GateKind::Not, x, 0)
            }
        }
    }

    pub fn and(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Const(false), _) | (_, Sig::Const(false)) => Sig::ZERO,
            (Sig::Const(true), x) | (x, Sig::Const(true)) => x,
            (Sig::Node(x), Sig::Node(y)) if x == y => a,
            (Sig::Node(x), Sig::Node(y)) => self.hashed(GateKind::And2, x, y),
        }
    }

    pub fn or(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Const(true), _) | (_, Sig::Const(true)) => Sig::ONE,
            (Sig::Const(false), x) | (x, Sig::Const(false)) => x,
            (Sig::Node(x), Sig::Node(y)) if x == y => a,
            (Sig::Node(x), Sig::Node(y)) => self.hashed(GateKind::Or2, x, y),
        }
    }

    pub fn xor(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Const(false), x) | (x, Sig::Const(false)) => x,
            (Sig::Const(true), x) | (x, Sig::Const(true)) => self.not(x),
            (Sig::Node(x), Sig::Node(y)) if x == y => Sig::ZERO,
            (Sig::Node(x), Sig::Node(y)) => self.hashed(GateKind::Xor2, x, y),
        }
    }

    pub fn xnor(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Const(_), _) | (_, Sig::Const(_)) => {
                let x = self.xor(a, b);
                self.not(x)
            }
            (Sig::Node(x), Sig::Node(y)) if x == y => Sig::ONE,
            (Sig::Node(x), Sig::Node(y)) => self.hashed(GateKind::Xnor2, x, y),
        }
    }

    pub fn nand(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Node(x), Sig::Node(y)) if x != y => self.hashed(GateKind::Nand2, x, y),
            _ => {
                let t = self.and(a, b);
                self.not(t)
            }
        }
    }

    pub fn nor(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Node(x), Sig::Node(y)) if x != y => self.hashed(GateKind::Nor2, x, y),
            _ => {
                let t = self.or(a, b);
                self.not(t)
            }
        }
    }

    /// `sel ? a : b`
    pub fn mux(&mut self, sel: Sig, a: Sig, b: Sig) -> Sig {
        match (sel, a, b) {
            (Sig::Const(true), _, _) => a,
            (Sig::Const(false), _, _) => b,
            _ if a == b => a,
            (_, Sig::Const(true), Sig::Const(false)) => sel,
            (_, Sig::Const(false), Sig::Const(true)) => self.not(sel),
            (_, Sig::Const(true), _) => self.or(sel, b),
            (_, Sig::Const(false), _) => {
                let ns = self.not(sel);
                self.and(ns, b)
            }
            (_, _, Sig::Const(true)) => {
                let ns = self.not(sel);
                self.or(ns, a)
            }
            (_, _, Sig::Const(false)) => self.and(sel, a),
            _ => {
                let t = self.and(sel, a);
                let ns = self.not(sel);
                let f = self.and(ns, b);
                self.or(t, f)
            }
        }
    }

    /// Copies `net` gate by gate with its inputs bound to `inputs`; returns
    /// its output signals.
    pub fn instantiate(&mut self, net: &Netlist, inputs: &[Sig]) -> Result<Vec<Sig>> {
        if inputs.len() != net.num_inputs() {
            return Err(Error::Interface(format!(
                "instance needs {} inputs, got {}",
                net.num_inputs(),
                inputs.len()
            )));
        }
        let mut map: Vec<NodeId> = Vec::with_capacity(net.num_nodes());
        let mut in_sigs: Vec<Sig> = inputs.to_vec();
        for s in &mut in_sigs {
            map.push(self.node(*s));
            *s = Sig::Node(*map.last().unwrap());
        }
        for g in net.gates() {
            let a = map[g.fanin[0] as usize];
            let b = map[g.fanin[1] as usize];
            let id = self.raw(g.kind, a, b);
            map.push(id);
        }
        Ok(net.output_nodes().map(|o| Sig::Node(map[o as usize])).collect())
    }

    pub fn finish<S: Into<String>>(mut self, outputs: impl IntoIterator<Item = (S, Sig)>) -> Result<Netlist> {
        let outs: Vec<(String, Sig)> = outputs.into_iter().map(|(n, s)| (n.into(), s)).collect();
        let mut list = Vec::with_capacity(outs.len());
        for (name, s) in outs {
            let node = self.node(s);
            list.push(Output { name, node });
        }
        Netlist::new(self.inputs, self.gates, list)
    }

    /// Finishes with outputs named `prefix0`, `prefix1`, ...
    pub fn finish_bus(self, prefix: &str, bits: &[Sig]) -> Result<Netlist> {
        self.finish(bits.iter().enumerate().map(|(i, &s)| (format!("{prefix}{i}"), s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn not_net() -> Netlist {
        let mut b = Builder::new(["a"]);
        let a = b.input(0);
        let y = b.not(a);
        b.finish([("y", y)]).unwrap()
    }

    #[test]
    fn single_not() {
        let n = not_net();
        assert_eq!(n.simulate(&[true]).unwrap(), vec![false]);
        assert_eq!(n.simulate(&[false]).unwrap(), vec![true]);
        assert!(n.simulate(&[true, false]).is_err());
    }

    #[test]
    fn single_xor() {
        let mut b = Builder::new(["a", "b"]);
        let (x, y) = (b.input(0), b.input(1));
        let o = b.xor(x, y);
        let n = b.finish([("o", o)]).unwrap();
        assert_eq!(n.simulate(&[true, true]).unwrap(), vec![false]);
        assert_eq!(n.simulate(&[true, false]).unwrap(), vec![true]);
    }

    #[test]
    fn area_sums_gates() {
        let lib = CellLibrary::default_lib();
        let n = Netlist::new(vec!["a".into()], vec![], vec![Output { name: "y".into(), node: 0 }]).unwrap();
        assert_eq!(n.area(&lib).unwrap(), 0.0);
        let n = Netlist::new(
            vec!["a".into()],
            vec![Gate::new(GateKind::Not, 0, 0), Gate::new(GateKind::Not, 1, 0)],
            vec![Output { name: "y".into(), node: 2 }],
        )
        .unwrap();
        assert_eq!(n.area(&lib).unwrap(), 2.0 * lib.gate_area(GateKind::Not).unwrap());
        let mut partial = lib.clone();
        partial.areas.remove(&GateKind::Not);
        assert!(n.area(&partial).is_err());
    }

    #[test]
    fn invalid_netlists_rejected() {
        assert!(Netlist::new(vec!["a".into()], vec![], vec![]).is_err());
        assert!(Netlist::new(
            vec!["a".into()],
            vec![Gate::new(GateKind::And2, 0, 1)],
            vec![Output { name: "y".into(), node: 1 }]
        )
        .is_err());
    }

    #[test]
    fn gnl_round_trip_not() {
        let n = not_net();
        let text = n.to_gnl();
        assert_eq!(text.lines().filter(|l| l.contains('=')).count(), 1);
        assert_eq!(Netlist::from_gnl(&text).unwrap(), n);
    }

    #[test]
    fn gnl_rejects_bad_text() {
        let bad_arity = ".input a\n.output y g1\ng1 = AND2(a)\n";
        assert!(matches!(Netlist::from_gnl(bad_arity), Err(Error::Parse { line: 3, .. })));
        let cyclic = ".input a\n.output y g1\ng1 = AND2(a, g2)\ng2 = NOT(g1)\n";
        assert!(matches!(Netlist::from_gnl(cyclic), Err(Error::Cycle(_))));
        let undefined = ".input a\n.output y g1\ng1 = NOT(b)\n";
        assert!(Netlist::from_gnl(undefined).is_err());
        let no_out = ".input a\ng1 = NOT(a)\n";
        assert!(Netlist::from_gnl(no_out).is_err());
        let garbage = ".input a\n.output y a\nthis is not a gate\n";
        assert!(matches!(Netlist::from_gnl(garbage), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn parser_resorts_gates() {
        let text = ".input a\n.input b\n.output y g2\ng2 = NOT(g1)\ng1 = AND2(a, b)\n";
        let n = Netlist::from_gnl(text).unwrap();
        assert_eq!(n.gates()[0].kind, GateKind::And2);
        assert_eq!(n.simulate(&[true, true]).unwrap(), vec![false]);
    }

    #[test]
    fn gate_prefix_avoids_input_names() {
        let mut b = Builder::new(["g3", "g4"]);
        let (x, y) = (b.input(0), b.input(1));
        let o = b.and(x, y);
        let n = b.finish([("o", o)]).unwrap();
        assert_eq!(Netlist::from_gnl(&n.to_gnl()).unwrap(), n);
    }

    #[test]
    fn builder_folds_constants() {
        let mut b = Builder::new(["a"]);
        let a = b.input(0);
        assert_eq!(b.and(a, Sig::ZERO), Sig::ZERO);
        assert_eq!(b.or(a, Sig::ZERO), a);
        let na = b.not(a);
        assert_eq!(b.not(na), a);
        assert_eq!(b.xor(a, a), Sig::ZERO);
        let n = b.finish([("y", Sig::ONE)]).unwrap();
        assert_eq!(n.simulate(&[false]).unwrap(), vec![true]);
    }

    #[test]
    fn pruning_drops_dead_gates() {
        let mut b = Builder::new(["a", "b"]);
        let (x, y) = (b.input(0), b.input(1));
        let _dead = b.xor(x, y);
        let live = b.and(x, y);
        let n = b.finish([("o", live)]).unwrap();
        assert_eq!(n.gates().len(), 2);
        let p = n.pruned();
        assert_eq!(p.gates().len(), 1);
        for s in 0..4u64 {
            assert_eq!(n.eval_packed(s), p.eval_packed(s));
        }
    }

    prop_compose! {
        fn arb_netlist()(n_in in 1usize..6, specs in prop::collection::vec((0usize..10, any::<u32>(), any::<u32>()), 0..40), outs in prop::collection::vec(any::<u32>(), 1..5)) -> Netlist {
            let mut gates = Vec::new();
            for (i, (k, a, b)) in specs.iter().enumerate() {
                let avail = (n_in + i) as u32;
                gates.push(Gate::new(GateKind::ALL[*k], a % avail, b % avail));
            }
            let total = (n_in + gates.len()) as u32;
            let outputs = outs.iter().enumerate().map(|(i, o)| Output { name: format!("o{i}"), node: o % total }).collect();
            Netlist::new((0..n_in).map(|i| format!("x{i}")).collect(), gates, outputs).unwrap()
        }
    }

    proptest! {
        #[test]
        fn gnl_round_trip_random(net in arb_netlist()) {
            let back = Netlist::from_gnl(&net.to_gnl()).unwrap();
            prop_assert_eq!(&back, &net);
        }

        #[test]
        fn area_is_additive(a in arb_netlist(), b in arb_netlist()) {
            let lib = CellLibrary::default_lib();
            let inputs: Vec<String> = (0..a.num_inputs() + b.num_inputs()).map(|i| format!("i{i}")).collect();
            let mut bld = Builder::new(inputs);
            let all = bld.inputs();
            let oa = bld.instantiate(&a, &all[..a.num_inputs()]).unwrap();
            let ob = bld.instantiate(&b, &all[a.num_inputs()..]).unwrap();
            let outs: Vec<(String, Sig)> = oa.into_iter().chain(ob).enumerate().map(|(i, s)| (format!("o{i}"), s)).collect();
            let joint = bld.finish(outs).unwrap();
            let sum = a.area(&lib).unwrap() + b.area(&lib).unwrap();
            prop_assert!((joint.area(&lib).unwrap() - sum).abs() < 1e-9);
        }

        #[test]
        fn simulate_is_deterministic(net in arb_netlist(), s in any::<u64>()) {
            prop_assert_eq!(net.eval_packed(s), net.eval_packed(s));
        }
    }
}
