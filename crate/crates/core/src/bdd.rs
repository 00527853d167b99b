//! Reduced ordered binary decision diagrams with exact model counting.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::netlist::Netlist;
use crate::tech::GateKind;

/// Default upper bound on nodes per manager.
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

/// Handle to a function in a [`BddManager`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bdd(u32);

impl Bdd {
    pub const FALSE: Bdd = Bdd(0);
    pub const TRUE: Bdd = Bdd(1);

    pub fn is_const(self) -> bool {
        self.0 < 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    level: u32,
    low: u32,
    high: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
    Xor,
}

/// Node store with unique table and computed cache. Variables are
/// identified by their level; level 0 is tested first.
pub struct BddManager {
    vars: u32,
    nodes: Vec<Node>,
    unique: HashMap<Node, u32>,
    cache: HashMap<(Op, u32, u32), u32>,
    budget: usize,
}

impl BddManager {
    pub fn new(vars: usize) -> Self {
        Self::with_budget(vars, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(vars: usize, budget: usize) -> Self {
        let term = Node { level: vars as u32, low: 0, high: 0 };
        Self {
            vars: vars as u32,
            nodes: vec![term, Node { high: 1, low: 1, ..term }],
            unique: HashMap::new(),
            cache: HashMap::new(),
            budget,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars as usize
    }

    /// Internal nodes allocated so far, terminals excluded.
    pub fn allocated(&self) -> usize {
        self.nodes.len() - 2
    }

    fn level(&self, f: u32) -> u32 {
        self.nodes[f as usize].level
    }

    fn mk(&mut self, level: u32, low: u32, high: u32) -> Result<u32> {
        if low == high {
            return Ok(low);
        }
        let n = Node { level, low, high };
        if let Some(&id) = self.unique.get(&n) {
            return Ok(id);
        }
        if self.nodes.len() - 2 >= self.budget {
            return Err(Error::NodeBudget(self.budget));
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(n);
        self.unique.insert(n, id);
        Ok(id)
    }

    /// The projection function of the variable at `level`.
    pub fn var(&mut self, level: usize) -> Result<Bdd> {
        assert!(level < self.vars as usize, "variable level out of range");
        Ok(Bdd(self.mk(level as u32, 0, 1)?))
    }

    pub fn constant(v: bool) -> Bdd {
        if v {
            Bdd::TRUE
        } else {
            Bdd::FALSE
        }
    }

    fn apply(&mut self, op: Op, a: u32, b: u32) -> Result<u32> {
        match op {
            Op::And => {
                if a == 0 || b == 0 {
                    return Ok(0);
                }
                if a == 1 {
                    return Ok(b);
                }
                if b == 1 || a == b {
                    return Ok(a);
                }
            }
            Op::Or => {
                if a == 1 || b == 1 {
                    return Ok(1);
                }
                if a == 0 {
                    return Ok(b);
                }
                if b == 0 || a == b {
                    return Ok(a);
                }
            }
            Op::Xor => {
                if a == b {
                    return Ok(0);
                }
                if a == 0 {
                    return Ok(b);
                }
                if b == 0 {
                    return Ok(a);
                }
            }
        }
        let (a, b) = if a > b { (b, a) } else { (a, b) };
        if let Some(&r) = self.cache.get(&(op, a, b)) {
            return Ok(r);
        }
        let (na, nb) = (self.nodes[a as usize], self.nodes[b as usize]);
        let level = na.level.min(nb.level);
        let (a0, a1) = if na.level == level { (na.low, na.high) } else { (a, a) };
        let (b0, b1) = if nb.level == level { (nb.low, nb.high) } else { (b, b) };
        let low = self.apply(op, a0, b0)?;
        let high = self.apply(op, a1, b1)?;
        let r = self.mk(level, low, high)?;
        self.cache.insert((op, a, b), r);
        Ok(r)
    }

    pub fn and(&mut self, a: Bdd, b: Bdd) -> Result<Bdd> {
        Ok(Bdd(self.apply(Op::And, a.0, b.0)?))
    }

    pub fn or(&mut self, a: Bdd, b: Bdd) -> Result<Bdd> {
        Ok(Bdd(self.apply(Op::Or, a.0, b.0)?))
    }

    pub fn xor(&mut self, a: Bdd, b: Bdd) -> Result<Bdd> {
        Ok(Bdd(self.apply(Op::Xor, a.0, b.0)?))
    }

    pub fn not(&mut self, a: Bdd) -> Result<Bdd> {
        self.xor(a, Bdd::TRUE)
    }

    /// Applies a gate of the cell library to operand functions.
    pub fn gate(&mut self, kind: GateKind, a: Bdd, b: Bdd) -> Result<Bdd> {
        match kind {
            GateKind::Const0 => Ok(Bdd::FALSE),
            GateKind::Const1 => Ok(Bdd::TRUE),
            GateKind::Buf => Ok(a),
            GateKind::Not => self.not(a),
            GateKind::And2 => self.and(a, b),
            GateKind::Or2 => self.or(a, b),
            GateKind::Xor2 => self.xor(a, b),
            GateKind::Nand2 => {
                let t = self.and(a, b)?;
                self.not(t)
            }
            GateKind::Nor2 => {
                let t = self.or(a, b)?;
                self.not(t)
            }
            GateKind::Xnor2 => {
                let t = self.xor(a, b)?;
                self.not(t)
            }
        }
    }

    /// Number of satisfying assignments over all variables.
    pub fn sat_count(&self, f: Bdd) -> BigUint {
        let mut memo: HashMap<u32, BigUint> = HashMap::new();
        let below = self.count_below(f.0, &mut memo);
        below << self.level(f.0) as usize
    }

    /// Satisfying assignments of the variables at or below the node's level.
    fn count_below(&self, f: u32, memo: &mut HashMap<u32, BigUint>) -> BigUint {
        match f {
            0 => return BigUint::zero(),
            1 => return BigUint::one(),
            _ => {}
        }
        if let Some(c) = memo.get(&f) {
            return c.clone();
        }
        let n = self.nodes[f as usize];
        let lo = self.count_below(n.low, memo) << (self.level(n.low) - n.level - 1) as usize;
        let hi = self.count_below(n.high, memo) << (self.level(n.high) - n.level - 1) as usize;
        let c = lo + hi;
        memo.insert(f, c.clone());
        c
    }

    /// Evaluates under an assignment indexed by level.
    pub fn eval(&self, f: Bdd, assignment: &[bool]) -> bool {
        let mut cur = f.0;
        while cur > 1 {
            let n = self.nodes[cur as usize];
            cur = if assignment[n.level as usize] { n.high } else { n.low };
        }
        cur == 1
    }

    /// Distinct internal nodes reachable from `f`.
    pub fn size(&self, f: Bdd) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![f.0];
        while let Some(x) = stack.pop() {
            if x > 1 && seen.insert(x) {
                let n = self.nodes[x as usize];
                stack.push(n.low);
                stack.push(n.high);
            }
        }
        seen.len()
    }

    /// Largest unsigned value of the bit functions `bits` (LSB first) over
    /// the assignments satisfying `care`; `None` when `care` is empty.
    pub fn max_value(&mut self, bits: &[Bdd], care: Bdd) -> Result<Option<u64>> {
        if care == Bdd::FALSE {
            return Ok(None);
        }
        let mut cur = care;
        let mut value = 0u64;
        for (i, &b) in bits.iter().enumerate().rev() {
            let t = self.and(cur, b)?;
            if t != Bdd::FALSE {
                cur = t;
                value |= 1 << i;
            }
        }
        Ok(Some(value))
    }
}

/// Builds the function of every netlist output. `order[level]` names the
/// primary input tested at that level.
pub fn build_bdds(mgr: &mut BddManager, net: &Netlist, order: &[usize]) -> Result<Vec<Bdd>> {
    let nodes = build_all(mgr, net, order)?;
    Ok(net.output_nodes().map(|o| nodes[o as usize]).collect())
}

fn build_all(mgr: &mut BddManager, net: &Netlist, order: &[usize]) -> Result<Vec<Bdd>> {
    let n = net.num_inputs();
    if order.len() != n || mgr.num_vars() != n {
        return Err(Error::Interface(format!(
            "variable order covers {} of {n} inputs ({} manager variables)",
            order.len(),
            mgr.num_vars()
        )));
    }
    let mut level_of = vec![usize::MAX; n];
    for (level, &input) in order.iter().enumerate() {
        if input >= n || level_of[input] != usize::MAX {
            return Err(Error::Interface("variable order is not a permutation".into()));
        }
        level_of[input] = level;
    }
    let mut nodes = Vec::with_capacity(net.num_nodes());
    for &lvl in &level_of {
        nodes.push(mgr.var(lvl)?);
    }
    for g in net.gates() {
        let a = nodes[g.fanin[0] as usize];
        let b = nodes[g.fanin[1] as usize];
        let f = mgr.gate(g.kind, a, b)?;
        nodes.push(f);
    }
    Ok(nodes)
}
