//! Technology model: per-gate areas, the area-proportional power model and
//! the analog-to-digital interface cost table.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate kinds available to generators and to the CGP function set.
///
/// Every kind has at most two inputs. Unary kinds read their first fanin only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "CONST0")]
    Const0,
    #[serde(rename = "CONST1")]
    Const1,
    #[serde(rename = "BUF")]
    Buf,
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "AND2")]
    And2,
    #[serde(rename = "OR2")]
    Or2,
    #[serde(rename = "NAND2")]
    Nand2,
    #[serde(rename = "NOR2")]
    Nor2,
    #[serde(rename = "XOR2")]
    Xor2,
    #[serde(rename = "XNOR2")]
    Xnor2,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::Const0,
        GateKind::Const1,
        GateKind::Buf,
        GateKind::Not,
        GateKind::And2,
        GateKind::Or2,
        GateKind::Nand2,
        GateKind::Nor2,
        GateKind::Xor2,
        GateKind::Xnor2,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Buf | GateKind::Not => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
            GateKind::Buf => "BUF",
            GateKind::Not => "NOT",
            GateKind::And2 => "AND2",
            GateKind::Or2 => "OR2",
            GateKind::Nand2 => "NAND2",
            GateKind::Nor2 => "NOR2",
            GateKind::Xor2 => "XOR2",
            GateKind::Xnor2 => "XNOR2",
        }
    }

    /// Evaluates the gate on 64 stimuli packed into words.
    #[inline]
    pub fn eval_word(self, a: u64, b: u64) -> u64 {
        match self {
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
            GateKind::Buf => a,
            GateKind::Not => !a,
            GateKind::And2 => a & b,
            GateKind::Or2 => a | b,
            GateKind::Nand2 => !(a & b),
            GateKind::Nor2 => !(a | b),
            GateKind::Xor2 => a ^ b,
            GateKind::Xnor2 => !(a ^ b),
        }
    }

    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        self.eval_word(a as u64, b as u64) & 1 == 1
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown gate kind `{s}`")))
    }
}

/// Gate areas plus the power-per-area coefficient of a technology.
///
/// Areas are expressed in mm² so that classifier area and interface area
/// can be summed directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellLibrary {
    pub areas: BTreeMap<GateKind, f64>,
    pub power_coefficient: f64,
}

#[derive(Deserialize)]
struct TechFile {
    #[serde(default)]
    version: Option<u32>,
    power_coefficient: f64,
    areas: BTreeMap<String, f64>,
}

const DEFAULT_TECH: &str = include_str!("../tech/default.json");

impl CellLibrary {
    /// The shipped default technology file.
    pub fn default_lib() -> Self {
        Self::from_json(DEFAULT_TECH).expect("shipped technology file is valid")
    }

    pub fn default_json() -> &'static str {
        DEFAULT_TECH
    }

    pub fn new(areas: BTreeMap<GateKind, f64>, power_coefficient: f64) -> Result<Self> {
        for (kind, &a) in &areas {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::Config(format!("area of {kind} must be a finite value >= 0")));
            }
            if matches!(kind, GateKind::Const0 | GateKind::Const1) && a != 0.0 {
                return Err(Error::Config(format!("{kind} is wiring and must have area 0")));
            }
        }
        if !(power_coefficient >= 0.0) || !power_coefficient.is_finite() {
            return Err(Error::Config("power_coefficient must be >= 0".into()));
        }
        Ok(Self { areas, power_coefficient })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TechFile = serde_json::from_str(text)?;
        if let Some(v) = file.version {
            if v != 1 {
                return Err(Error::Config(format!("unsupported technology file version {v}")));
            }
        }
        let mut areas = BTreeMap::new();
        for (k, v) in file.areas {
            areas.insert(k.parse()?, v);
        }
        Self::new(areas, file.power_coefficient)
    }

    /// Line-oriented form: `KIND area` per line plus a `power_coefficient x`
    /// line. `#` starts a comment.
    pub fn from_lines(text: &str) -> Result<Self> {
        let mut areas = BTreeMap::new();
        let mut coeff = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(key), Some(val), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Config(format!("line {}: expected `KEY VALUE`", no + 1)));
            };
            let val: f64 = val
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad number `{val}`", no + 1)))?;
            if key.eq_ignore_ascii_case("power_coefficient") {
                coeff = Some(val);
            } else {
                areas.insert(key.parse()?, val);
            }
        }
        let coeff = coeff.ok_or_else(|| Error::Config("missing power_coefficient".into()))?;
        Self::new(areas, coeff)
    }

    /// Loads a JSON technology file, or the line-oriented form for any
    /// other extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_lines(&text)
        }
    }

    pub fn gate_area(&self, kind: GateKind) -> Result<f64> {
        self.areas.get(&kind).copied().ok_or(Error::UnknownGate(kind))
    }

    /// `Σ count·area` over gate kinds. Summing integer counts first makes the
    /// result independent of the order in which gates were tallied.
    pub fn histogram_area(&self, hist: &BTreeMap<GateKind, usize>) -> Result<f64> {
        hist.iter().try_fold(0.0, |acc, (&k, &n)| Ok(acc + n as f64 * self.gate_area(k)?))
    }

    /// Power is modeled as proportional to area (leakage dominated).
    pub fn estimate_power(&self, area: f64) -> Result<f64> {
        if area < 0.0 || area.is_nan() {
            return Err(Error::Contract(format!("negative area {area}")));
        }
        Ok(area * self.power_coefficient)
    }

    /// Checks that every kind in `kinds` has an entry.
    pub fn covers(&self, kinds: &[GateKind]) -> Result<()> {
        for &k in kinds {
            self.gate_area(k)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConverterKind {
    Flash,
    #[serde(rename = "SAR")]
    Sar,
    #[serde(rename = "ABC")]
    Abc,
}

impl fmt::Display for ConverterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConverterKind::Flash => "Flash",
            ConverterKind::Sar => "SAR",
            ConverterKind::Abc => "ABC",
        })
    }
}

impl FromStr for ConverterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flash" => Ok(ConverterKind::Flash),
            "sar" => Ok(ConverterKind::Sar),
            "abc" => Ok(ConverterKind::Abc),
            _ => Err(Error::Config(format!("unknown converter kind `{s}`"))),
        }
    }
}

impl ConverterKind {
    /// Interface used for a given input precision: the 1-bit analog-to-binary
    /// converter at one bit, Flash otherwise.
    pub fn for_precision(bits: u32) -> Self {
        if bits == 1 {
            ConverterKind::Abc
        } else {
            ConverterKind::Flash
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCost {
    pub area_mm2: f64,
    pub power_mw: f64,
}

/// Per-converter area and power for one input channel.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceCostTable {
    rows: BTreeMap<(ConverterKind, u32), InterfaceCost>,
}

#[derive(Deserialize)]
struct InterfaceRow {
    kind: String,
    bits: u32,
    area_mm2: f64,
    power_mw: f64,
}

impl Default for InterfaceCostTable {
    fn default() -> Self {
        use ConverterKind::*;
        let entries = [
            (Flash, 2, 5.3, 0.04),
            (Flash, 3, 9.9, 0.13),
            (Flash, 4, 24.2, 0.32),
            (Sar, 2, 19.0, 0.43),
            (Sar, 3, 30.1, 0.76),
            (Sar, 4, 35.8, 1.03),
            (Abc, 1, 0.005, 0.001),
        ];
        let rows = entries
            .into_iter()
            .map(|(k, b, a, p)| ((k, b), InterfaceCost { area_mm2: a, power_mw: p }))
            .collect();
        Self { rows }
    }
}

impl InterfaceCostTable {
    /// Reads override rows from a CSV with columns `kind,bits,area_mm2,power_mw`.
    /// Rows replace or extend the defaults.
    pub fn with_overrides(mut self, path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        for row in rdr.deserialize() {
            let row: InterfaceRow = row?;
            let kind: ConverterKind = row.kind.parse()?;
            if !(1..=4).contains(&row.bits) || (kind == ConverterKind::Abc && row.bits != 1) {
                return Err(Error::Config(format!("invalid interface row {kind} {}", row.bits)));
            }
            self.rows.insert(
                (kind, row.bits),
                InterfaceCost { area_mm2: row.area_mm2, power_mw: row.power_mw },
            );
        }
        Ok(self)
    }

    pub fn cost(&self, kind: ConverterKind, bits: u32) -> Result<InterfaceCost> {
        self.rows
            .get(&(kind, bits))
            .copied()
            .ok_or(Error::UnknownInterface { kind, bits })
    }

    pub fn rows(&self) -> impl Iterator<Item = (ConverterKind, u32, InterfaceCost)> + '_ {
        self.rows.iter().map(|(&(k, b), &c)| (k, b, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_free() {
        let lib = CellLibrary::default_lib();
        assert_eq!(lib.gate_area(GateKind::Const0).unwrap(), 0.0);
        assert_eq!(lib.gate_area(GateKind::Const1).unwrap(), 0.0);
    }

    #[test]
    fn default_file_round_trips() {
        let lib = CellLibrary::default_lib();
        let raw: serde_json::Value = serde_json::from_str(CellLibrary::default_json()).unwrap();
        let not = raw["areas"]["NOT"].as_f64().unwrap();
        assert_eq!(lib.gate_area(GateKind::Not).unwrap(), not);
        lib.covers(&GateKind::ALL).unwrap();
    }

    #[test]
    fn missing_gate_is_an_error() {
        let mut lib = CellLibrary::default_lib();
        lib.areas.remove(&GateKind::Xor2);
        assert!(matches!(lib.gate_area(GateKind::Xor2), Err(Error::UnknownGate(GateKind::Xor2))));
    }

    #[test]
    fn line_format_parses() {
        let lib = CellLibrary::from_lines("# tech\nNOT 1.5\nnand2 2\npower_coefficient 0.5\n").unwrap();
        assert_eq!(lib.gate_area(GateKind::Nand2).unwrap(), 2.0);
        assert_eq!(lib.power_coefficient, 0.5);
        assert!(CellLibrary::from_lines("NOT -1\npower_coefficient 1").is_err());
        assert!(CellLibrary::from_lines("CONST0 1\npower_coefficient 1").is_err());
        assert!(CellLibrary::from_lines("NOT 1").is_err());
    }

    #[test]
    fn power_is_area_times_coefficient() {
        let lib = CellLibrary::new(BTreeMap::new(), 2.0).unwrap();
        assert_eq!(lib.estimate_power(0.0).unwrap(), 0.0);
        assert_eq!(lib.estimate_power(3.0).unwrap(), 6.0);
        assert!(lib.estimate_power(-1.0).is_err());
        let a1 = 0.37;
        let a2 = 1.91;
        let sum = lib.estimate_power(a1).unwrap() + lib.estimate_power(a2).unwrap();
        assert!((lib.estimate_power(a1 + a2).unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn interface_lookup() {
        let t = InterfaceCostTable::default();
        let c = t.cost(ConverterKind::Flash, 3).unwrap();
        assert_eq!((c.area_mm2, c.power_mw), (9.9, 0.13));
        let c = t.cost(ConverterKind::Sar, 2).unwrap();
        assert_eq!((c.area_mm2, c.power_mw), (19.0, 0.43));
        let c = t.cost(ConverterKind::Abc, 1).unwrap();
        assert_eq!((c.area_mm2, c.power_mw), (0.005, 0.001));
        assert!(t.cost(ConverterKind::Abc, 2).is_err());
        assert!(t.cost(ConverterKind::Flash, 1).is_err());
        assert_eq!(t.cost(ConverterKind::Flash, 4).unwrap(), t.cost(ConverterKind::Flash, 4).unwrap());
    }

    #[test]
    fn flash_area_increases_with_bits() {
        let t = InterfaceCostTable::default();
        for b in 3..=4 {
            assert!(
                t.cost(ConverterKind::Flash, b).unwrap().area_mm2
                    > t.cost(ConverterKind::Flash, b - 1).unwrap().area_mm2
            );
        }
    }
}
