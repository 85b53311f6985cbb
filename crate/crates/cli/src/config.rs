//! The JSON configuration document and its validation into runnable inputs.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use vdclab_core::correlate::{Arc, Cell, Orbit, Region, Schedule};
use vdclab_core::experiments::{
    zoo_entry, ClassifyExpect, CounterexampleOptions, NfInput, NfOptions, RecurrenceInput, RecurrenceOptions, RkInput,
    RkOptions, SingleTInput, T1T2Input, T1T2Options, VdcTolerances,
};
use vdclab_core::seq::{Exponent, Rational, SeqSpec};
use vdclab_core::spectral::Tag;
use vdclab_core::torus::{determinant, AffineSystem, CharIndex, CharVector, Irrational, Phase};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub name: String,
    /// Symbol name to pinned 128-bit fraction of a turn, as hex.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub irrationals: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub systems: BTreeMap<String, SystemDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observables: BTreeMap<String, ObservableDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sequences: BTreeMap<String, SequenceDef>,
    pub schedule: ScheduleDef,
    pub experiment: ExperimentDef,
    /// Output directory used when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDef {
    pub matrix: Vec<Vec<i64>>,
    /// Phase expressions such as `"alpha"` or `"1/2+2*alpha"`.
    pub translation: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDef {
    pub terms: Vec<TermDef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDef {
    pub index: Vec<i64>,
    /// `[re, im]`.
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceDef {
    /// `n^k`.
    Monomial(u32),
    /// Integer power-basis coefficients, lowest degree first.
    Polynomial(Vec<i64>),
    /// Rational coefficients such as `"-1/2"`; values must be integers.
    RationalPolynomial(Vec<String>),
    /// `⌊n^c⌋` with `c` in decimal.
    FloorPower(String),
    Table(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleDef {
    /// `1000·2^q` below the budget, then the budget.
    Geometric(u64),
    Cutoffs(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitDef {
    /// `T^n f`.
    System { system: String, observable: String },
    /// `T^{k_n} f`.
    Iterate { system: String, sequence: String, observable: String },
    /// `e(k_n x)`, times an observable when one is named.
    Phase {
        sequence: String,
        irrational: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<String>,
    },
    Constant { observable: String },
    /// A built-in orbit from `vdclab zoo`.
    Zoo(String),
    Sum(Vec<SumTermDef>),
    Product(Vec<OrbitDef>),
    Weighted { weights: Box<OrbitDef>, orbit: Box<OrbitDef> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumTermDef {
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
    pub orbit: OrbitDef,
}

/// A union of boxes; each box lists one `[lo, hi)` arc per coordinate with
/// rational ends such as `["0", "1/2"]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDef {
    pub dim: usize,
    pub boxes: Vec<Vec<[String; 2]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagDef {
    Lebesgue,
    Singular,
    Mixed,
}

impl From<TagDef> for Tag {
    fn from(t: TagDef) -> Tag {
        match t {
            TagDef::Lebesgue => Tag::Lebesgue,
            TagDef::Singular => Tag::Singular,
            TagDef::Mixed => Tag::Mixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomExpectDef {
    pub label: String,
    pub mass: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentDef {
    Counterexample {
        alpha: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        explore: Option<bool>,
    },
    Classify {
        orbit: OrbitDef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_tag: Option<TagDef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_atom: Option<AtomExpectDef>,
    },
    VdcSuite {
        orbit: OrbitDef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hypothesis: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        conclusion: Option<f64>,
    },
    WeightedVdc {
        weights: OrbitDef,
        orbit: OrbitDef,
        tolerance: f64,
    },
    Orthogonality {
        f: OrbitDef,
        g: OrbitDef,
        tolerance: f64,
    },
    Nf {
        t: String,
        s: String,
        sequence: String,
        f: String,
        g: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        discrepancy: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frequency: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lags: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        check_n: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_den: Option<u64>,
    },
    Recurrence {
        t: String,
        s: String,
        sequence: String,
        region: RegionDef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_tolerance: Option<f64>,
    },
    Rk {
        k: u32,
        alpha: String,
        t: String,
        s: Vec<String>,
        region: RegionDef,
        n_max: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        margin: Option<f64>,
        /// Half-width of the non-recurrence strip, e.g. `"1/16"`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strip: Option<String>,
    },
    SingleT {
        t: String,
        s: String,
        polys: Vec<String>,
        f: String,
        gs: Vec<String>,
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lags: Option<u64>,
    },
    T1t2 {
        t: String,
        #[serde(default)]
        rs: Vec<String>,
        s: String,
        w: String,
        polys: Vec<String>,
        f: String,
        #[serde(default)]
        hs: Vec<String>,
        gs: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exact_n: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bit_budget: Option<f64>,
    },
}

impl ExperimentDef {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentDef::Counterexample { .. } => "counterexample",
            ExperimentDef::Classify { .. } => "classify",
            ExperimentDef::VdcSuite { .. } => "vdc_suite",
            ExperimentDef::WeightedVdc { .. } => "weighted_vdc",
            ExperimentDef::Orthogonality { .. } => "orthogonality",
            ExperimentDef::Nf { .. } => "nf",
            ExperimentDef::Recurrence { .. } => "recurrence",
            ExperimentDef::Rk { .. } => "rk",
            ExperimentDef::SingleT { .. } => "single_t",
            ExperimentDef::T1t2 { .. } => "t1t2",
        }
    }
}

/// Parses and validates. Schema errors stop parsing; semantic violations
/// are all collected.
pub fn parse_config(text: &str) -> Result<(ConfigDocument, Resolved), Vec<String>> {
    let doc: ConfigDocument = serde_json::from_str(text).map_err(|e| vec![format!("schema: {e}")])?;
    let resolved = doc.resolve()?;
    Ok((doc, resolved))
}

/// Everything a driver needs, with names replaced by values.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub irrationals: Vec<Irrational>,
    pub schedule: Schedule,
    pub systems: BTreeMap<String, AffineSystem>,
    pub observables: BTreeMap<String, CharVector>,
    pub sequences: BTreeMap<String, SeqSpec>,
    pub experiment: Job,
}

#[derive(Clone, Debug)]
pub enum Job {
    Counterexample { alpha: Irrational, opts: CounterexampleOptions },
    Classify { orbit: Orbit, expect: ClassifyExpect },
    VdcSuite { orbit: Orbit, tol: VdcTolerances },
    WeightedVdc { weights: Orbit, orbit: Orbit, tol: f64 },
    Orthogonality { f: Orbit, g: Orbit, tol: f64 },
    Nf { input: NfInput, opts: NfOptions },
    Recurrence { input: RecurrenceInput, opts: RecurrenceOptions },
    Rk { input: RkInput, opts: RkOptions },
    SingleT { input: SingleTInput, tol: f64, lags: u64 },
    T1t2 { input: T1T2Input, opts: T1T2Options },
}

/// Lags checked for the independence hypothesis when none are given.
pub const DEFAULT_SINGLE_T_LAGS: u64 = 8;

struct Resolver {
    errors: Vec<String>,
    irrationals: BTreeMap<String, Irrational>,
    systems: BTreeMap<String, AffineSystem>,
    observables: BTreeMap<String, CharVector>,
    sequences: BTreeMap<String, SeqSpec>,
}

impl ConfigDocument {
    pub fn resolve(&self) -> Result<Resolved, Vec<String>> {
        let mut r = Resolver {
            errors: Vec::new(),
            irrationals: BTreeMap::new(),
            systems: BTreeMap::new(),
            observables: BTreeMap::new(),
            sequences: BTreeMap::new(),
        };
        for (name, hex) in &self.irrationals {
            if !is_symbol(name) {
                r.errors.push(format!("irrational {name:?}: names must be identifiers"));
            }
            match Irrational::parse_hex(hex) {
                Some(v) => {
                    r.irrationals.insert(name.clone(), Irrational::new(name.as_str(), v));
                }
                None => r.errors.push(format!("irrational {name}: {hex:?} is not a hex fraction of at most 32 digits")),
            }
        }
        for (name, def) in &self.systems {
            if let Some(s) = r.system_def(name, def) {
                r.systems.insert(name.clone(), s);
            }
        }
        for (name, def) in &self.observables {
            if let Some(v) = r.observable_def(name, def) {
                r.observables.insert(name.clone(), v);
            }
        }
        for (name, def) in &self.sequences {
            if let Some(s) = r.sequence_def(name, def) {
                r.sequences.insert(name.clone(), s);
            }
        }
        let schedule = match &self.schedule {
            ScheduleDef::Geometric(b) => Schedule::geometric(*b),
            ScheduleDef::Cutoffs(c) => Schedule::new(c.clone()),
        };
        let schedule = match schedule {
            Ok(s) => Some(s),
            Err(e) => {
                r.errors.push(format!("schedule: {e}"));
                None
            }
        };
        let job = r.job(&self.experiment);
        match (r.errors.is_empty(), schedule, job) {
            (true, Some(schedule), Some(experiment)) => Ok(Resolved {
                irrationals: r.irrationals.values().cloned().collect(),
                schedule,
                systems: r.systems,
                observables: r.observables,
                sequences: r.sequences,
                experiment,
            }),
            _ => Err(r.errors),
        }
    }
}

fn is_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Identifier tokens of a phase expression.
fn symbols_in(text: &str) -> Vec<&str> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|t| t.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_'))
        .collect()
}

fn parse_ratio(text: &str) -> Option<(i64, u64)> {
    let t = text.trim();
    match t.split_once('/') {
        Some((p, q)) => {
            let q: u64 = q.trim().parse().ok()?;
            (q > 0).then_some(())?;
            Some((p.trim().parse().ok()?, q))
        }
        None => Some((t.parse().ok()?, 1)),
    }
}

impl Resolver {
    fn err(&mut self, msg: String) -> Option<std::convert::Infallible> {
        self.errors.push(msg);
        None
    }

    fn system_def(&mut self, name: &str, def: &SystemDef) -> Option<AffineSystem> {
        let d = def.translation.len();
        if def.matrix.len() != d || def.matrix.iter().any(|row| row.len() != d) {
            self.err(format!("system {name}: matrix must be {d}x{d} to match the translation"))?;
        }
        let mut ok = true;
        let det = determinant(&def.matrix).to_string();
        if det != "1" && det != "-1" {
            ok = false;
            self.errors.push(format!("system {name}: det ≠ ±1 (det = {det})"));
        }
        let mut translation = Vec::with_capacity(d);
        for (i, text) in def.translation.iter().enumerate() {
            let missing: Vec<&str> = symbols_in(text).into_iter().filter(|s| !self.irrationals.contains_key(*s)).collect();
            if !missing.is_empty() {
                ok = false;
                self.errors.push(format!(
                    "system {name}: translation[{i}] {text:?} uses undeclared irrational {}",
                    missing.join(", ")
                ));
                continue;
            }
            match Phase::parse(text, |s| self.irrationals.get(s).cloned()) {
                Ok(p) => translation.push(p),
                Err(e) => {
                    ok = false;
                    self.errors.push(format!("system {name}: translation[{i}] {text:?}: {e}"));
                }
            }
        }
        if !ok {
            return None;
        }
        match AffineSystem::new(def.matrix.clone(), translation) {
            Ok(s) => Some(s),
            Err(vdclab_core::torus::TorusError::NotUnimodular { det }) => {
                self.err(format!("system {name}: det ≠ ±1 (det = {det})"))?;
                None
            }
            Err(e) => {
                self.err(format!("system {name}: {e}"))?;
                None
            }
        }
    }

    fn observable_def(&mut self, name: &str, def: &ObservableDef) -> Option<CharVector> {
        let Some(first) = def.terms.first() else {
            self.err(format!("observable {name}: needs at least one term"))?;
            return None;
        };
        let d = first.index.len();
        if def.terms.iter().any(|t| t.index.len() != d) {
            self.err(format!("observable {name}: indices of different lengths"))?;
        }
        if def.terms.iter().any(|t| !t.amplitude.iter().all(|x| x.is_finite())) {
            self.err(format!("observable {name}: amplitudes must be finite"))?;
        }
        Some(CharVector::from_terms(
            d,
            def.terms
                .iter()
                .map(|t| (CharIndex::new(&t.index), Complex64::new(t.amplitude[0], t.amplitude[1]))),
        ))
    }

    fn sequence_def(&mut self, name: &str, def: &SequenceDef) -> Option<SeqSpec> {
        let out = match def {
            SequenceDef::Monomial(k) => Ok(SeqSpec::monomial(*k as usize)),
            SequenceDef::Polynomial(c) => SeqSpec::polynomial(&c.iter().map(|&x| x as i128).collect::<Vec<_>>()).map_err(|e| e.to_string()),
            SequenceDef::RationalPolynomial(c) => {
                let mut coeffs = Vec::new();
                for text in c {
                    match parse_ratio(text) {
                        Some((p, q)) => coeffs.push(Rational::new(p as i128, q as i128)),
                        None => {
                            self.err(format!("sequence {name}: {text:?} is not a rational"))?;
                        }
                    }
                }
                SeqSpec::polynomial_rational(&coeffs).map_err(|e| e.to_string())
            }
            SequenceDef::FloorPower(c) => Exponent::from_decimal(c).map(SeqSpec::floor_power).map_err(|e| e.to_string()),
            SequenceDef::Table(v) => Ok(SeqSpec::table(v.iter().map(|&x| x as i128).collect())),
        };
        match out {
            Ok(s) => Some(s),
            Err(e) => {
                self.err(format!("sequence {name}: {e}"))?;
                None
            }
        }
    }

    fn irrational(&mut self, what: &str, name: &str) -> Option<Irrational> {
        let found = self.irrationals.get(name).cloned();
        if found.is_none() {
            self.err(format!("{what}: undeclared irrational {name}"))?;
        }
        found
    }

    fn system(&mut self, what: &str, name: &str) -> Option<AffineSystem> {
        self.lookup(what, "system", name, |r| r.systems.get(name).cloned())
    }

    fn observable(&mut self, what: &str, name: &str) -> Option<CharVector> {
        self.lookup(what, "observable", name, |r| r.observables.get(name).cloned())
    }

    fn sequence(&mut self, what: &str, name: &str) -> Option<SeqSpec> {
        self.lookup(what, "sequence", name, |r| r.sequences.get(name).cloned())
    }

    /// Missing names are reported only when no definition exists at all, so
    /// a definition that failed to validate is not reported twice.
    fn lookup<T>(&mut self, what: &str, kind: &str, name: &str, get: impl Fn(&Self) -> Option<T>) -> Option<T> {
        let found = get(self);
        if found.is_none() && !self.defined(kind, name) {
            self.err(format!("{what}: undeclared {kind} {name}"))?;
        }
        found
    }

    fn defined(&self, kind: &str, name: &str) -> bool {
        // a failed definition has already produced an error naming it
        self.errors.iter().any(|e| e.starts_with(&format!("{kind} {name}:")))
    }

    fn many<T>(&mut self, names: &[String], mut get: impl FnMut(&mut Self, &str) -> Option<T>) -> Option<Vec<T>> {
        let items: Vec<Option<T>> = names.iter().map(|n| get(self, n)).collect();
        items.into_iter().collect()
    }

    fn orbit(&mut self, what: &str, def: &OrbitDef) -> Option<Orbit> {
        match def {
            OrbitDef::System { system, observable } => {
                let (s, f) = (self.system(what, system), self.observable(what, observable));
                let (s, f) = (s?, f?);
                self.same_dim(what, s.dim(), f.dim())?;
                Some(Orbit::system(s, f))
            }
            OrbitDef::Iterate { system, sequence, observable } => {
                let (s, k, f) = (self.system(what, system), self.sequence(what, sequence), self.observable(what, observable));
                let (s, k, f) = (s?, k?, f?);
                self.same_dim(what, s.dim(), f.dim())?;
                Some(Orbit::iterate(s, k, f))
            }
            OrbitDef::Phase { sequence, irrational, observable } => {
                let k = self.sequence(what, sequence);
                let x = self.irrational(what, irrational);
                let f = match observable {
                    Some(o) => Some(self.observable(what, o)?),
                    None => None,
                };
                let (k, x) = (k?, x?);
                Some(match f {
                    Some(f) => Orbit::Phase { seq: k, x, f },
                    None => Orbit::scalar_phase(k, x),
                })
            }
            OrbitDef::Constant { observable } => Some(Orbit::constant(self.observable(what, observable)?)),
            OrbitDef::Zoo(name) => {
                let e = zoo_entry(name);
                if e.is_none() {
                    self.err(format!("{what}: no zoo entry {name}"))?;
                }
                Some(e?.orbit)
            }
            OrbitDef::Sum(terms) => {
                let parts: Vec<Option<(Complex64, Orbit)>> = terms
                    .iter()
                    .map(|t| Some((Complex64::new(t.amplitude[0], t.amplitude[1]), self.orbit(what, &t.orbit)?)))
                    .collect();
                let parts: Vec<(Complex64, Orbit)> = parts.into_iter().collect::<Option<_>>()?;
                self.uniform_dim(what, parts.iter().map(|p| p.1.dim()))?;
                Some(Orbit::Sum(parts))
            }
            OrbitDef::Product(items) => {
                let parts: Vec<Option<Orbit>> = items.iter().map(|o| self.orbit(what, o)).collect();
                let parts: Vec<Orbit> = parts.into_iter().collect::<Option<_>>()?;
                self.uniform_dim(what, parts.iter().map(Orbit::dim))?;
                Some(Orbit::Product(parts))
            }
            OrbitDef::Weighted { weights, orbit } => {
                let (w, o) = (self.orbit(what, weights), self.orbit(what, orbit));
                let (w, o) = (w?, o?);
                if w.dim() != 0 {
                    self.err(format!("{what}: weights must be a scalar orbit"))?;
                }
                Some(Orbit::weighted(w, o))
            }
        }
    }

    fn same_dim(&mut self, what: &str, a: usize, b: usize) -> Option<()> {
        if a != b {
            self.err(format!("{what}: dimensions {a} and {b} differ"))?;
        }
        Some(())
    }

    fn uniform_dim(&mut self, what: &str, mut dims: impl Iterator<Item = usize>) -> Option<()> {
        if let Some(first) = dims.next() {
            if let Some(other) = dims.find(|&d| d != first) {
                self.err(format!("{what}: dimensions {first} and {other} differ"))?;
            }
        }
        Some(())
    }

    fn region(&mut self, what: &str, def: &RegionDef) -> Option<Region> {
        let mut cells = Vec::new();
        let mut ok = true;
        for (b, arcs) in def.boxes.iter().enumerate() {
            let mut cell = Vec::new();
            for [lo, hi] in arcs {
                match (parse_ratio(lo), parse_ratio(hi)) {
                    (Some(l), Some(h)) => match Arc::from_ratios(l, h) {
                        Ok(a) => cell.push(a),
                        Err(e) => {
                            ok = false;
                            self.errors.push(format!("{what}: box {b}: {e}"));
                        }
                    },
                    _ => {
                        ok = false;
                        self.errors.push(format!("{what}: box {b}: ends {lo:?}, {hi:?} must be rationals"));
                    }
                }
            }
            cells.push(Cell(cell));
        }
        if !ok {
            return None;
        }
        match Region::new(def.dim, cells) {
            Ok(r) => Some(r),
            Err(e) => {
                self.err(format!("{what}: {e}"))?;
                None
            }
        }
    }

    fn job(&mut self, def: &ExperimentDef) -> Option<Job> {
        let what = format!("experiment {}", def.kind());
        let what = what.as_str();
        match def {
            ExperimentDef::Counterexample { alpha, tolerance, explore } => {
                let d = CounterexampleOptions::default();
                Some(Job::Counterexample {
                    alpha: self.irrational(what, alpha)?,
                    opts: CounterexampleOptions {
                        tolerance: tolerance.unwrap_or(d.tolerance),
                        explore: explore.unwrap_or(d.explore),
                    },
                })
            }
            ExperimentDef::Classify { orbit, expect_tag, expect_atom } => Some(Job::Classify {
                orbit: self.orbit(what, orbit)?,
                expect: ClassifyExpect {
                    tag: expect_tag.map(Tag::from),
                    atom: expect_atom.as_ref().map(|a| (a.label.clone(), a.mass, a.tolerance)),
                },
            }),
            ExperimentDef::VdcSuite { orbit, hypothesis, conclusion } => {
                let d = VdcTolerances::default();
                Some(Job::VdcSuite {
                    orbit: self.orbit(what, orbit)?,
                    tol: VdcTolerances {
                        hypothesis: hypothesis.unwrap_or(d.hypothesis),
                        conclusion: conclusion.unwrap_or(d.conclusion),
                    },
                })
            }
            ExperimentDef::WeightedVdc { weights, orbit, tolerance } => {
                let (w, o) = (self.orbit(what, weights), self.orbit(what, orbit));
                let (w, o) = (w?, o?);
                if w.dim() != 0 {
                    self.err(format!("{what}: weights must be a scalar orbit"))?;
                }
                Some(Job::WeightedVdc { weights: w, orbit: o, tol: *tolerance })
            }
            ExperimentDef::Orthogonality { f, g, tolerance } => {
                let (f, g) = (self.orbit(what, f), self.orbit(what, g));
                let (f, g) = (f?, g?);
                self.same_dim(what, f.dim(), g.dim())?;
                Some(Job::Orthogonality { f, g, tol: *tolerance })
            }
            ExperimentDef::Nf { t, s, sequence, f, g, tolerance, discrepancy, frequency, lags, check_n, max_den } => {
                let (t, s, k) = (self.system(what, t), self.system(what, s), self.sequence(what, sequence));
                let (f, g) = (self.observable(what, f), self.observable(what, g));
                let (t, s, k, f, g) = (t?, s?, k?, f?, g?);
                self.uniform_dim(what, [t.dim(), s.dim(), f.dim(), g.dim()].into_iter())?;
                let d = NfOptions::default();
                Some(Job::Nf {
                    input: NfInput { t, s, k, f, g },
                    opts: NfOptions {
                        tolerance: tolerance.unwrap_or(d.tolerance),
                        discrepancy: discrepancy.unwrap_or(d.discrepancy),
                        frequency: frequency.unwrap_or(d.frequency),
                        lags: lags.unwrap_or(d.lags),
                        check_n: check_n.unwrap_or(d.check_n),
                        max_den: max_den.unwrap_or(d.max_den),
                    },
                })
            }
            ExperimentDef::Recurrence { t, s, sequence, region, tolerance, resolution, grid_tolerance } => {
                let (t, s, k) = (self.system(what, t), self.system(what, s), self.sequence(what, sequence));
                let region = self.region(what, region);
                let (t, s, k, region) = (t?, s?, k?, region?);
                self.uniform_dim(what, [t.dim(), s.dim(), region.dim()].into_iter())?;
                let d = RecurrenceOptions::default();
                Some(Job::Recurrence {
                    input: RecurrenceInput { t, s, k, region },
                    opts: RecurrenceOptions {
                        tolerance: tolerance.unwrap_or(d.tolerance),
                        resolution: resolution.unwrap_or(d.resolution),
                        grid_tolerance: grid_tolerance.unwrap_or(d.grid_tolerance),
                    },
                })
            }
            ExperimentDef::Rk { k, alpha, t, s, region, n_max, resolution, margin, strip } => {
                let alpha = self.irrational(what, alpha);
                let t = self.system(what, t);
                let s = self.many(s, |r, n| r.system(what, n));
                let region = self.region(what, region);
                let strip = match strip {
                    None => None,
                    Some(text) => match parse_ratio(text) {
                        Some(w) if w.0 > 0 => Some(w),
                        _ => {
                            self.err(format!("{what}: strip {text:?} must be a positive rational"))?;
                            None
                        }
                    },
                };
                let (alpha, t, s, region) = (alpha?, t?, s?, region?);
                self.uniform_dim(what, std::iter::once(t.dim()).chain(s.iter().map(AffineSystem::dim)).chain([region.dim()]))?;
                let d = RkOptions::default();
                Some(Job::Rk {
                    input: RkInput { k: *k, alpha, t, s_list: s, region, n_max: *n_max },
                    opts: RkOptions {
                        resolution: resolution.unwrap_or(d.resolution),
                        margin: margin.unwrap_or(d.margin),
                        strip: strip.unwrap_or(d.strip),
                    },
                })
            }
            ExperimentDef::SingleT { t, s, polys, f, gs, tolerance, lags } => {
                let (t, s) = (self.system(what, t), self.system(what, s));
                let polys = self.many(polys, |r, n| r.sequence(what, n));
                let f = self.observable(what, f);
                let gs = self.many(gs, |r, n| r.observable(what, n));
                let (t, s, polys, f, gs) = (t?, s?, polys?, f?, gs?);
                if polys.len() != gs.len() {
                    self.err(format!("{what}: {} sequences for {} observables", polys.len(), gs.len()))?;
                }
                Some(Job::SingleT {
                    input: SingleTInput { t, s, polys, f, gs },
                    tol: *tolerance,
                    lags: lags.unwrap_or(DEFAULT_SINGLE_T_LAGS),
                })
            }
            ExperimentDef::T1t2 { t, rs, s, w, polys, f, hs, gs, tolerance, exact_n, bit_budget } => {
                let t = self.system(what, t);
                let rs = self.many(rs, |r, n| r.system(what, n));
                let (s, w) = (self.system(what, s), self.system(what, w));
                let polys = self.many(polys, |r, n| r.sequence(what, n));
                let f = self.observable(what, f);
                let hs = self.many(hs, |r, n| r.observable(what, n));
                let gs = self.many(gs, |r, n| r.observable(what, n));
                let (t, rs, s, w, polys, f, hs, gs) = (t?, rs?, s?, w?, polys?, f?, hs?, gs?);
                if rs.len() != hs.len() || polys.len() != gs.len() {
                    self.err(format!("{what}: each R needs one h and each sequence one g"))?;
                }
                let d = T1T2Options::default();
                Some(Job::T1t2 {
                    input: T1T2Input { t, rs, s, w, polys, f, hs, gs },
                    opts: T1T2Options {
                        tolerance: tolerance.unwrap_or(d.tolerance),
                        exact_n: exact_n.unwrap_or(d.exact_n),
                        bit_budget: bit_budget.unwrap_or(d.bit_budget),
                    },
                })
            }
        }
    }
}
