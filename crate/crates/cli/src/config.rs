//! Experiment configuration: a TOML document of named objects and an ordered
//! list of requests that refer to them by name.

use serde::Deserialize;
use std::collections::BTreeMap;
use symdyn::groups::{Group, GroupSpec, Relations};
use symdyn::schottky::{build_schottky_with_margin, MoebiusMap, SchottkyGroup};
use symdyn::sft::{EdgePotential, Involution, Sft};
use symdyn::skew::{build_skew, Cocycle, SkewProduct, Truncation};
use symdyn::zeta::RoofFunction;

use crate::exit::Failure;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Recorded in the report; no operation draws random numbers.
    #[serde(default)]
    pub seed: u64,
    pub threads: Option<usize>,
    pub budget_mb: Option<u64>,
    /// Tolerance for `expect` checks.
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub shifts: BTreeMap<String, ShiftDef>,
    #[serde(default)]
    pub groups: BTreeMap<String, GroupSpec>,
    #[serde(default)]
    pub potentials: BTreeMap<String, PotentialDef>,
    #[serde(default)]
    pub roofs: BTreeMap<String, PotentialDef>,
    #[serde(default)]
    pub skews: BTreeMap<String, SkewDef>,
    #[serde(default)]
    pub schottky: BTreeMap<String, SchottkyDef>,
    #[serde(default)]
    pub requests: Vec<Request>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftDef {
    pub alphabet: Vec<String>,
    pub matrix: Vec<Vec<i64>>,
}

/// Edge weights: a constant, or a default plus `[from, to, value]` entries.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDef {
    pub shift: String,
    pub constant: Option<f64>,
    #[serde(default)]
    pub default: f64,
    #[serde(default)]
    pub edges: Vec<(String, String, f64)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewDef {
    pub shift: String,
    pub group: String,
    /// Letter cocycle: symbol → word in the group's generators.
    pub letters: Option<BTreeMap<String, String>>,
    /// Edge cocycle: `[from, to, word]`.
    pub edges: Option<Vec<(String, String, String)>>,
    /// Pairs `[a, κa]`; enables the symmetry checks.
    pub involution: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchottkyDef {
    /// Row-major 2×2 matrices.
    pub generators: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchottkyAction {
    Validate,
    Delta,
    DeltaSub,
    Roof,
}

impl SchottkyAction {
    pub fn as_str(self) -> &'static str {
        match self {
            SchottkyAction::Validate => "validate",
            SchottkyAction::Delta => "delta",
            SchottkyAction::DeltaSub => "delta-sub",
            SchottkyAction::Roof => "roof",
        }
    }
}

/// Optional overrides of the verdict thresholds.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesDef {
    pub gap_sigmas: Option<f64>,
    pub min_gap: Option<f64>,
    pub equality_sigmas: Option<f64>,
    pub slow_decay_exponent: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Request {
    Entropy {
        shift: String,
        expect: Option<f64>,
    },
    Pressure {
        shift: String,
        potential: Option<String>,
        /// Also report orbital estimates `aₙ` for `n ≤ orbital_n_max`.
        orbital_n_max: Option<usize>,
        expect: Option<f64>,
    },
    Gurevich {
        skew: String,
        potential: Option<String>,
        n_max: usize,
        n_min: Option<usize>,
        truncation: Option<Truncation>,
        expect: Option<f64>,
    },
    Delta {
        shift: String,
        roof: String,
        expect: Option<f64>,
    },
    DeltaSub {
        skew: String,
        roof: String,
        n_max: usize,
        expect: Option<f64>,
    },
    Kesten {
        group: String,
        n_max: usize,
        /// `[word, probability]`; the simple random walk when absent.
        steps: Option<Vec<(String, f64)>>,
        expect: Option<f64>,
    },
    Cogrowth {
        group: String,
        n_max: usize,
        expect: Option<f64>,
    },
    Folner {
        group: String,
        epsilon: f64,
        max_set_size: Option<usize>,
        max_radius: Option<usize>,
        shave_steps: Option<usize>,
    },
    Zeta {
        skew: String,
        roof: String,
        n_max: usize,
        #[serde(default)]
        s: Vec<f64>,
        word_cap: Option<u64>,
    },
    Count {
        /// Holonomy counts `#𝒬ₙ`, `#𝒫ₙ` on a skew product...
        skew: Option<String>,
        n_max: Option<usize>,
        /// ...or closed-orbit counts of a suspension up to length `t_max`.
        shift: Option<String>,
        roof: Option<String>,
        t_max: Option<f64>,
        word_cap: Option<u64>,
    },
    Schottky {
        schottky: String,
        action: SchottkyAction,
        r_max: Option<usize>,
        depth: Option<usize>,
        quotient: Option<Relations>,
        n_max: Option<usize>,
        expect: Option<f64>,
    },
    VerifyAmenability {
        skew: String,
        potential: Option<String>,
        n_max: usize,
        rules: Option<RulesDef>,
        transitivity_depth: Option<usize>,
    },
    Suite {
        preset: String,
    },
}

impl Request {
    pub fn op(&self) -> &'static str {
        match self {
            Request::Entropy { .. } => "entropy",
            Request::Pressure { .. } => "pressure",
            Request::Gurevich { .. } => "gurevich",
            Request::Delta { .. } => "delta",
            Request::DeltaSub { .. } => "delta-sub",
            Request::Kesten { .. } => "kesten",
            Request::Cogrowth { .. } => "cogrowth",
            Request::Folner { .. } => "folner",
            Request::Zeta { .. } => "zeta",
            Request::Count { .. } => "count",
            Request::Schottky { .. } => "schottky",
            Request::VerifyAmenability { .. } => "verify-amenability",
            Request::Suite { .. } => "suite",
        }
    }

    pub fn set_n_max(&mut self, value: usize) {
        match self {
            Request::Gurevich { n_max, .. }
            | Request::DeltaSub { n_max, .. }
            | Request::Kesten { n_max, .. }
            | Request::Cogrowth { n_max, .. }
            | Request::Zeta { n_max, .. }
            | Request::VerifyAmenability { n_max, .. } => *n_max = value,
            Request::Count { n_max, .. } | Request::Schottky { n_max, .. } => *n_max = Some(value),
            _ => {}
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Validation(format!("config: {e}")))
    }
}

/// Every named object of a config, built and cross-checked.
pub struct Workspace {
    pub shifts: BTreeMap<String, Sft>,
    pub groups: BTreeMap<String, Group>,
    pub potentials: BTreeMap<String, (String, EdgePotential)>,
    pub roofs: BTreeMap<String, (String, RoofFunction)>,
    /// Skew products with the name of their base shift.
    pub skews: BTreeMap<String, (String, SkewProduct)>,
    pub schottky: BTreeMap<String, SchottkyGroup>,
}

fn field_err(path: String) -> impl Fn(symdyn::Error) -> Failure {
    move |e| Failure::from_core(e).with_prefix(&path)
}

impl Workspace {
    pub fn build(config: &ExperimentConfig) -> Result<Self, Failure> {
        let mut ws = Workspace {
            shifts: BTreeMap::new(),
            groups: BTreeMap::new(),
            potentials: BTreeMap::new(),
            roofs: BTreeMap::new(),
            skews: BTreeMap::new(),
            schottky: BTreeMap::new(),
        };
        for (name, def) in &config.shifts {
            ws.shifts.insert(name.clone(), build_shift(name, def)?);
        }
        for (name, spec) in &config.groups {
            let g = Group::new(spec).map_err(field_err(format!("groups.{name}")))?;
            ws.groups.insert(name.clone(), g);
        }
        for (name, def) in &config.potentials {
            let sft = ws.shift(&def.shift, &format!("potentials.{name}.shift"))?;
            let f = build_potential(sft, def).map_err(field_err(format!("potentials.{name}")))?;
            ws.potentials.insert(name.clone(), (def.shift.clone(), f));
        }
        for (name, def) in &config.roofs {
            let sft = ws.shift(&def.shift, &format!("roofs.{name}.shift"))?;
            let path = format!("roofs.{name}");
            let f = build_potential(sft, def).map_err(field_err(path.clone()))?;
            let r = RoofFunction::new(sft, f).map_err(field_err(path))?;
            ws.roofs.insert(name.clone(), (def.shift.clone(), r));
        }
        for (name, def) in &config.skews {
            let skew = ws.build_skew(name, def)?;
            ws.skews.insert(name.clone(), (def.shift.clone(), skew));
        }
        for (name, def) in &config.schottky {
            let path = format!("schottky.{name}");
            let maps = def
                .generators
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let p = format!("{path}.generators[{i}]");
                    let ok = m.len() == 2 && m.iter().all(|row| row.len() == 2);
                    if !ok {
                        return Err(Failure::Validation(format!("{p}: expected a 2x2 matrix")));
                    }
                    MoebiusMap::new(m[0][0], m[0][1], m[1][0], m[1][1]).map_err(field_err(p))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let s = build_schottky_with_margin(&maps, def.margin).map_err(field_err(path))?;
            ws.schottky.insert(name.clone(), s);
        }
        for (i, req) in config.requests.iter().enumerate() {
            ws.check_request(i, req)?;
        }
        Ok(ws)
    }

    fn shift(&self, name: &str, path: &str) -> Result<&Sft, Failure> {
        self.shifts
            .get(name)
            .ok_or_else(|| Failure::Validation(format!("{path}: unknown shift {name:?}")))
    }

    pub fn group(&self, name: &str, path: &str) -> Result<&Group, Failure> {
        self.groups
            .get(name)
            .ok_or_else(|| Failure::Validation(format!("{path}: unknown group {name:?}")))
    }

    pub fn sft(&self, name: &str, path: &str) -> Result<&Sft, Failure> {
        self.shift(name, path)
    }

    /// The skew product and the name of its base shift.
    pub fn skew(&self, name: &str, path: &str) -> Result<(&str, &SkewProduct), Failure> {
        self.skews
            .get(name)
            .map(|(shift, s)| (shift.as_str(), s))
            .ok_or_else(|| Failure::Validation(format!("{path}: unknown skew {name:?}")))
    }

    pub fn schottky_group(&self, name: &str, path: &str) -> Result<&SchottkyGroup, Failure> {
        self.schottky
            .get(name)
            .ok_or_else(|| Failure::Validation(format!("{path}: unknown schottky group {name:?}")))
    }

    /// A potential on `shift`, or zero when `name` is absent.
    pub fn potential(&self, name: Option<&str>, shift: &str, path: &str) -> Result<EdgePotential, Failure> {
        let sft = self.shift(shift, path)?;
        match name {
            None => Ok(EdgePotential::zero(sft)),
            Some(n) => {
                let (on, f) = self
                    .potentials
                    .get(n)
                    .ok_or_else(|| Failure::Validation(format!("{path}: unknown potential {n:?}")))?;
                if on != shift {
                    return Err(Failure::Validation(format!(
                        "{path}: potential {n:?} lives on shift {on:?}, expected {shift:?}"
                    )));
                }
                Ok(f.clone())
            }
        }
    }

    pub fn roof(&self, name: &str, shift: &str, path: &str) -> Result<&RoofFunction, Failure> {
        let (on, r) = self
            .roofs
            .get(name)
            .ok_or_else(|| Failure::Validation(format!("{path}: unknown roof {name:?}")))?;
        if on != shift {
            return Err(Failure::Validation(format!(
                "{path}: roof {name:?} lives on shift {on:?}, expected {shift:?}"
            )));
        }
        Ok(r)
    }

    fn build_skew(&self, name: &str, def: &SkewDef) -> Result<SkewProduct, Failure> {
        let path = format!("skews.{name}");
        let sft = self.shift(&def.shift, &format!("{path}.shift"))?;
        let group = self.group(&def.group, &format!("{path}.group"))?;
        let cocycle = match (&def.letters, &def.edges) {
            (Some(letters), None) => {
                let entries: Vec<(String, String)> =
                    letters.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                Cocycle::parse_letters(sft, group, &entries)
                    .map_err(field_err(format!("{path}.letters")))?
            }
            (None, Some(edges)) => {
                let mut entries = Vec::with_capacity(edges.len());
                for (i, (a, b, w)) in edges.iter().enumerate() {
                    let p = format!("{path}.edges[{i}]");
                    let ia = sft
                        .index_of(a)
                        .ok_or_else(|| Failure::Validation(format!("{p}: unknown symbol {a:?}")))?;
                    let ib = sft
                        .index_of(b)
                        .ok_or_else(|| Failure::Validation(format!("{p}: unknown symbol {b:?}")))?;
                    let g = group.evaluate_str(w).map_err(field_err(p))?;
                    entries.push(((ia, ib), g));
                }
                Cocycle::edges(sft.size(), entries)
            }
            _ => {
                return Err(Failure::Validation(format!(
                    "{path}: give exactly one of `letters` and `edges`"
                )))
            }
        };
        let kappa = match &def.involution {
            None => None,
            Some(pairs) => Some(
                Involution::from_pairs(sft, pairs).map_err(field_err(format!("{path}.involution")))?,
            ),
        };
        build_skew(sft.clone(), group.clone(), cocycle, kappa).map_err(field_err(path))
    }

    fn check_request(&self, i: usize, req: &Request) -> Result<(), Failure> {
        let p = |f: &str| format!("requests[{i}].{f}");
        match req {
            Request::Entropy { shift, .. } => {
                self.shift(shift, &p("shift"))?;
            }
            Request::Pressure { shift, potential, .. } => {
                self.potential(potential.as_deref(), shift, &p("potential"))?;
            }
            Request::Gurevich { skew, potential, .. } | Request::VerifyAmenability { skew, potential, .. } => {
                let (shift, _) = self.skew(skew, &p("skew"))?;
                self.potential(potential.as_deref(), shift, &p("potential"))?;
            }
            Request::Delta { shift, roof, .. } => {
                self.roof(roof, shift, &p("roof"))?;
            }
            Request::DeltaSub { skew, roof, .. } | Request::Zeta { skew, roof, .. } => {
                let (shift, _) = self.skew(skew, &p("skew"))?;
                self.roof(roof, shift, &p("roof"))?;
            }
            Request::Kesten { group, .. } | Request::Folner { group, .. } => {
                self.group(group, &p("group"))?;
            }
            Request::Cogrowth { group, .. } => {
                let g = self.group(group, &p("group"))?;
                if g.quotient_target().is_none() {
                    return Err(Failure::Validation(format!(
                        "{}: cogrowth needs a quotient-of-free group",
                        p("group")
                    )));
                }
            }
            Request::Count { skew, n_max, shift, roof, t_max, .. } => match (skew, shift, roof) {
                (Some(s), None, None) => {
                    self.skew(s, &p("skew"))?;
                    if n_max.is_none() {
                        return Err(Failure::Validation(format!("{}: required with `skew`", p("n_max"))));
                    }
                }
                (None, Some(sh), Some(r)) => {
                    self.roof(r, sh, &p("roof"))?;
                    if t_max.is_none() {
                        return Err(Failure::Validation(format!("{}: required with `roof`", p("t_max"))));
                    }
                }
                _ => {
                    return Err(Failure::Validation(format!(
                        "requests[{i}]: count needs either `skew` or both `shift` and `roof`"
                    )))
                }
            },
            Request::Schottky { schottky, action, quotient, .. } => {
                self.schottky_group(schottky, &p("schottky"))?;
                if *action == SchottkyAction::DeltaSub && quotient.is_none() {
                    return Err(Failure::Validation(format!("{}: required for delta-sub", p("quotient"))));
                }
            }
            Request::Suite { preset } => {
                crate::suite::Preset::parse(preset).map_err(|f| f.with_prefix(&p("preset")))?;
            }
        }
        Ok(())
    }
}

fn build_shift(name: &str, def: &ShiftDef) -> Result<Sft, Failure> {
    let path = format!("shifts.{name}");
    let k = def.alphabet.len();
    if def.matrix.len() != k {
        return Err(Failure::Validation(format!(
            "{path}.matrix: has {} rows, expected {k}",
            def.matrix.len()
        )));
    }
    let mut rows = Vec::with_capacity(k);
    for (i, row) in def.matrix.iter().enumerate() {
        if row.len() != k {
            return Err(Failure::Validation(format!(
                "{path}.matrix[{i}]: has {} entries, expected {k}",
                row.len()
            )));
        }
        let mut out = Vec::with_capacity(k);
        for (j, &v) in row.iter().enumerate() {
            if v != 0 && v != 1 {
                return Err(Failure::Validation(format!(
                    "{path}.matrix[{i}][{j}]: entry {v} is not 0 or 1"
                )));
            }
            out.push(v as u8);
        }
        rows.push(out);
    }
    Sft::new(def.alphabet.clone(), &rows, false).map_err(field_err(path))
}

fn build_potential(sft: &Sft, def: &PotentialDef) -> symdyn::Result<EdgePotential> {
    match def.constant {
        Some(c) if def.edges.is_empty() => Ok(EdgePotential::constant(sft, c)),
        Some(_) => Err(symdyn::Error::invalid("constant", "cannot be combined with `edges`")),
        None => EdgePotential::from_named(sft, &def.edges, def.default),
    }
}
