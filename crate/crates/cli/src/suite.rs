//! The dichotomy suite: fixed batteries of skew products and Schottky
//! kernels whose verdicts are compared with known amenability.

use serde::Serialize;
use symdyn::groups::{Group, GroupSpec};
use symdyn::schottky::{
    roof_cylinder, standard_example, PoincareData, QuotientSpec, SchottkyGroup,
};
use symdyn::sft::{EdgePotential, Involution, Sft};
use symdyn::skew::{
    amenability_verdict, build_skew, Cocycle, GurevichParams, SkewProduct, Verdict, VerdictRules,
};
use symdyn::zeta::delta_root;

use crate::exit::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Symbolic,
    Schottky,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self, Failure> {
        match name {
            "symbolic" => Ok(Preset::Symbolic),
            "schottky" => Ok(Preset::Schottky),
            "" => Err(Failure::Validation("empty preset name (expected symbolic or schottky)".into())),
            other => Err(Failure::Validation(format!(
                "unknown preset {other:?} (expected symbolic or schottky)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Equality,
    Gap,
    /// Amenable, but the verdict is reported without counting as a mismatch.
    Informational,
}

pub struct SymbolicCase {
    pub name: &'static str,
    pub skew: SkewProduct,
    pub n_max: usize,
    pub expected: Expectation,
}

/// Full shift on `a, A, b, B, …` with `κ` swapping each letter and its
/// capital, and the letter cocycle given by `words` (one per lowercase letter;
/// capitals get the inverse).
pub fn letter_skew(spec: &GroupSpec, words: &[&str]) -> symdyn::Result<SkewProduct> {
    let group = Group::new(spec)?;
    let names: Vec<String> = (0..words.len())
        .flat_map(|i| {
            let c = (b'a' + i as u8) as char;
            [c.to_string(), c.to_ascii_uppercase().to_string()]
        })
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let sft = Sft::full(&refs);
    let mut values = Vec::with_capacity(2 * words.len());
    for w in words {
        let g = group.evaluate_str(w)?;
        values.push(g.clone());
        values.push(group.inverse(&g));
    }
    let kappa = Involution::new((0..names.len()).map(|i| i ^ 1).collect())?;
    build_skew(sft, group, Cocycle::letters(values), Some(kappa))
}

pub fn symbolic_cases() -> symdyn::Result<Vec<SymbolicCase>> {
    use Expectation::*;
    let case = |name, spec: GroupSpec, words: &[&str], n_max, expected| -> symdyn::Result<_> {
        Ok(SymbolicCase {
            name,
            skew: letter_skew(&spec, words)?,
            n_max,
            expected,
        })
    };
    Ok(vec![
        case("Z", GroupSpec::FreeAbelian { rank: 1 }, &["a", "a"], 30, Equality)?,
        case("Z^2", GroupSpec::FreeAbelian { rank: 2 }, &["a", "b"], 30, Equality)?,
        case("C5", GroupSpec::Cyclic { order: 5 }, &["a", "aa"], 30, Equality)?,
        case("lamplighter", GroupSpec::Lamplighter, &["t", "a"], 40, Informational)?,
        case("F2", GroupSpec::Free { rank: 2 }, &["a", "b"], 24, Gap)?,
        case("F3", GroupSpec::Free { rank: 3 }, &["a", "b", "c"], 16, Gap)?,
    ])
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolicRow {
    pub group: String,
    pub n_max: usize,
    pub pressure: f64,
    pub gurevich: f64,
    pub deficit: f64,
    pub uncertainty: f64,
    pub decay_exponent: Option<f64>,
    pub verdict: Verdict,
    pub expected: Expectation,
    /// `None` for informational rows.
    pub matches: Option<bool>,
    pub evidence: Vec<String>,
}

fn matches(expected: Expectation, verdict: Verdict) -> Option<bool> {
    match expected {
        Expectation::Equality => Some(verdict == Verdict::Equality),
        Expectation::Gap => Some(verdict == Verdict::Gap),
        Expectation::Informational => None,
    }
}

pub fn run_symbolic(key_cap: usize, n_max_override: Option<usize>) -> Result<Vec<SymbolicRow>, Failure> {
    let mut rows = Vec::new();
    for case in symbolic_cases()? {
        let mut params = GurevichParams::new(n_max_override.unwrap_or(case.n_max));
        params.key_cap = key_cap;
        let base = case.skew.base();
        let v = amenability_verdict(&case.skew, &EdgePotential::zero(base), &params, &VerdictRules::default())
            .map_err(|e| Failure::from_core(e).with_prefix(case.name))?;
        rows.push(SymbolicRow {
            group: case.name.to_string(),
            n_max: params.n_max,
            pressure: v.pressure,
            gurevich: v.gurevich,
            deficit: v.deficit,
            uncertainty: v.uncertainty,
            decay_exponent: v.decay_exponent,
            verdict: v.verdict,
            expected: case.expected,
            matches: matches(case.expected, v.verdict),
            evidence: v.evidence,
        });
    }
    Ok(rows)
}

pub struct SchottkyCase {
    pub name: &'static str,
    pub group: SchottkyGroup,
    pub r_max: usize,
    pub roof_depth: usize,
    pub quotients: Vec<(&'static str, QuotientSpec, bool)>,
}

/// The standard two- and three-generator groups with their abelianization
/// and kill-one-generator kernels.
pub fn schottky_cases() -> symdyn::Result<Vec<SchottkyCase>> {
    Ok(vec![
        SchottkyCase {
            name: "schottky-2",
            group: standard_example(&[6.0])?,
            r_max: 14,
            roof_depth: 4,
            quotients: vec![
                ("abelianization Z^2", QuotientSpec::abelianization(2)?, true),
                ("kill b: Z", QuotientSpec::kill_generators(2, &[1])?, true),
            ],
        },
        SchottkyCase {
            name: "schottky-3",
            group: standard_example(&[6.0, -6.0])?,
            r_max: 12,
            roof_depth: 4,
            quotients: vec![
                ("abelianization Z^3", QuotientSpec::abelianization(3)?, true),
                ("kill c: F2", QuotientSpec::kill_generators(3, &[2])?, false),
            ],
        },
    ])
}

/// Amenable quotients: `δ(Γ₀) ≥ δ(Γ) − EQUALITY_SLACK`; otherwise
/// `δ(Γ₀) ≤ δ(Γ) − GAP_MARGIN`. The two routes to `δ(Γ)` agree within
/// `ROUTE_TOLERANCE`.
pub const EQUALITY_SLACK: f64 = 0.05;
pub const GAP_MARGIN: f64 = 0.02;
pub const ROUTE_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct SchottkyRow {
    pub group: String,
    pub quotient: String,
    pub amenable_quotient: bool,
    pub r_max: usize,
    pub delta: f64,
    pub delta_uncertainty: f64,
    pub roof_delta: f64,
    pub kernel_delta: f64,
    pub kernel_uncertainty: f64,
    pub passed: bool,
    pub check: String,
}

pub fn run_schottky(word_cap: usize, r_max_override: Option<usize>) -> Result<Vec<SchottkyRow>, Failure> {
    let mut rows = Vec::new();
    for case in schottky_cases()? {
        let r_max = r_max_override.unwrap_or(case.r_max);
        let rc = roof_cylinder(&case.group, case.roof_depth)?;
        let roof_delta = delta_root(&rc.sft, &rc.roof)?;
        for (qname, q, amenable) in &case.quotients {
            let data = PoincareData::collect(&case.group, r_max, Some(q), word_cap)
                .map_err(|e| Failure::from_core(e).with_prefix(case.name))?;
            let full = data.delta(false)?;
            let ker = data.delta(true)?;
            let route_ok = (full.delta - roof_delta).abs() <= ROUTE_TOLERANCE;
            let (kernel_ok, check) = if *amenable {
                (
                    ker.delta >= full.delta - EQUALITY_SLACK,
                    format!("δ(Γ₀) ≥ δ(Γ) − {EQUALITY_SLACK}"),
                )
            } else {
                (
                    ker.delta <= full.delta - GAP_MARGIN,
                    format!("δ(Γ₀) ≤ δ(Γ) − {GAP_MARGIN}"),
                )
            };
            rows.push(SchottkyRow {
                group: case.name.to_string(),
                quotient: qname.to_string(),
                amenable_quotient: *amenable,
                r_max,
                delta: full.delta,
                delta_uncertainty: full.uncertainty,
                roof_delta,
                kernel_delta: ker.delta,
                kernel_uncertainty: ker.uncertainty,
                passed: route_ok && kernel_ok,
                check: format!("{check}; |δ_poincaré − δ_roof| ≤ {ROUTE_TOLERANCE}"),
            });
        }
    }
    Ok(rows)
}
