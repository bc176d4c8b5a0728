//! Skew products `σ̃(x, g) = (σx, g·ψ(x))` of a finite shift by a group.
//!
//! The central quantity is the holonomy-restricted periodic sum
//! `Σ_{σⁿx = x, ψₙ(x) = 1} e^{fⁿ(x)}`, computed exactly by a layered dynamic
//! program over `(state, group element)` pairs, one start state at a time.
//! A path that must return to the identity within the remaining steps cannot
//! wander further than `remaining · s` in the group (`s` = longest cocycle
//! value in the group's word metric), which keeps the layers finite.

use crate::error::{Error, Result};
use crate::groups::{Element, Group};
use crate::numerics::{least_squares, CompensatedSum};
use crate::sft::{check_symmetry, periodic_sum, spectral_pressure, EdgePotential, Involution, Sft};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

/// Default cap on `(state, element)` pairs per layer and start state.
pub const DEFAULT_KEY_CAP: usize = 30_000_000;

/// Group-valued weights on letters (`ψ(x) = ψ(x₀)`) or edges (`ψ(x₀, x₁)`).
#[derive(Clone, Debug, PartialEq)]
pub enum Cocycle {
    Letter(Vec<Element>),
    Edge {
        k: usize,
        values: Vec<Option<Element>>,
    },
}

impl Cocycle {
    pub fn letters(values: Vec<Element>) -> Self {
        Cocycle::Letter(values)
    }

    pub fn edges(k: usize, entries: impl IntoIterator<Item = ((usize, usize), Element)>) -> Self {
        let mut values = vec![None; k * k];
        for ((i, j), g) in entries {
            values[i * k + j] = Some(g);
        }
        Cocycle::Edge { k, values }
    }

    /// Letter cocycle from `(symbol, word)` pairs, words parsed in `group`.
    pub fn parse_letters(sft: &Sft, group: &Group, entries: &[(String, String)]) -> Result<Self> {
        let mut values: Vec<Option<Element>> = vec![None; sft.size()];
        for (sym, word) in entries {
            let i = sft
                .index_of(sym)
                .ok_or_else(|| Error::invalid("cocycle", format!("unknown symbol {sym:?}")))?;
            values[i] = Some(group.evaluate_str(word)?);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::invalid("cocycle", format!("no value for letter {}", sft.symbol(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Cocycle::Letter(values))
    }

    pub fn is_letter_mode(&self) -> bool {
        matches!(self, Cocycle::Letter(_))
    }

    /// `ψ` on the transition `i → j`.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> &Element {
        match self {
            Cocycle::Letter(v) => &v[i],
            Cocycle::Edge { k, values } => values[i * k + j]
                .as_ref()
                .expect("validated cocycle covers every allowed edge"),
        }
    }

    fn values(&self) -> impl Iterator<Item = &Element> {
        let (letters, edges) = match self {
            Cocycle::Letter(v) => (Some(v.iter()), None),
            Cocycle::Edge { values, .. } => (None, Some(values.iter().flatten())),
        };
        letters.into_iter().flatten().chain(edges.into_iter().flatten())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CocycleSymmetryReport {
    /// Letters `i` with `ψ(κi) ≠ ψ(i)⁻¹`, or edges `(i, j)` with `ψ(κj, κi) ≠ ψ(i, j)⁻¹`.
    pub offending: Vec<String>,
}

impl CocycleSymmetryReport {
    pub fn passed(&self) -> bool {
        self.offending.is_empty()
    }
}

pub fn check_cocycle_symmetry(
    sft: &Sft,
    group: &Group,
    cocycle: &Cocycle,
    kappa: &Involution,
) -> CocycleSymmetryReport {
    let mut report = CocycleSymmetryReport::default();
    match cocycle {
        Cocycle::Letter(v) => {
            for (i, g) in v.iter().enumerate() {
                let ki = kappa.apply(i);
                if v[ki] != group.inverse(g) {
                    report.offending.push(format!(
                        "letter {}: ψ({}) = {}, expected {}",
                        sft.symbol(i),
                        sft.symbol(ki),
                        group.format(&v[ki]),
                        group.format(&group.inverse(g))
                    ));
                }
            }
        }
        Cocycle::Edge { .. } => {
            for (i, j) in sft.edges() {
                let (ki, kj) = (kappa.apply(i), kappa.apply(j));
                let ok = sft.allowed(kj, ki)
                    && *cocycle.value(kj, ki) == group.inverse(cocycle.value(i, j));
                if !ok {
                    report
                        .offending
                        .push(format!("edge ({}, {})", sft.symbol(i), sft.symbol(j)));
                }
            }
        }
    }
    report
}

#[derive(Clone, Debug)]
pub struct SkewProduct {
    base: Sft,
    group: Group,
    cocycle: Cocycle,
    kappa: Option<Involution>,
    symmetry: Option<CocycleSymmetryReport>,
    step: usize,
}

/// Validates the cocycle against the base and group. The symmetric flag is
/// set iff `kappa` is given and the cocycle passes the symmetry check.
pub fn build_skew(
    base: Sft,
    group: Group,
    cocycle: Cocycle,
    kappa: Option<Involution>,
) -> Result<SkewProduct> {
    let k = base.size();
    match &cocycle {
        Cocycle::Letter(v) if v.len() != k => {
            return Err(Error::invalid(
                "cocycle",
                format!("{} letter values for an alphabet of {k}", v.len()),
            ))
        }
        Cocycle::Edge { k: ck, .. } if *ck != k => {
            return Err(Error::invalid("cocycle", format!("edge table for {ck} symbols, shift has {k}")))
        }
        Cocycle::Edge { values, .. } => {
            if let Some((i, j)) = base.edges().find(|&(i, j)| values[i * k + j].is_none()) {
                return Err(Error::invalid(
                    "cocycle",
                    format!("missing value on edge ({}, {})", base.symbol(i), base.symbol(j)),
                ));
            }
        }
        _ => {}
    }
    if cocycle.values().any(|g| !group.contains(g)) {
        return Err(Error::invalid("cocycle", "value is not an element of the group"));
    }
    if let Some(kp) = &kappa {
        if kp.len() != k {
            return Err(Error::invalid("involution", format!("acts on {} symbols, shift has {k}", kp.len())));
        }
    }
    let symmetry = kappa
        .as_ref()
        .map(|kp| check_cocycle_symmetry(&base, &group, &cocycle, kp));
    let step = cocycle.values().map(|g| group.length(g)).max().unwrap_or(0);
    Ok(SkewProduct {
        base,
        group,
        cocycle,
        kappa,
        symmetry,
        step,
    })
}

impl SkewProduct {
    pub fn base(&self) -> &Sft {
        &self.base
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn involution(&self) -> Option<&Involution> {
        self.kappa.as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry.as_ref().is_some_and(|r| r.passed())
    }

    pub fn symmetry_report(&self) -> Option<&CocycleSymmetryReport> {
        self.symmetry.as_ref()
    }

    /// Longest cocycle value in the group's word metric.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Fails unless an involution was supplied and the cocycle is symmetric.
    pub fn require_symmetric(&self) -> Result<&Involution> {
        let kappa = self
            .kappa
            .as_ref()
            .ok_or_else(|| Error::invalid("involution", "κ required for a symmetric skew product"))?;
        match &self.symmetry {
            Some(r) if !r.passed() => Err(Error::invalid(
                "cocycle",
                format!("not symmetric: {}", r.offending.join("; ")),
            )),
            _ => Ok(kappa),
        }
    }

    /// `ψₙ` along a cyclic word.
    pub fn holonomy(&self, word: &[usize]) -> Element {
        let n = word.len();
        let mut g = self.group.identity();
        for m in 0..n {
            g = self.group.mul(&g, self.cocycle.value(word[m], word[(m + 1) % n]));
        }
        g
    }
}

/// How far from the identity the holonomy DP keeps paths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// Drop `(i, g)` at layer `m` when `|g| > (n_max − m)·s`. Lossless for every `n ≤ n_max`.
    #[default]
    Remaining,
    /// Keep `|g| ≤ ⌈n_max/2⌉·s`. Also lossless, but stores more.
    HalfRadius,
    /// Keep everything (oracle runs only).
    None,
}

#[derive(Clone, Debug)]
pub struct DpParams {
    pub truncation: Truncation,
    pub key_cap: usize,
}

impl Default for DpParams {
    fn default() -> Self {
        DpParams {
            truncation: Truncation::Remaining,
            key_cap: DEFAULT_KEY_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomySums {
    pub n_max: usize,
    /// `#𝒬ₙ` for `n = 1..=n_max`.
    pub counts: Vec<u128>,
    /// `log Σ_{𝒬ₙ} e^{fⁿ}`, `-inf` when `𝒬ₙ` is empty.
    pub log_sums: Vec<f64>,
    /// Largest layer held for a single start state.
    pub max_keys: usize,
}

#[derive(Clone, Copy, Debug, Default)]
struct Mass {
    count: u128,
    weight: f64,
}

/// `#𝒬ₙ` and `log Σ_{𝒬ₙ} e^{fⁿ}` for every `n ≤ n_max` in one pass.
pub fn holonomy_sums(
    skew: &SkewProduct,
    f: &EdgePotential,
    n_max: usize,
    params: &DpParams,
) -> Result<HolonomySums> {
    f.check(&skew.base)?;
    if n_max == 0 {
        return Err(Error::invalid("n", "n must be ≥ 1"));
    }
    let base = &skew.base;
    let fmax = f.max_on(base);
    let weights: Vec<Vec<(usize, f64)>> = (0..base.size())
        .map(|i| {
            base.successors(i)
                .iter()
                .map(|&j| (j, (f.get(i, j) - fmax).exp()))
                .collect()
        })
        .collect();
    let per_start: Vec<Result<(Vec<u128>, Vec<f64>, usize)>> = (0..base.size())
        .into_par_iter()
        .map(|s| dp_from(skew, &weights, s, n_max, params))
        .collect();
    let mut counts = vec![0u128; n_max];
    let mut sums = vec![CompensatedSum::default(); n_max];
    let mut max_keys = 0;
    for r in per_start {
        let (c, w, keys) = r?;
        for m in 0..n_max {
            counts[m] = counts[m].checked_add(c[m]).ok_or_else(count_overflow)?;
            sums[m].add(w[m]);
        }
        max_keys = max_keys.max(keys);
    }
    let log_sums = sums
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let v = s.value();
            if v > 0.0 {
                v.ln() + (m + 1) as f64 * fmax
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    Ok(HolonomySums {
        n_max,
        counts,
        log_sums,
        max_keys,
    })
}

fn count_overflow() -> Error {
    Error::Resource {
        context: "path counts exceed 128 bits".into(),
        radius: 0,
        size: 0,
        cap: 0,
    }
}

fn dp_from(
    skew: &SkewProduct,
    weights: &[Vec<(usize, f64)>],
    start: usize,
    n_max: usize,
    params: &DpParams,
) -> Result<(Vec<u128>, Vec<f64>, usize)> {
    let group = &skew.group;
    let step = skew.step;
    let identity = group.identity();
    let half = n_max.div_ceil(2) * step;
    let mut layer: FxHashMap<(u32, Element), Mass> = FxHashMap::default();
    layer.insert(
        (start as u32, identity.clone()),
        Mass {
            count: 1,
            weight: 1.0,
        },
    );
    let mut counts = vec![0u128; n_max];
    let mut sums = vec![0.0; n_max];
    let mut max_keys = 1;
    for m in 1..=n_max {
        let limit = match params.truncation {
            Truncation::Remaining => (n_max - m) * step,
            Truncation::HalfRadius => half,
            Truncation::None => usize::MAX,
        };
        let mut next: FxHashMap<(u32, Element), Mass> = FxHashMap::default();
        let push = |next: &mut FxHashMap<(u32, Element), Mass>, key, mass: Mass, w: f64| {
            if next.len() >= params.key_cap && !next.contains_key(&key) {
                return Err(Error::Resource {
                    context: format!("holonomy layer {m} from state {start}"),
                    radius: limit.min(m * step),
                    size: next.len(),
                    cap: params.key_cap,
                });
            }
            let e = next.entry(key).or_default();
            e.count = e.count.checked_add(mass.count).ok_or_else(count_overflow)?;
            e.weight += mass.weight * w;
            Ok(())
        };
        for ((i, g), &mass) in &layer {
            let i = *i as usize;
            match &skew.cocycle {
                Cocycle::Letter(v) => {
                    let h = group.mul(g, &v[i]);
                    if group.length(&h) > limit {
                        continue;
                    }
                    for &(j, w) in &weights[i] {
                        push(&mut next, (j as u32, h.clone()), mass, w)?;
                    }
                }
                Cocycle::Edge { .. } => {
                    for &(j, w) in &weights[i] {
                        let h = group.mul(g, skew.cocycle.value(i, j));
                        if group.length(&h) > limit {
                            continue;
                        }
                        push(&mut next, (j as u32, h), mass, w)?;
                    }
                }
            }
        }
        if let Some(closed) = next.get(&(start as u32, identity.clone())) {
            counts[m - 1] = closed.count;
            sums[m - 1] = closed.weight;
        }
        max_keys = max_keys.max(next.len());
        layer = next;
    }
    Ok((counts, sums, max_keys))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolonomyTerm {
    pub n: usize,
    pub count: u128,
    pub log_sum: f64,
}

impl HolonomyTerm {
    pub fn sum(&self) -> f64 {
        self.log_sum.exp()
    }
}

/// `(Σ_{𝒬ₙ} e^{fⁿ}, #𝒬ₙ)` for a single `n`.
pub fn holonomy_sum(
    skew: &SkewProduct,
    f: &EdgePotential,
    n: usize,
    params: &DpParams,
) -> Result<HolonomyTerm> {
    let s = holonomy_sums(skew, f, n, params)?;
    Ok(HolonomyTerm {
        n,
        count: s.counts[n - 1],
        log_sum: s.log_sums[n - 1],
    })
}

/// Visits every word of `𝒬ₙ` with the number of distinct prefix holonomies
/// `#{ψ_m(x) : 0 ≤ m < n}`. Fails once more than `cap` words are visited.
pub fn for_each_q_word(
    skew: &SkewProduct,
    n: usize,
    cap: u64,
    visit: &mut dyn FnMut(&[usize], usize),
) -> Result<u64> {
    if n == 0 {
        return Err(Error::invalid("n", "n must be ≥ 1"));
    }
    let mut seen = 0u64;
    for s in 0..skew.base.size() {
        let mut path = vec![s];
        let mut prefixes = vec![skew.group.identity()];
        q_dfs(skew, n, &mut path, &mut prefixes, &mut seen, cap, visit)?;
    }
    Ok(seen)
}

fn q_dfs(
    skew: &SkewProduct,
    n: usize,
    path: &mut Vec<usize>,
    prefixes: &mut Vec<Element>,
    seen: &mut u64,
    cap: u64,
    visit: &mut dyn FnMut(&[usize], usize),
) -> Result<()> {
    let m = path.len() - 1;
    let last = path[m];
    let group = &skew.group;
    if m == n {
        if last == path[0] && group.is_identity(&prefixes[n]) {
            *seen += 1;
            if *seen > cap {
                return Err(Error::Resource {
                    context: format!("enumerating 𝒬_{n}"),
                    radius: n,
                    size: *seen as usize,
                    cap: cap as usize,
                });
            }
            let mut distinct: Vec<&Element> = prefixes[..n].iter().collect();
            distinct.sort();
            distinct.dedup();
            visit(&path[..n], distinct.len());
        }
        return Ok(());
    }
    for &j in skew.base.successors(last) {
        let h = group.mul(&prefixes[m], skew.cocycle.value(last, j));
        if group.length(&h) > (n - m - 1) * skew.step {
            continue;
        }
        path.push(j);
        prefixes.push(h);
        q_dfs(skew, n, path, prefixes, seen, cap, visit)?;
        path.pop();
        prefixes.pop();
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PnCount {
    pub n: usize,
    pub q: u64,
    pub p: u64,
}

impl PnCount {
    /// `#𝒬ₙ ≤ #𝒫ₙ ≤ n·#𝒬ₙ`.
    pub fn sandwich_holds(&self) -> bool {
        self.q <= self.p && self.p <= self.n as u64 * self.q
    }
}

/// `#𝒫ₙ`: pairs `(x, g)` fixed by `σ̃ⁿ` that visit the identity fiber. Each
/// `x ∈ 𝒬ₙ` contributes one pair per distinct `g = ψ_m(x)⁻¹`, `0 ≤ m < n`.
pub fn p_n_count(skew: &SkewProduct, n: usize, cap: u64) -> Result<PnCount> {
    let mut p = 0u64;
    let q = for_each_q_word(skew, n, cap, &mut |_, d| p += d as u64)?;
    let out = PnCount { n, q, p };
    if !out.sandwich_holds() {
        return Err(Error::invalid(
            "p_n_count",
            format!("sandwich violated at n = {n}: q = {q}, p = {p}"),
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GurevichParams {
    pub n_max: usize,
    /// Terms with `n < n_min` are reported but never fitted.
    pub n_min: usize,
    pub truncation: Truncation,
    pub key_cap: usize,
}

impl GurevichParams {
    pub fn new(n_max: usize) -> Self {
        GurevichParams {
            n_max,
            n_min: 1,
            truncation: Truncation::Remaining,
            key_cap: DEFAULT_KEY_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GurevichTerm {
    pub n: usize,
    pub count: u128,
    pub log_sum: f64,
    /// `(1/n) log Σ_{𝒬ₙ} e^{fⁿ}`.
    pub a_n: f64,
    /// The same for the base shift (all periodic points).
    pub base_a_n: f64,
    /// `P(σ, f) − aₙ`.
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GurevichEstimate {
    pub terms: Vec<GurevichTerm>,
    pub base_pressure: f64,
    /// `L` from `aₙ = L − α log(n)/n − β/n` on the top half of usable `n`.
    pub limit: f64,
    pub limit_stderr: f64,
    /// `L` with an extra `−γ/n²` term, when enough points exist.
    pub limit_four_param: Option<f64>,
    /// `sqrt(SE² + (L₃ − L₄)²)`, floored at 1e-9.
    pub uncertainty: f64,
    /// `P − L`.
    pub deficit: f64,
    /// `θ` in `dₙ ≈ C n^{−θ}` over the top half; `None` if deficits vanish.
    pub decay_exponent: Option<f64>,
    pub fit_points: usize,
    pub symmetric: bool,
    pub warnings: Vec<String>,
    pub max_keys: usize,
}

pub fn gurevich_estimate(
    skew: &SkewProduct,
    f: &EdgePotential,
    params: &GurevichParams,
) -> Result<GurevichEstimate> {
    let sums = holonomy_sums(
        skew,
        f,
        params.n_max,
        &DpParams {
            truncation: params.truncation,
            key_cap: params.key_cap,
        },
    )?;
    gurevich_from_sums(skew, f, &sums, params.n_min)
}

/// Fits an estimate from precomputed sums (lets callers reuse one DP pass).
pub fn gurevich_from_sums(
    skew: &SkewProduct,
    f: &EdgePotential,
    sums: &HolonomySums,
    n_min: usize,
) -> Result<GurevichEstimate> {
    let base = &skew.base;
    let pressure = spectral_pressure(base, f)?;
    let mut warnings = Vec::new();
    if !skew.is_symmetric() {
        warnings.push("skew product is not certified symmetric; the dichotomy needs symmetry".into());
    }
    let mut terms = Vec::new();
    for n in 1..=sums.n_max {
        let log_sum = sums.log_sums[n - 1];
        if !log_sum.is_finite() {
            continue;
        }
        let a_n = log_sum / n as f64;
        let base_a_n = periodic_sum(base, f, n)?.log_weighted / n as f64;
        terms.push(GurevichTerm {
            n,
            count: sums.counts[n - 1],
            log_sum,
            a_n,
            base_a_n,
            deficit: pressure - a_n,
        });
    }
    let usable: Vec<&GurevichTerm> = terms.iter().filter(|t| t.n >= n_min).collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} usable n values (need 4); raise n_max",
            usable.len()
        )));
    }
    let top = &usable[usable.len() / 2..];
    let fit_rows = |extra: bool| -> Vec<Vec<f64>> {
        top.iter()
            .map(|t| {
                let n = t.n as f64;
                let mut r = vec![1.0, -n.ln() / n, -1.0 / n];
                if extra {
                    r.push(-1.0 / (n * n));
                }
                r
            })
            .collect()
    };
    let y: Vec<f64> = top.iter().map(|t| t.a_n).collect();
    let (limit, limit_stderr) = if top.len() >= 3 {
        let fit = least_squares(&fit_rows(false), &y)?;
        (fit.coef[0], fit.stderr[0])
    } else {
        // two points: drop the log term
        let rows: Vec<Vec<f64>> = top.iter().map(|t| vec![1.0, -1.0 / t.n as f64]).collect();
        let fit = least_squares(&rows, &y)?;
        (fit.coef[0], fit.stderr[0])
    };
    let limit_four_param = if top.len() >= 5 {
        least_squares(&fit_rows(true), &y).ok().map(|f| f.coef[0])
    } else {
        None
    };
    let spread = limit_four_param.map_or(0.0, |l4| limit - l4);
    let uncertainty = (limit_stderr.powi(2) + spread.powi(2)).sqrt().max(1e-9);
    let decay: Vec<(f64, f64)> = top
        .iter()
        .filter(|t| t.deficit > 1e-12)
        .map(|t| ((t.n as f64).ln(), t.deficit.ln()))
        .collect();
    let decay_exponent = if decay.len() >= 2 && decay.len() == top.len() {
        let rows: Vec<Vec<f64>> = decay.iter().map(|&(ln, _)| vec![1.0, -ln]).collect();
        let y: Vec<f64> = decay.iter().map(|&(_, d)| d).collect();
        least_squares(&rows, &y).ok().map(|f| f.coef[1])
    } else {
        None
    };
    Ok(GurevichEstimate {
        fit_points: top.len(),
        terms,
        base_pressure: pressure,
        limit,
        limit_stderr,
        limit_four_param,
        uncertainty,
        deficit: pressure - limit,
        decay_exponent,
        symmetric: skew.is_symmetric(),
        warnings,
        max_keys: sums.max_keys,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitivityProbe {
    pub depth: usize,
    pub certified: bool,
    pub window: usize,
    pub forward_reached: usize,
    pub backward_reached: usize,
    pub note: String,
}

/// BFS on the skew-product graph from `(0, 1_G)` using only vertices in
/// `states × ball(2·depth)`. Certifies that every vertex of
/// `states × ball(depth)` is reachable from and can reach the base vertex;
/// otherwise reports inconclusive. It never claims non-transitivity.
pub fn transitivity_probe(skew: &SkewProduct, depth: usize, cap: usize) -> Result<TransitivityProbe> {
    if depth == 0 {
        return Err(Error::invalid("depth", "must be ≥ 1"));
    }
    let group = &skew.group;
    let base = &skew.base;
    let spheres = group.spheres(2 * depth, cap)?;
    let inner: usize = spheres[..=depth].iter().map(|s| s.len()).sum();
    let ball: Vec<Element> = spheres.into_iter().flatten().collect();
    let k = base.size();
    let mut index: FxHashMap<&Element, usize> = FxHashMap::default();
    for (i, g) in ball.iter().enumerate() {
        index.insert(g, i);
    }
    let vertex = |state: usize, g: usize| g * k + state;
    let total = k * ball.len();
    let mut fwd: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut bwd: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (gi, g) in ball.iter().enumerate() {
        for (i, j) in base.edges() {
            let h = group.mul(g, skew.cocycle.value(i, j));
            if let Some(&hi) = index.get(&h) {
                fwd[vertex(i, gi)].push(vertex(j, hi));
                bwd[vertex(j, hi)].push(vertex(i, gi));
            }
        }
    }
    // balls are listed in BFS order, so the inner window is a prefix
    let window = k * inner;
    let root = vertex(0, 0);
    let reach = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; total];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen[..window].iter().filter(|&&b| b).count()
    };
    let (f, b) = (reach(&fwd), reach(&bwd));
    let certified = f == window && b == window;
    let note = if certified {
        format!("all {window} vertices within radius {depth} mutually reachable")
    } else {
        format!(
            "inconclusive: {f}/{window} reachable forward, {b}/{window} backward within radius {} \
             (fibers may be disconnected or connections may need a larger window)",
            2 * depth
        )
    };
    Ok(TransitivityProbe {
        depth,
        certified,
        window,
        forward_reached: f,
        backward_reached: b,
        note,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equality,
    /// Deficit not resolved at this depth but decaying like a power `n^{−θ}`, `θ ≥ 1/2`.
    EqualitySlowDecay,
    Gap,
    Indeterminate,
}

impl Verdict {
    /// Whether the verdict points to an amenable group (`None` if indeterminate).
    pub fn indicates_amenable(self) -> Option<bool> {
        match self {
            Verdict::Equality | Verdict::EqualitySlowDecay => Some(true),
            Verdict::Gap => Some(false),
            Verdict::Indeterminate => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Equality => "equality",
            Verdict::EqualitySlowDecay => "equality-slow-decay",
            Verdict::Gap => "gap",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

/// Thresholds used by [`classify`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictRules {
    pub gap_sigmas: f64,
    pub min_gap: f64,
    pub equality_sigmas: f64,
    pub slow_decay_exponent: f64,
}

impl Default for VerdictRules {
    fn default() -> Self {
        VerdictRules {
            gap_sigmas: 3.0,
            min_gap: 0.02,
            equality_sigmas: 2.0,
            slow_decay_exponent: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmenabilityVerdict {
    pub verdict: Verdict,
    pub pressure: f64,
    pub gurevich: f64,
    pub deficit: f64,
    pub uncertainty: f64,
    pub decay_exponent: Option<f64>,
    pub rules: VerdictRules,
    pub evidence: Vec<String>,
    pub estimate: GurevichEstimate,
}

pub fn classify(est: &GurevichEstimate, rules: &VerdictRules) -> (Verdict, Vec<String>) {
    let d = est.deficit;
    let u = est.uncertainty;
    let theta = est.decay_exponent;
    let mut evidence = vec![format!(
        "P = {:.6}, L = {:.6}, deficit = {:.6} ± {:.6}, θ = {}",
        est.base_pressure,
        est.limit,
        d,
        u,
        theta.map_or("n/a".into(), |t| format!("{t:.3}"))
    )];
    let verdict = if d <= rules.equality_sigmas * u {
        evidence.push(format!("deficit within {}σ of zero", rules.equality_sigmas));
        Verdict::Equality
    } else if theta.map_or(true, |t| t >= rules.slow_decay_exponent) {
        evidence.push(format!(
            "deficit sequence decays like n^-θ with θ ≥ {} (or vanishes)",
            rules.slow_decay_exponent
        ));
        Verdict::EqualitySlowDecay
    } else if est.limit < est.base_pressure - rules.gap_sigmas * u
        && d - rules.gap_sigmas * u > rules.min_gap
    {
        evidence.push(format!(
            "deficit exceeds {}σ + {} and the deficit sequence levels off",
            rules.gap_sigmas, rules.min_gap
        ));
        Verdict::Gap
    } else {
        evidence.push("deficit neither resolved nor clearly bounded away from zero".into());
        Verdict::Indeterminate
    };
    (verdict, evidence)
}

/// Compares the extrapolated Gurevič pressure with the base pressure.
/// Requires a symmetric skew product and an edge-symmetric potential.
pub fn amenability_verdict(
    skew: &SkewProduct,
    f: &EdgePotential,
    params: &GurevichParams,
    rules: &VerdictRules,
) -> Result<AmenabilityVerdict> {
    let kappa = skew.require_symmetric()?;
    let sym = check_symmetry(&skew.base, kappa, f)?;
    if !sym.passed() {
        return Err(Error::invalid(
            "potential",
            format!(
                "not weakly symmetric: fixed points {:?}, matrix {:?}, potential {:?}",
                sym.fixed_points, sym.matrix_violations, sym.potential_violations
            ),
        ));
    }
    let estimate = gurevich_estimate(skew, f, params)?;
    let (verdict, evidence) = classify(&estimate, rules);
    Ok(AmenabilityVerdict {
        verdict,
        pressure: estimate.base_pressure,
        gurevich: estimate.limit,
        deficit: estimate.deficit,
        uncertainty: estimate.uncertainty,
        decay_exponent: estimate.decay_exponent,
        rules: rules.clone(),
        evidence,
        estimate,
    })
}
