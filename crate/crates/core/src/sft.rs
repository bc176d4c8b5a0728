//! Finite-state subshifts of finite type, locally constant potentials and
//! pressure.
//!
//! Pressure of a two-coordinate potential `f` is computed two ways: as the
//! log spectral radius of the weighted matrix `M_f(i,j) = A(i,j) e^{f(i,j)}`
//! (power iteration with Collatz–Wielandt bounds), and orbitally from
//! `(1/n) log Σ_{σⁿx=x} e^{fⁿ(x)} = (1/n) log trace(M_fⁿ)`.

use crate::error::{Error, Result};
use crate::numerics::{least_squares, CompensatedSum, Matrix};
use rayon::prelude::*;
use serde::Serialize;

/// Words are enumerated directly while `kⁿ` stays below this.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug)]
pub struct Sft {
    alphabet: Vec<String>,
    adj: Vec<bool>,
    succ: Vec<Vec<usize>>,
    irreducible: bool,
    period: usize,
    class_of: Vec<usize>,
    primitivity_witness: Option<usize>,
}

impl Sft {
    /// Validates the transition matrix. Reducible matrices are rejected
    /// unless `allow_reducible`, in which case pressure operations refuse them.
    pub fn new(alphabet: Vec<String>, matrix: &[Vec<u8>], allow_reducible: bool) -> Result<Sft> {
        let k = alphabet.len();
        if k == 0 {
            return Err(Error::invalid("alphabet", "empty alphabet"));
        }
        for (i, a) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(a) {
                return Err(Error::invalid("alphabet", format!("duplicate symbol {a:?}")));
            }
        }
        if matrix.len() != k {
            return Err(Error::invalid(
                "matrix",
                format!("{} rows for an alphabet of {k} symbols", matrix.len()),
            ));
        }
        let mut adj = vec![false; k * k];
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(
                    format!("matrix[{i}]"),
                    format!("{} entries, expected {k}", row.len()),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => adj[i * k + j] = true,
                    _ => {
                        return Err(Error::invalid(
                            format!("matrix[{i}][{j}]"),
                            format!("entry {v} is not 0/1"),
                        ))
                    }
                }
            }
        }
        let dead: Vec<&str> = (0..k)
            .filter(|&i| !(0..k).any(|j| adj[i * k + j]) || !(0..k).any(|j| adj[j * k + i]))
            .map(|i| alphabet[i].as_str())
            .collect();
        if !dead.is_empty() {
            return Err(Error::invalid(
                "matrix",
                format!("dead symbols (all-zero row or column): {}", dead.join(", ")),
            ));
        }
        let succ: Vec<Vec<usize>> = (0..k)
            .map(|i| (0..k).filter(|&j| adj[i * k + j]).collect())
            .collect();
        let irreducible = strongly_connected(&succ);
        if !irreducible && !allow_reducible {
            return Err(Error::invalid(
                "matrix",
                "transition matrix is reducible (pass allow_reducible to keep it)",
            ));
        }
        let (period, class_of) = if irreducible {
            cyclic_structure(&succ)
        } else {
            (0, vec![0; k])
        };
        let primitivity_witness = if period == 1 {
            primitivity_exponent(&succ)
        } else {
            None
        };
        Ok(Sft {
            alphabet,
            adj,
            succ,
            irreducible,
            period,
            class_of,
            primitivity_witness,
        })
    }

    /// Full shift on the given symbols.
    pub fn full(alphabet: &[&str]) -> Sft {
        let k = alphabet.len();
        Sft::new(
            alphabet.iter().map(|s| s.to_string()).collect(),
            &vec![vec![1; k]; k],
            false,
        )
        .expect("full shift is valid")
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.alphabet[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    #[inline]
    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.size() + j]
    }

    #[inline]
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size()).flat_map(move |i| self.succ[i].iter().map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(|s| s.len()).sum()
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Period of an irreducible shift (0 when reducible).
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period == 1
    }

    /// Smallest `n` with `Aⁿ > 0` entrywise, for aperiodic shifts.
    pub fn primitivity_witness(&self) -> Option<usize> {
        self.primitivity_witness
    }

    /// Cyclic classes `S_0, …, S_{p−1}`; every edge goes from `S_l` to `S_{l+1 mod p}`.
    pub fn cyclic_classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.period.max(1)];
        for (i, &c) in self.class_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i]
    }

    pub fn adjacency_matrix(&self) -> Matrix {
        let k = self.size();
        Matrix {
            n: k,
            data: self.adj.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    fn require_irreducible(&self) -> Result<()> {
        if self.irreducible {
            Ok(())
        } else {
            Err(Error::invalid(
                "sft",
                "pressure is only defined here for irreducible (transitive) shifts",
            ))
        }
    }
}

fn reach(succ: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in &succ[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn strongly_connected(succ: &[Vec<usize>]) -> bool {
    let k = succ.len();
    let mut pred = vec![Vec::new(); k];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    reach(succ, 0).iter().all(|&b| b) && reach(&pred, 0).iter().all(|&b| b)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period as the gcd of `level(u) + 1 − level(v)` over edges, BFS levels from 0.
fn cyclic_structure(succ: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let k = succ.len();
    let mut level = vec![usize::MAX; k];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut p = 0;
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            let d = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
            p = gcd(p, d);
        }
    }
    let p = p.max(1);
    (p, level.iter().map(|&l| l % p).collect())
}

/// Iterates row bitsets of `Aⁿ` until every row is full.
fn primitivity_exponent(succ: &[Vec<usize>]) -> Option<usize> {
    let k = succ.len();
    let words = k.div_ceil(64);
    let full = |row: &[u64]| {
        (0..k).all(|j| row[j / 64] >> (j % 64) & 1 == 1)
    };
    let mut rows: Vec<Vec<u64>> = succ
        .iter()
        .map(|vs| {
            let mut r = vec![0u64; words];
            for &v in vs {
                r[v / 64] |= 1 << (v % 64);
            }
            r
        })
        .collect();
    let bound = (k - 1) * (k - 1) + 1;
    for n in 1..=bound {
        if rows.iter().all(|r| full(r)) {
            return Some(n);
        }
        // row_i(A^{n+1}) = OR_{j ∈ succ(i)} row_j(A^n)
        let next: Vec<Vec<u64>> = succ
            .iter()
            .map(|vs| {
                let mut r = vec![0u64; words];
                for &v in vs {
                    for (d, s) in r.iter_mut().zip(&rows[v]) {
                        *d |= s;
                    }
                }
                r
            })
            .collect();
        rows = next;
    }
    None
}

/// A locally constant potential `f(x) = f(x₀, x₁)`, defined on allowed edges.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePotential {
    k: usize,
    values: Vec<f64>,
}

impl EdgePotential {
    pub fn zero(sft: &Sft) -> Self {
        Self::constant(sft, 0.0)
    }

    pub fn constant(sft: &Sft, c: f64) -> Self {
        Self::from_fn(sft, |_, _| c)
    }

    /// Evaluates `f(i, j)` on every allowed edge.
    pub fn from_fn(sft: &Sft, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let k = sft.size();
        let mut values = vec![0.0; k * k];
        for (i, j) in sft.edges() {
            values[i * k + j] = f(i, j);
        }
        EdgePotential { k, values }
    }

    /// From `(from, to, value)` triples naming symbols; unnamed edges get `default`.
    pub fn from_named(sft: &Sft, entries: &[(String, String, f64)], default: f64) -> Result<Self> {
        let mut p = Self::constant(sft, default);
        for (a, b, v) in entries {
            let i = sft
                .index_of(a)
                .ok_or_else(|| Error::invalid("potential", format!("unknown symbol {a:?}")))?;
            let j = sft
                .index_of(b)
                .ok_or_else(|| Error::invalid("potential", format!("unknown symbol {b:?}")))?;
            if !sft.allowed(i, j) {
                return Err(Error::invalid(
                    "potential",
                    format!("edge ({a}, {b}) is not allowed by the transition matrix"),
                ));
            }
            if !v.is_finite() {
                return Err(Error::invalid("potential", format!("non-finite value on ({a}, {b})")));
            }
            p.values[i * p.k + j] = *v;
        }
        Ok(p)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn scaled(&self, c: f64) -> Self {
        EdgePotential {
            k: self.k,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn shifted(&self, sft: &Sft, c: f64) -> Self {
        Self::from_fn(sft, |i, j| self.get(i, j) + c)
    }

    /// Maximum over allowed edges.
    pub fn max_on(&self, sft: &Sft) -> f64 {
        sft.edges()
            .map(|(i, j)| self.get(i, j))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_on(&self, sft: &Sft) -> f64 {
        sft.edges()
            .map(|(i, j)| self.get(i, j))
            .fold(f64::INFINITY, f64::min)
    }

    /// Birkhoff sum around a cyclic word, closing edge included.
    pub fn cycle_sum(&self, word: &[usize]) -> f64 {
        let n = word.len();
        (0..n).map(|m| self.get(word[m], word[(m + 1) % n])).sum()
    }

    pub(crate) fn check(&self, sft: &Sft) -> Result<()> {
        if self.k != sft.size() {
            return Err(Error::invalid(
                "potential",
                format!("defined for {} symbols, shift has {}", self.k, sft.size()),
            ));
        }
        Ok(())
    }

    /// `M_f(i,j) = A(i,j) e^{f(i,j)}`.
    pub fn weighted_matrix(&self, sft: &Sft) -> Matrix {
        let mut m = Matrix::zeros(sft.size());
        for (i, j) in sft.edges() {
            m.set(i, j, self.get(i, j).exp());
        }
        m
    }
}

/// Periodic-point count and weighted sum for one period `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicSum {
    pub n: usize,
    /// `trace(Aⁿ)` when it fits in 128 bits.
    pub count: Option<u128>,
    pub log_count: f64,
    /// `log Σ_{σⁿx=x} e^{fⁿ(x)}`; `-inf` when there are no periodic points.
    pub log_weighted: f64,
}

impl PeriodicSum {
    pub fn weighted(&self) -> f64 {
        self.log_weighted.exp()
    }
}

/// Uses word enumeration when `kⁿ ≤ 10⁶`, log-scaled matrix powers otherwise.
pub fn periodic_sum(sft: &Sft, f: &EdgePotential, n: usize) -> Result<PeriodicSum> {
    f.check(sft)?;
    if n == 0 {
        return Err(Error::invalid("n", "period must be ≥ 1"));
    }
    if (sft.size() as f64).powi(n as i32) <= BRUTE_FORCE_LIMIT {
        Ok(periodic_sum_enumerated(sft, f, n))
    } else {
        Ok(periodic_sum_trace(sft, f, n))
    }
}

/// Enumerates allowed cyclic words; shards by first symbol.
pub fn periodic_sum_enumerated(sft: &Sft, f: &EdgePotential, n: usize) -> PeriodicSum {
    let fmax = f.max_on(sft);
    let per_start: Vec<(u128, CompensatedSum)> = (0..sft.size())
        .into_par_iter()
        .map(|s| {
            let mut count = 0u128;
            let mut sum = CompensatedSum::default();
            let mut path = vec![s];
            enumerate_cycles(sft, n, &mut path, &mut |w| {
                count += 1;
                sum.add((f.cycle_sum(w) - n as f64 * fmax).exp());
            });
            (count, sum)
        })
        .collect();
    let mut count = 0u128;
    let mut total = CompensatedSum::default();
    for (c, s) in per_start {
        count += c;
        total.add(s.value());
    }
    let w = total.value();
    PeriodicSum {
        n,
        count: Some(count),
        log_count: if count == 0 {
            f64::NEG_INFINITY
        } else {
            (count as f64).ln()
        },
        log_weighted: if w > 0.0 {
            w.ln() + n as f64 * fmax
        } else {
            f64::NEG_INFINITY
        },
    }
}

/// Calls `visit` for every allowed word of length `n` extending `path`
/// whose last symbol can return to `path[0]`.
pub(crate) fn enumerate_cycles(
    sft: &Sft,
    n: usize,
    path: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if path.len() == n {
        if sft.allowed(path[n - 1], path[0]) {
            visit(path);
        }
        return;
    }
    let last = *path.last().expect("non-empty path");
    for &j in sft.successors(last) {
        path.push(j);
        enumerate_cycles(sft, n, path, visit);
        path.pop();
    }
}

/// `trace(Aⁿ)` (exact when it fits) and `log trace(M_fⁿ)`.
pub fn periodic_sum_trace(sft: &Sft, f: &EdgePotential, n: usize) -> PeriodicSum {
    let count = exact_trace_power(sft, n);
    PeriodicSum {
        n,
        count,
        log_count: sft.adjacency_matrix().log_trace_power(n),
        log_weighted: f.weighted_matrix(sft).log_trace_power(n),
    }
}

fn exact_trace_power(sft: &Sft, n: usize) -> Option<u128> {
    let k = sft.size();
    let mut cur: Vec<u128> = (0..k * k)
        .map(|i| if i / k == i % k { 1 } else { 0 })
        .collect();
    for _ in 0..n {
        let mut next = vec![0u128; k * k];
        for i in 0..k {
            for l in 0..k {
                let c = cur[i * k + l];
                if c == 0 {
                    continue;
                }
                for &j in sft.successors(l) {
                    next[i * k + j] = next[i * k + j].checked_add(c)?;
                }
            }
        }
        cur = next;
    }
    (0..k).try_fold(0u128, |acc, i| acc.checked_add(cur[i * k + i]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralPressure {
    pub pressure: f64,
    pub iterations: usize,
    /// Relative Collatz–Wielandt gap at termination.
    pub residual: f64,
}

/// `log ρ(M_f)`. For period `p > 1`, iterates `M_f^p` on one cyclic class.
pub fn spectral_pressure(sft: &Sft, f: &EdgePotential) -> Result<f64> {
    spectral_pressure_detailed(sft, f).map(|r| r.pressure)
}

pub fn spectral_pressure_detailed(sft: &Sft, f: &EdgePotential) -> Result<SpectralPressure> {
    sft.require_irreducible()?;
    f.check(sft)?;
    let k = sft.size();
    let fmax = f.max_on(sft);
    let p = sft.period();
    // weights relative to the largest edge keep entries ≤ 1
    let weights: Vec<Vec<(usize, f64)>> = (0..k)
        .map(|i| {
            sft.successors(i)
                .iter()
                .map(|&j| (j, (f.get(i, j) - fmax).exp()))
                .collect()
        })
        .collect();
    let class0: Vec<usize> = (0..k).filter(|&i| sft.class_of(i) == 0).collect();
    let mut v = vec![0.0; k];
    for &i in &class0 {
        v[i] = 1.0 / class0.len() as f64;
    }
    let mut tmp = vec![0.0; k];
    let mut residual = f64::INFINITY;
    for it in 1..=POWER_MAX_ITER {
        let mut w = v.clone();
        for _ in 0..p {
            for (i, row) in weights.iter().enumerate() {
                tmp[i] = row.iter().map(|&(j, a)| a * w[j]).sum();
            }
            std::mem::swap(&mut w, &mut tmp);
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &i in &class0 {
            let q = w[i] / v[i];
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if !(hi > 0.0) || !lo.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: f64::NAN,
            });
        }
        residual = (hi - lo) / hi;
        let norm: f64 = class0.iter().map(|&i| w[i]).sum();
        for &i in &class0 {
            v[i] = w[i] / norm;
        }
        if residual <= POWER_TOL {
            let rho_p = 0.5 * (lo + hi);
            return Ok(SpectralPressure {
                pressure: rho_p.ln() / p as f64 + fmax,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: POWER_MAX_ITER,
        residual,
    })
}

/// Topological entropy: pressure of the zero potential.
pub fn entropy(sft: &Sft) -> Result<f64> {
    spectral_pressure(sft, &EdgePotential::zero(sft))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitalPressure {
    /// `(n, aₙ)` for periods with periodic points.
    pub terms: Vec<(usize, f64)>,
    /// Fitted `L` in `aₙ ≈ L + C/n` over the top half of the terms.
    pub limit: f64,
    pub c: f64,
}

pub fn orbital_pressure(sft: &Sft, f: &EdgePotential, n_max: usize) -> Result<OrbitalPressure> {
    sft.require_irreducible()?;
    if n_max < 2 {
        return Err(Error::invalid("n_max", "must be ≥ 2"));
    }
    let mut terms = Vec::new();
    for n in 1..=n_max {
        let s = periodic_sum(sft, f, n)?;
        if s.log_weighted.is_finite() {
            terms.push((n, s.log_weighted / n as f64));
        }
    }
    let top = &terms[terms.len() / 2..];
    let (limit, c) = if top.len() >= 2 {
        let rows: Vec<Vec<f64>> = top.iter().map(|&(n, _)| vec![1.0, 1.0 / n as f64]).collect();
        let y: Vec<f64> = top.iter().map(|&(_, a)| a).collect();
        let fit = least_squares(&rows, &y)?;
        (fit.coef[0], fit.coef[1])
    } else {
        let &(_, a) = terms
            .last()
            .ok_or_else(|| Error::InsufficientData("no periodic points".into()))?;
        (a, 0.0)
    };
    Ok(OrbitalPressure { terms, limit, c })
}

/// A fixed-point-free involution `κ` of the alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Involution {
    map: Vec<usize>,
}

impl Involution {
    /// Fails unless `map` is a permutation with `κ∘κ = id`. Fixed points are
    /// allowed here and reported by [`check_symmetry`].
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let k = map.len();
        let mut seen = vec![false; k];
        for &x in &map {
            if x >= k || std::mem::replace(&mut seen[x], true) {
                return Err(Error::invalid("involution", "not a permutation of the alphabet"));
            }
        }
        for (i, &x) in map.iter().enumerate() {
            if map[x] != i {
                return Err(Error::invalid(
                    "involution",
                    format!("κ(κ({i})) = {} ≠ {i}", map[x]),
                ));
            }
        }
        Ok(Involution { map })
    }

    /// From symbol pairs `(a, κa)`; each pair also sets `κ(κa) = a`.
    pub fn from_pairs(sft: &Sft, pairs: &[(String, String)]) -> Result<Self> {
        let k = sft.size();
        let mut map: Vec<Option<usize>> = vec![None; k];
        for (a, b) in pairs {
            let i = sft
                .index_of(a)
                .ok_or_else(|| Error::invalid("involution", format!("unknown symbol {a:?}")))?;
            let j = sft
                .index_of(b)
                .ok_or_else(|| Error::invalid("involution", format!("unknown symbol {b:?}")))?;
            for (x, y) in [(i, j), (j, i)] {
                if map[x].is_some_and(|old| old != y) {
                    return Err(Error::invalid(
                        "involution",
                        format!("symbol {} paired twice", sft.symbol(x)),
                    ));
                }
                map[x] = Some(y);
            }
        }
        let map = map
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                m.ok_or_else(|| {
                    Error::invalid("involution", format!("symbol {} is unpaired", sft.symbol(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Involution::new(map)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub fixed_points: Vec<String>,
    /// `(i, j)` with `A(κj, κi) ≠ A(i, j)`.
    pub matrix_violations: Vec<(String, String)>,
    /// Allowed `(i, j)` with `f(i, j) ≠ f(κj, κi)`.
    pub potential_violations: Vec<(String, String)>,
}

impl SymmetryReport {
    /// Passing certifies weak symmetry with `D_n = 1`.
    pub fn passed(&self) -> bool {
        self.fixed_points.is_empty()
            && self.matrix_violations.is_empty()
            && self.potential_violations.is_empty()
    }
}

pub fn check_symmetry(sft: &Sft, kappa: &Involution, f: &EdgePotential) -> Result<SymmetryReport> {
    let k = sft.size();
    if kappa.len() != k {
        return Err(Error::invalid(
            "involution",
            format!("acts on {} symbols, shift has {k}", kappa.len()),
        ));
    }
    f.check(sft)?;
    let name = |i: usize| sft.symbol(i).to_string();
    let mut report = SymmetryReport::default();
    for i in 0..k {
        if kappa.apply(i) == i {
            report.fixed_points.push(name(i));
        }
    }
    for i in 0..k {
        for j in 0..k {
            let (ki, kj) = (kappa.apply(i), kappa.apply(j));
            if sft.allowed(kj, ki) != sft.allowed(i, j) {
                report.matrix_violations.push((name(i), name(j)));
            } else if sft.allowed(i, j) {
                let (a, b) = (f.get(i, j), f.get(kj, ki));
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    report.potential_violations.push((name(i), name(j)));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sft(rows: &[&[u8]]) -> Sft {
        let k = rows.len();
        let alphabet = (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        Sft::new(alphabet, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), false).unwrap()
    }

    #[test]
    fn structure() {
        let full = sft(&[&[1, 1], &[1, 1]]);
        assert!(full.is_aperiodic());
        assert_eq!(full.primitivity_witness(), Some(1));
        let golden = sft(&[&[1, 1], &[1, 0]]);
        assert_eq!(golden.period(), 1);
        assert_eq!(golden.primitivity_witness(), Some(2));
        let cycle = sft(&[&[0, 1], &[1, 0]]);
        assert_eq!(cycle.period(), 2);
        assert_eq!(cycle.cyclic_classes(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn rejects_bad_matrices() {
        let a = vec!["a".to_string(), "b".to_string()];
        assert!(Sft::new(a.clone(), &[vec![1, 1]], false).is_err());
        assert!(Sft::new(a.clone(), &[vec![1, 2], vec![1, 1]], false).is_err());
        let dead = Sft::new(a.clone(), &[vec![1, 0], vec![0, 0]], false).unwrap_err();
        assert!(dead.to_string().contains("dead symbols"));
        let reducible = [vec![1, 1], vec![0, 1]];
        assert!(Sft::new(a.clone(), &reducible, false).is_err());
        let kept = Sft::new(a, &reducible, true).unwrap();
        assert!(!kept.is_irreducible());
        assert!(entropy(&kept).is_err());
    }

    #[test]
    fn periodic_sums() {
        let full = sft(&[&[1, 1], &[1, 1]]);
        let s = periodic_sum(&full, &EdgePotential::zero(&full), 3).unwrap();
        assert_eq!(s.count, Some(8));
        assert!((s.weighted() - 8.0).abs() < 1e-12);
        let golden = sft(&[&[1, 1], &[1, 0]]);
        let counts: Vec<u128> = (1..=4)
            .map(|n| periodic_sum(&golden, &EdgePotential::zero(&golden), n).unwrap().count.unwrap())
            .collect();
        assert_eq!(counts, vec![1, 3, 4, 7]);
        let c = 0.3;
        for n in [5, 25] {
            let s = periodic_sum(&full, &EdgePotential::constant(&full, c), n).unwrap();
            let expected = n as f64 * (2f64.ln() + c);
            assert!((s.log_weighted - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_values() {
        let full = sft(&[&[1, 1], &[1, 1]]);
        assert!((entropy(&full).unwrap() - 2f64.ln()).abs() < 1e-14);
        let golden = sft(&[&[1, 1], &[1, 0]]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((entropy(&golden).unwrap() - phi.ln()).abs() < 1e-12);
        let f = EdgePotential::from_fn(&full, |i, j| ((1 + 2 * i + j) as f64).ln());
        let expected = ((5.0 + 33f64.sqrt()) / 2.0).ln();
        assert!((spectral_pressure(&full, &f).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.681253).abs() < 1e-6);
        let cycle = sft(&[&[0, 1], &[1, 0]]);
        assert!(entropy(&cycle).unwrap().abs() < 1e-14);
    }

    #[test]
    fn orbital_values() {
        let full = sft(&[&[1, 1], &[1, 1]]);
        let o = orbital_pressure(&full, &EdgePotential::zero(&full), 10).unwrap();
        for &(_, a) in &o.terms {
            assert!((a - 2f64.ln()).abs() < 1e-12);
        }
        let golden = sft(&[&[1, 1], &[1, 0]]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let o = orbital_pressure(&golden, &EdgePotential::zero(&golden), 40).unwrap();
        let a40 = o.terms.iter().find(|t| t.0 == 40).unwrap().1;
        assert!((a40 - phi.ln()).abs() < 1e-3);
        let cycle = sft(&[&[0, 1], &[1, 0]]);
        let o = orbital_pressure(&cycle, &EdgePotential::zero(&cycle), 10).unwrap();
        assert!(o.terms.iter().all(|&(n, _)| n % 2 == 0));
        // two periodic points at every even period: a_n = log 2 / n
        for &(n, a) in &o.terms {
            assert!((a - 2f64.ln() / n as f64).abs() < 1e-12);
        }
        assert!(o.limit.abs() < 1e-10);
    }

    #[test]
    fn symmetry_checks() {
        let full2 = sft(&[&[1, 1], &[1, 1]]);
        let swap = Involution::new(vec![1, 0]).unwrap();
        assert!(check_symmetry(&full2, &swap, &EdgePotential::zero(&full2))
            .unwrap()
            .passed());
        assert!(Involution::new(vec![1, 2, 0]).is_err());

        let names: Vec<String> = ["a", "A", "b", "B"].iter().map(|s| s.to_string()).collect();
        // cancellation-free: forbid a→A, A→a, b→B, B→b
        let rows: Vec<Vec<u8>> = (0..4)
            .map(|i| (0..4).map(|j| if j == i ^ 1 { 0 } else { 1 }).collect())
            .collect();
        let free = Sft::new(names, &rows, false).unwrap();
        let kappa = Involution::new(vec![1, 0, 3, 2]).unwrap();
        assert!(check_symmetry(&free, &kappa, &EdgePotential::zero(&free))
            .unwrap()
            .passed());
        let broken = EdgePotential::from_named(
            &free,
            &[("a".into(), "b".into(), 1.0), ("B".into(), "A".into(), 0.0)],
            0.0,
        )
        .unwrap();
        let report = check_symmetry(&free, &kappa, &broken).unwrap();
        assert!(!report.passed());
        assert!(report
            .potential_violations
            .contains(&("a".to_string(), "b".to_string())));

        let identity = Involution::new(vec![0, 1]).unwrap();
        let r = check_symmetry(&full2, &identity, &EdgePotential::zero(&full2)).unwrap();
        assert_eq!(r.fixed_points, vec!["a".to_string(), "b".to_string()]);
    }
}
