//! Suspension flows over a finite shift: roof functions, critical exponents
//! as pressure roots, closed-orbit counting and zeta partial sums.

use crate::error::{Error, Result};
use crate::numerics::{bisect, illinois, least_squares, log_sum_exp};
use crate::sft::{spectral_pressure, EdgePotential, Sft};
use crate::skew::{for_each_q_word, gurevich_estimate, GurevichEstimate, GurevichParams, SkewProduct};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

const ROOT_TOL: f64 = 1e-12;

/// A strictly positive locally constant roof `r(x₀, x₁)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoofFunction {
    values: EdgePotential,
    r_min: f64,
    r_max: f64,
}

impl RoofFunction {
    pub fn new(sft: &Sft, values: EdgePotential) -> Result<Self> {
        if values.len() != sft.size() {
            return Err(Error::invalid("roof", "defined on a different alphabet"));
        }
        let r_min = values.min_on(sft);
        let r_max = values.max_on(sft);
        if !(r_min > 0.0) || !r_max.is_finite() {
            let bad = sft
                .edges()
                .find(|&(i, j)| !(values.get(i, j) > 0.0 && values.get(i, j).is_finite()))
                .map(|(i, j)| format!(" on edge ({}, {})", sft.symbol(i), sft.symbol(j)))
                .unwrap_or_default();
            return Err(Error::invalid("roof", format!("must be strictly positive and finite{bad}")));
        }
        Ok(RoofFunction {
            values,
            r_min,
            r_max,
        })
    }

    pub fn constant(sft: &Sft, c: f64) -> Result<Self> {
        Self::new(sft, EdgePotential::constant(sft, c))
    }

    pub fn from_fn(sft: &Sft, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(sft, EdgePotential::from_fn(sft, f))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_constant(&self) -> bool {
        self.r_min == self.r_max
    }

    pub fn as_potential(&self) -> &EdgePotential {
        &self.values
    }

    pub fn scaled(&self, sft: &Sft, c: f64) -> Result<Self> {
        Self::new(sft, self.values.scaled(c))
    }

    /// `−s·r` as a potential.
    pub fn tilted(&self, s: f64) -> EdgePotential {
        self.values.scaled(-s)
    }

    /// `rⁿ` around a cyclic word.
    pub fn cycle_length(&self, word: &[usize]) -> f64 {
        self.values.cycle_sum(word)
    }
}

/// The unique `h` with `P(σ, −h r) = 0`, by bisection on `[0, P(σ,0)/r_min]`.
pub fn delta_root(sft: &Sft, r: &RoofFunction) -> Result<f64> {
    let p0 = spectral_pressure(sft, &EdgePotential::zero(sft))?;
    if p0 <= 0.0 {
        return Ok(0.0);
    }
    let hi = p0 / r.r_min() * (1.0 + 1e-9) + 1e-12;
    bisect(|s| spectral_pressure(sft, &r.tilted(s)), 0.0, hi, ROOT_TOL * hi.max(1.0), 200)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaSubEstimate {
    pub xi: f64,
    pub uncertainty: f64,
    /// Number of Gurevič fits evaluated.
    pub evaluations: usize,
    /// The estimate at the root.
    pub at_root: GurevichEstimate,
}

/// Root of the fitted Gurevič pressure `ξ ↦ P̂_G(−ξ r)`.
///
/// A constant roof `c` needs one fit: `P̂_G(−ξc) = P̂_G(0) − ξc`. Otherwise
/// the fitted curve is solved by Illinois false position; its slope near the
/// root converts the fit uncertainty into an uncertainty on `ξ`.
pub fn delta_sub_root(
    skew: &SkewProduct,
    r: &RoofFunction,
    params: &GurevichParams,
) -> Result<DeltaSubEstimate> {
    let base = skew.base();
    if r.is_constant() {
        let c = r.r_min();
        let est = gurevich_estimate(skew, &EdgePotential::zero(base), params)?;
        return Ok(DeltaSubEstimate {
            xi: est.limit / c,
            uncertainty: est.uncertainty / c,
            evaluations: 1,
            at_root: est,
        });
    }
    let p0 = spectral_pressure(base, &EdgePotential::zero(base))?;
    let hi = p0 / r.r_min() * 1.05 + 1e-6;
    let mut evaluations = 0;
    let mut last: Vec<(f64, f64, GurevichEstimate)> = Vec::new();
    let mut g = |xi: f64| -> Result<f64> {
        evaluations += 1;
        let est = gurevich_estimate(skew, &r.tilted(xi), params)?;
        let v = est.limit;
        last.push((xi, v, est));
        Ok(v)
    };
    let xi = illinois(&mut g, 0.0, hi, 1e-7, 60)?;
    // closest evaluation and a secant slope through its neighbour
    last.sort_by(|a, b| (a.0 - xi).abs().total_cmp(&(b.0 - xi).abs()));
    let slope = if last.len() >= 2 && last[0].0 != last[1].0 {
        (last[0].1 - last[1].1) / (last[0].0 - last[1].0)
    } else {
        -r.r_min()
    };
    let at_root = last.swap_remove(0).2;
    Ok(DeltaSubEstimate {
        xi,
        uncertainty: at_root.uncertainty / slope.abs().max(r.r_min()),
        evaluations,
        at_root,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodRow {
    pub n: usize,
    /// Words with `σⁿx = x` and `rⁿ(x) ≤ T_max`.
    pub points: u64,
    /// Orbits (necklaces), primitive or not.
    pub orbits: u64,
    pub prime_orbits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitLengthTable {
    pub t_max: f64,
    pub rows: Vec<PeriodRow>,
    /// Sorted lengths of prime orbits with `λ ≤ T_max`.
    pub prime_lengths: Vec<f64>,
    /// Sorted lengths of all orbits (including iterates) with `λ ≤ T_max`.
    pub all_lengths: Vec<f64>,
    /// Set when the word budget stopped the enumeration early.
    pub truncated: bool,
    /// `h` fitted from `N'(T) ≈ C e^{hT}/T` over `T ∈ [T_max/2, T_max]`.
    pub growth_rate: Option<f64>,
}

impl OrbitLengthTable {
    /// Prime orbits with length ≤ `t`.
    pub fn prime_count(&self, t: f64) -> usize {
        self.prime_lengths.partition_point(|&l| l <= t + 1e-12)
    }

    pub fn all_count(&self, t: f64) -> usize {
        self.all_lengths.partition_point(|&l| l <= t + 1e-12)
    }
}

/// Smallest period of a cyclic word.
fn primitive_period(w: &[usize]) -> usize {
    let n = w.len();
    (1..=n)
        .find(|&d| n % d == 0 && (0..n).all(|i| w[i] == w[(i + d) % n]))
        .unwrap_or(n)
}

/// Whether `w` is the lexicographically least of its rotations.
fn is_necklace_rep(w: &[usize]) -> bool {
    let n = w.len();
    (1..n).all(|s| {
        for i in 0..n {
            let (a, b) = (w[i], w[(i + s) % n]);
            if a != b {
                return a < b;
            }
        }
        true
    })
}

/// Closed orbits of the suspension with length ≤ `t_max`, enumerated as
/// cyclic words. At most `word_cap` periodic points are visited.
pub fn orbit_counts(sft: &Sft, r: &RoofFunction, t_max: f64, word_cap: u64) -> Result<OrbitLengthTable> {
    if !(t_max > 0.0) {
        return Err(Error::invalid("t_max", "must be positive"));
    }
    let n_max = (t_max / r.r_min() + 1e-9).floor() as usize;
    let mut rows = Vec::new();
    let mut prime_lengths = Vec::new();
    let mut all_lengths = Vec::new();
    let mut visited = 0u64;
    let mut truncated = false;
    'periods: for n in 1..=n_max {
        let per_start: Vec<(u64, Vec<(f64, bool)>)> = (0..sft.size())
            .into_par_iter()
            .map(|s| {
                let mut points = 0u64;
                let mut out = Vec::new();
                let mut path = vec![s];
                orbit_dfs(sft, r, n, t_max, 0.0, &mut path, &mut |w, len| {
                    points += 1;
                    if is_necklace_rep(w) {
                        out.push((len, primitive_period(w) == n));
                    }
                });
                (points, out)
            })
            .collect();
        let mut row = PeriodRow {
            n,
            points: 0,
            orbits: 0,
            prime_orbits: 0,
        };
        for (points, orbits) in per_start {
            row.points += points;
            for (len, prime) in orbits {
                row.orbits += 1;
                all_lengths.push(len);
                if prime {
                    row.prime_orbits += 1;
                    prime_lengths.push(len);
                }
            }
        }
        visited += row.points;
        rows.push(row);
        if visited > word_cap {
            truncated = true;
            break 'periods;
        }
    }
    prime_lengths.sort_by(f64::total_cmp);
    all_lengths.sort_by(f64::total_cmp);
    let mut table = OrbitLengthTable {
        t_max,
        rows,
        prime_lengths,
        all_lengths,
        truncated,
        growth_rate: None,
    };
    // N'(T) ~ e^{hT}/(hT): fit log(N'·T) = a + hT at the jumps in [T_max/2, T_max]
    let mut jumps: Vec<f64> = table
        .prime_lengths
        .iter()
        .copied()
        .filter(|&l| l >= t_max / 2.0)
        .collect();
    jumps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let stride = jumps.len().div_ceil(200).max(1);
    let samples: Vec<(f64, f64)> = jumps
        .iter()
        .step_by(stride)
        .map(|&t| (t, (table.prime_count(t) as f64 * t).ln()))
        .collect();
    if samples.len() >= 3 {
        let rows: Vec<Vec<f64>> = samples.iter().map(|&(t, _)| vec![1.0, t]).collect();
        let y: Vec<f64> = samples.iter().map(|&(_, l)| l).collect();
        table.growth_rate = least_squares(&rows, &y).ok().map(|f| f.coef[1]);
    }
    Ok(table)
}

fn orbit_dfs(
    sft: &Sft,
    r: &RoofFunction,
    n: usize,
    t_max: f64,
    acc: f64,
    path: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize], f64),
) {
    let m = path.len();
    let last = path[m - 1];
    if m == n {
        if sft.allowed(last, path[0]) {
            let len = acc + r.get(last, path[0]);
            if len <= t_max + 1e-12 {
                visit(path, len);
            }
        }
        return;
    }
    for &j in sft.successors(last) {
        let a = acc + r.get(last, j);
        // the closing edges still cost at least r_min each
        if a + (n - m) as f64 * r.r_min() > t_max + 1e-12 {
            continue;
        }
        path.push(j);
        orbit_dfs(sft, r, n, t_max, a, path, visit);
        path.pop();
    }
}

/// Largest `g` with every length an integer multiple of `g` (to `tol`).
pub fn length_gcd(lengths: &[f64], tol: f64) -> f64 {
    let mut g = 0.0f64;
    for &l in lengths {
        let (mut a, mut b) = (g.max(l), g.min(l));
        while b > tol {
            let r = a % b;
            let r = if b - r <= tol { 0.0 } else { r };
            a = b;
            b = r;
        }
        g = a;
    }
    g
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerryPoint {
    pub t: f64,
    pub count: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerrySeries {
    pub h: f64,
    pub lattice: bool,
    /// Common span of the lengths when lattice.
    pub span: Option<f64>,
    pub points: Vec<PerryPoint>,
    pub table: OrbitLengthTable,
}

impl PerrySeries {
    pub fn final_ratio(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.ratio)
    }
}

/// `h·T·e^{−hT}·N'(T)` on a grid of `T ≤ T_max`, with lattice roofs flagged.
pub fn perry_check(sft: &Sft, r: &RoofFunction, t_max: f64, word_cap: u64) -> Result<PerrySeries> {
    let h = delta_root(sft, r)?;
    let table = orbit_counts(sft, r, t_max, word_cap)?;
    let g = length_gcd(&table.prime_lengths, 1e-9);
    let shortest = table.prime_lengths.first().copied().unwrap_or(0.0);
    let lattice = g > 1e-6 * shortest.max(1e-300);
    let points = (1..=40)
        .map(|i| {
            let t = t_max * i as f64 / 40.0;
            let count = table.prime_count(t);
            PerryPoint {
                t,
                count,
                ratio: h * t * (-h * t).exp() * count as f64,
            }
        })
        .collect();
    Ok(PerrySeries {
        h,
        lattice,
        span: lattice.then_some(g),
        points,
        table,
    })
}

/// Holonomy-trivial orbit data `Σ_{(x,g) ∈ 𝒫ₙ} δ_{rⁿ(x)}` for `n ≤ n_max`,
/// from which zeta partial sums at any `s` follow.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaData {
    /// Per `n`: multiplicity of each distinct cycle length.
    levels: Vec<BTreeMap<u64, u128>>,
}

impl ZetaData {
    pub fn collect(skew: &SkewProduct, r: &RoofFunction, n_max: usize, word_cap: u64) -> Result<Self> {
        let mut levels = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let mut level: BTreeMap<u64, u128> = BTreeMap::new();
            for_each_q_word(skew, n, word_cap, &mut |w, distinct| {
                *level.entry(r.cycle_length(w).to_bits()).or_default() += distinct as u128;
            })?;
            levels.push(level);
        }
        Ok(ZetaData { levels })
    }

    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    /// `#𝒫ₙ`.
    pub fn p_count(&self, n: usize) -> u128 {
        self.levels[n - 1].values().sum()
    }

    /// `log((1/n) Σ_{𝒫ₙ} e^{−s rⁿ})`, `-inf` when `𝒫ₙ` is empty.
    pub fn log_term(&self, n: usize, s: f64) -> f64 {
        let xs: Vec<f64> = self.levels[n - 1]
            .iter()
            .map(|(&bits, &mult)| (mult as f64).ln() - s * f64::from_bits(bits))
            .collect();
        log_sum_exp(&xs) - (n as f64).ln()
    }

    pub fn partial(&self, s: f64) -> ZetaPartial {
        let log_terms: Vec<f64> = (1..=self.n_max()).map(|n| self.log_term(n, s)).collect();
        let log_z = log_terms
            .iter()
            .filter(|t| t.is_finite())
            .map(|t| t.exp())
            .sum::<f64>();
        let nonzero: Vec<(f64, f64)> = log_terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_finite())
            .map(|(i, &t)| ((i + 1) as f64, t))
            .collect();
        let top = &nonzero[nonzero.len() / 2..];
        let growth = if top.len() >= 3 {
            let rows: Vec<Vec<f64>> = top.iter().map(|&(n, _)| vec![1.0, n, n.ln()]).collect();
            let y: Vec<f64> = top.iter().map(|&(_, t)| t).collect();
            least_squares(&rows, &y).ok().map(|f| f.coef[1])
        } else {
            None
        };
        ZetaPartial {
            s,
            log_terms,
            log_z,
            log_log_z: log_sum_exp(&nonzero.iter().map(|&(_, t)| t).collect::<Vec<_>>()),
            growth,
            diverging: growth.map(|g| g > 0.0),
        }
    }

    /// Empirical abscissa: where the fitted per-`n` growth of the terms
    /// changes sign, searched in `[lo, hi]`.
    pub fn abscissa(&self, lo: f64, hi: f64) -> Result<f64> {
        bisect(
            |s| {
                self.partial(s)
                    .growth
                    .ok_or_else(|| Error::InsufficientData("too few nonzero zeta terms".into()))
            },
            lo,
            hi,
            1e-9,
            200,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZetaPartial {
    pub s: f64,
    /// `log((1/n) Σ_{𝒫ₙ} e^{−s rⁿ})` for `n = 1..=n_max`.
    pub log_terms: Vec<f64>,
    /// `log Z_N(s) = Σ_{n ≤ N} terms` (may overflow to `inf`).
    pub log_z: f64,
    /// `log log Z_N(s)`, finite whenever any term is.
    pub log_log_z: f64,
    /// Per-`n` exponential growth rate of the terms (fit `a + b n + c log n`).
    pub growth: Option<f64>,
    pub diverging: Option<bool>,
}

pub fn zeta_partial(
    skew: &SkewProduct,
    r: &RoofFunction,
    s: f64,
    n_max: usize,
    word_cap: u64,
) -> Result<ZetaPartial> {
    Ok(ZetaData::collect(skew, r, n_max, word_cap)?.partial(s))
}
