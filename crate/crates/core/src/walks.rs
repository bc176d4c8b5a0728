//! Random walks and cogrowth on finitely generated groups.
//!
//! Return probabilities come from convolving the step distribution on the
//! Cayley graph. A walk of length `2j` returns to `e` exactly when its first
//! half ends at some `g` and its second half leads from `g` back, so for a
//! symmetric step law `P^{2j}(e,e) = Σ_g P^j(e,g)²` and only the ball of
//! radius `j` is ever stored.

use crate::error::{Error, Result};
use crate::groups::{Element, Group};
use crate::numerics::{least_squares, CompensatedSum};
use rustc_hash::FxHashMap;
use serde::Serialize;

/// Default cap on the number of stored group elements per layer.
pub const DEFAULT_KEY_CAP: usize = 5_000_000;

/// A symmetric step distribution on a group.
#[derive(Clone, Debug)]
pub struct WalkSpec {
    group: Group,
    steps: Vec<Element>,
    probs: Vec<f64>,
}

impl WalkSpec {
    /// Validates `Σp = 1` (to 1e-12), exact symmetry `p(g) = p(g⁻¹)`, and that
    /// the support reaches every native generator within a small ball.
    pub fn new(group: Group, support: Vec<(Element, f64)>) -> Result<WalkSpec> {
        let mut steps: Vec<Element> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (g, p) in support {
            if !group.contains(&g) {
                return Err(Error::invalid("walk", "step is not an element of the group"));
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::invalid("walk", format!("step probability {p} must be positive")));
            }
            match steps.iter().position(|s| *s == g) {
                Some(i) => probs[i] += p,
                None => {
                    steps.push(g);
                    probs.push(p);
                }
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("walk", format!("probabilities sum to {total}, not 1")));
        }
        for (i, g) in steps.iter().enumerate() {
            let gi = group.inverse(g);
            let j = steps.iter().position(|s| *s == gi);
            if j.map_or(true, |j| probs[j] != probs[i]) {
                return Err(Error::invalid(
                    "walk",
                    format!("p({}) ≠ p of its inverse", group.format(g)),
                ));
            }
        }
        let walk = WalkSpec { group, steps, probs };
        walk.check_generates()?;
        Ok(walk)
    }

    /// Uniform measure on the symmetric generating set.
    pub fn simple(group: Group) -> WalkSpec {
        let steps = group.symmetric_generators();
        let p = 1.0 / steps.len() as f64;
        WalkSpec {
            probs: vec![p; steps.len()],
            group,
            steps,
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn support(&self) -> impl Iterator<Item = (&Element, f64)> {
        self.steps.iter().zip(self.probs.iter().copied())
    }

    fn is_uniform(&self) -> bool {
        self.probs.iter().all(|&p| p == self.probs[0])
    }

    /// Ball-growth probe: every native generator must appear within radius 8
    /// of the walk's support (or among the first 10⁵ elements reached).
    fn check_generates(&self) -> Result<()> {
        let targets = self.group.generators();
        let mut seen: FxHashMap<Element, ()> = FxHashMap::default();
        let mut frontier = vec![self.group.identity()];
        seen.insert(self.group.identity(), ());
        for _ in 0..8 {
            let mut next = Vec::new();
            for x in &frontier {
                for s in &self.steps {
                    let y = self.group.mul(x, s);
                    if seen.insert(y.clone(), ()).is_none() {
                        next.push(y);
                    }
                }
            }
            if targets.iter().all(|t| seen.contains_key(t)) || seen.len() > 100_000 {
                break;
            }
            frontier = next;
        }
        match targets.iter().find(|t| !seen.contains_key(t)) {
            Some(t) => Err(Error::invalid(
                "walk",
                format!(
                    "support does not appear to generate the group (missed {})",
                    self.group.format(t)
                ),
            )),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnSeries {
    /// Walk lengths `2, 4, …`.
    pub lengths: Vec<usize>,
    /// `P^{2j}(e,e)`.
    pub values: Vec<f64>,
    /// Closed-walk counts when steps are uniform and the counts fit in 128 bits.
    pub closed_walks: Option<Vec<u128>>,
    /// `P^{2j}(e,e)^{1/2j}`.
    pub roots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KestenEstimate {
    pub series: ReturnSeries,
    pub last_root: f64,
    /// Extrapolated spectral radius, capped at 1.
    pub lambda: f64,
    pub lambda_stderr: f64,
    /// Fit of `r_j = λ·exp(−β log j / j)` on the same points, for comparison.
    pub lambda_two_param: f64,
    /// Largest number of group elements held at once.
    pub max_keys: usize,
}

/// Mass of one layer indexed by group element.
struct Layer<T> {
    index: FxHashMap<Element, usize>,
    keys: Vec<Element>,
    mass: Vec<T>,
}

impl<T: Copy + Default> Layer<T> {
    fn new() -> Self {
        Layer {
            index: FxHashMap::default(),
            keys: Vec::new(),
            mass: Vec::new(),
        }
    }

    fn slot(&mut self, g: Element, cap: usize, radius: usize) -> Result<&mut T> {
        let next = self.keys.len();
        let i = match self.index.get(&g) {
            Some(&i) => i,
            None => {
                if next >= cap {
                    return Err(Error::Resource {
                        context: "random-walk layer".into(),
                        radius,
                        size: next,
                        cap,
                    });
                }
                self.index.insert(g.clone(), next);
                self.keys.push(g);
                self.mass.push(T::default());
                next
            }
        };
        Ok(&mut self.mass[i])
    }
}

/// Return probabilities `P^{2j}(e,e)` for `2j ≤ n_max`, with λ extrapolated by
/// fitting `log P^{2j} = 2j log λ − α log j + β + γ/j` on the top half of `j`.
pub fn kesten_estimate(walk: &WalkSpec, n_max: usize, key_cap: usize) -> Result<KestenEstimate> {
    if n_max < 2 {
        return Err(Error::invalid("n_max", "must be ≥ 2"));
    }
    let half = n_max / 2;
    let d = walk.steps.len() as f64;
    let exact = walk.is_uniform() && (2 * half) as f64 * d.log2() < 127.0;
    let group = &walk.group;
    let mut values = Vec::with_capacity(half);
    let mut closed = Vec::new();
    let mut max_keys = 1;
    if exact {
        let mut layer: Layer<u128> = Layer::new();
        *layer.slot(group.identity(), key_cap, 0)? = 1;
        for j in 1..=half {
            let mut next: Layer<u128> = Layer::new();
            for (g, &c) in layer.keys.iter().zip(&layer.mass) {
                for s in &walk.steps {
                    *next.slot(group.mul(g, s), key_cap, j)? += c;
                }
            }
            layer = next;
            max_keys = max_keys.max(layer.keys.len());
            let count: u128 = layer.mass.iter().map(|&c| c * c).sum();
            closed.push(count);
            values.push(count as f64 / d.powi(2 * j as i32));
        }
    } else {
        let mut layer: Layer<f64> = Layer::new();
        *layer.slot(group.identity(), key_cap, 0)? = 1.0;
        for j in 1..=half {
            let mut next: Layer<f64> = Layer::new();
            for (g, &m) in layer.keys.iter().zip(&layer.mass) {
                for (s, &p) in walk.steps.iter().zip(&walk.probs) {
                    *next.slot(group.mul(g, s), key_cap, j)? += m * p;
                }
            }
            layer = next;
            max_keys = max_keys.max(layer.keys.len());
            let sq: CompensatedSum = layer.mass.iter().map(|m| m * m).collect();
            values.push(sq.value());
        }
    }
    let lengths: Vec<usize> = (1..=half).map(|j| 2 * j).collect();
    let roots: Vec<f64> = values
        .iter()
        .zip(&lengths)
        .map(|(v, &l)| v.powf(1.0 / l as f64))
        .collect();
    let last_root = *roots.last().expect("n_max ≥ 2");
    let (lambda, lambda_stderr) = extrapolate_lambda(&values);
    let lambda_two_param = two_param_lambda(&roots);
    Ok(KestenEstimate {
        series: ReturnSeries {
            lengths,
            values,
            closed_walks: exact.then_some(closed),
            roots,
        },
        last_root,
        lambda: lambda.min(1.0),
        lambda_stderr,
        lambda_two_param: lambda_two_param.min(1.0),
        max_keys,
    })
}

fn top_half(len: usize) -> std::ops::Range<usize> {
    len / 2..len
}

/// `(λ, SE)`; falls back to the last root when there are too few points.
fn extrapolate_lambda(values: &[f64]) -> (f64, f64) {
    let idx = top_half(values.len());
    let j = |i: usize| (i + 1) as f64;
    let rows: Vec<Vec<f64>> = idx
        .clone()
        .map(|i| vec![2.0 * j(i), -j(i).ln(), 1.0, 1.0 / j(i)])
        .collect();
    let y: Vec<f64> = idx.clone().map(|i| values[i].ln()).collect();
    if rows.len() >= 5 {
        if let Ok(fit) = least_squares(&rows, &y) {
            let lambda = fit.coef[0].exp();
            return (lambda, lambda * fit.stderr[0]);
        }
    }
    let last = values.len();
    (values[last - 1].powf(1.0 / (2 * last) as f64), f64::NAN)
}

fn two_param_lambda(roots: &[f64]) -> f64 {
    let idx = top_half(roots.len());
    let rows: Vec<Vec<f64>> = idx
        .clone()
        .map(|i| {
            let j = (i + 1) as f64;
            vec![1.0, -j.ln() / j]
        })
        .collect();
    let y: Vec<f64> = idx.map(|i| roots[i].ln()).collect();
    match least_squares(&rows, &y) {
        Ok(fit) if rows.len() >= 3 => fit.coef[0].exp(),
        _ => *roots.last().expect("non-empty"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CogrowthEstimate {
    pub rank: usize,
    /// `c_n` for `n = 1..=n_max`.
    pub counts: Vec<u128>,
    /// `c_n^{1/n}` where `c_n > 0`.
    pub roots: Vec<Option<f64>>,
    /// Extrapolated `limsup c_n^{1/n}` (0 when the kernel is trivial).
    pub limsup: f64,
    /// `2k − 1`, attained iff the quotient is amenable.
    pub bound: f64,
}

/// Counts reduced words in `F_k` mapping to the identity of `quotient`,
/// where letter `i` maps to `quotient.generator(i)`.
pub fn cogrowth_estimate(quotient: &Group, n_max: usize, key_cap: usize) -> Result<CogrowthEstimate> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be ≥ 1"));
    }
    let k = quotient.rank();
    let images: Vec<Element> = (0..2 * k)
        .map(|c| {
            let g = quotient.generator(c / 2);
            if c % 2 == 1 {
                quotient.inverse(&g)
            } else {
                g
            }
        })
        .collect();
    let step = images.iter().map(|g| quotient.length(g)).max().unwrap_or(0);
    // one layer per last letter
    let mut layers: Vec<Layer<u128>> = (0..2 * k).map(|_| Layer::new()).collect();
    for (c, layer) in layers.iter_mut().enumerate() {
        *layer.slot(images[c].clone(), key_cap, 1)? = 1;
    }
    let count_identity = |layers: &[Layer<u128>]| -> u128 {
        layers
            .iter()
            .flat_map(|l| l.keys.iter().zip(&l.mass))
            .filter(|(g, _)| quotient.is_identity(g))
            .map(|(_, &c)| c)
            .sum()
    };
    let mut counts = vec![count_identity(&layers)];
    for n in 2..=n_max {
        let remaining = n_max - n;
        let mut next: Vec<Layer<u128>> = (0..2 * k).map(|_| Layer::new()).collect();
        for (last, layer) in layers.iter().enumerate() {
            for (g, &c) in layer.keys.iter().zip(&layer.mass) {
                for code in (0..2 * k).filter(|&code| code != last ^ 1) {
                    let h = quotient.mul(g, &images[code]);
                    // cannot return to the identity in the remaining steps
                    if quotient.length(&h) > remaining * step {
                        continue;
                    }
                    let slot = next[code].slot(h, key_cap, n)?;
                    *slot = slot.checked_add(c).ok_or_else(|| Error::Resource {
                        context: "cogrowth counts exceed 128 bits".into(),
                        radius: n,
                        size: 0,
                        cap: 0,
                    })?;
                }
            }
        }
        layers = next;
        counts.push(count_identity(&layers));
    }
    let roots: Vec<Option<f64>> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (c > 0).then(|| (c as f64).powf(1.0 / (i + 1) as f64)))
        .collect();
    let nonzero: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| ((i + 1) as f64, (c as f64).ln()))
        .collect();
    let limsup = if nonzero.is_empty() {
        0.0
    } else {
        let top = &nonzero[nonzero.len() / 2..];
        let rows: Vec<Vec<f64>> = top.iter().map(|&(n, _)| vec![n, 1.0, n.ln()]).collect();
        let y: Vec<f64> = top.iter().map(|&(_, l)| l).collect();
        match least_squares(&rows, &y) {
            Ok(fit) if top.len() >= 4 => fit.coef[0].exp(),
            _ => roots.iter().flatten().copied().fold(0.0, f64::max),
        }
    };
    Ok(CogrowthEstimate {
        rank: k,
        counts,
        roots,
        limsup,
        bound: (2 * k - 1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{GroupSpec, Relations};

    fn group(spec: GroupSpec) -> Group {
        Group::new(&spec).unwrap()
    }

    #[test]
    fn z_return_probabilities() {
        let w = WalkSpec::simple(group(GroupSpec::FreeAbelian { rank: 1 }));
        let k = kesten_estimate(&w, 4, DEFAULT_KEY_CAP).unwrap();
        assert_eq!(k.series.values[1], 0.375);
        assert_eq!(k.series.closed_walks, Some(vec![2, 6]));
    }

    #[test]
    fn free_return_probabilities() {
        let w = WalkSpec::simple(group(GroupSpec::Free { rank: 2 }));
        let k = kesten_estimate(&w, 4, DEFAULT_KEY_CAP).unwrap();
        assert_eq!(k.series.values, vec![0.25, 28.0 / 256.0]);
    }

    #[test]
    fn free_group_spectral_radius() {
        let w = WalkSpec::simple(group(GroupSpec::Free { rank: 2 }));
        let k = kesten_estimate(&w, 20, DEFAULT_KEY_CAP).unwrap();
        let truth = 3f64.sqrt() / 2.0;
        assert!((k.lambda - truth).abs() < 0.01, "{} {}", k.lambda, k.lambda_two_param);
        assert!(k.series.roots.windows(2).all(|p| p[0] <= p[1]));
        let z = WalkSpec::simple(group(GroupSpec::FreeAbelian { rank: 1 }));
        let k = kesten_estimate(&z, 400, DEFAULT_KEY_CAP).unwrap();
        assert!(k.last_root >= 0.99, "{}", k.last_root);
    }

    #[test]
    fn finite_group_walk_tends_to_one() {
        let w = WalkSpec::simple(group(GroupSpec::cyclic(3)));
        let k = kesten_estimate(&w, 50, DEFAULT_KEY_CAP).unwrap();
        assert!((k.lambda - 1.0).abs() < 1e-6, "{}", k.lambda);
        assert!(k.lambda <= 1.0);
    }

    #[test]
    fn non_uniform_walk_matches_closed_form() {
        let z = group(GroupSpec::FreeAbelian { rank: 1 });
        let e = |x: i32| Element::Abelian(smallvec::smallvec![x]);
        let w = WalkSpec::new(z, vec![(e(1), 0.375), (e(-1), 0.375), (e(2), 0.125), (e(-2), 0.125)])
            .unwrap();
        let k = kesten_estimate(&w, 2, DEFAULT_KEY_CAP).unwrap();
        assert!(k.series.closed_walks.is_none());
        let expected = 2.0 * 0.375f64.powi(2) + 2.0 * 0.125f64.powi(2);
        assert!((k.series.values[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_walks() {
        let z = group(GroupSpec::FreeAbelian { rank: 1 });
        let e = |x: i32| Element::Abelian(smallvec::smallvec![x]);
        assert!(WalkSpec::new(z.clone(), vec![(e(1), 0.6), (e(-1), 0.4)]).is_err());
        assert!(WalkSpec::new(z.clone(), vec![(e(1), 0.5), (e(-1), 0.4)]).is_err());
        assert!(WalkSpec::new(z, vec![(e(2), 0.5), (e(-2), 0.5)]).is_err());
    }

    #[test]
    fn resource_cap_reported() {
        let w = WalkSpec::simple(group(GroupSpec::Free { rank: 2 }));
        let err = kesten_estimate(&w, 20, 1000).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn cogrowth_examples() {
        let z2 = group(GroupSpec::QuotientOfFree {
            rank: 2,
            relations: Relations::Abelianization,
        });
        let c = cogrowth_estimate(&z2, 4, DEFAULT_KEY_CAP).unwrap();
        assert_eq!(c.counts, vec![0, 0, 0, 8]);
        let trivial = group(GroupSpec::QuotientOfFree {
            rank: 2,
            relations: Relations::KillGenerators {
                generators: vec![0, 1],
            },
        });
        let c = cogrowth_estimate(&trivial, 10, DEFAULT_KEY_CAP).unwrap();
        for (i, &cn) in c.counts.iter().enumerate() {
            assert_eq!(cn, 4 * 3u128.pow(i as u32));
        }
        assert!((c.limsup - 3.0).abs() < 1e-9);
        let f2 = group(GroupSpec::Free { rank: 2 });
        let c = cogrowth_estimate(&f2, 10, DEFAULT_KEY_CAP).unwrap();
        assert!(c.counts.iter().all(|&x| x == 0));
        assert_eq!(c.limsup, 0.0);
    }
}
