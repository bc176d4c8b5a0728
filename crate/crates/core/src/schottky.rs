//! Schottky groups of Möbius maps of the upper half-plane.
//!
//! A Schottky group is coded by the cancellation-free shift on the letters
//! `g₁, g₁⁻¹, …, g_k, g_k⁻¹` (letter `2i` is `gᵢ`, letter `2i+1` its inverse).
//! Critical exponents are estimated twice: from shells of the orbital
//! Poincaré series around the base point `i`, and as the pressure root of a
//! locally constant roof on a refined coding.

use crate::error::{Error, Result};
use crate::groups::{Element, Group, GroupSpec, Relations};
use crate::numerics::{bisect, least_squares, log_sum_exp};
use crate::sft::{EdgePotential, Involution, Sft};
use crate::skew::{build_skew, Cocycle, SkewProduct};
use crate::zeta::RoofFunction;
use rayon::prelude::*;
use serde::Serialize;

const DET_TOL: f64 = 1e-12;
const RENORMALIZE_EVERY: usize = 32;
/// Default cap on group elements visited by the Poincaré enumeration.
pub const DEFAULT_WORD_CAP: usize = 500_000_000;
/// Default cap on the refined alphabet of [`roof_cylinder`].
pub const DEFAULT_BLOCK_CAP: usize = 8192;

/// `z ↦ (az + b)/(cz + d)` with `ad − bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MoebiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusMap {
    /// Scales the matrix to determinant 1. Orientation-reversing or singular
    /// matrices are rejected.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::invalid(
                "matrix",
                format!("[[{a}, {b}], [{c}, {d}]] has determinant {det}, expected > 0"),
            ));
        }
        let s = det.sqrt();
        let m = MoebiusMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        };
        debug_assert!((m.det() - 1.0).abs() < DET_TOL);
        Ok(m)
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn identity() -> Self {
        MoebiusMap {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn translation(t: f64) -> Self {
        MoebiusMap {
            a: 1.0,
            b: t,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0
    }

    pub fn inverse(&self) -> Self {
        MoebiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &MoebiusMap) -> Self {
        MoebiusMap {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn conjugate_by(&self, t: &MoebiusMap) -> Self {
        t.compose(self).compose(&t.inverse())
    }

    /// Rescales to determinant 1 after accumulated rounding.
    pub fn renormalized(&self) -> Self {
        let s = self.det().abs().sqrt();
        MoebiusMap {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        }
    }

    /// Action on the boundary; `None` stands for `∞`.
    pub fn apply(&self, x: Option<f64>) -> Option<f64> {
        match x {
            None => (self.c != 0.0).then(|| self.a / self.c),
            Some(x) => {
                let den = self.c * x + self.d;
                (den != 0.0).then(|| (self.a * x + self.b) / den)
            }
        }
    }

    /// `|g′(x)| = (cx + d)⁻²` at a finite boundary point.
    pub fn derivative_abs(&self, x: f64) -> f64 {
        let den = self.c * x + self.d;
        1.0 / (den * den)
    }

    /// Attracting and repelling fixed points of a hyperbolic map.
    pub fn fixed_points(&self) -> Result<(Option<f64>, Option<f64>)> {
        if !self.is_hyperbolic() {
            return Err(Error::invalid(
                "matrix",
                format!("trace {} is not hyperbolic", self.trace()),
            ));
        }
        let MoebiusMap { a, b, c, d } = *self;
        if c == 0.0 {
            let finite = b / (d - a);
            // z ↦ (a/d) z + b/d expands iff |a| > |d|
            return Ok(if a.abs() > d.abs() {
                (None, Some(finite))
            } else {
                (Some(finite), None)
            });
        }
        let disc = ((d - a) * (d - a) + 4.0 * b * c).sqrt();
        let z1 = (a - d + disc) / (2.0 * c);
        let z2 = (a - d - disc) / (2.0 * c);
        Ok(if self.derivative_abs(z1) < 1.0 {
            (Some(z1), Some(z2))
        } else {
            (Some(z2), Some(z1))
        })
    }
}

/// Hyperbolic distance from `i` to `g(i)`: `cosh d = (a² + b² + c² + d²)/2`.
pub fn displacement(g: &MoebiusMap) -> f64 {
    let x = 0.5 * (g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d);
    x.max(1.0).acosh()
}

/// `2 arccosh(|tr|/2)`; zero for parabolic maps.
pub fn translation_length(g: &MoebiusMap) -> Result<f64> {
    let t = g.trace().abs();
    if t < 2.0 - 1e-12 {
        return Err(Error::invalid(
            "matrix",
            format!("elliptic element (|trace| = {t} < 2) has no translation length"),
        ));
    }
    Ok(2.0 * (0.5 * t).max(1.0).acosh())
}

/// A closed disk in the upper half-plane bounded by an isometric circle,
/// recorded by its trace on the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disk {
    pub center: f64,
    pub radius: f64,
}

impl Disk {
    fn gap(&self, o: &Disk) -> f64 {
        (self.center - o.center).abs() - self.radius - o.radius
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SchottkyGroup {
    generators: Vec<MoebiusMap>,
    /// Isometric disks, indexed by letter.
    disks: Vec<Disk>,
    min_gap: f64,
    #[serde(skip)]
    coding: Sft,
}

/// Validates generators with a strictly positive gap between disks.
pub fn build_schottky(maps: &[MoebiusMap]) -> Result<SchottkyGroup> {
    build_schottky_with_margin(maps, 0.0)
}

pub fn build_schottky_with_margin(maps: &[MoebiusMap], margin: f64) -> Result<SchottkyGroup> {
    let k = maps.len();
    if k < 2 {
        return Err(Error::invalid("generators", format!("need at least 2, got {k}")));
    }
    if k > 13 {
        return Err(Error::invalid("generators", "at most 13 generators are supported"));
    }
    let mut disks = Vec::with_capacity(2 * k);
    for (i, g) in maps.iter().enumerate() {
        if !g.is_hyperbolic() {
            return Err(Error::invalid(
                format!("generators[{i}]"),
                format!("|trace| = {} ≤ 2, not hyperbolic", g.trace().abs()),
            ));
        }
        if g.c.abs() < 1e-12 {
            return Err(Error::invalid(
                format!("generators[{i}]"),
                "c = 0: axis passes through ∞; conjugate the generator into general position",
            ));
        }
        let radius = 1.0 / g.c.abs();
        disks.push(Disk {
            center: -g.d / g.c,
            radius,
        });
        disks.push(Disk {
            center: g.a / g.c,
            radius,
        });
    }
    let names = letter_names(k);
    let mut min_gap = f64::INFINITY;
    for i in 0..2 * k {
        for j in i + 1..2 * k {
            let gap = disks[i].gap(&disks[j]);
            if gap <= margin {
                return Err(Error::invalid(
                    "generators",
                    format!(
                        "isometric disks of {} and {} overlap: gap {gap:.6} ≤ margin {margin}",
                        names[i], names[j]
                    ),
                ));
            }
            min_gap = min_gap.min(gap);
        }
    }
    let matrix: Vec<Vec<u8>> = (0..2 * k)
        .map(|i| (0..2 * k).map(|j| u8::from(j != (i ^ 1))).collect())
        .collect();
    let coding = Sft::new(names, &matrix, false)?;
    Ok(SchottkyGroup {
        generators: maps.to_vec(),
        disks,
        min_gap,
        coding,
    })
}

fn letter_names(k: usize) -> Vec<String> {
    (0..k)
        .flat_map(|i| {
            let c = (b'a' + i as u8) as char;
            [c.to_string(), c.to_ascii_uppercase().to_string()]
        })
        .collect()
}

impl SchottkyGroup {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// The cancellation-free coding shift.
    pub fn coding(&self) -> &Sft {
        &self.coding
    }

    /// `κ(letter) = letter⁻¹`.
    pub fn involution(&self) -> Involution {
        Involution::new((0..2 * self.rank()).map(|i| i ^ 1).collect())
            .expect("xor 1 is an involution")
    }

    pub fn letter_map(&self, letter: usize) -> MoebiusMap {
        let g = self.generators[letter / 2];
        if letter % 2 == 0 {
            g
        } else {
            g.inverse()
        }
    }

    /// Product of the letter maps, left to right.
    pub fn word_map(&self, word: &[usize]) -> MoebiusMap {
        let mut m = MoebiusMap::identity();
        for (n, &x) in word.iter().enumerate() {
            m = m.compose(&self.letter_map(x));
            if (n + 1) % RENORMALIZE_EVERY == 0 {
                m = m.renormalized();
            }
        }
        m
    }

    /// Letters from names such as `"abA"`.
    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        let word = text
            .chars()
            .map(|ch| {
                self.coding.index_of(&ch.to_string()).ok_or_else(|| {
                    Error::invalid("word", format!("unknown letter {ch:?} in {text:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if word.windows(2).any(|w| w[1] == w[0] ^ 1) {
            return Err(Error::invalid("word", format!("{text:?} is not reduced")));
        }
        Ok(word)
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        word.iter().map(|&x| self.coding.symbol(x)).collect()
    }
}

/// A homomorphism from the Schottky group onto `G`, given on generators.
/// Its kernel is the subgroup `Γ₀`.
#[derive(Clone, Debug)]
pub struct QuotientSpec {
    target: Group,
    images: Vec<Element>,
}

impl QuotientSpec {
    pub fn new(target: Group, images: Vec<Element>) -> Result<Self> {
        if let Some(i) = images.iter().position(|g| !target.contains(g)) {
            return Err(Error::invalid(
                format!("quotient.images[{i}]"),
                "not an element of the target group",
            ));
        }
        Ok(QuotientSpec { target, images })
    }

    /// `F_rank / N` with images the generator classes.
    pub fn from_relations(rank: usize, relations: &Relations) -> Result<Self> {
        let target = Group::new(&GroupSpec::QuotientOfFree {
            rank,
            relations: relations.clone(),
        })?;
        let images = (0..rank).map(|i| target.generator(i)).collect();
        Self::new(target, images)
    }

    /// Every generator to the identity, so the kernel is the whole group.
    pub fn trivial(rank: usize) -> Result<Self> {
        Self::from_relations(
            rank,
            &Relations::KillGenerators {
                generators: (0..rank).collect(),
            },
        )
    }

    pub fn abelianization(rank: usize) -> Result<Self> {
        Self::from_relations(rank, &Relations::Abelianization)
    }

    pub fn kill_generators(rank: usize, generators: &[usize]) -> Result<Self> {
        Self::from_relations(
            rank,
            &Relations::KillGenerators {
                generators: generators.to_vec(),
            },
        )
    }

    pub fn target(&self) -> &Group {
        &self.target
    }

    pub fn images(&self) -> &[Element] {
        &self.images
    }

    fn letter_image(&self, letter: usize) -> Element {
        let g = &self.images[letter / 2];
        if letter % 2 == 0 {
            g.clone()
        } else {
            self.target.inverse(g)
        }
    }

    fn check_rank(&self, schottky: &SchottkyGroup) -> Result<()> {
        if self.images.len() != schottky.rank() {
            return Err(Error::invalid(
                "quotient",
                format!(
                    "defined on {} generators, the group has {}",
                    self.images.len(),
                    schottky.rank()
                ),
            ));
        }
        Ok(())
    }
}

/// Letter cocycle `ψ(letter) = image of its generator` on the coding shift.
pub fn kernel_cocycle(schottky: &SchottkyGroup, quotient: &QuotientSpec) -> Result<Cocycle> {
    quotient.check_rank(schottky)?;
    Ok(Cocycle::letters(
        (0..2 * schottky.rank()).map(|x| quotient.letter_image(x)).collect(),
    ))
}

/// The skew product of the coding shift by `G` whose fibre over `1_G` codes `Γ₀`.
pub fn kernel_skew(schottky: &SchottkyGroup, quotient: &QuotientSpec) -> Result<SkewProduct> {
    build_skew(
        schottky.coding().clone(),
        quotient.target().clone(),
        kernel_cocycle(schottky, quotient)?,
        Some(schottky.involution()),
    )
}

/// Displacement histograms of all reduced words of length `≤ R_max`, one per length.
#[derive(Clone, Debug, PartialEq)]
pub struct PoincareData {
    r_max: usize,
    shells: Vec<Shell>,
    /// Displacements of kernel elements, when a quotient was given.
    kernel_shells: Option<Vec<Shell>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincarePartial {
    pub s: f64,
    /// `log b_R(s)` for `R = 0..=R_max`; `-inf` for empty shells.
    pub log_shells: Vec<f64>,
    pub log_sum: f64,
    pub shell_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareDelta {
    pub delta: f64,
    /// Spread between the `log R` model and the purely linear one.
    pub uncertainty: f64,
    pub delta_linear: f64,
    pub r_max: usize,
    pub fit_points: usize,
    pub kernel: bool,
}

impl PoincareData {
    pub fn collect(
        schottky: &SchottkyGroup,
        r_max: usize,
        restrict: Option<&QuotientSpec>,
        word_cap: usize,
    ) -> Result<Self> {
        if let Some(q) = restrict {
            q.check_rank(schottky)?;
        }
        let letters = 2 * schottky.rank();
        let total: f64 = (1..=r_max)
            .map(|r| letters as f64 * ((letters - 1) as f64).powi(r as i32 - 1))
            .sum::<f64>()
            + 1.0;
        if total > word_cap as f64 {
            let last = letters as f64 * ((letters - 1) as f64).powi(r_max as i32 - 1);
            return Err(Error::Resource {
                context: "Poincaré shells".into(),
                radius: r_max,
                size: last.min(usize::MAX as f64) as usize,
                cap: word_cap,
            });
        }
        let shards: Vec<(Vec<Shell>, Vec<Shell>)> = (0..letters)
            .into_par_iter()
            .map(|first| {
                let mut shells = vec![Shell::default(); r_max + 1];
                let mut kernel = vec![Shell::default(); r_max + 1];
                if r_max >= 1 {
                    let image = restrict.map(|q| q.letter_image(first));
                    walk_words(
                        schottky,
                        restrict,
                        schottky.letter_map(first),
                        first,
                        1,
                        r_max,
                        image,
                        &mut shells,
                        &mut kernel,
                    );
                }
                (shells, kernel)
            })
            .collect();
        let mut shells = vec![Shell::default(); r_max + 1];
        let mut kernel = vec![Shell::default(); r_max + 1];
        shells[0].push(0.0);
        kernel[0].push(0.0);
        for (s, k) in shards {
            for (r, v) in s.into_iter().enumerate() {
                shells[r].merge(&v);
            }
            for (r, v) in k.into_iter().enumerate() {
                kernel[r].merge(&v);
            }
        }
        Ok(PoincareData {
            r_max,
            shells,
            kernel_shells: restrict.map(|_| kernel),
        })
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    pub fn has_kernel(&self) -> bool {
        self.kernel_shells.is_some()
    }

    fn select(&self, kernel: bool) -> &[Shell] {
        match (&self.kernel_shells, kernel) {
            (Some(k), true) => k,
            _ => &self.shells,
        }
    }

    pub fn shell_sizes(&self, kernel: bool) -> Vec<usize> {
        self.select(kernel).iter().map(Shell::len).collect()
    }

    pub fn partial(&self, s: f64, kernel: bool) -> PoincarePartial {
        let shells = self.select(kernel);
        let log_shells: Vec<f64> = shells.iter().map(|sh| sh.log_sum(s)).collect();
        PoincarePartial {
            s,
            log_sum: log_sum_exp(&log_shells),
            log_shells,
            shell_sizes: shells.iter().map(Shell::len).collect(),
        }
    }

    /// Fitted growth rate of `log b_R(s)` over the top half of shells.
    /// `with_log` adds a `log R` column to the linear model.
    pub fn shell_slope(&self, s: f64, kernel: bool, with_log: bool) -> Result<f64> {
        let shells = self.select(kernel);
        let (rows, y) = self.fit_rows(shells, s, with_log);
        let need = if with_log { 4 } else { 2 };
        if rows.len() < need {
            return Err(Error::InsufficientData(format!(
                "{} non-empty shells in the top half, need {need}",
                rows.len()
            )));
        }
        Ok(least_squares(&rows, &y)?.coef[1])
    }

    /// Rows for the top half of shells, widened downwards (never below
    /// `R = 2`) until four non-empty shells are included.
    fn fit_rows(&self, shells: &[Shell], s: f64, with_log: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
        let nonempty: Vec<usize> = (1..shells.len()).filter(|&r| !shells[r].is_empty()).collect();
        let mut lo = (self.r_max / 2).max(1);
        while lo > 2 && nonempty.iter().filter(|&&r| r >= lo).count() < 4 {
            lo -= 1;
        }
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for &r in nonempty.iter().filter(|&&r| r >= lo) {
            let rf = r as f64;
            rows.push(if with_log {
                vec![1.0, rf, rf.ln()]
            } else {
                vec![1.0, rf]
            });
            y.push(shells[r].log_sum(s));
        }
        (rows, y)
    }

    /// Bisection for the zero of the fitted shell growth rate.
    pub fn delta(&self, kernel: bool) -> Result<PoincareDelta> {
        let kernel = kernel && self.has_kernel();
        let root = |with_log: bool| {
            bisect(
                |s| self.shell_slope(s, kernel, with_log),
                0.0,
                4.0,
                1e-10,
                200,
            )
        };
        let delta = root(true)?;
        let delta_linear = root(false)?;
        let (rows, _) = self.fit_rows(self.select(kernel), 0.0, true);
        Ok(PoincareDelta {
            delta,
            uncertainty: (delta - delta_linear).abs().max(1e-9),
            delta_linear,
            r_max: self.r_max,
            fit_points: rows.len(),
            kernel,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn walk_words(
    schottky: &SchottkyGroup,
    restrict: Option<&QuotientSpec>,
    m: MoebiusMap,
    last: usize,
    depth: usize,
    r_max: usize,
    image: Option<Element>,
    shells: &mut [Shell],
    kernel: &mut [Shell],
) {
    let d = displacement(&m);
    shells[depth].push(d);
    if let (Some(q), Some(g)) = (restrict, &image) {
        if q.target.is_identity(g) {
            kernel[depth].push(d);
        }
    }
    if depth == r_max {
        return;
    }
    for x in 0..2 * schottky.rank() {
        if x == last ^ 1 {
            continue;
        }
        let mut next = m.compose(&schottky.letter_map(x));
        if (depth + 1) % RENORMALIZE_EVERY == 0 {
            next = next.renormalized();
        }
        let img = match (restrict, &image) {
            (Some(q), Some(g)) => Some(q.target.mul(g, &q.letter_image(x))),
            _ => None,
        };
        walk_words(schottky, restrict, next, x, depth + 1, r_max, img, shells, kernel);
    }
}

/// Histogram of displacements at resolution [`BIN_WIDTH`]. Each bin keeps
/// its count and the sum of its displacements; terms are evaluated at the
/// bin mean, which is exact for single-valued bins and otherwise off by a
/// relative error below `s · BIN_WIDTH`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Shell {
    offset: i64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    total: usize,
}

/// Bin width of [`Shell`] histograms.
pub const BIN_WIDTH: f64 = 1e-4;

impl Shell {
    fn push(&mut self, d: f64) {
        let bin = (d / BIN_WIDTH).floor() as i64;
        self.add(bin, 1, d);
    }

    fn add(&mut self, bin: i64, count: u64, sum: f64) {
        if self.counts.is_empty() {
            self.offset = bin;
        }
        if bin < self.offset {
            let grow = (self.offset - bin) as usize;
            self.counts.splice(0..0, std::iter::repeat_n(0, grow));
            self.sums.splice(0..0, std::iter::repeat_n(0.0, grow));
            self.offset = bin;
        }
        let idx = (bin - self.offset) as usize;
        if idx >= self.counts.len() {
            self.counts.resize(idx + 1, 0);
            self.sums.resize(idx + 1, 0.0);
        }
        self.counts[idx] += count;
        self.sums[idx] += sum;
        self.total += count as usize;
    }

    fn merge(&mut self, other: &Shell) {
        for (i, &c) in other.counts.iter().enumerate() {
            if c > 0 {
                self.add(other.offset + i as i64, c, other.sums[i]);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// `log Σ e^{−s d}`.
    pub fn log_sum(&self, s: f64) -> f64 {
        if self.total == 0 {
            return f64::NEG_INFINITY;
        }
        let centre = |i: usize| self.sums[i] / self.counts[i] as f64;
        let first = self.counts.iter().position(|&c| c > 0).expect("non-empty");
        let d0 = centre(first);
        let sum: f64 = self
            .counts
            .iter()
            .enumerate()
            .skip(first)
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| c as f64 * (-s * (centre(i) - d0)).exp())
            .sum();
        sum.ln() - s * d0
    }
}

/// Partial Poincaré series `Σ_{|g| ≤ R} e^{−s d(i, g i)}`, restricted to the
/// kernel of `restrict` when given.
pub fn poincare_partial(
    schottky: &SchottkyGroup,
    s: f64,
    r: usize,
    restrict: Option<&QuotientSpec>,
) -> Result<PoincarePartial> {
    let data = PoincareData::collect(schottky, r, restrict, DEFAULT_WORD_CAP)?;
    Ok(data.partial(s, restrict.is_some()))
}

/// Critical exponent of the group, or of the kernel of `restrict`.
pub fn delta_poincare(
    schottky: &SchottkyGroup,
    r_max: usize,
    restrict: Option<&QuotientSpec>,
) -> Result<PoincareDelta> {
    if r_max < 4 {
        return Err(Error::invalid("r_max", format!("{r_max} < 4")));
    }
    let data = PoincareData::collect(schottky, r_max, restrict, DEFAULT_WORD_CAP)?;
    data.delta(restrict.is_some())
}

/// `log |(g_{x₀}⁻¹)′(ξ)|`, with `ξ` the limit point approximated by the
/// block `u = x₀ … x_m`: the attracting fixed point of `g_u` when `u` is
/// cyclically reduced, otherwise `g_u` applied to the attracting fixed point
/// of its last letter.
pub fn cylinder_roof_value(schottky: &SchottkyGroup, block: &[usize]) -> Result<f64> {
    let (&first, &last) = match (block.first(), block.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::invalid("block", "empty block")),
    };
    let gu = schottky.word_map(block);
    let xi = if block.len() == 1 || last != first ^ 1 {
        gu.fixed_points()?.0
    } else {
        gu.apply(schottky.letter_map(last).fixed_points()?.0)
    };
    let g = schottky.letter_map(first);
    let value = match xi {
        Some(x) => g.inverse().derivative_abs(x).ln(),
        None => f64::NEG_INFINITY,
    };
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::invalid(
            "roof",
            format!(
                "non-positive roof {value} on block {}; increase the disk margin or the depth",
                schottky.format_word(block)
            ),
        ));
    }
    Ok(value)
}

/// The depth-`m` refined coding: symbols are reduced `m`-blocks, `w → w′`
/// when `w′` continues `w` by one letter.
#[derive(Clone, Debug)]
pub struct RoofCylinder {
    pub depth: usize,
    pub blocks: Vec<Vec<usize>>,
    pub sft: Sft,
    pub roof: RoofFunction,
}

pub fn roof_cylinder(schottky: &SchottkyGroup, depth: usize) -> Result<RoofCylinder> {
    roof_cylinder_capped(schottky, depth, DEFAULT_BLOCK_CAP)
}

pub fn roof_cylinder_capped(
    schottky: &SchottkyGroup,
    depth: usize,
    block_cap: usize,
) -> Result<RoofCylinder> {
    if depth == 0 {
        return Err(Error::invalid("depth", "must be ≥ 1"));
    }
    let letters = 2 * schottky.rank();
    let count = letters as f64 * ((letters - 1) as f64).powi(depth as i32 - 1);
    if count > block_cap as f64 {
        return Err(Error::Resource {
            context: "refined alphabet".into(),
            radius: depth,
            size: count.min(usize::MAX as f64) as usize,
            cap: block_cap,
        });
    }
    let mut blocks: Vec<Vec<usize>> = (0..letters).map(|x| vec![x]).collect();
    for _ in 1..depth {
        blocks = blocks
            .into_iter()
            .flat_map(|b| {
                let last = *b.last().expect("non-empty");
                (0..letters).filter(move |&x| x != last ^ 1).map(move |x| {
                    let mut nb = b.clone();
                    nb.push(x);
                    nb
                })
            })
            .collect();
    }
    let index: rustc_hash::FxHashMap<&[usize], usize> =
        blocks.iter().enumerate().map(|(i, b)| (b.as_slice(), i)).collect();
    let n = blocks.len();
    let mut matrix = vec![vec![0u8; n]; n];
    let mut edges = Vec::with_capacity(n * (letters - 1));
    for (i, b) in blocks.iter().enumerate() {
        let last = *b.last().expect("non-empty");
        for x in (0..letters).filter(|&x| x != last ^ 1) {
            let mut next = b[1..].to_vec();
            next.push(x);
            let j = index[next.as_slice()];
            matrix[i][j] = 1;
            edges.push((i, j, x));
        }
    }
    let names = blocks.iter().map(|b| schottky.format_word(b)).collect();
    let sft = Sft::new(names, &matrix, false)?;
    let mut u = Vec::with_capacity(depth + 1);
    let mut table = Vec::with_capacity(edges.len());
    for &(i, j, x) in &edges {
        u.clear();
        u.extend_from_slice(&blocks[i]);
        u.push(x);
        table.push(((i, j), cylinder_roof_value(schottky, &u)?));
    }
    let table: rustc_hash::FxHashMap<(usize, usize), f64> = table.into_iter().collect();
    let values = EdgePotential::from_fn(&sft, |i, j| table.get(&(i, j)).copied().unwrap_or(0.0));
    let roof = RoofFunction::new(&sft, values)?;
    Ok(RoofCylinder {
        depth,
        blocks,
        sft,
        roof,
    })
}

impl RoofCylinder {
    /// `κ(w) = w⁻¹` read backwards, which reverses refined edges.
    pub fn involution(&self, schottky: &SchottkyGroup) -> Involution {
        let names: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let inv: Vec<usize> = b.iter().rev().map(|&x| x ^ 1).collect();
                schottky.format_word(&inv)
            })
            .collect();
        Involution::new(
            names
                .iter()
                .map(|n| self.sft.index_of(n).expect("inverse block is reduced"))
                .collect(),
        )
        .expect("block inversion is an involution")
    }

    /// The kernel cocycle on the refined coding, read off the middle letter
    /// of each block (letter mode, odd depth) or of each edge (even depth).
    /// Either choice commutes with the involution, and along a cycle the
    /// holonomy is a cyclic rotation of the letter product.
    pub fn cocycle(&self, quotient: &QuotientSpec) -> Cocycle {
        let m = self.depth;
        if m % 2 == 1 {
            Cocycle::letters(
                self.blocks
                    .iter()
                    .map(|b| quotient.letter_image(b[m / 2]))
                    .collect(),
            )
        } else {
            let k = self.blocks.len();
            let entries = self.sft.edges().map(|(i, j)| {
                ((i, j), quotient.letter_image(self.blocks[i][m / 2]))
            });
            Cocycle::edges(k, entries.collect::<Vec<_>>())
        }
    }

    /// The refined skew product coding `Γ₀` with this roof.
    pub fn kernel_skew(&self, schottky: &SchottkyGroup, quotient: &QuotientSpec) -> Result<SkewProduct> {
        quotient.check_rank(schottky)?;
        build_skew(
            self.sft.clone(),
            quotient.target().clone(),
            self.cocycle(quotient),
            Some(self.involution(schottky)),
        )
    }

    /// Roof summed around the refined cycle of the periodic word `w^∞`.
    pub fn cycle_roof(&self, word: &[usize]) -> Result<f64> {
        let n = word.len();
        let mut idx = Vec::with_capacity(n);
        for i in 0..n {
            let block: Vec<usize> = (0..self.depth).map(|t| word[(i + t) % n]).collect();
            idx.push(
                self.blocks
                    .iter()
                    .position(|x| *x == block)
                    .ok_or_else(|| Error::invalid("word", "not cyclically reduced"))?,
            );
        }
        Ok((0..n).map(|i| self.roof.get(idx[i], idx[(i + 1) % n])).sum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoofConvergence {
    pub word: String,
    pub translation_length: f64,
    pub depths: Vec<usize>,
    pub errors: Vec<f64>,
    /// `ρ` in `error_m ≈ C ρ^m`, fitted over depths with non-negligible error.
    pub rate: Option<f64>,
}

/// Cycle sums of the depth-`m` roof along `w^∞` against the translation
/// length of `g_w`, for `m = 1..=max_depth`. Roof values are evaluated on the
/// needed blocks only, so large depths are cheap.
pub fn roof_convergence(
    schottky: &SchottkyGroup,
    word: &[usize],
    max_depth: usize,
) -> Result<RoofConvergence> {
    let n = word.len();
    if n == 0 || word[0] == word[n - 1] ^ 1 || word.windows(2).any(|w| w[1] == w[0] ^ 1) {
        return Err(Error::invalid("word", "must be non-empty and cyclically reduced"));
    }
    let ell = translation_length(&schottky.word_map(word))?;
    let mut depths = Vec::new();
    let mut errors = Vec::new();
    for m in 1..=max_depth {
        let mut sum = 0.0;
        for i in 0..n {
            let u: Vec<usize> = (0..=m).map(|t| word[(i + t) % n]).collect();
            sum += cylinder_roof_value(schottky, &u)?;
        }
        depths.push(m);
        errors.push((sum - ell).abs());
    }
    let floor = 1e-12 * ell.max(1.0);
    let (rows, y): (Vec<Vec<f64>>, Vec<f64>) = depths
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > floor)
        .map(|(&m, &e)| (vec![1.0, m as f64], e.ln()))
        .unzip();
    let rate = if rows.len() >= 3 {
        Some(least_squares(&rows, &y)?.coef[1].exp())
    } else {
        None
    };
    Ok(RoofConvergence {
        word: schottky.format_word(word),
        translation_length: ell,
        depths,
        errors,
        rate,
    })
}

/// `a = [[√2, 1], [1, √2]]` and `T a T⁻¹` for each horizontal shift `T`.
pub fn standard_example(shifts: &[f64]) -> Result<SchottkyGroup> {
    let s2 = std::f64::consts::SQRT_2;
    let a = MoebiusMap::new(s2, 1.0, 1.0, s2)?;
    let mut maps = vec![a];
    maps.extend(shifts.iter().map(|&t| a.conjugate_by(&MoebiusMap::translation(t))));
    build_schottky(&maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeta::delta_root;

    fn two_gen() -> SchottkyGroup {
        standard_example(&[6.0]).unwrap()
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(displacement(&MoebiusMap::identity()), 0.0);
        let d = MoebiusMap::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert!((displacement(&d) - 4f64.ln()).abs() < 1e-12);
        // i to i + 1 in the upper half-plane: cosh d = 1 + |Δz|²/(2 Im Im) = 3/2
        let p = MoebiusMap::translation(1.0);
        assert!((displacement(&p) - 1.5f64.acosh()).abs() < 1e-12);
        assert!((displacement(&p) - 0.962424).abs() < 1e-6);
    }

    #[test]
    fn translation_length_examples() {
        let d = MoebiusMap::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert!((translation_length(&d).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((translation_length(&d).unwrap() - displacement(&d)).abs() < 1e-12);
        assert_eq!(translation_length(&MoebiusMap::translation(3.0)).unwrap(), 0.0);
        let rot = MoebiusMap::new(0.0, -1.0, 1.0, 0.0).unwrap();
        assert!(translation_length(&rot).is_err());
    }

    #[test]
    fn normalizes_determinant() {
        let m = MoebiusMap::new(2.0, 1.0, 1.0, 3.0).unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12);
        assert!(MoebiusMap::new(1.0, 2.0, 3.0, 4.0).is_err());
    }

    #[test]
    fn fixed_points_are_fixed() {
        let g = two_gen().word_map(&[0, 2, 2, 1]);
        let (att, rep) = g.fixed_points().unwrap();
        for p in [att, rep] {
            let x = p.unwrap();
            assert!((g.apply(Some(x)).unwrap() - x).abs() < 1e-9 * x.abs().max(1.0));
        }
        assert!(g.derivative_abs(att.unwrap()) < 1.0);
    }

    #[test]
    fn builds_standard_example() {
        let s = two_gen();
        assert_eq!(s.rank(), 2);
        // closest pair: the two disks of `a`, at ±√2 with radius 1
        assert!((s.min_gap() - (2.0 * std::f64::consts::SQRT_2 - 2.0)).abs() < 1e-12);
        let c = s.coding();
        assert_eq!(c.alphabet(), &["a", "A", "b", "B"]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.allowed(i, j), j != i ^ 1);
            }
        }
        let d = s.disks()[0];
        assert!((d.center + std::f64::consts::SQRT_2).abs() < 1e-12 && (d.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_generators() {
        let s2 = std::f64::consts::SQRT_2;
        let a = MoebiusMap::new(s2, 1.0, 1.0, s2).unwrap();
        let close = a.conjugate_by(&MoebiusMap::translation(4.0));
        let err = build_schottky(&[a, close]).unwrap_err().to_string();
        assert!(err.contains("A and b overlap"), "{err}");
        assert!(build_schottky(&[a, a.inverse()]).is_err());
        let para = MoebiusMap::translation(1.0);
        let err = build_schottky(&[a, para]).unwrap_err().to_string();
        assert!(err.contains("generators[1]") && err.contains("not hyperbolic"), "{err}");
        let diag = MoebiusMap::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert!(build_schottky(&[a, diag]).unwrap_err().to_string().contains("c = 0"));
        assert!(build_schottky(&[a]).is_err());
        let far = a.conjugate_by(&MoebiusMap::translation(6.0));
        assert!(build_schottky_with_margin(&[a, far], 2.0).is_err());
    }

    #[test]
    fn poincare_basics() {
        let s = two_gen();
        let p0 = poincare_partial(&s, 1.0, 0, None).unwrap();
        assert_eq!(p0.log_sum, 0.0);
        let full = poincare_partial(&s, 0.7, 6, None).unwrap();
        let triv = poincare_partial(&s, 0.7, 6, Some(&QuotientSpec::trivial(2).unwrap())).unwrap();
        assert_eq!(full, triv);
        assert_eq!(full.shell_sizes, vec![1, 4, 12, 36, 108, 324, 972]);
        let big = poincare_partial(&s, 5.0, 8, None).unwrap();
        let diffs: Vec<f64> = big.log_shells.windows(2).skip(1).map(|w| w[1] - w[0]).collect();
        assert!(diffs.iter().all(|&d| d < -1.0), "{diffs:?}");
    }

    #[test]
    fn restricted_shells_are_dominated() {
        let s = two_gen();
        let q = QuotientSpec::abelianization(2).unwrap();
        let data = PoincareData::collect(&s, 8, Some(&q), DEFAULT_WORD_CAP).unwrap();
        let full = data.partial(0.4, false);
        let ker = data.partial(0.4, true);
        for (k, f) in ker.log_shells.iter().zip(&full.log_shells) {
            assert!(k <= f);
        }
        // commutators: the kernel meets odd lengths nowhere
        assert!(ker.shell_sizes.iter().skip(1).step_by(2).all(|&n| n == 0));
        assert_eq!(ker.shell_sizes[4], 8);
    }

    #[test]
    fn delta_is_between_zero_and_one() {
        let s = two_gen();
        let d = delta_poincare(&s, 10, None).unwrap();
        assert!(d.delta > 0.0 && d.delta < 1.0, "{d:?}");
        let triv = delta_poincare(&s, 10, Some(&QuotientSpec::trivial(2).unwrap())).unwrap();
        assert_eq!(d.delta, triv.delta);
        assert!(delta_poincare(&s, 3, None).is_err());
    }

    #[test]
    fn word_cap_is_enforced() {
        let s = two_gen();
        let err = PoincareData::collect(&s, 12, None, 1000).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn kernel_cocycle_images() {
        let s = two_gen();
        let q = QuotientSpec::abelianization(2).unwrap();
        let c = kernel_cocycle(&s, &q).unwrap();
        let g = q.target();
        let want = ["a", "A", "b", "B"].map(|w| g.evaluate_str(w).unwrap());
        match &c {
            Cocycle::Letter(v) => assert_eq!(v.as_slice(), &want),
            _ => panic!("letter mode expected"),
        }
        let skew = kernel_skew(&s, &q).unwrap();
        assert!(skew.is_symmetric());

        let t = QuotientSpec::trivial(2).unwrap();
        match kernel_cocycle(&s, &t).unwrap() {
            Cocycle::Letter(v) => assert!(v.iter().all(|x| t.target().is_identity(x))),
            _ => unreachable!(),
        }

        let s3 = standard_example(&[6.0, -6.0]).unwrap();
        let kill = QuotientSpec::kill_generators(3, &[2]).unwrap();
        match kernel_cocycle(&s3, &kill).unwrap() {
            Cocycle::Letter(v) => {
                let g = kill.target();
                assert!(g.is_identity(&v[4]) && g.is_identity(&v[5]));
                assert_eq!(g.length(&v[0]), 1);
                assert_eq!(g.length(&v[2]), 1);
                assert_ne!(v[0], v[2]);
            }
            _ => unreachable!(),
        }
        assert!(kernel_cocycle(&s3, &q).is_err());
    }

    #[test]
    fn roof_on_constant_letter_cycle_is_exact() {
        let s = two_gen();
        let rc = roof_cylinder(&s, 1).unwrap();
        assert_eq!(rc.sft.size(), 4);
        for x in 0..4 {
            let ell = translation_length(&s.letter_map(x)).unwrap();
            assert!((rc.roof.get(x, x) - ell).abs() < 1e-9);
            assert!((rc.cycle_roof(&[x]).unwrap() - ell).abs() < 1e-9);
        }
        // two-letter cycles are exact at depth 1 as well
        for w in ["ab", "aB", "Ab", "AB"] {
            let w = s.parse_word(w).unwrap();
            let ell = translation_length(&s.word_map(&w)).unwrap();
            assert!((rc.cycle_roof(&w).unwrap() - ell).abs() < 1e-9 * ell);
        }
    }

    #[test]
    fn roof_cycles_converge_geometrically() {
        let s = two_gen();
        let w = s.parse_word("aabab").unwrap();
        let conv = roof_convergence(&s, &w, 12).unwrap();
        let rate = conv.rate.unwrap();
        assert!(rate < 1.0, "{conv:?}");
        assert!(conv.errors[11] < 1e-4 * conv.translation_length, "{conv:?}");
        // depth multiple of the period minus one: the periodic extension is exact
        assert!(conv.errors[3] < 1e-9 && conv.errors[8] < 1e-9, "{conv:?}");
        assert!(roof_convergence(&s, &s.parse_word("abA").unwrap(), 3).is_err());
    }

    #[test]
    fn refined_coding_structure() {
        let s = two_gen();
        let rc = roof_cylinder(&s, 3).unwrap();
        assert_eq!(rc.sft.size(), 36);
        assert_eq!(rc.sft.edge_count(), 108);
        assert!(rc.sft.is_irreducible());
        let k = rc.involution(&s);
        let rep = crate::sft::check_symmetry(&rc.sft, &k, &EdgePotential::zero(&rc.sft)).unwrap();
        assert!(rep.matrix_violations.is_empty());
        let q = QuotientSpec::abelianization(2).unwrap();
        for depth in [3, 4] {
            let rc = roof_cylinder(&s, depth).unwrap();
            let skew = rc.kernel_skew(&s, &q).unwrap();
            assert!(skew.is_symmetric(), "depth {depth}");
            // holonomy of a refined cycle is a rotation of the letter product
            let w = s.parse_word("abAB").unwrap();
            let n = w.len();
            let idx: Vec<usize> = (0..n)
                .map(|i| {
                    let b: Vec<usize> = (0..depth).map(|t| w[(i + t) % n]).collect();
                    rc.blocks.iter().position(|x| *x == b).unwrap()
                })
                .collect();
            assert!(q.target().is_identity(&skew.holonomy(&idx)));
            let w = s.parse_word("abab").unwrap();
            let idx: Vec<usize> = (0..n)
                .map(|i| {
                    let b: Vec<usize> = (0..depth).map(|t| w[(i + t) % n]).collect();
                    rc.blocks.iter().position(|x| *x == b).unwrap()
                })
                .collect();
            assert!(!q.target().is_identity(&skew.holonomy(&idx)));
        }
        assert!(roof_cylinder_capped(&s, 9, 1000).unwrap_err().is_resource());
    }

    #[test]
    fn roof_root_matches_poincare() {
        let s = two_gen();
        let rc = roof_cylinder(&s, 4).unwrap();
        let d_root = delta_root(&rc.sft, &rc.roof).unwrap();
        let d_p = delta_poincare(&s, 12, None).unwrap();
        assert!((d_root - d_p.delta).abs() < 0.05, "{d_root} vs {d_p:?}");
    }
}
