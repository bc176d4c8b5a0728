//! Finitely generated groups with exact arithmetic and canonical normal forms.
//!
//! Every group exposes the same surface: a list of named generators (single
//! lowercase characters, inverses written in uppercase), multiplication on
//! canonical [`Element`]s, a word-length function that is symmetric and
//! subadditive, and ball enumeration in the Cayley graph.

mod element;
mod folner;

pub use element::{Element, FreeWord, LampState};
pub use folner::{folner_defect, folner_search, FolnerBudget, FolnerSet};

use crate::error::{Error, Result};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Declarative description of a group, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupSpec {
    /// Multiplication table over elements `0..n`; `generators` index into it.
    FiniteTable {
        table: Vec<Vec<usize>>,
        generators: Vec<usize>,
        #[serde(default)]
        names: Option<Vec<String>>,
    },
    /// Shorthand for the cyclic group table of the given order.
    Cyclic { order: usize },
    FreeAbelian { rank: usize },
    Free { rank: usize },
    /// `Z/2 ≀ Z` with generators `t` (shift) and `a` (toggle).
    Lamplighter,
    /// `F_rank / N` for a normal subgroup described by `relations`.
    QuotientOfFree { rank: usize, relations: Relations },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Relations {
    Abelianization,
    /// Send the listed generators (0-based) to the identity.
    KillGenerators { generators: Vec<usize> },
    /// Send generator `i` to the permutation `permutations[i]` (images of `0..m`).
    FiniteImage { permutations: Vec<Vec<usize>> },
}

impl GroupSpec {
    pub fn cyclic(order: usize) -> Self {
        GroupSpec::Cyclic { order }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

/// A word over generators and their formal inverses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    /// Formal inverse: reversed with every letter inverted.
    pub fn inverse(&self) -> Word {
        Word(
            self.0
                .iter()
                .rev()
                .map(|l| Letter {
                    generator: l.generator,
                    inverse: !l.inverse,
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug)]
pub(crate) struct FiniteTable {
    n: usize,
    table: Vec<u32>,
    identity: u32,
    inverse: Vec<u32>,
    generators: Vec<u32>,
    distance: Vec<u32>,
    /// Optional canonical labels (permutation image tuples for finite images).
    labels: Option<Vec<Vec<u16>>>,
}

impl FiniteTable {
    fn from_rows(rows: &[Vec<usize>], generators: &[usize]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("table", "empty multiplication table"));
        }
        let mut table = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(
                    format!("table[{i}]"),
                    format!("row has {} entries, expected {n}", row.len()),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= n {
                    return Err(Error::invalid(
                        format!("table[{i}][{j}]"),
                        format!("entry {v} not closed in a table of {n} elements"),
                    ));
                }
                table.push(v as u32);
            }
        }
        let at = |i: usize, j: usize| table[i * n + j] as usize;
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| at(e, x) == x && at(x, e) == x))
            .ok_or_else(|| Error::invalid("table", "no two-sided identity"))?;
        let mut inverse = Vec::with_capacity(n);
        for x in 0..n {
            let y = (0..n)
                .find(|&y| at(x, y) == identity && at(y, x) == identity)
                .ok_or_else(|| Error::invalid("table", format!("element {x} has no inverse")))?;
            inverse.push(y as u32);
        }
        if n <= 128 {
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        if at(at(x, y), z) != at(x, at(y, z)) {
                            return Err(Error::invalid(
                                "table",
                                format!("not associative at ({x}, {y}, {z})"),
                            ));
                        }
                    }
                }
            }
        }
        if generators.is_empty() {
            return Err(Error::invalid("generators", "at least one generator required"));
        }
        for &g in generators {
            if g >= n {
                return Err(Error::invalid(
                    "generators",
                    format!("generator {g} outside table of {n} elements"),
                ));
            }
        }
        let generators: Vec<u32> = generators.iter().map(|&g| g as u32).collect();
        // BFS distances over generators and inverses
        let mut distance = vec![u32::MAX; n];
        distance[identity] = 0;
        let mut frontier = vec![identity];
        let steps: Vec<usize> = generators
            .iter()
            .flat_map(|&g| [g as usize, inverse[g as usize] as usize])
            .collect();
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &x in &frontier {
                for &s in &steps {
                    let y = at(x, s);
                    if distance[y] == u32::MAX {
                        distance[y] = d;
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        if let Some(x) = distance.iter().position(|&d| d == u32::MAX) {
            return Err(Error::invalid(
                "generators",
                format!("element {x} is not generated"),
            ));
        }
        Ok(FiniteTable {
            n,
            table,
            identity: identity as u32,
            inverse,
            generators,
            distance,
            labels: None,
        })
    }

    #[inline]
    fn mul(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize * self.n + b as usize]
    }
}

#[derive(Clone, Debug)]
pub(crate) enum GroupKind {
    Finite(FiniteTable),
    FreeAbelian(usize),
    Free(usize),
    Lamplighter,
    /// Elements live in `target`; generator `i` maps to `images[i]`.
    Quotient {
        rank: usize,
        target: Box<Group>,
        images: Vec<Element>,
    },
}

/// An immutable group handle.
#[derive(Clone, Debug)]
pub struct Group {
    kind: GroupKind,
    names: Vec<char>,
    known_amenable: bool,
    description: String,
}

fn default_names(count: usize) -> Result<Vec<char>> {
    if count > 26 {
        return Err(Error::invalid("rank", "at most 26 named generators supported"));
    }
    Ok((0..count).map(|i| (b'a' + i as u8) as char).collect())
}

fn parse_names(names: &[String], expected: usize) -> Result<Vec<char>> {
    if names.len() != expected {
        return Err(Error::invalid(
            "names",
            format!("{} names for {expected} generators", names.len()),
        ));
    }
    let mut out = Vec::new();
    for n in names {
        let mut chars = n.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_lowercase() => {
                if out.contains(&c) {
                    return Err(Error::invalid("names", format!("duplicate name {c}")));
                }
                out.push(c)
            }
            _ => {
                return Err(Error::invalid(
                    "names",
                    format!("generator name {n:?} must be one lowercase ASCII letter"),
                ))
            }
        }
    }
    Ok(out)
}

/// Enumerates the subgroup of `S_m` generated by `perms` into a finite table.
fn permutation_closure(perms: &[Vec<usize>], cap: usize) -> Result<FiniteTable> {
    let m = perms.first().map(|p| p.len()).unwrap_or(0);
    for (i, p) in perms.iter().enumerate() {
        let mut seen = vec![false; m];
        if p.len() != m || p.iter().any(|&x| x >= m || std::mem::replace(&mut seen[x], true)) {
            return Err(Error::invalid(
                format!("permutations[{i}]"),
                format!("not a permutation of 0..{m}"),
            ));
        }
    }
    let compose = |a: &[u16], b: &[u16]| -> Vec<u16> {
        // right action: apply a then b
        (0..a.len()).map(|x| b[a[x] as usize]).collect()
    };
    let id: Vec<u16> = (0..m as u16).collect();
    let gens: Vec<Vec<u16>> = perms
        .iter()
        .map(|p| p.iter().map(|&x| x as u16).collect())
        .collect();
    let mut index: FxHashMap<Vec<u16>, usize> = FxHashMap::default();
    let mut elems = vec![id.clone()];
    index.insert(id, 0);
    let mut i = 0;
    while i < elems.len() {
        for g in &gens {
            let y = compose(&elems[i], g);
            if !index.contains_key(&y) {
                if elems.len() >= cap {
                    return Err(Error::Resource {
                        context: "finite-image closure".into(),
                        radius: 0,
                        size: elems.len(),
                        cap,
                    });
                }
                index.insert(y.clone(), elems.len());
                elems.push(y);
            }
        }
        i += 1;
    }
    let n = elems.len();
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|a| (0..n).map(|b| index[&compose(&elems[a], &elems[b])]).collect())
        .collect();
    let gen_idx: Vec<usize> = gens.iter().map(|g| index[g]).collect();
    let mut t = FiniteTable::from_rows(&rows, &gen_idx)?;
    t.labels = Some(elems);
    Ok(t)
}

impl Group {
    /// Builds a group from its declarative spec.
    pub fn new(spec: &GroupSpec) -> Result<Group> {
        match spec {
            GroupSpec::FiniteTable {
                table,
                generators,
                names,
            } => {
                let t = FiniteTable::from_rows(table, generators)?;
                let names = match names {
                    Some(n) => parse_names(n, generators.len())?,
                    None => default_names(generators.len())?,
                };
                Ok(Group {
                    description: format!("finite group of order {}", t.n),
                    kind: GroupKind::Finite(t),
                    names,
                    known_amenable: true,
                })
            }
            GroupSpec::Cyclic { order } => {
                if *order == 0 {
                    return Err(Error::invalid("order", "cyclic group order must be ≥ 1"));
                }
                let n = *order;
                let rows: Vec<Vec<usize>> =
                    (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
                let gen = if n == 1 { 0 } else { 1 };
                let t = FiniteTable::from_rows(&rows, &[gen])?;
                Ok(Group {
                    kind: GroupKind::Finite(t),
                    names: vec!['a'],
                    known_amenable: true,
                    description: format!("C{n}"),
                })
            }
            GroupSpec::FreeAbelian { rank } => {
                if *rank == 0 {
                    return Err(Error::invalid("rank", "free-abelian rank must be ≥ 1"));
                }
                Ok(Group {
                    kind: GroupKind::FreeAbelian(*rank),
                    names: default_names(*rank)?,
                    known_amenable: true,
                    description: format!("Z^{rank}"),
                })
            }
            GroupSpec::Free { rank } => {
                if *rank == 0 {
                    return Err(Error::invalid("rank", "free group rank must be ≥ 1"));
                }
                Ok(Group {
                    kind: GroupKind::Free(*rank),
                    names: default_names(*rank)?,
                    known_amenable: *rank == 1,
                    description: format!("F{rank}"),
                })
            }
            GroupSpec::Lamplighter => Ok(Group {
                kind: GroupKind::Lamplighter,
                names: vec!['t', 'a'],
                known_amenable: true,
                description: "Z/2 wr Z".into(),
            }),
            GroupSpec::QuotientOfFree { rank, relations } => Self::quotient(*rank, relations),
        }
    }

    fn quotient(rank: usize, relations: &Relations) -> Result<Group> {
        if rank == 0 {
            return Err(Error::invalid("rank", "quotient rank must be ≥ 1"));
        }
        let names = default_names(rank)?;
        let (target, images, amenable, description) = match relations {
            Relations::Abelianization => {
                let target = Group::new(&GroupSpec::FreeAbelian { rank })?;
                let images = (0..rank).map(|i| target.generator(i)).collect();
                (target, images, true, format!("F{rank} -> Z^{rank}"))
            }
            Relations::KillGenerators { generators } => {
                if let Some(&g) = generators.iter().find(|&&g| g >= rank) {
                    return Err(Error::invalid(
                        "relations.generators",
                        format!("generator {g} out of range for rank {rank}"),
                    ));
                }
                let survivors: Vec<usize> =
                    (0..rank).filter(|g| !generators.contains(g)).collect();
                let target_rank = survivors.len();
                if target_rank == 0 {
                    let target = Group::new(&GroupSpec::Cyclic { order: 1 })?;
                    let images = vec![target.identity(); rank];
                    (target, images, true, format!("F{rank} -> 1"))
                } else {
                    let target = Group::new(&GroupSpec::Free { rank: target_rank })?;
                    let images = (0..rank)
                        .map(|g| match survivors.iter().position(|&s| s == g) {
                            Some(i) => target.generator(i),
                            None => target.identity(),
                        })
                        .collect();
                    (
                        target,
                        images,
                        target_rank <= 1,
                        format!("F{rank} -> F{target_rank}"),
                    )
                }
            }
            Relations::FiniteImage { permutations } => {
                if permutations.len() != rank {
                    return Err(Error::invalid(
                        "relations.permutations",
                        format!("{} permutations for rank {rank}", permutations.len()),
                    ));
                }
                let table = permutation_closure(permutations, 1 << 20)?;
                let order = table.n;
                let images = table.generators.iter().map(|&g| Element::Finite(g)).collect();
                let target = Group {
                    kind: GroupKind::Finite(table),
                    names: names.clone(),
                    known_amenable: true,
                    description: format!("permutation group of order {order}"),
                };
                (target, images, true, format!("F{rank} -> finite({order})"))
            }
        };
        Ok(Group {
            kind: GroupKind::Quotient {
                rank,
                target: Box::new(target),
                images,
            },
            names,
            known_amenable: amenable,
            description,
        })
    }

    /// Metadata for cross-checking numerical verdicts; never used by the numerics.
    pub fn known_amenable(&self) -> bool {
        self.known_amenable
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn generator_names(&self) -> &[char] {
        &self.names
    }

    /// `Some(order)` for finite groups (including finite images).
    pub fn order(&self) -> Option<usize> {
        match &self.kind {
            GroupKind::Finite(t) => Some(t.n),
            GroupKind::Quotient { target, .. } => target.order(),
            _ => None,
        }
    }

    pub fn identity(&self) -> Element {
        match &self.kind {
            GroupKind::Finite(t) => Element::Finite(t.identity),
            GroupKind::FreeAbelian(d) => Element::Abelian(SmallVec::from_elem(0, *d)),
            GroupKind::Free(k) => Element::Free(FreeWord::empty(*k)),
            GroupKind::Lamplighter => Element::Lamplighter(LampState::default()),
            GroupKind::Quotient { target, .. } => target.identity(),
        }
    }

    pub fn is_identity(&self, g: &Element) -> bool {
        match (g, &self.kind) {
            (Element::Finite(i), GroupKind::Finite(t)) => *i == t.identity,
            (Element::Abelian(v), _) => v.iter().all(|&x| x == 0),
            (Element::Free(w), _) => w.is_empty(),
            (Element::Lamplighter(s), _) => s.pos == 0 && s.lamps.is_empty(),
            (_, GroupKind::Quotient { target, .. }) => target.is_identity(g),
            _ => false,
        }
    }

    /// The `i`-th generator as an element.
    pub fn generator(&self, i: usize) -> Element {
        match &self.kind {
            GroupKind::Finite(t) => Element::Finite(t.generators[i]),
            GroupKind::FreeAbelian(d) => {
                let mut v = SmallVec::from_elem(0, *d);
                v[i] = 1;
                Element::Abelian(v)
            }
            GroupKind::Free(k) => {
                let mut w = FreeWord::empty(*k);
                w.push_reduced(2 * i as u8);
                Element::Free(w)
            }
            GroupKind::Lamplighter => Element::Lamplighter(if i == 0 {
                LampState {
                    pos: 1,
                    lamps: SmallVec::new(),
                }
            } else {
                LampState {
                    pos: 0,
                    lamps: SmallVec::from_elem(0, 1),
                }
            }),
            GroupKind::Quotient { images, .. } => images[i].clone(),
        }
    }

    pub fn generators(&self) -> Vec<Element> {
        (0..self.rank()).map(|i| self.generator(i)).collect()
    }

    /// Generators followed by their inverses, duplicates removed.
    pub fn symmetric_generators(&self) -> Vec<Element> {
        let mut out: Vec<Element> = Vec::new();
        for g in self.generators() {
            let gi = self.inverse(&g);
            for x in [g, gi] {
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        out
    }

    pub fn letter(&self, l: Letter) -> Element {
        let g = self.generator(l.generator);
        if l.inverse {
            self.inverse(&g)
        } else {
            g
        }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        match (a, b) {
            (Element::Finite(x), Element::Finite(y)) => match &self.kind {
                GroupKind::Finite(t) => Element::Finite(t.mul(*x, *y)),
                GroupKind::Quotient { target, .. } => target.mul(a, b),
                _ => panic!("finite element in non-finite group"),
            },
            (Element::Abelian(x), Element::Abelian(y)) => {
                Element::Abelian(x.iter().zip(y.iter()).map(|(p, q)| p + q).collect())
            }
            (Element::Free(x), Element::Free(y)) => Element::Free(x.mul(y)),
            (Element::Lamplighter(x), Element::Lamplighter(y)) => Element::Lamplighter(x.mul(y)),
            _ => panic!("mixed element kinds in group product"),
        }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        match a {
            Element::Finite(x) => match &self.kind {
                GroupKind::Finite(t) => Element::Finite(t.inverse[*x as usize]),
                GroupKind::Quotient { target, .. } => target.inverse(a),
                _ => panic!("finite element in non-finite group"),
            },
            Element::Abelian(v) => Element::Abelian(v.iter().map(|x| -x).collect()),
            Element::Free(w) => Element::Free(w.inverse()),
            Element::Lamplighter(s) => Element::Lamplighter(s.inverse()),
        }
    }

    /// Word length with respect to the group's native generating set.
    ///
    /// Symmetric and subadditive, which is all the truncation arguments in
    /// the skew-product and random-walk code rely on.
    pub fn length(&self, a: &Element) -> usize {
        match (a, &self.kind) {
            (Element::Finite(x), GroupKind::Finite(t)) => t.distance[*x as usize] as usize,
            (_, GroupKind::Quotient { target, .. }) => target.length(a),
            (Element::Abelian(v), _) => v.iter().map(|x| x.unsigned_abs() as usize).sum(),
            (Element::Free(w), _) => w.len(),
            (Element::Lamplighter(s), _) => s.word_length(),
            _ => panic!("element does not belong to this group"),
        }
    }

    /// Whether `a` has the shape of an element of this group.
    pub fn contains(&self, a: &Element) -> bool {
        match (&self.kind, a) {
            (GroupKind::Finite(t), Element::Finite(x)) => (*x as usize) < t.n,
            (GroupKind::FreeAbelian(d), Element::Abelian(v)) => v.len() == *d,
            (GroupKind::Free(k), Element::Free(w)) => {
                w.codes().all(|c| (c as usize) < 2 * k) && w == &FreeWord::empty(*k).mul(w)
            }
            (GroupKind::Lamplighter, Element::Lamplighter(_)) => true,
            (GroupKind::Quotient { target, .. }, _) => target.contains(a),
            _ => false,
        }
    }

    /// Canonical key bytes. For finite images this is the permutation tuple.
    pub fn key(&self, a: &Element) -> Vec<u8> {
        match (&self.kind, a) {
            (GroupKind::Quotient { target, .. }, _) => target.key(a),
            (
                GroupKind::Finite(FiniteTable {
                    labels: Some(labels),
                    ..
                }),
                Element::Finite(i),
            ) => {
                let mut out = vec![4u8];
                for x in &labels[*i as usize] {
                    out.extend_from_slice(&x.to_le_bytes());
                }
                out
            }
            _ => a.key(),
        }
    }

    /// For a quotient `F_k / N`, the target group the elements live in.
    pub fn quotient_target(&self) -> Option<&Group> {
        match &self.kind {
            GroupKind::Quotient { target, .. } => Some(target),
            _ => None,
        }
    }

    pub fn quotient_rank(&self) -> Option<usize> {
        match &self.kind {
            GroupKind::Quotient { rank, .. } => Some(*rank),
            _ => None,
        }
    }

    /// Parses a word like `"abA"`: lowercase letters are generators,
    /// uppercase their inverses.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for c in text.chars().filter(|c| !c.is_whitespace() && *c != '1') {
            let lower = c.to_ascii_lowercase();
            match self.names.iter().position(|&n| n == lower) {
                Some(generator) => letters.push(Letter {
                    generator,
                    inverse: c.is_ascii_uppercase(),
                }),
                None => {
                    return Err(Error::invalid(
                        "word",
                        format!("unknown letter {c:?} in {text:?}"),
                    ))
                }
            }
        }
        Ok(Word(letters))
    }

    pub fn evaluate(&self, w: &Word) -> Result<Element> {
        let mut acc = self.identity();
        for &l in &w.0 {
            if l.generator >= self.rank() {
                return Err(Error::invalid(
                    "word",
                    format!("generator index {} out of range", l.generator),
                ));
            }
            acc = self.mul(&acc, &self.letter(l));
        }
        Ok(acc)
    }

    pub fn evaluate_str(&self, text: &str) -> Result<Element> {
        self.evaluate(&self.parse_word(text)?)
    }

    /// Human-readable normal form.
    pub fn format(&self, a: &Element) -> String {
        match a {
            Element::Finite(i) => format!("#{i}"),
            Element::Abelian(v) => format!(
                "({})",
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
            Element::Free(w) => {
                if w.is_empty() {
                    return "1".into();
                }
                let names = match &self.kind {
                    GroupKind::Quotient { target, .. } => target.generator_names().to_vec(),
                    _ => self.names.clone(),
                };
                w.codes()
                    .map(|c| {
                        let n = names[(c / 2) as usize];
                        if c & 1 == 1 {
                            n.to_ascii_uppercase()
                        } else {
                            n
                        }
                    })
                    .collect()
            }
            Element::Lamplighter(s) => format!("({:?}, {})", s.lamps.as_slice(), s.pos),
        }
    }

    /// Elements at word distance ≤ `radius` from the identity, in BFS order.
    ///
    /// Fails with a resource error once more than `cap` elements are found.
    pub fn ball(&self, radius: usize, cap: usize) -> Result<Vec<Element>> {
        Ok(self.spheres(radius, cap)?.into_iter().flatten().collect())
    }

    /// Spheres of radius `0..=radius` in the Cayley graph.
    pub fn spheres(&self, radius: usize, cap: usize) -> Result<Vec<Vec<Element>>> {
        let steps = self.symmetric_generators();
        let mut seen: FxHashSet<Element> = FxHashSet::default();
        let id = self.identity();
        seen.insert(id.clone());
        let mut spheres = vec![vec![id]];
        for r in 1..=radius {
            let mut next = Vec::new();
            for x in &spheres[r - 1] {
                for s in &steps {
                    let y = self.mul(x, s);
                    if !seen.contains(&y) {
                        if seen.len() >= cap {
                            return Err(Error::Resource {
                                context: "ball enumeration".into(),
                                radius: r,
                                size: seen.len(),
                                cap,
                            });
                        }
                        seen.insert(y.clone());
                        next.push(y);
                    }
                }
            }
            spheres.push(next);
        }
        Ok(spheres)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(spec: GroupSpec) -> Group {
        Group::new(&spec).unwrap()
    }

    #[test]
    fn free_abelian_identity_key() {
        let z2 = g(GroupSpec::FreeAbelian { rank: 2 });
        assert_eq!(z2.identity(), Element::Abelian(SmallVec::from_slice(&[0, 0])));
        assert!(z2.is_identity(&z2.evaluate_str("abAB").unwrap()));
    }

    #[test]
    fn free_reduction() {
        let f2 = g(GroupSpec::Free { rank: 2 });
        let x = f2.evaluate_str("abA").unwrap();
        assert_eq!(f2.length(&x), 3);
        assert_eq!(f2.format(&x), "abA");
        assert!(f2.is_identity(&f2.evaluate_str("aA").unwrap()));
        let c = f2.evaluate_str("abAB").unwrap();
        assert_eq!(f2.length(&c), 4);
        assert!(!f2.is_identity(&c));
        assert_eq!(f2.format(&f2.evaluate_str("abBAab").unwrap()), "ab");
    }

    #[test]
    fn lamplighter_hand_evaluation() {
        let l = g(GroupSpec::Lamplighter);
        let x = l.evaluate_str("taTa").unwrap();
        match &x {
            Element::Lamplighter(s) => {
                assert_eq!(s.lamps.as_slice(), &[0, 1]);
                assert_eq!(s.pos, 0);
            }
            _ => panic!(),
        }
        assert!(!l.is_identity(&x));
        assert!(l.is_identity(&l.mul(&x, &l.inverse(&x))));
    }

    #[test]
    fn ball_sizes() {
        let f2 = g(GroupSpec::Free { rank: 2 });
        assert_eq!(f2.ball(1, 1000).unwrap().len(), 5);
        assert_eq!(f2.ball(2, 1000).unwrap().len(), 17);
        let z2 = g(GroupSpec::FreeAbelian { rank: 2 });
        assert_eq!(z2.ball(2, 1000).unwrap().len(), 13);
        assert!(matches!(
            f2.ball(10, 1000),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn sphere_closed_forms() {
        let f2 = g(GroupSpec::Free { rank: 2 });
        let z2 = g(GroupSpec::FreeAbelian { rank: 2 });
        let fs = f2.spheres(8, 1 << 20).unwrap();
        let zs = z2.spheres(8, 1 << 20).unwrap();
        for r in 1..=8usize {
            assert_eq!(fs[r].len(), 4 * 3usize.pow(r as u32 - 1));
            assert_eq!(zs[r].len(), 4 * r);
        }
    }

    #[test]
    fn malformed_tables_rejected() {
        let bad = GroupSpec::FiniteTable {
            table: vec![vec![0, 1], vec![1, 2]],
            generators: vec![1],
            names: None,
        };
        assert!(matches!(Group::new(&bad), Err(Error::Invalid { .. })));
        let no_inverse = GroupSpec::FiniteTable {
            table: vec![vec![0, 1], vec![1, 1]],
            generators: vec![1],
            names: None,
        };
        assert!(Group::new(&no_inverse).is_err());
    }

    #[test]
    fn unknown_letter() {
        let f2 = g(GroupSpec::Free { rank: 2 });
        assert!(f2.evaluate_str("abz").is_err());
    }

    #[test]
    fn quotients() {
        let ab = g(GroupSpec::QuotientOfFree {
            rank: 2,
            relations: Relations::Abelianization,
        });
        assert!(ab.is_identity(&ab.evaluate_str("abAB").unwrap()));
        assert!(ab.known_amenable());
        let kill = g(GroupSpec::QuotientOfFree {
            rank: 3,
            relations: Relations::KillGenerators {
                generators: vec![2],
            },
        });
        assert!(!kill.known_amenable());
        assert!(kill.is_identity(&kill.evaluate_str("c").unwrap()));
        assert_eq!(kill.length(&kill.evaluate_str("acbC").unwrap()), 2);
        // S3 generated by a transposition and a 3-cycle
        let s3 = g(GroupSpec::QuotientOfFree {
            rank: 2,
            relations: Relations::FiniteImage {
                permutations: vec![vec![1, 0, 2], vec![1, 2, 0]],
            },
        });
        assert_eq!(s3.order(), Some(6));
        assert!(s3.is_identity(&s3.evaluate_str("aa").unwrap()));
        assert!(s3.is_identity(&s3.evaluate_str("bbb").unwrap()));
        assert_eq!(s3.key(&s3.identity()), {
            let mut v = vec![4u8];
            for x in [0u16, 1, 2] {
                v.extend_from_slice(&x.to_le_bytes());
            }
            v
        });
    }

    #[test]
    fn finite_table_cyclic() {
        let c5 = g(GroupSpec::cyclic(5));
        let x = c5.evaluate_str("aaaaa").unwrap();
        assert!(c5.is_identity(&x));
        assert_eq!(c5.length(&c5.evaluate_str("aaa").unwrap()), 2);
    }
}
