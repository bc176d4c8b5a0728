use super::{Element, Group, GroupKind};
use crate::error::{Error, Result};
use rustc_hash::FxHashSet;
use smallvec::SmallVec;

/// `max_g 1 − #(F ∩ gF) / #F` over the given generators.
pub fn folner_defect(group: &Group, set: &[Element], gens: &[Element]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::invalid("F", "Følner defect of an empty set"));
    }
    let members: FxHashSet<&Element> = set.iter().collect();
    let size = members.len() as f64;
    let mut worst: f64 = 0.0;
    for g in gens {
        let kept = members
            .iter()
            .filter(|x| members.contains(&group.mul(g, x)))
            .count() as f64;
        worst = worst.max(1.0 - kept / size);
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct FolnerBudget {
    /// Largest candidate set evaluated.
    pub max_set_size: usize,
    /// Largest ball radius tried.
    pub max_radius: usize,
    /// Greedy removals attempted on the best candidate.
    pub shave_steps: usize,
}

impl Default for FolnerBudget {
    fn default() -> Self {
        FolnerBudget {
            max_set_size: 20_000,
            max_radius: 8,
            shave_steps: 2_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FolnerSet {
    pub set: Vec<Element>,
    pub defect: f64,
    /// Which candidate family produced the set ("ball r=3", "box 10^2", ...).
    pub origin: String,
}

enum Candidate {
    Ball(usize, usize),
    Box(usize, usize),
}

impl Candidate {
    fn size(&self) -> usize {
        match self {
            Candidate::Ball(_, n) | Candidate::Box(_, n) => *n,
        }
    }
}

fn box_candidate(rank: usize, side: usize) -> Vec<Element> {
    let total = side.pow(rank as u32);
    (0..total)
        .map(|mut idx| {
            let mut v: SmallVec<[i32; 4]> = SmallVec::with_capacity(rank);
            for _ in 0..rank {
                v.push((idx % side) as i32);
                idx /= side;
            }
            Element::Abelian(v)
        })
        .collect()
}

/// Searches balls and boxes (by increasing size), then greedily shaves the
/// best candidate. Failure only means no Følner set was found within the
/// budget; it is not evidence of non-amenability.
pub fn folner_search(
    group: &Group,
    epsilon: f64,
    gens: &[Element],
    budget: &FolnerBudget,
) -> Result<FolnerSet> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    let spheres = match group.spheres(budget.max_radius, budget.max_set_size) {
        Ok(spheres) => spheres,
        Err(Error::Resource { radius, .. }) if radius > 1 => {
            group.spheres(radius - 1, budget.max_set_size)?
        }
        Err(e) => return Err(e),
    };
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut acc = 0;
    for (r, s) in spheres.iter().enumerate() {
        acc += s.len();
        candidates.push(Candidate::Ball(r, acc));
    }
    let rank = match &group.kind {
        GroupKind::FreeAbelian(d) => *d,
        _ => 0,
    };
    if rank > 0 {
        let mut side: usize = 1;
        while side.pow(rank as u32) <= budget.max_set_size {
            candidates.push(Candidate::Box(side, side.pow(rank as u32)));
            side = (side + 1).max(side * 9 / 8);
        }
    }
    // stable: balls before boxes of equal size
    candidates.sort_by_key(|c| c.size());
    let materialize = |c: &Candidate| -> (Vec<Element>, String) {
        match *c {
            Candidate::Ball(r, _) => (spheres[..=r].concat(), format!("ball r={r}")),
            Candidate::Box(side, _) => (box_candidate(rank, side), format!("box {side}^{rank}")),
        }
    };

    let mut best: Option<(f64, usize)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let (set, origin) = materialize(c);
        let d = folner_defect(group, &set, gens)?;
        if d <= epsilon {
            return Ok(FolnerSet {
                set,
                defect: d,
                origin,
            });
        }
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    let (best_defect, best_idx) = best.ok_or_else(|| Error::invalid("budget", "no candidates"))?;
    let (start, origin) = materialize(&candidates[best_idx]);
    let (shaved, defect) = shave(group, &start, gens, budget.shave_steps)?;
    if defect <= epsilon {
        return Ok(FolnerSet {
            set: shaved,
            defect,
            origin: format!("{origin} (shaved)"),
        });
    }
    let (best_defect, best_size) = if defect < best_defect {
        (defect, shaved.len())
    } else {
        (best_defect, start.len())
    };
    Err(Error::FolnerBudget {
        best_defect,
        best_size,
    })
}

/// Greedy removal of the element whose deletion lowers the defect most.
///
/// Keeps `kept[g] = #{x ∈ F : g·x ∈ F}` up to date so each step costs
/// `O(|F| · #gens)` lookups.
fn shave(
    group: &Group,
    set: &[Element],
    gens: &[Element],
    steps: usize,
) -> Result<(Vec<Element>, f64)> {
    let mut members: FxHashSet<Element> = set.iter().cloned().collect();
    if members.len() > 5_000 {
        return Ok((set.to_vec(), folner_defect(group, set, gens)?));
    }
    let inverses: Vec<Element> = gens.iter().map(|g| group.inverse(g)).collect();
    let mut kept: Vec<usize> = gens
        .iter()
        .map(|g| members.iter().filter(|x| members.contains(&group.mul(g, x))).count())
        .collect();
    let defect_of = |kept: &[usize], size: usize| {
        kept.iter()
            .map(|&k| 1.0 - k as f64 / size as f64)
            .fold(0.0, f64::max)
    };
    let mut defect = defect_of(&kept, members.len());
    let mut order: Vec<Element> = set.to_vec();
    for _ in 0..steps {
        if members.len() <= 1 {
            break;
        }
        let mut best: Option<(f64, usize, Vec<usize>)> = None;
        for (idx, x) in order.iter().enumerate() {
            let mut trial = kept.clone();
            for (gi, g) in gens.iter().enumerate() {
                let fwd = group.mul(g, x);
                let back = group.mul(&inverses[gi], x);
                if fwd != *x && members.contains(&fwd) {
                    trial[gi] -= 1;
                }
                if back != *x && members.contains(&back) {
                    trial[gi] -= 1;
                }
                if fwd == *x {
                    trial[gi] -= 1;
                }
            }
            let d = defect_of(&trial, members.len() - 1);
            if d < defect - 1e-15 && best.as_ref().map_or(true, |(bd, _, _)| d < *bd) {
                best = Some((d, idx, trial));
            }
        }
        match best {
            Some((d, idx, trial)) => {
                let x = order.remove(idx);
                members.remove(&x);
                kept = trial;
                defect = d;
            }
            None => break,
        }
    }
    Ok((order, defect))
}
