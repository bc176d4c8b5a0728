use proptest::prelude::*;
use rustc_hash::FxHashSet;
use symdyn::groups::{folner_defect, Element, Group, GroupSpec, Letter, Relations, Word};
use symdyn::schottky::{displacement, standard_example, MoebiusMap};
use symdyn::sft::{
    periodic_sum_enumerated, periodic_sum_trace, spectral_pressure, EdgePotential, Involution, Sft,
};
use symdyn::skew::{build_skew, for_each_q_word, holonomy_sums, p_n_count, Cocycle, DpParams};
use symdyn::zeta::{delta_root, RoofFunction};

fn groups() -> Vec<Group> {
    [
        GroupSpec::Cyclic { order: 5 },
        GroupSpec::FreeAbelian { rank: 2 },
        GroupSpec::Free { rank: 2 },
        GroupSpec::Free { rank: 3 },
        GroupSpec::Lamplighter,
        GroupSpec::QuotientOfFree {
            rank: 2,
            relations: Relations::Abelianization,
        },
        GroupSpec::QuotientOfFree {
            rank: 3,
            relations: Relations::KillGenerators { generators: vec![1] },
        },
    ]
    .iter()
    .map(|s| Group::new(s).unwrap())
    .collect()
}

fn word(group: &Group, raw: &[(usize, bool)]) -> Word {
    Word(
        raw.iter()
            .map(|&(g, inverse)| Letter {
                generator: g % group.rank(),
                inverse,
            })
            .collect(),
    )
}

fn raw_word() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..8, any::<bool>()), 0..24)
}

/// An irreducible shift: the cycle `0 → 1 → … → k−1 → 0` plus random edges.
fn shift() -> impl Strategy<Value = Sft> {
    (1usize..=5)
        .prop_flat_map(|k| (Just(k), prop::collection::vec(any::<bool>(), k * k)))
        .prop_map(|(k, bits)| {
            let matrix: Vec<Vec<u8>> = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| u8::from(j == (i + 1) % k || bits[i * k + j]))
                        .collect()
                })
                .collect();
            let names = (0..k).map(|i| format!("s{i}")).collect();
            Sft::new(names, &matrix, false).unwrap()
        })
}

fn shift_with_potential() -> impl Strategy<Value = (Sft, EdgePotential)> {
    shift().prop_flat_map(|sft| {
        let k = sft.size();
        (Just(sft), prop::collection::vec(-2.0f64..2.0, k * k)).prop_map(|(sft, v)| {
            let k = sft.size();
            let f = EdgePotential::from_fn(&sft, |i, j| v[i * k + j]);
            (sft, f)
        })
    })
}

fn random_moebius() -> impl Strategy<Value = MoebiusMap> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
        .prop_filter("positive determinant", |(a, b, c, d)| a * d - b * c > 0.05)
        .prop_map(|(a, b, c, d)| MoebiusMap::new(a, b, c, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_times_inverse_is_identity(gi in 0usize..7, raw in raw_word()) {
        let g = &groups()[gi];
        let w = word(g, &raw);
        let e = g.evaluate(&w.concat(&w.inverse())).unwrap();
        prop_assert!(g.is_identity(&e));
        prop_assert_eq!(g.key(&e), g.key(&g.identity()));
        let x = g.evaluate(&w).unwrap();
        prop_assert_eq!(g.length(&x), g.length(&g.inverse(&x)));
        prop_assert!(g.length(&x) <= w.len());
    }

    #[test]
    fn multiplication_is_associative(
        gi in 0usize..7, r1 in raw_word(), r2 in raw_word(), r3 in raw_word()
    ) {
        let g = &groups()[gi];
        let [a, b, c] = [&r1, &r2, &r3].map(|r| g.evaluate(&word(g, r)).unwrap());
        let left = g.mul(&g.mul(&a, &b), &c);
        let right = g.mul(&a, &g.mul(&b, &c));
        prop_assert_eq!(g.key(&left), g.key(&right));
        prop_assert_eq!(&left, &right);
        prop_assert!(g.length(&g.mul(&a, &b)) <= g.length(&a) + g.length(&b));
    }

    #[test]
    fn balls_are_nested(gi in 0usize..7, r in 0usize..4) {
        let g = &groups()[gi];
        let small: FxHashSet<Element> = g.ball(r, 1 << 20).unwrap().into_iter().collect();
        let big: FxHashSet<Element> = g.ball(r + 1, 1 << 20).unwrap().into_iter().collect();
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn folner_defect_is_right_translation_invariant(
        gi in 0usize..7, r in 0usize..3, raw in raw_word()
    ) {
        let g = &groups()[gi];
        let f = g.ball(r, 1 << 20).unwrap();
        let h = g.evaluate(&word(g, &raw)).unwrap();
        let fh: Vec<Element> = f.iter().map(|x| g.mul(x, &h)).collect();
        let gens = g.symmetric_generators();
        let d = folner_defect(g, &f, &gens).unwrap();
        let dh = folner_defect(g, &fh, &gens).unwrap();
        prop_assert!((d - dh).abs() < 1e-12);
    }

    #[test]
    fn trace_identity((sft, f) in shift_with_potential(), n in 1usize..=8) {
        let brute = periodic_sum_enumerated(&sft, &f, n);
        let trace = periodic_sum_trace(&sft, &f, n);
        prop_assert_eq!(brute.count, trace.count);
        if brute.log_weighted.is_finite() {
            prop_assert!((brute.log_weighted - trace.log_weighted).abs() < 1e-10 * brute.log_weighted.abs().max(1.0));
        } else {
            prop_assert_eq!(trace.log_weighted, f64::NEG_INFINITY);
        }
    }

    #[test]
    fn pressure_shifts_with_constants((sft, f) in shift_with_potential(), c in -3.0f64..3.0) {
        let p = spectral_pressure(&sft, &f).unwrap();
        let pc = spectral_pressure(&sft, &f.shifted(&sft, c)).unwrap();
        prop_assert!((pc - p - c).abs() < 1e-9);
    }

    #[test]
    fn pressure_is_monotone((sft, f) in shift_with_potential(), bumps in prop::collection::vec(0.0f64..1.0, 25)) {
        let k = sft.size();
        let g = EdgePotential::from_fn(&sft, |i, j| f.get(i, j) + bumps[(i * k + j) % 25]);
        prop_assert!(spectral_pressure(&sft, &f).unwrap() <= spectral_pressure(&sft, &g).unwrap() + 1e-10);
    }

    #[test]
    fn delta_root_scales_and_is_monotone(
        (sft, f) in shift_with_potential(), c in 0.2f64..5.0, bumps in prop::collection::vec(0.0f64..1.0, 25)
    ) {
        let k = sft.size();
        let r = RoofFunction::from_fn(&sft, |i, j| 0.1 + f.get(i, j).abs()).unwrap();
        let d = delta_root(&sft, &r).unwrap();
        let dc = delta_root(&sft, &r.scaled(&sft, c).unwrap()).unwrap();
        prop_assert!((dc - d / c).abs() < 1e-9 * d.max(1.0));
        let bigger = RoofFunction::from_fn(&sft, |i, j| r.get(i, j) + bumps[(i * k + j) % 25]).unwrap();
        prop_assert!(delta_root(&sft, &bigger).unwrap() <= d + 1e-10);
    }

    #[test]
    fn q_words_are_closed_under_time_reversal(
        gi in 0usize..7, ra in raw_word(), rb in raw_word(), n in 1usize..=6
    ) {
        let g = groups()[gi].clone();
        let base = Sft::full(&["a", "A", "b", "B"]);
        let ga = g.evaluate(&word(&g, &ra)).unwrap();
        let gb = g.evaluate(&word(&g, &rb)).unwrap();
        let values = vec![ga.clone(), g.inverse(&ga), gb.clone(), g.inverse(&gb)];
        let kappa = Involution::new(vec![1, 0, 3, 2]).unwrap();
        let skew = build_skew(base, g, Cocycle::letters(values), Some(kappa.clone())).unwrap();
        prop_assert!(skew.is_symmetric());
        let mut words = FxHashSet::default();
        for_each_q_word(&skew, n, 1 << 20, &mut |w, _| {
            words.insert(w.to_vec());
        })
        .unwrap();
        for w in &words {
            let rev: Vec<usize> = w.iter().rev().map(|&x| kappa.apply(x)).collect();
            prop_assert!(words.contains(&rev));
        }
    }

    #[test]
    fn restriction_shrinks_sums_and_sandwich_holds(
        gi in 0usize..7, ra in raw_word(), rb in raw_word(), fv in prop::collection::vec(-1.0f64..1.0, 16)
    ) {
        let g = groups()[gi].clone();
        let base = Sft::full(&["a", "A", "b", "B"]);
        let ga = g.evaluate(&word(&g, &ra)).unwrap();
        let gb = g.evaluate(&word(&g, &rb)).unwrap();
        let values = vec![ga.clone(), g.inverse(&ga), gb.clone(), g.inverse(&gb)];
        let f = EdgePotential::from_fn(&base, |i, j| fv[i * 4 + j]);
        let skew = build_skew(base.clone(), g, Cocycle::letters(values), None).unwrap();
        let sums = holonomy_sums(&skew, &f, 6, &DpParams::default()).unwrap();
        for n in 1..=6 {
            let full = periodic_sum_trace(&base, &f, n);
            prop_assert!(sums.counts[n - 1] <= full.count.unwrap());
            prop_assert!(sums.log_sums[n - 1] <= full.log_weighted + 1e-12);
            let pn = p_n_count(&skew, n, 1 << 20).unwrap();
            prop_assert!(pn.sandwich_holds());
            prop_assert_eq!(u128::from(pn.q), sums.counts[n - 1]);
        }
    }

    #[test]
    fn displacement_is_symmetric_and_subadditive(g in random_moebius(), h in random_moebius()) {
        let dg = displacement(&g);
        prop_assert!((dg - displacement(&g.inverse())).abs() < 1e-9 * dg.max(1.0));
        let gh = g.compose(&h);
        prop_assert!(displacement(&gh) <= dg + displacement(&h) + 1e-9);
    }

    #[test]
    fn displacement_on_schottky_words(raw in prop::collection::vec(0usize..4, 1..20), cut in 0usize..20) {
        let s = standard_example(&[6.0]).unwrap();
        let mut w: Vec<usize> = Vec::new();
        for x in raw {
            if w.last() == Some(&(x ^ 1)) {
                w.pop();
            } else {
                w.push(x);
            }
        }
        let g = s.word_map(&w);
        let d = displacement(&g);
        prop_assert!((d - displacement(&g.inverse())).abs() < 1e-9 * d.max(1.0));
        let cut = cut.min(w.len());
        let (p, q) = w.split_at(cut);
        prop_assert!(d <= displacement(&s.word_map(p)) + displacement(&s.word_map(q)) + 1e-9);
    }
}
