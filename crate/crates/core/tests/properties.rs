use num_bigint::BigInt;
use proptest::prelude::*;

use hypcycle::boundarycycles::{boundary_localization, boundary_stable_under};
use hypcycle::cosets::{CosetTable, SubgroupSpec};
use hypcycle::exactlinalg::ring::RingSpec;
use hypcycle::foxhomology::compute_h1;
use hypcycle::heckeops::{compose_ops, diamond, hecke_at, same_operator};
use hypcycle::ordinary::{enumerate_hyperbolic, ordinary_part, Budget};
use hypcycle::psl2words::ProjectiveMatrix;

fn groups() -> impl Strategy<Value = SubgroupSpec> {
    prop_oneof![
        (1u64..=12).prop_map(|n| SubgroupSpec::gamma0(n).unwrap()),
        (1u64..=9).prop_map(|n| SubgroupSpec::gamma1(n).unwrap()),
        Just(SubgroupSpec::gamma_h(13, &[3]).unwrap()),
        Just(SubgroupSpec::gamma_h(7, &[2]).unwrap()),
    ]
}

fn element(table: &CosetTable, seed: u64) -> ProjectiveMatrix {
    let gens = table.schreier_generators();
    let mut g = ProjectiveMatrix::identity();
    let mut s = seed;
    for _ in 0..4 {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let x = &gens[(s >> 33) as usize % gens.len()];
        g = if (s >> 20) & 1 == 0 { g.mul(x) } else { g.mul(&x.inverse()) };
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cycles_are_class_functions(spec in groups(), k in 0usize..3, seed in any::<u64>()) {
        let h = compute_h1(&spec, k, RingSpec::Integers).unwrap();
        let gammas = enumerate_hyperbolic(h.table(), &Budget { max_generators: 5, seed, ..Budget::default() }, None);
        let g = element(h.table(), seed);
        for gamma in gammas {
            let conj = g.mul(&gamma).mul(&g.inverse());
            prop_assert!(h.coords_equal(&h.z_coords(&gamma).unwrap(), &h.z_coords(&conj).unwrap()));
            // Q of the inverse is −Q, so 𝔷(γ⁻¹) = (−1)^{k+1} 𝔷(γ)
            let sign = if k % 2 == 0 { BigInt::from(-1) } else { BigInt::from(1) };
            let inv: Vec<BigInt> = h.z_coords(&gamma.inverse()).unwrap().iter().map(|x| x * &sign).collect();
            prop_assert!(h.coords_equal(&h.z_coords(&gamma).unwrap(), &inv));
        }
    }

    #[test]
    fn hecke_operators_commute(spec in groups(), k in 0usize..2) {
        let h = compute_h1(&spec, k, RingSpec::Integers).unwrap();
        let a = hecke_at(&h, 2).unwrap().matrix;
        let b = hecke_at(&h, 3).unwrap().matrix;
        let m = h.module();
        prop_assert!(same_operator(m, &compose_ops(m, &a, &b), &compose_ops(m, &b, &a)));
        let n = spec.level();
        if n > 2 && spec.is_gamma1() {
            let d = diamond(&h, n - 1).unwrap().matrix;
            prop_assert!(same_operator(m, &compose_ops(m, &a, &d), &compose_ops(m, &d, &a)));
        }
    }

    #[test]
    fn boundary_is_hecke_stable(spec in groups(), k in 0usize..2) {
        let h = compute_h1(&spec, k, RingSpec::Integers).unwrap();
        for q in [2, 3, 5] {
            prop_assert!(boundary_stable_under(&h, q).unwrap());
        }
    }
}

#[test]
fn ordinary_rank_stable_in_m() {
    for (g, k, p) in [("gamma0:11", 0usize, 5u64), ("gamma1:5", 1, 5), ("gamma0:6", 1, 5), ("gamma0:1", 5, 11), ("gamma1:4", 2, 2)] {
        let s: SubgroupSpec = g.parse().unwrap();
        let ranks: Vec<usize> = (1..=3).map(|m| ordinary_part(&s, k, p, m).unwrap().rank()).collect();
        assert!(ranks.windows(2).all(|w| w[0] == w[1]), "{g} k={k} p={p}: {ranks:?}");
    }
}

#[test]
fn boundary_inside_cycle_span_over_q() {
    for (g, k) in [("gamma0:1", 0usize), ("gamma0:2", 1), ("gamma0:11", 0), ("gamma1:5", 1), ("gamma0:6", 0), ("gamma1:7", 0)] {
        let r = boundary_localization(&g.parse().unwrap(), k, &Budget::default()).unwrap();
        assert!(r.contained_over_q, "{g} k={k}: {r:?}");
    }
}
