use num_rational::BigRational;
use orbitwalk::corpus::{self, ORBIT_SUMMABLE};
use orbitwalk::exactalg::rational::qi;
use orbitwalk::exactalg::Field;
use orbitwalk::expansion::{self, endpoint_start_vars};
use orbitwalk::io::parse_basis;
use orbitwalk::oracle::endpoint_series;
use orbitwalk::polyharmonic::{decompose, PolyBasis};
use proptest::prelude::*;

fn sw_basis() -> PolyBasis {
    let entries = parse_basis(include_str!("../models/simple.basis")).unwrap();
    PolyBasis {
        entries,
        gamma: qi(4),
        ladder: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Reading a walk backwards gives a walk of the reversed model.
    #[test]
    fn reversal_swaps_endpoints(ix in 0usize..19, a in (0i64..3, 0i64..3), b in (0i64..3, 0i64..3), n in 0usize..12) {
        let m = ORBIT_SUMMABLE[ix].load().unwrap();
        let r = m.reverse();
        let fwd = endpoint_series(&m, &[a.0, a.1], &[vec![b.0, b.1]], n).unwrap();
        let bwd = endpoint_series(&r, &[b.0, b.1], &[vec![a.0, a.1]], n).unwrap();
        prop_assert_eq!(&fwd[0][n], &bwd[0][n]);
        let rr = r.reverse();
        prop_assert_eq!(rr.steps(), m.steps());
    }

    /// A vanishing twist sum marks lengths that no walk can have.
    #[test]
    fn zero_twist_sum_means_no_walks(name in prop::sample::select(vec!["simple", "tandem", "diagonal", "gouyou-beauchamps"]),
                                     b in (0i64..4, 0i64..4), n in 12usize..30) {
        let m = corpus::model(name).unwrap();
        let e = expansion::expand(&m, 1).unwrap();
        let end = vec![b.0, b.1];
        let s = endpoint_series(&m, &[0, 0], std::slice::from_ref(&end), n).unwrap();
        if Field::is_zero(&e.twist_sum(n, &end).unwrap()) {
            prop_assert!(Field::is_zero(&s[0][n]));
        } else {
            prop_assert!(!Field::is_zero(&s[0][n]));
        }
    }

    /// Products of fixture basis functions decompose back into their coefficients.
    #[test]
    fn decomposition_recovers_coefficients(c in prop::collection::vec(-20i64..20, 5)) {
        let basis = sw_basis();
        let pairs = [((1, 1), (1, 1)), ((2, 1), (1, 1)), ((1, 1), (2, 1)), ((1, 2), (1, 1)), ((1, 1), (1, 2))];
        let vars = endpoint_start_vars(2);
        let mut v = orbitwalk::exactalg::LaurentPoly::<BigRational>::zero_in(vars.clone());
        for (&(h, g), &k) in pairs.iter().zip(&c) {
            let hh = basis.get(h.0, h.1).unwrap().embed(vars.clone(), &[0, 1]);
            let gg = basis.get(g.0, g.1).unwrap().embed(vars.clone(), &[2, 3]);
            v = v.add(&hh.mul(&gg).scale(&qi(k)));
        }
        prop_assume!(!v.is_zero());
        let d = decompose(&v, &basis, &basis, 2).unwrap();
        for (&(h, g), &k) in pairs.iter().zip(&c) {
            prop_assert_eq!(d.coefficient(h, g), qi(k));
        }
    }
}

#[test]
fn expansion_is_independent_of_the_start_representation() {
    // the interpolated v_p specialised at a start equals the direct expansion there
    let m = corpus::model("gouyou-beauchamps").unwrap();
    let vs = expansion::interpolate_vp(&m, 2).unwrap();
    for (u, v) in [(0, 0), (3, 1), (2, 5)] {
        let e = expansion::expand_from_start(&m, &[u, v], 2).unwrap();
        for p in 1..=2 {
            assert_eq!(&expansion::specialize_start(&vs[p - 1], u, v).unwrap(), e.v(p));
        }
    }
}

#[test]
fn drifted_model_expansion_matches_counts() {
    // east step doubled: nonzero drift, same group as the simple walk
    let m = orbitwalk::model::Model::parse("name drift\ndim 2\nstep 1 0 2\nstep 0 1 1\nstep -1 0 1\nstep 0 -1 1\n")
        .unwrap();
    let e = expansion::expand(&m, 3).unwrap();
    let end = [1i64, 1];
    let s = endpoint_series(&m, &[0, 0], &[end.to_vec()], 160).unwrap();
    let exact = orbitwalk::exactalg::rational::to_f64(&s[0][160]);
    let predicted = e.predict(160, &end, 3, 256).unwrap().to_f64();
    assert!(((predicted - exact) / exact).abs() < 1e-3, "{} vs {}", predicted, exact);
}
