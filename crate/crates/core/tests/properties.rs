use mnm::analysis::mi_matrix;
use mnm::distribution::{
    bivariate_marginal, boltzmann_objective, product_distribution, univariate_marginals,
    SUM_TOLERANCE,
};
use mnm::landscape::NmLandscape;
use mnm::mop::{evaluate_objective, full_table, make_bi_objective, BitVector};
use mnm::pareto::{pareto_front, pareto_front_pairwise, pareto_front_sorted};
use mnm::table::Matrix;
use proptest::prelude::*;

fn problem() -> impl Strategy<Value = (usize, usize, usize, f64, u64)> {
    (2usize..=8, prop::sample::select(vec![1.0, 5.0, 19.0, 36.0]), any::<u64>()).prop_flat_map(
        |(n, sigma, seed)| {
            (1..=n).prop_flat_map(move |m2| {
                (1..=m2).prop_map(move |m1| (n, m1, m2, sigma, seed))
            })
        },
    )
}

fn table_strategy(m: usize) -> impl Strategy<Value = Matrix> {
    (1usize..200, any::<bool>()).prop_flat_map(move |(rows, coarse)| {
        let cell = if coarse {
            (0u8..4).prop_map(f64::from).boxed()
        } else {
            (-1.0f64..1.0).boxed()
        };
        prop::collection::vec(cell, rows * m)
            .prop_map(move |data| Matrix::from_vec(rows, m, data).unwrap())
    })
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalization_keeps_exact_order((n, m1, m2, sigma, seed) in problem()) {
        let p = make_bi_objective(&NmLandscape::generate(n, m2, sigma, seed).unwrap(), m1, m2).unwrap();
        let raw = full_table(&p, false).unwrap();
        let norm = full_table(&p, true).unwrap();
        for c in 0..2 {
            let (r, v, k) = (raw.column(c), norm.column(c), norm.ranks(c));
            prop_assert_eq!(raw.ranks(c), k);
            for a in 0..r.len() {
                for b in 0..r.len() {
                    let exact = k[a].cmp(&k[b]) as i8;
                    prop_assert_eq!(sign(r[a] - r[b]), exact);
                    prop_assert_eq!(sign(v[a] - v[b]), exact);
                }
            }
        }
    }

    #[test]
    fn rows_match_direct_evaluation((n, m1, m2, sigma, seed) in problem()) {
        let p = make_bi_objective(&NmLandscape::generate(n, m2, sigma, seed).unwrap(), m1, m2).unwrap();
        let raw = full_table(&p, false).unwrap();
        for s in 0..1usize << n {
            let x = BitVector::from_index(s as u64, n);
            for (c, spec) in p.objectives().iter().enumerate() {
                let direct = evaluate_objective(spec, &x).unwrap();
                let published = raw.values().get(s, c);
                // Equal unless an ulp step was needed to keep distinct exact
                // values distinct.
                prop_assert!((direct - published).abs() <= 8.0 * f64::EPSILON * direct.abs().max(1e-300),
                    "{} vs {}", direct, published);
            }
        }
    }

    #[test]
    fn increasing_maps_keep_the_front(t in table_strategy(2)) {
        let ranked: Vec<f64> = (0..t.rows())
            .flat_map(|r| {
                (0..t.cols())
                    .map(|c| t.column(c).iter().filter(|&&v| v < t.get(r, c)).count() as f64)
                    .collect::<Vec<_>>()
            })
            .collect();
        let ranked = Matrix::from_vec(t.rows(), t.cols(), ranked).unwrap();
        let scaled = Matrix::from_vec(t.rows(), t.cols(), t.data().iter().map(|v| v * 8.0 - 3.0).collect()).unwrap();
        let base = pareto_front(&t).unwrap().member_indices;
        prop_assert_eq!(&pareto_front(&ranked).unwrap().member_indices, &base);
        prop_assert_eq!(&pareto_front(&scaled).unwrap().member_indices, &base);
    }

    #[test]
    fn pairwise_and_sorted_fronts_agree(t in table_strategy(2)) {
        let a = pareto_front_pairwise(&t).unwrap();
        let b = pareto_front_sorted(&t).unwrap();
        prop_assert_eq!(a.member_indices, b.member_indices);
        prop_assert_eq!(a.front_points, b.front_points);
    }

    #[test]
    fn three_objective_fronts_are_mutually_non_dominated(t in table_strategy(3)) {
        let f = pareto_front(&t).unwrap();
        prop_assert!(!f.is_empty());
        for &i in &f.member_indices {
            for r in 0..t.rows() {
                let (a, b) = (t.row(r), t.row(i));
                let dominated = a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y);
                prop_assert!(!dominated);
            }
        }
    }

    #[test]
    fn landscape_json_round_trips(n in 1usize..9, sigma in 0.1f64..40.0, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let m = 1 + ((n - 1) as f64 * frac) as usize;
        let l = NmLandscape::generate(n, m, sigma, seed).unwrap();
        let text = l.to_json();
        let back = NmLandscape::from_json(&text).unwrap();
        prop_assert_eq!(&back, &l);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn distributions_are_consistent((n, m1, m2, sigma, seed) in problem(), temperature in 0.05f64..5.0) {
        let p = make_bi_objective(&NmLandscape::generate(n, m2, sigma, seed).unwrap(), m1, m2).unwrap();
        let t = full_table(&p, true).unwrap();
        for c in 0..2 {
            let b = boltzmann_objective(&t, c, temperature).unwrap();
            prop_assert!((b.probs().iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
            let marg = univariate_marginals(&b);
            for i in 0..n {
                for j in (i + 1)..n {
                    let pair = bivariate_marginal(&b, i, j).unwrap();
                    prop_assert!((pair.first()[1] - marg.p_one()[i]).abs() <= 1e-12);
                    prop_assert!((pair.second()[1] - marg.p_one()[j]).abs() <= 1e-12);
                }
            }
            let q = product_distribution(&marg);
            prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
            if n >= 2 {
                prop_assert!(mi_matrix(&q).unwrap().max() <= 1e-12);
            }
            let col = t.column(c);
            for a in 0..col.len() {
                for bi in 0..col.len() {
                    prop_assert_eq!(sign(b.probs()[a] - b.probs()[bi]), sign(col[a] - col[bi]));
                }
            }
        }
    }
}
