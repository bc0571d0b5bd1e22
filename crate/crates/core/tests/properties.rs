use gammaclust::metric::{
    delta, delta_sets, delta_uniform, load_space, partition_distance, Clustering, MetricSpace,
};
use proptest::prelude::*;

fn euclid(points: &[Vec<f64>], weights: Option<Vec<f64>>) -> MetricSpace {
    let d = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let weights = weights.map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    });
    load_space(d, weights).unwrap()
}

prop_compose! {
    fn space(max_n: usize)(n in 2..=max_n)
        (pts in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), n),
         w in prop::collection::vec(0.05..1.0f64, n)) -> MetricSpace {
        euclid(&pts, Some(w))
    }
}

prop_compose! {
    fn space_and_sets(max_n: usize)(s in space(max_n))
        (a in prop::collection::vec(any::<bool>(), s.n()),
         b in prop::collection::vec(any::<bool>(), s.n()),
         c in prop::collection::vec(any::<bool>(), s.n()),
         s in Just(s)) -> (MetricSpace, Vec<usize>, Vec<usize>, Vec<usize>) {
        let pick = |m: &[bool], fallback: usize| {
            let v: Vec<usize> = (0..m.len()).filter(|&i| m[i]).collect();
            if v.is_empty() { vec![fallback % m.len()] } else { v }
        };
        (s.clone(), pick(&a, 0), pick(&b, 1), pick(&c, 2))
    }
}

prop_compose! {
    fn space_and_labels(max_n: usize, max_k: i32)(s in space(max_n))
        (a in prop::collection::vec(0..max_k, s.n()),
         b in prop::collection::vec(0..max_k, s.n()),
         c in prop::collection::vec(0..max_k, s.n()),
         s in Just(s)) -> (MetricSpace, Clustering, Clustering, Clustering) {
        (s, Clustering::compact(&a), Clustering::compact(&b), Clustering::compact(&c))
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// 1 − max over injective part matchings of the overlap mass.
fn brute_partition_distance(s: &MetricSpace, a: &Clustering, b: &Clustering) -> f64 {
    let (pa, pb) = (a.parts(), b.parts());
    let overlap = |i: usize, j: usize| -> f64 {
        pa[i]
            .iter()
            .filter(|x| pb[j].contains(x))
            .map(|&x| s.weight(x))
            .sum()
    };
    fn best(
        i: usize,
        used: &mut Vec<bool>,
        ka: usize,
        kb: usize,
        f: &dyn Fn(usize, usize) -> f64,
    ) -> f64 {
        if i == ka {
            return 0.0;
        }
        let mut v = best(i + 1, used, ka, kb, f);
        for j in 0..kb {
            if !used[j] {
                used[j] = true;
                v = v.max(f(i, j) + best(i + 1, used, ka, kb, f));
                used[j] = false;
            }
        }
        v
    }
    1.0 - best(0, &mut vec![false; pb.len()], pa.len(), pb.len(), &overlap)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn delta_sets_symmetric_and_triangle((s, a, b, c) in space_and_sets(8)) {
        let ab = delta_sets(&s, &a, &b).unwrap();
        let ba = delta_sets(&s, &b, &a).unwrap();
        let bc = delta_sets(&s, &b, &c).unwrap();
        let ac = delta_sets(&s, &a, &c).unwrap();
        prop_assert!(close(ab, ba));
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn partition_distance_is_pseudometric((s, a, b, c) in space_and_labels(8, 4)) {
        let ab = partition_distance(&s, &a, &b).unwrap();
        let ba = partition_distance(&s, &b, &a).unwrap();
        let bc = partition_distance(&s, &b, &c).unwrap();
        let ac = partition_distance(&s, &a, &c).unwrap();
        prop_assert!(close(ab, ba));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(partition_distance(&s, &a, &a).unwrap().abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn partition_distance_matches_brute_force((s, a, b, _c) in space_and_labels(9, 6)) {
        let fast = partition_distance(&s, &a, &b).unwrap();
        let slow = brute_partition_distance(&s, &a, &b);
        prop_assert!(close(fast, slow), "{fast} vs {slow}");
    }

    #[test]
    fn delta_of_disjoint_union((s, a, b, _c) in space_and_sets(8)) {
        let b: Vec<usize> = b.into_iter().filter(|y| !a.contains(y)).collect();
        prop_assume!(!b.is_empty());
        let mut u = a.clone();
        u.extend(&b);
        for x in 0..s.n() {
            let want = (s.mass(&a) * delta(&s, x, &a).unwrap() + s.mass(&b) * delta(&s, x, &b).unwrap()) / s.mass(&u);
            prop_assert!(close(delta(&s, x, &u).unwrap(), want));
        }
    }

    #[test]
    fn delta_between_min_and_max_distance((s, a, _b, _c) in space_and_sets(8)) {
        for x in 0..s.n() {
            let v = delta(&s, x, &a).unwrap();
            let lo = a.iter().map(|&y| s.d(x, y)).fold(f64::INFINITY, f64::min);
            let hi = a.iter().map(|&y| s.d(x, y)).fold(0.0, f64::max);
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }

    #[test]
    fn delta_uniform_equals_delta_under_uniform_weights(
        pts in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 2..9),
        mask in prop::collection::vec(any::<bool>(), 9),
    ) {
        let s = euclid(&pts, None);
        let mut a: Vec<usize> = (0..s.n()).filter(|&i| mask[i]).collect();
        if a.is_empty() {
            a.push(0);
        }
        for x in 0..s.n() {
            prop_assert!(close(delta_uniform(&s, x, &a).unwrap(), delta(&s, x, &a).unwrap()));
        }
    }
}
