use cgwt::analysis::rescaled_height;
use cgwt::{cyclic_shift, OffspringDistribution, OrderedTree, TreeSampler};
use cgwt::sampler::stream_rng;
use proptest::prelude::*;

/// Unit-mean finite law: raw tail weights on `2..`, scaled so that the tail
/// carries mean `u`, then `w_1 = 1 - u` and `w_0` takes the remaining mass.
fn finite_law() -> impl Strategy<Value = OffspringDistribution> {
    (prop::collection::vec(0.0f64..1.0, 1..6), 0.05f64..0.95).prop_filter_map("empty tail", |(raw, u)| {
        let tail_mean: f64 = raw.iter().enumerate().map(|(i, r)| (i + 2) as f64 * r).sum();
        if tail_mean < 1e-3 {
            return None;
        }
        let scale = u / tail_mean;
        let tail: Vec<f64> = raw.iter().map(|r| r * scale).collect();
        let w0 = 1.0 - (1.0 - u) - tail.iter().sum::<f64>();
        let mut w = vec![w0, 1.0 - u];
        w.extend(tail);
        Some(OffspringDistribution::finite(w))
    })
}

fn any_law() -> impl Strategy<Value = OffspringDistribution> {
    prop_oneof![
        Just(OffspringDistribution::geometric()),
        (0.01f64..0.49).prop_map(OffspringDistribution::unary_binary),
        finite_law(),
    ]
}

/// Allocation of `n - 1` balls into `n` boxes.
fn allocation() -> impl Strategy<Value = Vec<usize>> {
    (1usize..60)
        .prop_flat_map(|n| prop::collection::vec(0..n, n - 1).prop_map(move |cuts| (n, cuts)))
        .prop_map(|(n, cuts)| {
            let mut counts = vec![0usize; n];
            for c in cuts {
                counts[c] += 1;
            }
            counts
        })
}

/// Random degree sequence of a tree, via the cycle lemma.
fn degree_sequence() -> impl Strategy<Value = Vec<usize>> {
    allocation().prop_map(|x| cyclic_shift(&x).expect("valid allocation").0.to_vec())
}

proptest! {
    #[test]
    fn generated_laws_validate(w in finite_law()) {
        prop_assert!(w.validate().is_ok(), "{w:?}");
    }

    #[test]
    fn psi_hat_strictly_increasing(w in any_law(), a in 0.01f64..0.98, b in 0.01f64..0.98) {
        prop_assume!((a - b).abs() > 1e-3);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let single = w.psi_hat_at_zero() == w.nu_hat();
        let (x, y) = (w.psi_hat(lo).unwrap(), w.psi_hat(hi).unwrap());
        if single {
            prop_assert!((x - y).abs() < 1e-9);
        } else {
            prop_assert!(x < y, "{w:?}: psi({lo}) = {x}, psi({hi}) = {y}");
        }
    }

    #[test]
    fn shift_invariants(w in any_law(), frac in 0.02f64..0.98) {
        let (lower, upper) = w.alpha_range();
        prop_assume!(upper > lower);
        let upper = upper.min(0.95);
        let alpha = lower + frac * (upper - lower);
        let s = w.alpha_shift(alpha).unwrap();
        prop_assert_eq!(s.weight(0), alpha);
        let span = s.w_star.len().max(2);
        let mass: f64 = (0..span).map(|j| s.weight(j)).sum();
        let mean: f64 = (0..span).map(|j| j as f64 * s.weight(j)).sum();
        prop_assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
        prop_assert!((mean - 1.0).abs() < 1e-10, "mean {mean}");
        for j in 1..span.min(60) {
            let direct = s.c * w.weight(j) * s.t_star.powi(j as i32 - 1);
            prop_assert!((s.weight(j) - direct).abs() < 1e-10);
        }
        let d1 = w.theta_derivative(s.t_star, 1).unwrap();
        let d2 = w.theta_derivative(s.t_star, 2).unwrap();
        prop_assert!((s.sigma_star_sq - s.t_star * d2 / d1).abs() < 1e-10);
    }

    #[test]
    fn degree_sequence_roundtrip(d in degree_sequence()) {
        let t = OrderedTree::from_degree_sequence(&d).unwrap();
        prop_assert_eq!(t.degree_sequence().to_vec(), d.clone());
        prop_assert_eq!(OrderedTree::from_parens(&t.to_parens()).unwrap(), t.clone());
        prop_assert_eq!(OrderedTree::from_counts_line(&t.to_counts_line()).unwrap(), t.clone());
        prop_assert_eq!(t.leaf_count(), d.iter().filter(|&&x| x == 0).count());
    }

    #[test]
    fn right_minima_height(d in degree_sequence()) {
        let t = OrderedTree::from_degree_sequence(&d).unwrap();
        let s = t.lukasiewicz().values;
        let n = t.len();
        let brute: Vec<i64> = (0..n)
            .map(|l| (0..l).filter(|&j| s[j] == *s[j..=l].iter().min().unwrap()).count() as i64)
            .collect();
        prop_assert_eq!(t.height().values, brute.clone());
        prop_assert_eq!(t.lukasiewicz().height_from_lukasiewicz().unwrap().values, brute);
    }

    #[test]
    fn contour_embeds_height(d in degree_sequence()) {
        let t = OrderedTree::from_degree_sequence(&d).unwrap();
        let h = t.height().values;
        let c = t.contour().values;
        let m = t.m_times();
        prop_assert_eq!(c.len(), 2 * t.len() - 1);
        for l in 0..t.len() {
            prop_assert_eq!(m[l] as i64, 2 * l as i64 - h[l]);
            prop_assert_eq!(c[m[l]], h[l]);
            if l + 1 < t.len() {
                for &ck in &c[m[l]..m[l + 1]] {
                    prop_assert!(h[l + 1] - 1 <= ck && ck <= h[l]);
                }
            }
        }
    }

    #[test]
    fn cyclic_shift_unique(x in allocation()) {
        let n = x.len();
        let (seq, r) = cyclic_shift(&x).unwrap();
        let rotated: Vec<usize> = x[r..].iter().chain(&x[..r]).copied().collect();
        prop_assert_eq!(seq.to_vec(), rotated);
        prop_assert!(OrderedTree::from_degree_sequence(&seq).is_ok());
        let valid = (0..n)
            .filter(|&q| {
                let y: Vec<usize> = x[q..].iter().chain(&x[..q]).copied().collect();
                OrderedTree::from_degree_sequence(&y).is_ok()
            })
            .count();
        prop_assert_eq!(valid, 1);
    }

    #[test]
    fn rescaled_height_ignores_labels(d in degree_sequence(), seed in any::<u64>(), sigma in 0.1f64..3.0) {
        use rand::seq::SliceRandom;
        let t = OrderedTree::from_degree_sequence(&d).unwrap();
        let n = t.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut stream_rng(seed, 0));
        let mut lists = vec![Vec::new(); n];
        for v in 0..n {
            lists[perm[v]] = t.children(v).iter().map(|&c| perm[c]).collect();
        }
        let relabelled = OrderedTree::from_child_lists(&lists, perm[t.root()]).unwrap();
        prop_assert_eq!(&relabelled, &t);
        prop_assert_eq!(rescaled_height(&relabelled, sigma), rescaled_height(&t, sigma));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_trees_have_requested_shape(seed in any::<u64>(), n in 2usize..400, frac in 0.05f64..0.9) {
        let w = OffspringDistribution::geometric();
        let k = ((frac * n as f64) as usize).clamp(1, n - 1);
        let sampler = TreeSampler::new(&w, k, n).unwrap();
        let t = sampler.sample(&mut stream_rng(seed, 0)).unwrap().tree;
        prop_assert_eq!((t.len(), t.leaf_count()), (n, k));
    }
}
