//! Property tests for invariants that hold for every input, not just fixed samples.

use froblab::frobenius_an::{canonical_chart, canonical_metric, sample_semisimple};
use froblab::hydro::{conserved_q, conserved_q_poly, d_dx, from_modified, to_modified};
use froblab::numerics::rng;
use froblab::polyalg::C;
use froblab::strata::{enumerate_strata, frame_gram, sample_stratum_point, tangent_frame};
use proptest::prelude::*;

fn distinct_reals(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, m).prop_filter("separated", |v| {
        v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| (a - b).abs() > 0.05))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modified_variables_round_trip(v in (2usize..=5).prop_flat_map(distinct_reals)) {
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let back = to_modified(&from_modified(&v)).unwrap();
        for (a, b) in back.iter().zip(&sorted) {
            prop_assert!((a - b).abs() < 1e-7, "{back:?} vs {sorted:?}");
        }
    }

    #[test]
    fn conserved_density_is_symmetric(v in prop::collection::vec(-2.0f64..2.0, 2..=4), n in 1u32..=4, shift in 0usize..4) {
        let m = v.len();
        let direct: f64 = conserved_q(n, m, &v);
        let via_poly = conserved_q_poly(n, m).eval_f64(&v);
        prop_assert!((direct - via_poly).abs() < 1e-10 * (1.0 + direct.abs()));
        let mut rotated = v.clone();
        rotated.rotate_left(shift % m);
        let r: f64 = conserved_q(n, m, &rotated);
        prop_assert!((direct - r).abs() < 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn periodic_derivative_telescopes(f in prop::collection::vec(-1.0f64..1.0, 16..64)) {
        let s: f64 = d_dx(&f, 0.1).iter().sum();
        prop_assert!(s.abs() < 1e-12);
    }

    #[test]
    fn residues_of_canonical_metric_sum_to_zero(seed in any::<u64>(), m in 2usize..=6) {
        let pt = sample_semisimple(m, &mut rng(seed));
        let ch = canonical_chart(&pt).unwrap();
        let g = canonical_metric(&ch, &pt).unwrap().diag();
        let scale = g.iter().fold(1.0f64, |s, x| s.max(x.norm()));
        prop_assert!(g.iter().sum::<C>().norm() / scale < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stratum_frames_are_orthogonal(seed in any::<u64>(), m in 2usize..=4, pick in 0usize..64) {
        let strata = enumerate_strata(m).unwrap();
        let spec = &strata[pick % strata.len()];
        let pt = sample_stratum_point(spec, &mut rng(seed));
        let fr = tangent_frame(&pt).unwrap();
        let gram = frame_gram(&pt, &fr).unwrap();
        let scale = gram.iter().enumerate().fold(1.0f64, |s, (i, r)| s.max(r[i].norm()));
        for (i, row) in gram.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if i != j {
                    prop_assert!(x.norm() / scale < 1e-9, "{spec}: {}", x.norm());
                }
            }
        }
    }
}
