use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crossmer::filter::{base_count_pass, enumerate_neighbors, max_neighbor_count};
use crossmer::matcher::{edits_vector, PackedKmer, SaModel};
use crossmer::oracle::{brute_force_edits_vector, edit_distance, hamming_distance, histogram_l1};
use crossmer::readgen::{inject_errors, ErrorProfile};
use crossmer::seq::{compute_histogram, pack_histogram_key, unpack_histogram_key, Base, BaseHistogram, Sequence};

fn bases(len: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = Vec<Base>> {
    prop::collection::vec((0u8..4).prop_map(Base::from_code), len)
}

fn histogram(k: u32) -> impl Strategy<Value = BaseHistogram> {
    (0..=k).prop_flat_map(move |a| (Just(a), 0..=k - a)).prop_flat_map(move |(a, t)| {
        (0..=k - a - t).prop_map(move |g| BaseHistogram::new(a, t, g, k - a - t - g))
    })
}

proptest! {
    #[test]
    fn key_roundtrip(h in histogram(63)) {
        let key = pack_histogram_key(&h).unwrap();
        prop_assert!(key < 1 << 18);
        prop_assert_eq!(unpack_histogram_key(key, 63), Some(h));
    }

    #[test]
    fn packed_kmer_roundtrip(s in bases(1..=64)) {
        let p = PackedKmer::pack(&s).unwrap();
        prop_assert_eq!(p.unpack(), s.clone());
        prop_assert_eq!(p.histogram(), compute_histogram(&s));
        let (hi, lo) = p.planes();
        prop_assert_eq!(PackedKmer::from_planes(hi, lo, s.len()).unwrap(), p);
    }

    #[test]
    fn l1_bounded_by_twice_edit_distance(a in bases(0..24), b in bases(0..24)) {
        let ed = edit_distance(&a, &b) as u32;
        prop_assert!(histogram_l1(&compute_histogram(&a), &compute_histogram(&b)) <= 2 * ed);
    }

    #[test]
    fn edit_distance_metric(a in bases(0..16), b in bases(0..16), c in bases(0..16)) {
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
        prop_assert_eq!(edit_distance(&a, &a), 0);
    }

    #[test]
    fn neighbor_matching_never_exceeds_hamming((a, b) in (1usize..=64).prop_flat_map(|k| (bases(k), bases(k)))) {
        let ev = edits_vector(&PackedKmer::pack(&a).unwrap(), &PackedKmer::pack(&b).unwrap()).unwrap();
        prop_assert_eq!(ev.to_bools(), brute_force_edits_vector(&a, &b).unwrap());
        prop_assert!(ev.edit_count() as usize <= hamming_distance(&a, &b).unwrap());
    }

    #[test]
    fn filter_symmetric(h1 in histogram(16), h2 in histogram(16), eth in 0u32..6) {
        prop_assert_eq!(base_count_pass(&h1, &h2, eth), base_count_pass(&h2, &h1, eth));
    }

    #[test]
    fn neighbors_exact(h in histogram(20), eth in 0u32..5) {
        let ns = enumerate_neighbors(&h, eth, 20);
        prop_assert!(ns.len() <= max_neighbor_count(20, eth));
        prop_assert!(ns.windows(2).all(|w| w[0] < w[1]));
        let brute: Vec<_> = crossmer::seq::all_histograms(20).filter(|o| base_count_pass(&h, o, eth)).collect();
        prop_assert_eq!(ns, brute);
    }

    #[test]
    fn ideal_sa_is_step(ec in 0u32..65, t in 0u32..65) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        prop_assert_eq!(SaModel::ideal(t).decide(ec, &mut rng), ec <= t);
    }

    #[test]
    fn error_free_profile_copies(s in bases(1..200), seed in any::<u64>()) {
        let seq = Sequence::new(s.clone()).unwrap();
        prop_assert_eq!(inject_errors(&seq, &ErrorProfile::none(), seed), s);
    }

    #[test]
    fn injection_deterministic(s in bases(1..200), seed in any::<u64>()) {
        let seq = Sequence::new(s).unwrap();
        let p = ErrorProfile::new(0.05, 0.05, 0.05).unwrap();
        prop_assert_eq!(inject_errors(&seq, &p, seed), inject_errors(&seq, &p, seed));
    }
}
