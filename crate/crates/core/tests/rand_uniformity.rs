use fewsel::strategies::select_rand;

#[test]
fn single_pick_is_uniform_over_seeds() {
    let mut hits = [0usize; 10];
    for seed in 0..10_000 {
        let ids = select_rand(10, 1, seed).unwrap();
        hits[ids[0]] += 1;
    }
    for (id, &h) in hits.iter().enumerate() {
        assert!((900..=1100).contains(&h), "id {id} picked {h} times");
    }
}

#[test]
fn draw_is_a_prefix_of_a_permutation() {
    for seed in 0..50 {
        let full = select_rand(30, 30, seed).unwrap();
        let mut sorted = full.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..30).collect::<Vec<_>>());
        assert_eq!(select_rand(30, 8, seed).unwrap(), full[..8]);
    }
}
