mod oracles;

use attrigraph_core::signal::{levenshtein_distance, levenshtein_similarity};
use oracles::dp_levenshtein;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn strings_over(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut all = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let next: Vec<String> = frontier
            .iter()
            .flat_map(|s| alphabet.iter().map(move |c| format!("{s}{c}")))
            .collect();
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

#[test]
fn known_values() {
    assert_eq!(levenshtein_similarity("abc", "abc"), 1.0);
    assert_eq!(levenshtein_similarity("", ""), 1.0);
    assert_eq!(levenshtein_similarity("", "abc"), 0.0);
    assert!((levenshtein_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
    assert_eq!(
        dp_levenshtein("filebox", "myfaves"),
        levenshtein_distance("filebox", "myfaves")
    );
}

#[test]
fn short_strings_over_three_letters() {
    // all 1093 strings of length <= 6, every ordered pair
    let strings = strings_over(&['a', 'b', 'c'], 6);
    assert_eq!(strings.len(), 1093);
    for a in &strings {
        for b in &strings {
            assert_eq!(
                levenshtein_distance(a, b),
                dp_levenshtein(a, b),
                "{a} / {b}"
            );
        }
    }
}

fn random_unicode<R: Rng>(rng: &mut R) -> String {
    const POOLS: [(u32, u32); 5] = [
        (0x61, 0x66),
        (0x430, 0x435),
        (0x4E00, 0x4E04),
        (0x1F600, 0x1F603),
        (0xE9, 0xEB),
    ];
    let len = rng.gen_range(0..10);
    (0..len)
        .map(|_| {
            let (lo, hi) = POOLS[rng.gen_range(0..POOLS.len())];
            char::from_u32(rng.gen_range(lo..=hi)).unwrap()
        })
        .collect()
}

#[test]
fn random_unicode_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let (a, b) = (random_unicode(&mut rng), random_unicode(&mut rng));
        let d = dp_levenshtein(&a, &b);
        assert_eq!(levenshtein_distance(&a, &b), d);
        assert_eq!(strsim::levenshtein(&a, &b), d);
        let m = a.chars().count().max(b.chars().count());
        let want = if m == 0 {
            1.0
        } else {
            1.0 - d as f64 / m as f64
        };
        assert_eq!(levenshtein_similarity(&a, &b), want);
        assert_eq!(
            levenshtein_similarity(&a, &b),
            levenshtein_similarity(&b, &a)
        );
    }
}
