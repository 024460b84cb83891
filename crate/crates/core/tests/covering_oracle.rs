mod common;

use common::{count_preimages, small_instance};
use moreau::{verdict, Existence, Uniqueness, VerdictConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn verdicts_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = VerdictConfig::default();
    let mut seen = [0usize; 3];
    for case in 0..400 {
        let inst = small_instance(&mut rng);
        let v = verdict(&inst.g_fn(), &inst.kernel, &inst.xprime, &cfg).unwrap();
        let n = count_preimages(&inst);
        let expected = match n {
            0 => (Existence::No, Uniqueness::Unknown),
            1 => (Existence::Yes, Uniqueness::Unique),
            _ => (Existence::Yes, Uniqueness::NotUnique),
        };
        assert_eq!((v.existence, v.uniqueness), expected, "case {case}: {} solutions, g = {:?}, rows = {:?}, X' = {:?}", n, inst.g, inst.rows, inst.xprime);
        seen[n.min(2)] += 1;
        if v.existence == Existence::Yes {
            assert!(v.certificate.pass, "case {case}");
        }
    }
    assert!(seen.iter().all(|&c| c > 20), "{seen:?}");
}
