use cfmon_core::modes::score;
use cfmon_core::{
    compute_large_scale, generate_topology, greedy_assign, ModeAssignment, PowerRule, SimParams,
    DEFAULT_E_MIN,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn greedy_never_beats_exhaustive_and_is_usually_close() {
    let params = SimParams {
        num_mns: 6,
        num_pairs: 2,
        ..SimParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut close = 0;
    let trials = 15;
    for _ in 0..trials {
        let topo = generate_topology(&params, &mut rng).unwrap();
        let ls = compute_large_scale(&topo, &params, &mut rng).unwrap();
        let best = (0..1u64 << 6)
            .map(|mask| score(&ModeAssignment::from_mask(6, mask), &ls, &params, &PowerRule::Equal).unwrap())
            .fold(0.0, f64::max);
        let trace = greedy_assign(&ls, &params, DEFAULT_E_MIN, &PowerRule::Equal).unwrap();
        let got = trace.final_min_success_prob();
        assert!(got <= best + 1e-15);
        let vals = trace.accepted_values();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        if got >= 0.9 * best {
            close += 1;
        }
    }
    assert!(close * 10 >= trials * 8, "{close}/{trials}");
}
