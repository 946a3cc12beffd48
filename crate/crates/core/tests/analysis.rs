use qdc::analysis::{
    critical_strengths, find_pc_bracket, find_pr_bracket, quenched_capacity, realization_capacities, sweep, Problem, QuenchConfig,
    ScanConfig, SweepAxis,
};
use qdc::capacity::{noisy_capacity, EncodingStrategy, PartyLayout};
use qdc::channels::{realization_rng, sample_realization, ChannelKind, ChannelSpec, DrawPolicy};
use qdc::exec::{ordered_sum, with_threads, Execution};
use qdc::states::{build, ResourceState};
use std::f64::consts::FRAC_1_SQRT_2;

fn ghz(n: usize) -> ResourceState {
    ResourceState::Gghz { n_qubits: n, x: FRAC_1_SQRT_2 }
}

fn random_depolarizing(alpha: f64, p: f64, eps: f64) -> ChannelSpec {
    ChannelSpec::random(ChannelKind::Depolarizing, alpha, p, eps, DrawPolicy::IndependentPerQubit).unwrap()
}

#[test]
fn quench_independent_of_evaluation_order() {
    let state = ghz(3);
    let layout = PartyLayout::one_receiver(2).unwrap();
    let spec = random_depolarizing(0.3, 0.05, 0.7);
    let qc = QuenchConfig { realizations: 300, master_seed: 11, ..QuenchConfig::default() };
    let forward = realization_capacities(&state, &layout, &spec, &qc).unwrap();

    let rho = build(&state).unwrap();
    let mut reversed = vec![0.0; qc.realizations];
    for k in (0..qc.realizations).rev() {
        let mut rng = realization_rng(qc.master_seed, k as u64);
        let ks = sample_realization(&spec, 2, &mut rng).unwrap();
        reversed[k] = noisy_capacity(&rho, &layout, &spec, Some(&ks), &EncodingStrategy::Identity).unwrap().capacity_bits;
    }
    assert_eq!(forward, reversed);
    assert_eq!(ordered_sum(&forward).to_bits(), ordered_sum(&reversed).to_bits());

    let seq = QuenchConfig { execution: Execution::Sequential, ..qc.clone() };
    let base = quenched_capacity(&state, &layout, &spec, &seq).unwrap();
    for threads in [1, 2, 5] {
        let r = with_threads(threads, || quenched_capacity(&state, &layout, &spec, &qc).unwrap());
        assert_eq!(r.mean_capacity_bits.to_bits(), base.mean_capacity_bits.to_bits());
        assert_eq!(r.std_error_bits.to_bits(), base.std_error_bits.to_bits());
    }
}

#[test]
fn standard_error_shrinks_like_inverse_sqrt() {
    let state = ghz(3);
    let layout = PartyLayout::one_receiver(2).unwrap();
    let spec = random_depolarizing(0.3, 0.03, 0.7);
    let run = |r| quenched_capacity(&state, &layout, &spec, &QuenchConfig { realizations: r, master_seed: 5, ..QuenchConfig::default() }).unwrap();
    let ratio = run(4000).std_error_bits / run(2000).std_error_bits;
    assert!((ratio / FRAC_1_SQRT_2 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn tiny_disorder_recovers_deterministic_capacity() {
    let state = ghz(3);
    let layout = PartyLayout::one_receiver(2).unwrap();
    let det = ChannelSpec::depolarizing(0.3, 0.1).unwrap();
    let rnd = random_depolarizing(0.3, 0.1, 1e-10);
    let q = quenched_capacity(&state, &layout, &rnd, &QuenchConfig { realizations: 200, ..QuenchConfig::default() }).unwrap();
    let c = Problem::new(state, layout, det, EncodingStrategy::Identity).unwrap().capacity().unwrap();
    assert!((q.mean_capacity_bits - c.capacity_bits).abs() < 1e-8);
    assert!(q.std_error_bits < 1e-8);
}

#[test]
fn brackets_straddle_thresholds() {
    let scan = ScanConfig::default();
    for (state, layout, alpha) in [
        (ghz(3), PartyLayout::one_receiver(2).unwrap(), 0.5),
        (ghz(4), PartyLayout::one_receiver(3).unwrap(), 0.9),
        (ResourceState::WUniform { n_qubits: 3 }, PartyLayout::one_receiver(2).unwrap(), 0.3),
    ] {
        let pr = Problem::new(state, layout, ChannelSpec::dephasing(alpha, 0.0).unwrap(), EncodingStrategy::Identity).unwrap();
        let bound = layout.classical_bound();
        let surplus = |p: f64| pr.with_p(p).unwrap().capacity().unwrap().capacity_bits - bound;
        let b = find_pc_bracket(&pr, &scan).unwrap().expect("p_c exists");
        assert!(b.width() <= scan.refine + 1e-15);
        assert!(surplus(b.below) > scan.collapse_tol);
        assert!(surplus(b.at) <= scan.collapse_tol);
        if let Some(r) = find_pr_bracket(&pr, &scan, b.at).unwrap() {
            assert!(r.below >= b.at);
            assert!(surplus(r.below) <= scan.collapse_tol);
            assert!(surplus(r.at) > scan.collapse_tol);
        }
    }
}

#[test]
fn critical_strength_shrinks_with_memory() {
    let scan = ScanConfig::default();
    for (n, senders) in [(3, 2), (4, 3)] {
        let mut last = f64::INFINITY;
        for alpha in [0.0, 0.3, 0.5, 0.7, 0.9] {
            let pr = Problem::new(ghz(n), PartyLayout::one_receiver(senders).unwrap(), ChannelSpec::dephasing(alpha, 0.0).unwrap(), EncodingStrategy::Identity)
                .unwrap();
            let cs = critical_strengths(&pr, &scan).unwrap();
            let pc = cs.p_c.unwrap();
            assert!(pc <= last + 1e-12, "alpha {alpha}: {pc} > {last}");
            last = pc;
            if let (Some(pc), Some(pr)) = (cs.p_c, cs.p_r) {
                assert!(pc <= pr);
            }
            if alpha == 0.0 {
                assert!(cs.p_r.is_none() && cs.p_a.is_none());
            }
        }
    }
}

#[test]
fn ghz_with_two_receivers_never_collapses() {
    let pr = Problem::new(ghz(4), PartyLayout::two_receivers(2, 1).unwrap(), ChannelSpec::dephasing(0.5, 0.0).unwrap(), EncodingStrategy::Identity).unwrap();
    assert_eq!(critical_strengths(&pr, &ScanConfig::default()).unwrap().p_c, None);
}

#[test]
fn sweep_rows_are_ordered_and_thread_independent() {
    let base = Problem::new(ghz(3), PartyLayout::one_receiver(2).unwrap(), ChannelSpec::dephasing(0.8, 0.0).unwrap(), EncodingStrategy::Identity).unwrap();
    let grid: Vec<f64> = (0..=10).rev().map(|i| i as f64 * 0.05).collect();
    let seq = sweep(&base, SweepAxis::P, &grid, None, Execution::Sequential).unwrap();
    assert!(seq.windows(2).all(|w| w[0].axis_value < w[1].axis_value));
    for threads in [1, 3] {
        let par = with_threads(threads, || sweep(&base, SweepAxis::P, &grid, None, Execution::Parallel).unwrap());
        assert_eq!(par, seq);
    }
    let single = sweep(&base, SweepAxis::StateParam, &[0.6], None, Execution::Parallel).unwrap();
    assert_eq!(single.len(), 1);
    assert!(sweep(&base, SweepAxis::P, &[0.7], None, Execution::Parallel).is_err());
}
