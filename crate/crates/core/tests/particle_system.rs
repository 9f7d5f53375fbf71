use fvlab::genealogy::{inhabitation_time, martingale_corrector, occupation_time, TimeSeries};
use fvlab::moran::{
    empirical_integral, run, EventLog, EventRecord, InitialDistribution, RunConfig, SamplingSchedule,
};
use fvlab::{StableParams, TestFunction};
use proptest::prelude::*;

fn config(alpha: f64, dim: usize, n: usize, seed: u64, schedule: SamplingSchedule) -> RunConfig {
    let p = StableParams::new(alpha, dim).unwrap();
    let mut c = RunConfig::new(p, schedule, n, 0.05, 2.0, seed);
    c.snapshot_times = vec![0.0, 0.5, 1.25, 2.0];
    c.tracked = vec![
        TestFunction::gaussian_bump(dim, 1.0).unwrap(),
        TestFunction::constant(dim, 1.0).unwrap(),
    ];
    c
}

fn schedule(which: u8) -> SamplingSchedule {
    match which % 3 {
        0 => SamplingSchedule::constant(0.5).unwrap(),
        1 => SamplingSchedule::exponential(1.0).unwrap(),
        _ => SamplingSchedule::polynomial(2.0).unwrap(),
    }
}

#[test]
fn event_log_rejects_time_reversal() {
    let mut log = EventLog::new();
    log.push(EventRecord { time: 1.0, source: 0, target: 1 }).unwrap();
    assert!(log.push(EventRecord { time: 1.0, source: 1, target: 0 }).is_err());
    assert!(log.push(EventRecord { time: 0.5, source: 1, target: 0 }).is_err());
    log.push(EventRecord { time: 1.5, source: 1, target: 0 }).unwrap();
    assert_eq!(log.count_until(1.2), 1);
}

#[test]
fn pruning_leaves_the_running_sums_alone() {
    let mut a = config(1.5, 2, 40, 9, schedule(1));
    a.prune = false;
    let mut b = a.clone();
    b.prune = true;
    let (ra, rb) = (run(&a).unwrap(), run(&b).unwrap());
    assert_eq!(ra.snapshots.len(), rb.snapshots.len());
    for (x, y) in ra.snapshots.iter().zip(&rb.snapshots) {
        assert_eq!(x.values, y.values);
    }
    assert!(rb.arena.len() <= ra.arena.len());
    let f = &a.tracked[0];
    let za = inhabitation_time(&ra.final_state, &ra.arena, f, 2.0).unwrap();
    let zb = inhabitation_time(&rb.final_state, &rb.arena, f, 2.0).unwrap();
    assert_eq!(za, zb);
}

#[test]
fn random_initial_laws_are_respected_at_time_zero() {
    let mut c = config(1.0, 1, 200, 4, schedule(0));
    c.initial = InitialDistribution::Empirical {
        atoms: vec![vec![-2.0], vec![3.0]],
    };
    let out = run(&c).unwrap();
    let s0 = &out.snapshots[0].state;
    assert_eq!(s0.time(), 0.0);
    assert!(s0.positions().iter().all(|&x| x == -2.0 || x == 3.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn runs_keep_their_invariants(
        alpha in 0.5f64..=2.0,
        dim in 1usize..=2,
        n in 2usize..40,
        seed in any::<u64>(),
        which in any::<u8>(),
    ) {
        let c = config(alpha, dim, n, seed, schedule(which));
        let out = run(&c).unwrap();
        let one = TestFunction::constant(dim, 1.0).unwrap();
        let f = &c.tracked[0];

        // Event times strictly increase and indices are in range.
        let ev = out.events.records();
        prop_assert!(ev.windows(2).all(|w| w[0].time < w[1].time));
        prop_assert!(ev.iter().all(|e| e.source < n && e.target < n && e.source != e.target));
        prop_assert!(ev.iter().all(|e| e.time > 0.0 && e.time <= 2.0));
        prop_assert_eq!(out.event_count, ev.len());

        let mut ys = Vec::new();
        let mut zs = Vec::new();
        for (snap, &t) in out.snapshots.iter().zip(&c.snapshot_times) {
            prop_assert_eq!(snap.time(), t);
            prop_assert_eq!(snap.state.len(), n);
            prop_assert_eq!(empirical_integral(&snap.state, &one), 1.0);
            let c1 = snap.value(&one.name()).unwrap();
            prop_assert_eq!(c1.x, 1.0);
            prop_assert_eq!(c1.y, t);
            prop_assert_eq!(c1.z, t);
            prop_assert_eq!(c1.m, 0.0);
            let v = snap.value(&f.name()).unwrap();
            prop_assert!((v.x - empirical_integral(&snap.state, f)).abs() <= 1e-14);
            prop_assert!((v.m - (v.z - v.y)).abs() <= 1e-12 * (1.0 + v.z.abs()));
            prop_assert!(v.qv_jump >= 0.0 && v.qv_compensator >= 0.0 && v.qv_motion >= 0.0);
            prop_assert_eq!(occupation_time(&out.trace, f, t).unwrap(), v.y);
            ys.push(v.y);
            zs.push(v.z);
        }

        let times = c.snapshot_times.clone();
        let m = martingale_corrector(
            &TimeSeries::new(times.clone(), zs.clone()).unwrap(),
            &TimeSeries::new(times.clone(), ys.clone()).unwrap(),
        ).unwrap();
        for (k, &t) in times.iter().enumerate() {
            prop_assert_eq!(m.at(t).unwrap(), zs[k] - ys[k]);
        }

        // Every living lineage resolves to a root at time 0 and ends where its
        // particle is.
        let state = &out.final_state;
        out.arena.check_integrity(state.lineage_ids()).unwrap();
        for (i, &id) in state.lineage_ids().iter().enumerate() {
            prop_assert!(out.arena.last_time(id) <= 2.0);
            let path = out.arena.ancestral_path(id, 2.0).unwrap();
            prop_assert_eq!(path.at(2.0), state.position(i));
            prop_assert_eq!(path.at(5.0), state.position(i));
            let chain = out.arena.lineage(id).unwrap();
            prop_assert_eq!(out.arena.birth_time(chain[0]), 0.0);
            prop_assert!(chain.windows(2).all(|w| out.arena.birth_time(w[0]) <= out.arena.birth_time(w[1])));
        }
        let z = inhabitation_time(state, &out.arena, f, 2.0).unwrap();
        prop_assert_eq!(z, *zs.last().unwrap());
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>(), stream in 0u64..8) {
        let mut c = config(1.2, 1, 12, seed, schedule(2));
        c.stream = stream;
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        prop_assert_eq!(&a.events, &b.events);
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert_eq!(&a.final_state, &b.final_state);
    }
}
