use std::collections::{HashMap, HashSet};

use crowdvote::tasking::{allocate, AllocationConfig, WorkerProfile};
use proptest::prelude::*;

fn workers(n: usize) -> Vec<WorkerProfile> {
    (0..n)
        .map(|i| WorkerProfile {
            worker_id: format!("w{i:03}"),
            native_language: "en".into(),
            other_languages: vec![],
        })
        .collect()
}

/// (tasks, workers, repetitions, cap) with enough capacity.
fn feasible() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (1usize..=5, 1usize..=20, 0usize..=200).prop_flat_map(|(r, cap, tasks)| {
        let min_workers = r.max((tasks * r).div_ceil(cap));
        (Just(tasks), min_workers..=min_workers + 10, Just(r), Just(cap))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn allocation_is_valid((n_tasks, n_workers, r, cap) in feasible(), seed in any::<u64>(), rot in 0usize..50) {
        let tasks: Vec<String> = (0..n_tasks).map(|i| format!("t{i:04}")).collect();
        let pool = workers(n_workers);
        let config = AllocationConfig::new(r, cap, seed);
        let out = allocate(&tasks, &pool, &config).unwrap();
        prop_assert_eq!(out.len(), n_tasks * r);
        let mut per_task: HashMap<&str, usize> = HashMap::new();
        let mut per_worker: HashMap<&str, usize> = HashMap::new();
        let mut pairs = HashSet::new();
        for a in &out {
            *per_task.entry(&a.task_id).or_default() += 1;
            *per_worker.entry(&a.worker_id).or_default() += 1;
            prop_assert!(pairs.insert((&a.task_id, &a.worker_id)));
        }
        prop_assert!(per_task.values().all(|c| *c == r));
        prop_assert!(per_worker.values().all(|c| *c <= cap));

        let mut reordered = pool.clone();
        reordered.rotate_left(rot % n_workers.max(1));
        let mut rev_tasks = tasks.clone();
        rev_tasks.reverse();
        prop_assert_eq!(allocate(&rev_tasks, &reordered, &config).unwrap(), out);
    }
}
