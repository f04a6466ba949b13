use std::collections::HashMap;

use crowdvote::aggregation::{aggregate_all, compute_reputation, Method, ReputationMode, Vote};
use crowdvote::choice::{Choice, CorrectSlot};
use crowdvote::corpus::WordRef;
use crowdvote::report::{accuracy_report, ReportMode};
use crowdvote::tasking::Task;
use proptest::prelude::*;

/// Vote logs over `tasks` tasks with three votes each from a pool of 6 workers.
fn vote_log() -> impl Strategy<Value = (Vec<Vote>, Vec<Task>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            proptest::collection::vec((proptest::sample::subsequence((0..6).collect::<Vec<_>>(), 3), proptest::collection::vec(0i64..5, 3)), n),
            proptest::collection::vec(0u8..5, n),
        )
    })
    .prop_map(|(rows, truths)| {
        let mut votes = Vec::new();
        let mut tasks = Vec::new();
        for (i, ((who, choices), truth)) in rows.into_iter().zip(truths).enumerate() {
            let task_id = format!("t{i:03}");
            for (w, c) in who.iter().zip(choices) {
                votes.push(Vote {
                    assignment_id: format!("{task_id}-w{w}"),
                    task_id: task_id.clone(),
                    worker_id: format!("w{w}"),
                    choice: Choice::new(c).unwrap(),
                    timestamp: votes.len() as u64,
                });
            }
            let (label, ground_truth) = if truth == 4 {
                ("S_1234", CorrectSlot::NoneOfTheAbove)
            } else {
                ("S_0124", CorrectSlot::Slot(truth))
            };
            tasks.push(Task {
                task_id: task_id.clone(),
                language_tag: if i % 2 == 0 { "ar".into() } else { "de".into() },
                word_ref: WordRef { headword: task_id.to_uppercase(), language: "ar".into() },
                spec_label: label.into(),
                audio_ref: String::new(),
                options: vec!["a".into(), "b".into(), "c".into(), "d".into()],
                ground_truth,
            });
        }
        (votes, tasks)
    })
}

fn accuracy(votes: &[Vote], tasks: &[Task], method: Method) -> usize {
    let truth: HashMap<_, _> = tasks.iter().map(|t| (t.task_id.clone(), t.ground_truth)).collect();
    aggregate_all(votes, method, &ReputationMode::Unsupervised, 3)
        .unwrap()
        .iter()
        .filter(|r| r.label.is_correct(truth[&r.task_id]))
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn aggregation_ignores_vote_order((votes, _tasks) in vote_log(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = votes.clone();
        shuffled.shuffle(&mut crowdvote::seed::rng_from_seed(seed));
        for method in [Method::MajorityVote, Method::TieBreak] {
            let a = aggregate_all(&votes, method, &ReputationMode::Unsupervised, 3).unwrap();
            let b = aggregate_all(&shuffled, method, &ReputationMode::Unsupervised, 3).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn tie_break_never_loses_to_majority((votes, tasks) in vote_log()) {
        let mv = aggregate_all(&votes, Method::MajorityVote, &ReputationMode::Unsupervised, 3).unwrap();
        let tb = aggregate_all(&votes, Method::TieBreak, &ReputationMode::Unsupervised, 3).unwrap();
        for (m, t) in mv.iter().zip(&tb) {
            if m.label != crowdvote::AggregateLabel::NoMajority {
                prop_assert_eq!(m.label, t.label);
            }
        }
        prop_assert!(accuracy(&votes, &tasks, Method::TieBreak) >= accuracy(&votes, &tasks, Method::MajorityVote));
    }

    #[test]
    fn supervised_equals_unsupervised_when_majorities_are_right((votes, _tasks) in vote_log()) {
        // declare every majority label to be the truth
        let mv = aggregate_all(&votes, Method::MajorityVote, &ReputationMode::Unsupervised, 3).unwrap();
        let truth: HashMap<String, CorrectSlot> = mv
            .iter()
            .filter_map(|r| match r.label {
                crowdvote::AggregateLabel::Label(c) if c.is_none_of_the_above() => Some((r.task_id.clone(), CorrectSlot::NoneOfTheAbove)),
                crowdvote::AggregateLabel::Label(c) => Some((r.task_id.clone(), CorrectSlot::Slot(c.index() as u8))),
                crowdvote::AggregateLabel::NoMajority => None,
            })
            .collect();
        prop_assert_eq!(
            compute_reputation(&votes, &ReputationMode::Unsupervised).unwrap(),
            compute_reputation(&votes, &ReputationMode::Supervised(truth)).unwrap()
        );
    }

    #[test]
    fn report_cells_partition_the_votes((votes, tasks) in vote_log()) {
        let table = accuracy_report(&votes, &tasks, &ReportMode::BySet).unwrap();
        let total: u64 = table.rows.iter().flat_map(|(_, cells)| cells.iter().map(|c| c.total)).sum();
        prop_assert_eq!(total, votes.len() as u64);
        for (_, cells) in &table.rows {
            for c in cells {
                prop_assert!(c.correct <= c.total);
                if let Some(v) = c.value::<f64>() {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
