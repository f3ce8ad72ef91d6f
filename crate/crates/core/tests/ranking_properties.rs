use proptest::prelude::*;
use toolrank_core::competition::{rank_tools, Answer, ScoringSchema, TaskOutcome, Verdict};
use toolrank_core::ranking::{default_predictor, spearman, vote, PreferenceMatrix};
use toolrank_core::{Ranking, ToolSet};

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, k);
            out.push(q);
        }
    }
    out
}

fn ranking(k: usize) -> impl Strategy<Value = Ranking> {
    Just((1..=k).collect::<Vec<_>>()).prop_shuffle().prop_map(|p| Ranking::from_positions(p).unwrap())
}

/// Textbook definition over explicit rank differences, in exact rationals.
fn spearman_by_hand(p: &Ranking, q: &Ranking) -> (i64, i64) {
    let k = p.len() as i64;
    let d2: i64 = (0..p.len()).map(|i| (p.position(i) as i64 - q.position(i) as i64).pow(2)).sum();
    (k * (k * k - 1) - 6 * d2, k * (k * k - 1))
}

proptest! {
    #[test]
    fn spearman_matches_definition_and_is_symmetric((p, q) in (2usize..=9).prop_flat_map(|k| (ranking(k), ranking(k)))) {
        let s = spearman(&p, &q).unwrap();
        let (num, den) = spearman_by_hand(&p, &q);
        prop_assert!((s - num as f64 / den as f64).abs() < 1e-12);
        prop_assert_eq!(s, spearman(&q, &p).unwrap());
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, p == q);
        prop_assert_eq!(s == -1.0, p == q.reversed());
    }

    #[test]
    fn default_predictor_is_optimal(rankings in (2usize..=5).prop_flat_map(|k| prop::collection::vec(ranking(k), 1..12))) {
        let k = rankings[0].len();
        let total = |c: &Ranking| rankings.iter().map(|r| spearman(c, r).unwrap()).sum::<f64>();
        let consensus = default_predictor(&rankings).unwrap();
        let got = total(&consensus);
        for p in permutations(k) {
            prop_assert!(got >= total(&Ranking::from_positions(p).unwrap()) - 1e-9);
        }
    }

    #[test]
    fn voting_conserves_mass(k in 2usize..=10, probs in prop::collection::vec(0.0f64..=1.0, 45)) {
        let mut it = probs.iter();
        let p = vote(PreferenceMatrix::from_upper(k, |_, _| *it.next().unwrap()));
        let total: f64 = p.scores.iter().sum();
        prop_assert!((total - (k * (k - 1)) as f64 / 2.0).abs() <= 1e-9);
        prop_assert_eq!(p.ranking.len(), k);
    }

    #[test]
    fn voting_commutes_with_tool_relabelling(
        (k, perm) in (2usize..=7).prop_flat_map(|k| (Just(k), Just((0..k).collect::<Vec<_>>()).prop_shuffle())),
        probs in prop::collection::vec(0.01f64..0.99, 21),
    ) {
        let mut m = vec![vec![0.0; k]; k];
        let mut it = probs.iter();
        for i in 0..k {
            for j in i + 1..k {
                m[i][j] = *it.next().unwrap();
                m[j][i] = 1.0 - m[i][j];
            }
        }
        let base = vote(PreferenceMatrix::from_upper(k, |i, j| m[i][j]));
        // Tool i of the base problem is tool perm[i] of the relabelled one.
        let mut inv = vec![0; k];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let moved = vote(PreferenceMatrix::from_upper(k, |a, b| m[inv[a]][inv[b]]));
        for i in 0..k {
            prop_assert!((base.scores[i] - moved.scores[perm[i]]).abs() < 1e-12);
        }
        let distinct = (0..k).all(|i| (0..i).all(|j| (base.scores[i] - base.scores[j]).abs() > 1e-9));
        if distinct {
            prop_assert_eq!(base.ranking.relabel(&perm), moved.ranking);
        }
    }

    #[test]
    fn rank_tools_ignores_time_scale_and_score_shift(
        cells in prop::collection::vec((0u8..3, 0.0f64..100.0), 4 * 3),
        scale in 0.01f64..100.0,
        shift in -5i64..5,
    ) {
        let tools = ToolSet::new(vec!["a".into(), "b".into(), "c".into(), "d".into()]).unwrap();
        let expected = [Verdict::True, Verdict::False, Verdict::True];
        let outcomes = |time_scale: f64| -> Vec<TaskOutcome> {
            cells.iter().enumerate().map(|(n, &(a, t))| TaskOutcome {
                task: format!("t{}", n / 4),
                tool: tools.names()[n % 4].clone(),
                time_s: t * time_scale,
                answer: [Answer::True, Answer::False, Answer::Unknown][a as usize],
                expected: expected[n / 4],
            }).collect()
        };
        let schema = ScoringSchema::EXAMPLE;
        let shifted = ScoringSchema {
            correct_true: schema.correct_true + shift,
            correct_false: schema.correct_false + shift,
            incorrect_true: schema.incorrect_true + shift,
            incorrect_false: schema.incorrect_false + shift,
            unknown: schema.unknown + shift,
        };
        let base = rank_tools(&outcomes(1.0), &tools, &schema).unwrap().ranking;
        prop_assert_eq!(base.len(), 4);
        prop_assert_eq!(&rank_tools(&outcomes(scale), &tools, &schema).unwrap().ranking, &base);
        prop_assert_eq!(&rank_tools(&outcomes(1.0), &tools, &shifted).unwrap().ranking, &base);
    }
}
