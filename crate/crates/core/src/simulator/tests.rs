use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus::{assign_labels, expand_conversations, LabelConfig, SeedKind};
use crate::feedback::NegativeModelConfig;
use crate::neural::{Encoder, InitScorer, LexicalEncoder, MmrScorer, PairEncoder};
use crate::retrieval::{index_questions, question_pools};
use crate::synthetic::{synthetic, SyntheticSpec};

struct Fixture {
    corpus: Corpus,
    labels: LabelTable,
    index: InvertedIndex<QuestionId>,
    pools: BTreeMap<TopicId, CandidatePool>,
}

impl Fixture {
    fn new() -> Self {
        let corpus = synthetic(SyntheticSpec::default()).unwrap().corpus;
        let labels = assign_labels(&corpus, LabelConfig::default());
        let index = index_questions(&corpus).unwrap();
        let pools = question_pools(&corpus, &index, Smoothing::dirichlet(100.0), 20).unwrap();
        Self {
            corpus,
            labels,
            index,
            pools,
        }
    }

    fn world(&self) -> World<'_> {
        World {
            corpus: &self.corpus,
            labels: &self.labels,
            questions: &self.index,
            smoothing: Smoothing::dirichlet(100.0),
            pools: &self.pools,
        }
    }
}

fn seeds(f: &Fixture) -> Vec<ConversationSeed> {
    expand_conversations(&f.corpus, &f.labels)
}

#[test]
fn answers_follow_grades() {
    let f = Fixture::new();
    let facet = FacetId(0);
    let yes = f.labels.facet_entries(facet).find(|e| e.1 == Grade::Two).unwrap().0;
    let no = f.labels.facet_entries(facet).find(|e| e.1 == Grade::One).unwrap().0;
    assert_eq!(user_answer(&f.labels, facet, yes), Polarity::Positive);
    assert_eq!(user_answer(&f.labels, facet, no), Polarity::Negative);
    assert_eq!(user_answer(&f.labels, facet, QuestionId(119)), Polarity::Negative);
    assert_eq!(user_answer(&f.labels, facet, QuestionId(9999)), Polarity::Negative);
}

#[test]
fn oracle_confirms_at_first_open_turn() {
    let f = Fixture::new();
    let cfg = ConversationConfig::default();
    for s in seeds(&f) {
        let t = run_conversation(&s, &Policy::Oracle, &f.world(), &cfg);
        assert_eq!(t.outcome, Outcome::Confirmed);
        let expected = if s.seed_kind == SeedKind::ZeroTurn { 1 } else { 2 };
        assert_eq!(t.turns.len(), expected);
        assert!(t.turns[0].q == s.preset_history.first().copied().unwrap_or(t.turns[0].q));
    }
}

#[test]
fn without_targets_every_policy_exhausts() {
    let f = Fixture::new();
    let stripped: BTreeMap<TopicId, CandidatePool> = f
        .pools
        .iter()
        .map(|(t, p)| {
            let topic_facets: Vec<FacetId> = f.corpus.facets_of(*t).map(|x| x.id).collect();
            (
                *t,
                p.without(|q| topic_facets.iter().any(|fa| f.labels.grade(*fa, q) == Grade::Two)),
            )
        })
        .collect();
    let world = World {
        pools: &stripped,
        ..f.world()
    };
    let policies = [
        Policy::Ql,
        Policy::Oracle,
        Policy::Mmr {
            lambda: 0.5,
            similarity: Similarity::Lexical,
        },
        Policy::SingleNeg {
            alpha: 0.9,
            terms: 10,
            em: NegativeModelConfig::default(),
        },
    ];
    for p in &policies {
        let e = run_experiment(&seeds(&f), p, &world, &ConversationConfig::default()).unwrap();
        for t in &e.transcripts {
            assert_eq!(t.outcome, Outcome::Exhausted, "{:?}", p.kind());
            assert_eq!(t.turns.len(), 5);
        }
    }
}

#[test]
fn ql_follows_static_order() {
    let f = Fixture::new();
    let e = run_experiment(&seeds(&f), &Policy::Ql, &f.world(), &ConversationConfig::default()).unwrap();
    for t in &e.transcripts {
        let pool = &f.pools[&t.topic];
        let preset = t.qid.matches('-').count() == 2;
        let start = usize::from(preset);
        let expected: Vec<QuestionId> = pool
            .ids()
            .into_iter()
            .filter(|q| !preset || *q != t.turns[0].q)
            .take(t.turns.len() - start)
            .collect();
        assert_eq!(&t.asked()[start..], &expected[..]);
    }
}

#[test]
fn contracts_hold_for_heuristics() {
    let f = Fixture::new();
    let policies = [
        Policy::Ql,
        Policy::Mmr {
            lambda: 0.7,
            similarity: Similarity::Lexical,
        },
        Policy::SingleNeg {
            alpha: 0.8,
            terms: 20,
            em: NegativeModelConfig::default(),
        },
    ];
    for p in &policies {
        let e = run_experiment(&seeds(&f), p, &f.world(), &ConversationConfig::default()).unwrap();
        assert_eq!(e.errors(), 0);
        for (t, s) in e.transcripts.iter().zip(seeds(&f)) {
            let asked = t.asked();
            let mut dedup = asked.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(dedup.len(), asked.len());
            assert!(asked.len() <= 5);
            if let Some(q) = s.preset_history.first() {
                assert_eq!(asked[0], *q);
            }
            let grades: Vec<Grade> = asked.iter().map(|q| f.labels.grade(t.facet, *q)).collect();
            let twos = grades.iter().filter(|g| **g == Grade::Two).count();
            match t.outcome {
                Outcome::Confirmed => assert!(twos == 1 && grades.last() == Some(&Grade::Two)),
                Outcome::Exhausted => assert_eq!(twos, 0),
            }
        }
    }
}

#[test]
fn preset_turn_budget_is_switchable() {
    let f = Fixture::new();
    let s = seeds(&f)
        .into_iter()
        .find(|s| s.seed_kind == SeedKind::OneTurn)
        .unwrap();
    let strip: BTreeMap<TopicId, CandidatePool> = f
        .pools
        .iter()
        .map(|(t, p)| (*t, p.without(|q| f.labels.grade(s.facet_id, q) == Grade::Two)))
        .collect();
    let world = World {
        pools: &strip,
        ..f.world()
    };
    let counted = run_conversation(&s, &Policy::Ql, &world, &ConversationConfig::default());
    let extra = run_conversation(
        &s,
        &Policy::Ql,
        &world,
        &ConversationConfig {
            turns: 5,
            preset_counts: false,
        },
    );
    assert_eq!(counted.turns.len(), 5);
    assert_eq!(extra.turns.len(), 6);
}

#[test]
fn empty_history_mmr_neural_matches_zero_pool_ranking() {
    let f = Fixture::new();
    let enc = LexicalEncoder::fit(f.corpus.questions().map(|q| q.text.as_str()), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = MmrScorer::<f64>::new(8, 4, Some(8), None).unwrap();
    let scorer = MmrScorer {
        mlp1: base.mlp1.randomized(&mut rng, 0.5),
        mlp2: base.mlp2.randomized(&mut rng, 0.5),
    };
    let model = Arc::new(MmrNeuralModel {
        scorer: scorer.clone(),
        encoder: Encoder::Lexical(enc.clone()),
    });
    let world = f.world();
    for topic in f.corpus.topics() {
        let state = ConversationState {
            topic_id: topic.id,
            facet_id: f.corpus.facets_of(topic.id).next().unwrap().id,
            history: vec![],
            budget: 5,
        };
        let pool = &f.pools[&topic.id];
        let got = select_next(&Policy::MmrNeural(model.clone()), &world, &state, pool).unwrap();
        // MLP2 on [o(t, q); 0] by hand
        let expected = pool
            .ids()
            .into_iter()
            .map(|q| {
                let text = &f.corpus.question(q).unwrap().text;
                let mut z = scorer.mlp1.apply(&enc.encode(&topic.text, text).unwrap()).unwrap();
                z.extend([0.0; 4]);
                (q, scorer.mlp2.apply(&z).unwrap()[0])
            })
            .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
            .unwrap()
            .0;
        assert_eq!(got, expected);
    }
}

#[test]
fn neural_policies_run() {
    let f = Fixture::new();
    let enc = Encoder::Lexical(LexicalEncoder::fit(f.corpus.questions().map(|q| q.text.as_str()), 4));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let init = InitScorer::<f64>::new(12, Some(4)).unwrap();
    let init = Arc::new(NeuralInitModel {
        scorer: InitScorer {
            mlp0: init.mlp0.randomized(&mut rng, 0.3),
        },
        encoder: enc,
    });
    for p in [
        Policy::NeuralInit(init.clone()),
        Policy::Mmr {
            lambda: 0.6,
            similarity: Similarity::Neural(init.clone()),
        },
    ] {
        let e = run_experiment(&seeds(&f)[..40], &p, &f.world(), &ConversationConfig::default()).unwrap();
        assert_eq!(e.errors(), 0);
        assert_eq!(e.transcripts.len(), 40);
    }
}

#[test]
fn deterministic_outputs() {
    let f = Fixture::new();
    let p = Policy::SingleNeg {
        alpha: 0.9,
        terms: 10,
        em: NegativeModelConfig::default(),
    };
    let render = || {
        let e = run_experiment(&seeds(&f), &p, &f.world(), &ConversationConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_transcripts(&mut buf, &e.transcripts).unwrap();
        (buf, e.run("singleneg").to_trec())
    };
    assert_eq!(render(), render());
}

#[test]
fn transcript_format() {
    let f = Fixture::new();
    let s = seeds(&f)
        .into_iter()
        .find(|s| s.seed_kind == SeedKind::OneTurn)
        .unwrap();
    let t = run_conversation(&s, &Policy::Oracle, &f.world(), &ConversationConfig::default());
    let line = serde_json::to_string(&t).unwrap();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["turns"][0]["a"], "no");
    assert_eq!(v["turns"][1]["a"], "yes");
    assert_eq!(v["outcome"], "confirmed");
    assert_eq!(v["topic"], s.topic_id.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let mut file = std::fs::File::create(&path).unwrap();
    write_transcripts(&mut file, std::slice::from_ref(&t)).unwrap();
    assert_eq!(read_transcripts(&path).unwrap(), vec![t]);
}

#[test]
fn exhausted_pool_ends_early() {
    let f = Fixture::new();
    let s = ConversationSeed::zero_turn(TopicId(0), FacetId(0));
    let tiny = BTreeMap::from([(
        TopicId(0),
        CandidatePool {
            topic_id: TopicId(0),
            entries: vec![(QuestionId(11), 0.0), (QuestionId(4), 0.0)],
        },
    )]);
    let world = World {
        pools: &tiny,
        ..f.world()
    };
    let t = run_conversation(&s, &Policy::Ql, &world, &ConversationConfig::default());
    assert_eq!(t.turns.len(), 2);
    assert_eq!(t.outcome, Outcome::Exhausted);
    assert!(t.error.is_none());
}
