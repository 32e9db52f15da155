//! Simulator output checked against the analysis pipeline.

use phantom_core::alignment::{analyze_doc, Outcome, OutputTokens, Trial};
use phantom_core::analytics::{outcome_distribution, split_merge_summary, transition_matrix, MatrixConfig};
use phantom_core::masking::{build_blocklist, DecodeFilter};
use phantom_core::fixtures::{synthetic_annotated, toy_vocabulary};
use phantom_core::simulator::{preset, Behavior, BehaviorMixture, SimulatedCorpus, Simulator, SynonymMap};
use phantom_core::taxonomy::{AffixLexicon, Taxonomy};
use phantom_core::Vocabulary;

fn analyze(vocab: &Vocabulary, run: &SimulatedCorpus) -> Vec<Trial> {
    let mut trials = Vec::new();
    for (doc, out) in run.docs.iter().zip(&run.outputs) {
        trials.extend(analyze_doc(vocab, doc, &out.output_text, OutputTokens::Reported(&out.output_ids)).unwrap());
    }
    trials
}

#[test]
fn closure_on_mixed_preset() {
    let vocab = toy_vocabulary();
    let docs = synthetic_annotated(5, 60);
    let sim = Simulator::new(&vocab, AffixLexicon::english(), SynonymMap::english());
    let mix = preset("transition-study").unwrap();
    let run = sim.generate_corpus(&docs, &mix, None, 9, 1500).unwrap();
    assert_eq!(run.n_trials(), 1500);
    let trials = analyze(&vocab, &run);
    let tax = Taxonomy::with_default_affixes(&vocab);
    let mut mismatches = Vec::new();
    for ((_, label), trial) in run.labels().zip(&trials) {
        assert_eq!(trial.outcome, label.behavior.expected_outcome(), "{label:?} {trial:?}");
        if let Some(t) = label.error_type {
            let got = tax.classify_error(&trial.input_ids, &trial.output_ids, &trial.input_word).unwrap();
            if got.error_type != t {
                mismatches.push((label.clone(), got));
            }
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn label_soundness() {
    let vocab = toy_vocabulary();
    let docs = synthetic_annotated(6, 20);
    let sim = Simulator::new(&vocab, AffixLexicon::english(), SynonymMap::english());
    let run = sim.generate_corpus(&docs, &BehaviorMixture::new(0.2, 0.4, 0.4), None, 1, 400).unwrap();
    for (_, l) in run.labels() {
        match l.behavior {
            Behavior::Phantom => {
                let surface = String::from_utf8(vocab.concat(&l.output_ids).unwrap()).unwrap();
                let squeezed: String = surface.chars().filter(|c| !c.is_whitespace()).collect();
                assert_eq!(squeezed, l.word);
                assert_ne!(l.output_ids, l.input_ids);
            }
            Behavior::Replaced => assert_ne!(l.output_word, l.word),
            Behavior::Unchanged => assert_eq!(l.output_ids, l.input_ids),
        }
    }
}

#[test]
fn transition_profile_is_recovered() {
    let vocab = toy_vocabulary();
    let docs = synthetic_annotated(5, 80);
    let sim = Simulator::new(&vocab, AffixLexicon::english(), SynonymMap::english());
    let mix = preset("transition-study").unwrap();
    let run = sim.generate_corpus(&docs, &mix, None, 3, 3000).unwrap();
    assert!(run.calibration.max_error(&mix.phantom_profile, &mix.split_merge_profile) < 0.01, "{:?}", run.calibration);
    let diff: Vec<Trial> = analyze(&vocab, &run).into_iter().filter(|t| t.outcome == Outcome::Different).collect();
    let m = transition_matrix(&vocab, &diff, &MatrixConfig::default()).unwrap();
    let (same, split, merge) = split_merge_summary(&m).unwrap().fractions();
    let [ps, pl, pm] = mix.split_merge_profile;
    for (got, want) in [(same, ps), (split, pl), (merge, pm)] {
        assert!((got - want).abs() < 0.03, "{got} vs {want}");
    }
    let one_one: f64 = mix.phantom_profile[..3].iter().sum();
    assert!((m.fraction(1, 1).unwrap() - one_one).abs() < 0.03);
}

#[test]
fn split_only_profile_puts_mass_above_diagonal() {
    let vocab = toy_vocabulary();
    let docs = synthetic_annotated(8, 10);
    let sim = Simulator::new(&vocab, AffixLexicon::english(), SynonymMap::english());
    let mut mix = BehaviorMixture::new(0.0, 0.0, 1.0);
    mix.split_merge_profile = [0.0, 1.0, 0.0];
    mix.phantom_profile = [0.0, 0.0, 0.0, 0.25, 0.25, 0.2, 0.15, 0.15];
    let run = sim.generate_corpus(&docs, &mix, None, 2, 300).unwrap();
    let diff: Vec<Trial> = analyze(&vocab, &run).into_iter().filter(|t| t.outcome == Outcome::Different).collect();
    assert!(!diff.is_empty());
    let m = transition_matrix(&vocab, &diff, &MatrixConfig::default()).unwrap();
    let side = m.side();
    for x in 1..=side {
        for y in 1..=x {
            assert_eq!(m.count(x, y), 0, "mass at ({x},{y})");
        }
    }
}

#[test]
fn corpus_size_edges() {
    let vocab = toy_vocabulary();
    let docs = synthetic_annotated(1, 3);
    let sim = Simulator::new(&vocab, AffixLexicon::english(), SynonymMap::english());
    let mix = BehaviorMixture::new(1.0, 0.0, 0.0);
    let run = sim.generate_corpus(&docs, &mix, None, 0, 0).unwrap();
    assert!(run.outputs.is_empty() && run.docs.is_empty());
    let total: usize = docs.iter().map(|d| d.targets.len()).sum();
    let run = sim.generate_corpus(&docs, &mix, None, 0, total - 1).unwrap();
    assert_eq!(run.n_trials(), total - 1);
    run.docs.last().unwrap().validate().unwrap();
    assert!(matches!(
        sim.generate_corpus(&docs, &mix, None, 0, total + 1),
        Err(phantom_core::simulator::SimError::CorpusExhausted { .. })
    ));
}

#[test]
fn masking_suppresses_phantoms() {
    let vocab = toy_vocabulary();
    let docs = synthetic_annotated(11, 60);
    let sim = Simulator::new(&vocab, AffixLexicon::english(), SynonymMap::english());
    let mix = preset("gemma3-4b").unwrap();
    let base = analyze(&vocab, &sim.generate_corpus(&docs, &mix, None, 4, 3000).unwrap());
    let first = analyze(&vocab, &sim.generate_corpus(&docs[40..], &mix, None, 99, 300).unwrap());
    let partial = DecodeFilter::new(build_blocklist(first.iter().filter(|t| t.outcome == Outcome::Different)).unwrap());
    let masked = analyze(&vocab, &sim.generate_corpus(&docs, &mix, Some(&partial), 4, 3000).unwrap());
    let run = sim.generate_corpus(&docs, &mix, None, 4, 3000).unwrap();
    let full = DecodeFilter::new(sim.phantom_inventory(&run.docs).unwrap());
    let blocked = analyze(&vocab, &sim.generate_corpus(&docs, &mix, Some(&full), 4, 3000).unwrap());

    let [b, m, f] = [&base, &masked, &blocked].map(|t| outcome_distribution(t.iter()));
    assert!(b.fraction(Outcome::Different).unwrap() > 0.15);
    assert!(m.fraction(Outcome::Different).unwrap() <= 0.05);
    assert_eq!(f.different, 0);
    assert!(m.unchanged <= b.unchanged && f.unchanged <= b.unchanged);
}
