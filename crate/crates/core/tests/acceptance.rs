//! Acceptance gate: ten end-to-end criteria covering exact counting, the
//! sampler's distribution law, finite-language enumeration, coverage
//! analytics, perplexity ordering, and pipeline determinism. Runs without the
//! default test harness so that every criterion prints one
//! `[acceptance] ... PASS/FAIL` line, then exits nonzero if any failed.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, UnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mrsynth::bundled::{SCAN_ACTIONS, TOY_AMBIGUOUS, TOY_MIXED, TOY_RIGHT_RECURSIVE};
use mrsynth::{
    assemble, augment, binarize, build_report, depth_histogram, enumerate_language, estimate_mle,
    instance_coverage, load_dataset, mr_perplexity, ngram_coverage, parse_all, sample_one,
    structure_coverage, uniform_weights, AssembledDatasets, AugmentConfig, BacktranslatorKind,
    BacktranslatorSpec, DatasetFormat, EstimationConfig, Grammar, Layout, Origin, ParallelDataset,
    Record, ReportOptions, SampleConfig, SampleOutcome, TreeCount, WeightSource,
    WeightedGrammarF64,
};

// Pinned tolerances. Statistical checks use fixed seeds, so every run either
// passes or fails identically.
const DISTRIBUTION_SIGMA_FACTOR: f64 = 3.0;
const REESTIMATION_TOLERANCE: f64 = 0.01;
const CLOSED_FORM_TOLERANCE: f64 = 1e-9;
const MEAN_DEPTH_SANITY_TOLERANCE: f64 = 0.05;

fn criterion(label: &str, body: impl FnOnce() + UnwindSafe) -> bool {
    let passed = catch_unwind(body).is_ok();
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("[acceptance] {label}: {verdict}");
    passed
}

fn grammar(text: &str) -> WeightedGrammarF64 {
    mrsynth::parse_grammar(text).expect("test grammar parses")
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn rule_id(g: &Grammar, rendered: &str) -> usize {
    (0..g.num_rules())
        .find(|&id| g.render_rule(id) == rendered)
        .unwrap_or_else(|| panic!("no rule '{rendered}'"))
}

/// Draws `n` derivations (accepted or rejected) and returns the accepted
/// samples, all from one seeded RNG.
fn draw<W: mrsynth::Weight>(
    wg: &mrsynth::WeightedGrammar<W>,
    config: &SampleConfig,
    seed: u64,
    n: usize,
) -> Vec<mrsynth::MrSample<W>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = Vec::with_capacity(n);
    for _ in 0..n {
        if let SampleOutcome::Sampled(sample) = sample_one(wg, config, &mut rng).expect("config") {
            accepted.push(sample);
        }
    }
    accepted
}

fn c01_ambiguous_counting_and_fractional_estimation_are_exact() -> bool {
    criterion("C1 fractional counting on the two-parse instance", || {
        let start = Instant::now();
        let wg = grammar(TOY_AMBIGUOUS);
        let g = wg.grammar();
        let bin = binarize(g).unwrap();
        let forest = parse_all(&bin, &toks("x x x"));
        assert_eq!(forest.count(), TreeCount::Exact(2));

        let (estimated, report) =
            estimate_mle::<f64>(g, &[toks("x x x")], &EstimationConfig::default()).unwrap();
        assert_eq!(report.counted, 1);
        // Two trees, each using the binary rule twice and the terminal rule
        // three times, at 1/2 weight per tree: counts 2 and 3, weights 2/5
        // and 3/5 — bit-exact in f64.
        assert_eq!(estimated.weight(rule_id(g, "S -> S S")), 0.4);
        assert_eq!(estimated.weight(rule_id(g, "S -> 'x'")), 0.6);
        assert!(start.elapsed() < Duration::from_secs(1), "runtime bound");
    })
}

fn c02_chart_counts_match_the_brute_force_oracle_exhaustively() -> bool {
    criterion("C2 forest counts vs. derivation oracle, all strings <= 8", || {
        let start = Instant::now();
        let cases: [(&str, &[&str]); 3] = [
            (TOY_RIGHT_RECURSIVE, &["a", "b"]),
            (TOY_AMBIGUOUS, &["x"]),
            (TOY_MIXED, &["x", "y", "z"]),
        ];
        let mut checked = 0u64;
        let mut nonzero = 0u64;
        for (text, alphabet) in cases {
            let wg = grammar(text);
            let g = wg.grammar();
            let bin = binarize(g).unwrap();
            for string in common::all_strings(alphabet, 8) {
                let expected = common::oracle_tree_count(g, &string);
                assert_eq!(
                    parse_all(&bin, &string).count(),
                    TreeCount::Exact(expected),
                    "string {string:?}"
                );
                checked += 1;
                nonzero += (expected > 0) as u64;
            }
        }
        assert_eq!(checked, 510 + 8 + 9840);
        assert!(nonzero > 100, "the sweep must exercise real parses");
        assert!(start.elapsed() < Duration::from_secs(60), "runtime bound");
    })
}

fn c03_sampler_obeys_the_weight_distribution_and_reestimates() -> bool {
    criterion("C3 depth law at uniform weights and 0.3/0.7 re-estimation", || {
        let start = Instant::now();
        // Uniform weights: P(depth = d) = 0.5^(d+1).
        let uniform = grammar(TOY_RIGHT_RECURSIVE);
        let config = SampleConfig::new(1);
        let n = 100_000usize;
        let samples = draw(&uniform, &config, 101, n);
        assert_eq!(samples.len(), n, "depth cap 50 is effectively never hit");
        let mut by_depth = vec![0u64; 11];
        for sample in &samples {
            let d = sample.depths["S"];
            if (0..=10).contains(&d) {
                by_depth[d as usize] += 1;
            }
        }
        for (d, &count) in by_depth.iter().enumerate() {
            let p = 0.5f64.powi(d as i32 + 1);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let freq = count as f64 / n as f64;
            assert!(
                (freq - p).abs() <= DISTRIBUTION_SIGMA_FACTOR * sigma,
                "depth {d}: frequency {freq} vs probability {p} (sigma {sigma})"
            );
        }

        // Skewed weights: MLE over a fresh sample recovers them.
        let skewed = grammar("S -> 'a' S @ 0.3\nS -> 'b' @ 0.7\n");
        let corpus: Vec<Vec<String>> = draw(&skewed, &config, 202, 50_000)
            .into_iter()
            .map(|s| s.tokens)
            .collect();
        let (estimated, _) =
            estimate_mle::<f64>(skewed.grammar(), &corpus, &EstimationConfig::default()).unwrap();
        let w_rec = estimated.weight(rule_id(skewed.grammar(), "S -> 'a' S"));
        let w_stop = estimated.weight(rule_id(skewed.grammar(), "S -> 'b'"));
        assert!((w_rec - 0.3).abs() <= REESTIMATION_TOLERANCE, "got {w_rec}");
        assert!((w_stop - 0.7).abs() <= REESTIMATION_TOLERANCE, "got {w_stop}");
        assert!(start.elapsed() < Duration::from_secs(30), "runtime bound");
    })
}

fn c04_unobserved_rules_get_weight_zero_and_are_never_sampled() -> bool {
    criterion("C4 zero-probability regime end to end", || {
        let wg = grammar("S -> 'a' S\nS -> 'b'\nS -> 'c'\n");
        let g = wg.grammar();
        let corpus = vec![toks("b"), toks("a b"), toks("a a b")];
        let (estimated, _) =
            estimate_mle::<f64>(g, &corpus, &EstimationConfig::default()).unwrap();
        let dead_rule = rule_id(g, "S -> 'c'");
        assert_eq!(estimated.weight(dead_rule), 0.0, "exact zero, not epsilon");

        let samples = draw(&estimated, &SampleConfig::new(1), 303, 10_000);
        assert_eq!(samples.len(), 10_000);
        for sample in &samples {
            assert_eq!(sample.derivation.rule_occurrences(g.num_rules())[dead_rule], 0);
            assert!(!sample.tokens.iter().any(|t| t == "c"), "{:?}", sample.tokens);
        }
    })
}

fn c05_action_language_is_finite_and_both_enumerations_agree() -> bool {
    criterion("C5 finite action language, 9228 strings by two strategies", || {
        let start = Instant::now();
        let wg = grammar(SCAN_ACTIONS);
        let g = wg.grammar();

        let language = enumerate_language(g, None).unwrap();
        assert!(language.finite, "grammar must be detected as non-recursive");
        assert!(language.complete);
        assert_eq!(language.language_size, Some(9228));
        assert_eq!(language.strings.len(), 9228);

        // Independent strategy: exhaustive leftmost rewriting.
        let oracle = common::oracle_language(g);
        assert_eq!(oracle.len(), 9228);
        let materialized: BTreeSet<Vec<String>> = language.strings.iter().cloned().collect();
        assert_eq!(materialized, oracle, "the two enumerations must agree string for string");
        assert!(start.elapsed() < Duration::from_secs(60), "runtime bound");
    })
}

fn c06_coverage_metrics_match_hand_computation() -> bool {
    criterion("C6 n-gram, instance, and structure coverage oracles", || {
        let train = vec![toks("a b c"), toks("b c d")];
        let test = vec![toks("a b d")];
        // Test bigrams {a b, b d}; train holds only {a b}.
        assert_eq!(ngram_coverage(&train, &test, 2).unwrap(), 50.0);
        assert_eq!(ngram_coverage(&train, &train, 2).unwrap(), 100.0);

        assert_eq!(
            instance_coverage(&[toks("x")], &[toks("x"), toks("y")]).unwrap(),
            50.0
        );
        // Disjoint corpora: nothing in the test set occurs in training.
        assert_eq!(
            instance_coverage(&[toks("m n"), toks("m")], &[toks("p q"), toks("q")]).unwrap(),
            0.0
        );

        let wg = grammar(TOY_RIGHT_RECURSIVE);
        let sc = structure_coverage(wg.grammar(), &[toks("b")], &[toks("a b")]).unwrap();
        assert_eq!(sc.percentage, 50.0);
        assert_eq!(sc.uncovered, vec!["S -> 'a' S".to_string()]);

        let hist = depth_histogram(
            wg.grammar(),
            &[toks("b"), toks("a b"), toks("a a b")],
            &["S".to_string()],
        )
        .unwrap();
        assert_eq!(hist.counts["S"], [(0, 1), (1, 1), (2, 1)].into());
    })
}

fn c07_requiring_two_rules_per_level_shrinks_recursion_depth() -> bool {
    criterion("C7 one-rule vs. two-rule recursion depth at uniform weights", || {
        // One rule per level: recursing costs one 1/2 choice, mean depth 1.
        let one_rule = grammar(TOY_RIGHT_RECURSIVE);
        // Two rules per level: recursing costs two 1/2 choices (S -> 'a' C,
        // then C -> S), mean depth 1/3.
        let two_rules = grammar("S -> 'a' C\nS -> 'b'\nC -> S\nC -> 'c'\n");

        let config = SampleConfig::new(1);
        let n = 10_000usize;
        let mean = |samples: &[mrsynth::MrSampleF64]| -> f64 {
            samples.iter().map(|s| s.depths["S"] as f64).sum::<f64>() / samples.len() as f64
        };
        let mean_one = mean(&draw(&one_rule, &config, 404, n));
        let mean_two = mean(&draw(&two_rules, &config, 505, n));
        assert!(
            mean_two < mean_one,
            "two-rule recursion must be shallower: {mean_two} vs {mean_one}"
        );
        // The sample means must also sit near their closed forms.
        assert!((mean_one - 1.0).abs() < MEAN_DEPTH_SANITY_TOLERANCE, "{mean_one}");
        assert!((mean_two - 1.0 / 3.0).abs() < MEAN_DEPTH_SANITY_TOLERANCE, "{mean_two}");
    })
}

fn c08_perplexity_prefers_the_matching_distribution() -> bool {
    criterion("C8 perplexity ordering and closed form", || {
        // Closed form: uniform weights give the one-recursion string
        // probability 1/4 over two tokens, perplexity exactly 2.
        let uniform = grammar(TOY_RIGHT_RECURSIVE);
        let report = mr_perplexity(&uniform, &[toks("a b")]).unwrap();
        assert!((report.perplexity.unwrap() - 2.0).abs() <= CLOSED_FORM_TOLERANCE);

        let test_like = grammar("S -> 'a' S @ 0.3\nS -> 'b' @ 0.7\n");
        let mismatched_source = grammar("S -> 'a' S @ 0.7\nS -> 'b' @ 0.3\n");
        let config = SampleConfig::new(1);
        let corpus: Vec<Vec<String>> = draw(&test_like, &config, 606, 5_000)
            .into_iter()
            .map(|s| s.tokens)
            .collect();

        let fit = |source: &WeightedGrammarF64, seed: u64| -> WeightedGrammarF64 {
            let sample: Vec<Vec<String>> = draw(source, &config, seed, 5_000)
                .into_iter()
                .map(|s| s.tokens)
                .collect();
            estimate_mle(source.grammar(), &sample, &EstimationConfig::default())
                .unwrap()
                .0
        };
        let matching = fit(&test_like, 707);
        let mismatched = fit(&mismatched_source, 808);

        let ppl = |wg: &WeightedGrammarF64| -> f64 {
            let report = mr_perplexity(wg, &corpus).unwrap();
            assert_eq!(report.skipped_unparseable, 0);
            assert_eq!(report.skipped_zero_probability, 0);
            report.perplexity.unwrap()
        };
        let ppl_matching = ppl(&matching);
        let ppl_mismatched = ppl(&mismatched);
        assert!(
            ppl_matching < ppl_mismatched,
            "matching {ppl_matching} vs mismatched {ppl_mismatched}"
        );
        // Same corpus, true weights vs. uniform weights.
        let ppl_true = ppl(&test_like);
        let ppl_uniform = ppl(&uniform_weights(test_like.grammar()));
        assert!(ppl_true < ppl_uniform, "true {ppl_true} vs uniform {ppl_uniform}");
    })
}

fn c09_augmentation_is_byte_deterministic_and_synthetic_mrs_parse() -> bool {
    criterion("C9 end-to-end determinism with the echo stub", || {
        let dir = tempfile::tempdir().unwrap();
        let grammar_path = dir.path().join("g.gr");
        std::fs::write(&grammar_path, TOY_RIGHT_RECURSIVE).unwrap();
        let original_path = dir.path().join("train.tsv");
        std::fs::write(
            &original_path,
            "walk\tb\nwalk walk\ta b\nwalk walk walk\ta a b\nrun\tb\n",
        )
        .unwrap();

        let config_for = |out: &Path| AugmentConfig {
            grammar_path: grammar_path.clone(),
            weights: WeightSource::Uniform,
            sample: {
                let mut s = SampleConfig::new(10);
                s.seed = 42;
                s
            },
            backtranslator: BacktranslatorSpec::new(BacktranslatorKind::EchoStub),
            layout: Layout::Concat,
            original_path: original_path.clone(),
            original_format: DatasetFormat::Tsv,
            out_dir: out.to_path_buf(),
            out_format: DatasetFormat::Tsv,
            estimation: EstimationConfig::default(),
        };

        let first = augment(&config_for(&dir.path().join("run1"))).unwrap();
        let second = augment(&config_for(&dir.path().join("run2"))).unwrap();
        assert_eq!(first.manifest, second.manifest);
        assert_eq!(first.written.len(), 3, "synthetic, combined, manifest");
        for (a, b) in first.written.iter().zip(&second.written) {
            assert_eq!(
                std::fs::read(a).unwrap(),
                std::fs::read(b).unwrap(),
                "{} vs {}",
                a.display(),
                b.display()
            );
        }
        assert_eq!(first.manifest.returned, 10);

        // Every synthetic MR in the output parses under the grammar, and the
        // echo stub means each sentence is its MR verbatim.
        let wg = grammar(TOY_RIGHT_RECURSIVE);
        let bin = binarize(wg.grammar()).unwrap();
        let synthetic = load_dataset(
            &dir.path().join("run1/synthetic.tsv"),
            DatasetFormat::Tsv,
        )
        .unwrap();
        assert_eq!(synthetic.records.len(), 10);
        for record in &synthetic.records {
            assert_eq!(record.origin, Origin::Synthetic);
            assert_eq!(record.sentence, record.mr);
            assert!(parse_all(&bin, &toks(&record.mr)).is_parseable(), "{}", record.mr);
        }
        // With the echo stub the MR-side and sentence-side corpora coincide.
        assert_eq!(synthetic.mr_corpus(), synthetic.sentence_corpus());

        let combined = load_dataset(
            &dir.path().join("run1/train_augmented.tsv"),
            DatasetFormat::Tsv,
        )
        .unwrap();
        assert_eq!(combined.records.len(), 4 + 10);
    })
}

fn c10_report_columns_match_hand_computation_on_a_twenty_instance_split() -> bool {
    criterion("C10 report columns on the 20-instance split", || {
        let wg = grammar(TOY_RIGHT_RECURSIVE);
        let sentence_of = |depth: usize| vec!["walk"; depth + 1].join(" ");
        let mr_of = |depth: usize| {
            let mut parts = vec!["a"; depth];
            parts.push("b");
            parts.join(" ")
        };
        let dataset = |depths: &[usize], origin: Origin| ParallelDataset {
            records: depths
                .iter()
                .map(|&d| Record {
                    sentence: sentence_of(d),
                    mr: mr_of(d),
                    origin,
                })
                .collect(),
        };

        // 12 training + 8 test instances; the augmented set supplies the two
        // depths the training data lacks.
        let train = dataset(&[0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1], Origin::Original);
        let test = dataset(&[0, 0, 1, 1, 2, 2, 3, 3], Origin::Original);
        let augmented = dataset(&[2, 3], Origin::Synthetic);

        let report = build_report(
            wg.grammar(),
            &train,
            &test,
            Some(&augmented),
            &ReportOptions::default(),
        )
        .unwrap();
        assert_eq!(report.test_instances, 8);
        assert_eq!(report.rows.len(), 2);

        let base = &report.rows[0];
        assert_eq!(base.dataset, "train");
        // Train MRs: six of length 1, six of length 2.
        assert_eq!(base.mrs.avg_length, 1.5);
        // Distinct test MR bigrams {a a, a b}; train covers only {a b}.
        assert_eq!(base.mrs.ngram_coverage[&2], 50.0);
        // Distinct test MRs {b, ab, aab, aaab}; train covers {b, ab}.
        assert_eq!(base.mrs.instance_coverage, 50.0);
        // Both rule shapes already occur in the training parses.
        assert_eq!(base.mrs.structure.as_ref().unwrap().percentage, 100.0);
        assert_eq!(base.sentences.avg_length, 1.5);
        // The only test sentence bigram is "walk walk", covered by train.
        assert_eq!(base.sentences.ngram_coverage[&2], 100.0);
        assert_eq!(base.sentences.instance_coverage, 50.0);

        let aug = &report.rows[1];
        assert_eq!(aug.dataset, "train+augmented");
        // 14 records: lengths 6*1 + 6*2 + 3 + 4 = 25 tokens.
        assert_eq!(aug.mrs.avg_length, 25.0 / 14.0);
        assert_eq!(aug.mrs.ngram_coverage[&2], 100.0);
        assert_eq!(aug.mrs.instance_coverage, 100.0);
        assert_eq!(aug.mrs.structure.as_ref().unwrap().percentage, 100.0);
        assert_eq!(aug.sentences.avg_length, 25.0 / 14.0);
        assert_eq!(aug.sentences.ngram_coverage[&2], 100.0);
        assert_eq!(aug.sentences.instance_coverage, 100.0);

        let table = report.to_table();
        assert!(table.contains("train+augmented"));

        // The assembled concat dataset also has the advertised cardinality.
        let AssembledDatasets::Concat { combined } =
            assemble(&train, &augmented, Layout::Concat, 1)
        else {
            panic!("expected concat");
        };
        assert_eq!(combined.records.len(), 14);
    })
}

fn main() {
    let criteria: [fn() -> bool; 10] = [
        c01_ambiguous_counting_and_fractional_estimation_are_exact,
        c02_chart_counts_match_the_brute_force_oracle_exhaustively,
        c03_sampler_obeys_the_weight_distribution_and_reestimates,
        c04_unobserved_rules_get_weight_zero_and_are_never_sampled,
        c05_action_language_is_finite_and_both_enumerations_agree,
        c06_coverage_metrics_match_hand_computation,
        c07_requiring_two_rules_per_level_shrinks_recursion_depth,
        c08_perplexity_prefers_the_matching_distribution,
        c09_augmentation_is_byte_deterministic_and_synthetic_mrs_parse,
        c10_report_columns_match_hand_computation_on_a_twenty_instance_split,
    ];
    let passed = criteria.iter().filter(|criterion| criterion()).count();
    println!("[acceptance] {passed}/{total} criteria passed", total = criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
