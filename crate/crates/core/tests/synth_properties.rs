//! Statistical properties of generated corpora that need long streams.

use lexdiv::corpusstats::{growth_curve_at, log_checkpoints, GrowthCurve};
use lexdiv::estimators::plugin_entropy;
use lexdiv::lawfit::fit_heaps;
use lexdiv::synth::{gen_corpus, true_entropy, GeneratorSpec};

const SEEDS: u64 = 10;

#[test]
fn plugin_bias_shrinks_with_length() {
    let truth = true_entropy(&GeneratorSpec::zipf(1.0, 10_000, 1, 0)).unwrap();
    let mut mean_bias = Vec::new();
    for tokens in [100_000u64, 1_000_000, 10_000_000] {
        let mut total = 0.0;
        for seed in 0..SEEDS {
            let counts = gen_corpus(&GeneratorSpec::zipf(1.0, 10_000, tokens, seed))
                .unwrap()
                .counts();
            let h = plugin_entropy(&counts).unwrap().value;
            // plug-in is biased downward in expectation
            total += truth - h;
        }
        mean_bias.push(total / SEEDS as f64);
    }
    assert!(mean_bias.iter().all(|&b| b > 0.0), "{mean_bias:?}");
    assert!(mean_bias.windows(2).all(|w| w[1] < w[0]), "{mean_bias:?}");
}

#[test]
fn vocabulary_growth_is_sublinear() {
    let corpus = gen_corpus(&GeneratorSpec::zipf(1.0, 100_000, 2_000_000, 4)).unwrap();
    let curve = growth_curve_at(&corpus, &log_checkpoints(corpus.total_tokens(), 10)).unwrap();
    let curve = GrowthCurve {
        points: curve.points.into_iter().filter(|&(l, _)| l >= 100).collect(),
    };
    let fit = fit_heaps(&curve).unwrap();
    assert!(fit.sublinear && fit.beta < 1.0, "{fit:?}");
}
