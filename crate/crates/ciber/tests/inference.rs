use ciber::bnn::{collapse, CollapsedSample};
use ciber::inference::{argmax, mean_value, normalize, predict_classification, predict_regression, InferenceOptions};
use ciber::mlp::{Head, MlpSpec};
use ciber::posterior::init_params;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmi_core::rational::{int, to_f64};
use wmi_core::wmi::Value;

fn perturbed(base: &[f64], idx: &[usize], scale: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut w = base.to_vec();
            for &i in idx {
                w[i] += scale * rng.random_range(-1.0..1.0);
            }
            w
        })
        .collect()
}

fn hidden_net(seed: u64) -> (MlpSpec, Vec<f64>) {
    let mlp = MlpSpec::new(vec![2, 3, 1], Head::Homoscedastic { variance: 0.5 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = init_params(&mlp, &mut rng);
    (mlp, w)
}

fn exact(v: &Value) -> wmi_core::BigRational {
    v.exact().expect("exact value").clone()
}

#[test]
fn prediction_is_the_average_over_samples() {
    let (mlp, w) = hidden_net(1);
    let idx = [mlp.weight_index(0, 0, 0), mlp.weight_index(0, 1, 1)];
    let samples = collapse(&perturbed(&w, &idx, 0.3, 3, 2), &idx, 0.0).unwrap();
    let opts = InferenceOptions::default();
    let x = [0.7, -0.4];
    let all = predict_regression(&mlp, &x, Some(0.1), &samples, &opts).unwrap();
    let singles: Vec<Value> = samples
        .iter()
        .map(|s| predict_regression(&mlp, &x, None, std::slice::from_ref(s), &opts).unwrap().mean)
        .collect();
    assert_eq!(exact(&all.mean), exact(&mean_value(&singles)));

    let mut reversed = samples.clone();
    reversed.reverse();
    let again = predict_regression(&mlp, &x, Some(0.1), &reversed, &opts).unwrap();
    assert_eq!(exact(&again.mean), exact(&all.mean));
    assert_eq!(exact(again.density.as_ref().unwrap()), exact(all.density.as_ref().unwrap()));
}

#[test]
fn degenerate_box_gives_the_plug_in_mean() {
    let (mlp, w) = hidden_net(3);
    let idx = [mlp.weight_index(0, 2, 0)];
    let samples = collapse(&[w.clone(), w.clone()], &idx, 0.0).unwrap();
    let x = [0.25, 1.5];
    let p = predict_regression(&mlp, &x, None, &samples, &InferenceOptions::default()).unwrap();
    let plug = mlp.forward(&w, &x)[0];
    assert!((to_f64(&exact(&p.mean)) - plug).abs() < 1e-12);
}

#[test]
fn mean_matches_monte_carlo_over_the_box() {
    let (mlp, w) = hidden_net(5);
    let idx = [mlp.weight_index(0, 0, 0), mlp.weight_index(0, 0, 1), mlp.weight_index(0, 2, 1)];
    let samples = collapse(&perturbed(&w, &idx, 1.0, 4, 6), &idx, 0.0).unwrap();
    let x = [0.9, -1.1];
    let p = predict_regression(&mlp, &x, None, &samples[..1], &InferenceOptions::default()).unwrap();

    let post = &samples[0].posterior;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 200_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let mut v = samples[0].weights.clone();
        for (j, &i) in post.indices.iter().enumerate() {
            let (l, u) = (to_f64(&post.lower[j]), to_f64(&post.upper[j]));
            v[i] = l + (u - l) * rng.random::<f64>();
        }
        let f = mlp.forward(&v, &x)[0];
        s += f;
        s2 += f * f;
    }
    let m = s / n as f64;
    let se = ((s2 / n as f64 - m * m) / n as f64).sqrt();
    let got = p.mean.to_f64();
    assert!((got - m).abs() < 4.0 * se + 1e-9, "{got} vs {m} ± {se}");
}

fn saturated(sign: f64) -> (MlpSpec, Vec<CollapsedSample>) {
    let mlp = MlpSpec::new(vec![1, 1], Head::Classification).unwrap();
    let w = vec![sign * 3.0, sign * 5.0];
    let samples = collapse(&perturbed(&w, &[0], 0.5, 3, 8), &[0], 0.0).unwrap();
    (mlp, samples)
}

#[test]
fn saturated_logits_score_exactly() {
    let opts = InferenceOptions::default();
    let (mlp, samples) = saturated(1.0);
    let p = predict_classification(&mlp, &[1.0], &samples, &opts).unwrap();
    assert_eq!(exact(&p.scores[1]), int(1));
    assert_eq!(exact(&p.scores[0]), int(0));
    assert_eq!(p.prediction, 1);
    let (mlp, samples) = saturated(-1.0);
    let p = predict_classification(&mlp, &[1.0], &samples, &opts).unwrap();
    assert_eq!(exact(&p.scores[1]), int(0));
    assert_eq!(p.prediction, 0);
}

#[test]
fn binary_scores_are_complementary() {
    let mlp = MlpSpec::new(vec![1, 1], Head::Classification).unwrap();
    let samples = collapse(&perturbed(&[0.8, 0.1], &[0, 1], 1.0, 4, 9), &[0, 1], 0.0).unwrap();
    let p = predict_classification(&mlp, &[0.6], &samples, &InferenceOptions::default()).unwrap();
    assert_eq!(exact(&p.scores[0]) + exact(&p.scores[1]), int(1));
    assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn ties_go_to_the_lower_class() {
    assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
    assert_eq!(argmax(&[0.0, 0.0]), 0);
    assert_eq!(normalize(&[0.0, 0.0, 0.0]), vec![1.0 / 3.0; 3]);
}

#[test]
fn empty_sample_sets_are_rejected() {
    let (mlp, _) = hidden_net(1);
    assert!(predict_regression(&mlp, &[0.0, 0.0], None, &[], &InferenceOptions::default()).is_err());
}
