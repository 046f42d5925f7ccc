//! Latent-factor collaborative filtering for implicit feedback.

mod als;
mod bpr;
mod model;

pub use als::{als_objective, gram, half_step, solve_row, train_als, train_als_with, AlsConfig, ConfidenceScaling};
pub use bpr::{bpr_gradient, train_bpr, BprConfig, BprGradient};
pub use model::{CfAlgorithm, FactorMatrix, LatentFactorModel, TrainingConfig};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::InteractionSet;
    use crate::error::Error;
    use crate::rng::{self, Stream};
    use rand::Rng;

    fn set(triples: &[(usize, usize, u32)]) -> InteractionSet {
        let named: Vec<(String, String, u32)> = triples
            .iter()
            .map(|&(u, i, r)| (format!("u{u}"), format!("i{i}"), r))
            .collect();
        InteractionSet::from_triples(named.iter().map(|(u, i, r)| (u.as_str(), i.as_str(), *r))).unwrap()
    }

    fn small_als(factors: usize, iterations: usize) -> AlsConfig {
        AlsConfig {
            factors,
            iterations,
            seed: 11,
            ..AlsConfig::default()
        }
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let factor = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    /// Normal equations for one user built from the full dense confidence
    /// and preference rows.
    fn dense_user_solve(ds: &InteractionSet, items: &FactorMatrix, user: usize, cfg: &AlsConfig) -> Vec<f64> {
        let f = items.cols();
        let mut conf = vec![1.0; items.rows()];
        let mut pref = vec![0.0; items.rows()];
        for r in ds.records().iter().filter(|r| r.user == user) {
            conf[r.item] = cfg.confidence(r.rating);
            pref[r.item] = 1.0;
        }
        let mut a = vec![vec![0.0; f]; f];
        let mut b = vec![0.0; f];
        for i in 0..items.rows() {
            let y = items.row(i);
            for p in 0..f {
                for q in 0..f {
                    a[p][q] += conf[i] * y[p] * y[q];
                }
                b[p] += conf[i] * pref[i] * y[p];
            }
        }
        for (p, row) in a.iter_mut().enumerate() {
            row[p] += cfg.lambda;
        }
        gauss_solve(a, b)
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let ds = set(&[(0, 0, 1), (1, 1, 2)]);
        let cfg = small_als(3, 0);
        let model = train_als(&ds, &cfg).unwrap();
        let mut rng = rng::derived(cfg.seed, Stream::AlsInit);
        assert_eq!(model.user_factors(), &FactorMatrix::random_init(2, 3, &mut rng));
        assert_eq!(model.item_factors(), &FactorMatrix::random_init(2, 3, &mut rng));

        let bcfg = BprConfig { factors: 3, epochs: 0, seed: 4, ..BprConfig::default() };
        let model = train_bpr(&ds, &bcfg).unwrap();
        let mut rng = rng::derived(bcfg.seed, Stream::BprInit);
        assert_eq!(model.user_factors(), &FactorMatrix::random_init(2, 3, &mut rng));
    }

    #[test]
    fn two_by_two_separates_preferences() {
        let ds = set(&[(0, 0, 5), (1, 1, 5)]);
        let cfg = small_als(2, 15);
        let model = train_als(&ds, &cfg).unwrap();
        assert!(model.score(0, 0).unwrap() > model.score(0, 1).unwrap());
        assert!(model.score(1, 1).unwrap() > model.score(1, 0).unwrap());

        // The last user half-step agrees with a dense re-derivation.
        let before = train_als(&ds, &small_als(2, 14)).unwrap();
        let users = half_step(&ds.by_user(), before.item_factors(), &cfg).unwrap();
        for u in 0..2 {
            let oracle = dense_user_solve(&ds, before.item_factors(), u, &cfg);
            for (a, b) in users.row(u).iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn objective_is_monotone_on_random_instance() {
        let mut rng = rng::derived(3, Stream::Synthetic);
        let mut triples = Vec::new();
        for u in 0..5 {
            for i in 0..5 {
                if rng.gen_bool(0.4) || u == i {
                    triples.push((u, i, rng.gen_range(1..4)));
                }
            }
        }
        let ds = set(&triples);
        let cfg = small_als(3, 15);
        let mut history = Vec::new();
        train_als_with(&ds, &cfg, |_, m| history.push(als_objective(&ds, m, &cfg))).unwrap();
        assert_eq!(history.len(), 15);
        for w in history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn singular_rows_fall_back_to_least_squares() {
        let ds = set(&[(0, 0, 1), (1, 1, 1), (1, 0, 1)]);
        let cfg = AlsConfig { lambda: 0.0, ..small_als(4, 3) };
        let model = train_als(&ds, &cfg).unwrap();
        assert!(model.user_factors().is_finite());
    }

    #[test]
    fn als_is_deterministic() {
        let ds = set(&[(0, 0, 1), (1, 1, 3), (2, 0, 2), (2, 2, 1)]);
        let cfg = small_als(4, 5);
        assert_eq!(train_als(&ds, &cfg).unwrap(), train_als(&ds, &cfg).unwrap());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let ds = set(&[(0, 0, 1), (1, 1, 1)]);
        let cfg = AlsConfig { alpha: 0.0, ..small_als(2, 1) };
        assert!(matches!(train_als(&ds, &cfg), Err(Error::Config(_))));
        let cfg = BprConfig { learning_rate: -1.0, ..BprConfig::default() };
        assert!(matches!(train_bpr(&ds, &cfg), Err(Error::Config(_))));
        let single = set(&[(0, 0, 1)]);
        assert!(matches!(train_bpr(&single, &BprConfig::default()), Err(Error::Validation(_))));
    }

    fn bpr_objective(x: &[f64], yi: &[f64], yj: &[f64], cfg: &BprConfig) -> f64 {
        let diff: f64 = (0..x.len()).map(|k| x[k] * (yi[k] - yj[k])).sum();
        let sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        -(1.0 + (-diff).exp()).ln()
            - 0.5 * cfg.lambda_user * sq(x)
            - 0.5 * cfg.lambda_item_pos * sq(yi)
            - 0.5 * cfg.lambda_item_neg * sq(yj)
    }

    #[test]
    fn bpr_gradient_matches_finite_differences() {
        let mut rng = rng::derived(9, Stream::Synthetic);
        let cfg = BprConfig {
            lambda_user: 0.01,
            lambda_item_pos: 0.02,
            lambda_item_neg: 0.03,
            ..BprConfig::default()
        };
        for _ in 0..20 {
            let f = rng.gen_range(1..6);
            let users = FactorMatrix::from_vec(2, f, (0..2 * f).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let items = FactorMatrix::from_vec(3, f, (0..3 * f).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let model = LatentFactorModel::new(users, items, vec![true; 3], TrainingConfig::Bpr(cfg.clone())).unwrap();
            let grad = bpr_gradient(&model, 1, 0, 2, &cfg);
            let (x, yi, yj) = (model.user_factors().row(1), model.item_factors().row(0), model.item_factors().row(2));
            let h = 1e-6;
            for (which, analytic) in [&grad.user, &grad.positive, &grad.negative].into_iter().enumerate() {
                for k in 0..f {
                    let probe = |delta: f64| {
                        let mut v = [x.to_vec(), yi.to_vec(), yj.to_vec()];
                        v[which][k] += delta;
                        bpr_objective(&v[0], &v[1], &v[2], &cfg)
                    };
                    let numeric = (probe(h) - probe(-h)) / (2.0 * h);
                    assert!((analytic[k] - numeric).abs() <= 1e-7 * numeric.abs().max(1.0));
                }
            }
        }
    }

    /// Users 0..10 like items 0..5, users 10..20 like items 5..10.
    fn two_clusters() -> (InteractionSet, Vec<(usize, usize)>) {
        let mut train = Vec::new();
        let mut held_out = Vec::new();
        for u in 0..20 {
            let base = if u < 10 { 0 } else { 5 };
            for k in 0..5 {
                let item = base + k;
                if (u + k) % 5 == 0 {
                    held_out.push((u, item));
                } else {
                    train.push((u, item, 1));
                }
            }
        }
        (set(&train), held_out)
    }

    #[test]
    fn bpr_ranks_held_out_positives_above_other_cluster() {
        let (ds, held_out) = two_clusters();
        let cfg = BprConfig { factors: 8, epochs: 200, learning_rate: 0.05, seed: 2, ..BprConfig::default() };
        let model = train_bpr(&ds, &cfg).unwrap();
        let (mut correct, mut total) = (0, 0);
        for &(u_ext, i_ext) in &held_out {
            let u = ds.users().index_of(&format!("u{u_ext}")).unwrap();
            let i = ds.items().index_of(&format!("i{i_ext}")).unwrap();
            let other = if i_ext < 5 { 5..10 } else { 0..5 };
            for j_ext in other {
                let j = ds.items().index_of(&format!("i{j_ext}")).unwrap();
                total += 1;
                if model.score(u, i).unwrap() > model.score(u, j).unwrap() {
                    correct += 1;
                }
            }
        }
        assert!(correct as f64 / total as f64 > 0.5, "{correct}/{total}");
        assert_eq!(model, train_bpr(&ds, &cfg).unwrap());
    }

    #[test]
    fn scoring_examples() {
        let model = LatentFactorModel::new(
            FactorMatrix::from_vec(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap(),
            FactorMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.3, 0.7]).unwrap(),
            vec![true, false],
            TrainingConfig::Als(AlsConfig::default()),
        )
        .unwrap();
        assert_eq!(model.score(0, 0).unwrap(), 0.0);
        assert_eq!(model.score(0, 1).unwrap(), 0.0);
        assert_eq!(model.score(1, 0).unwrap(), 1.0);
        assert!(model.has_item(0) && !model.has_item(1));
        assert!(matches!(model.score(2, 0), Err(Error::Lookup(_))));
    }

    #[test]
    fn user_major_and_item_major_scores_agree() {
        let (ds, _) = two_clusters();
        let model = train_als(&ds, &small_als(4, 3)).unwrap();
        let users: Vec<usize> = (0..model.num_users()).collect();
        let items: Vec<usize> = (0..model.num_items()).collect();
        for &u in &users {
            let by_user = model.score_items(u, &items).unwrap();
            for &i in &items {
                let naive: f64 = (0..model.factors())
                    .map(|k| model.user_factors().row(u)[k] * model.item_factors().row(i)[k])
                    .sum();
                assert_eq!(by_user[i], model.score_users(i, &users).unwrap()[u]);
                assert!((by_user[i] - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn model_file_round_trips_bit_exactly() {
        let (ds, _) = two_clusters();
        let model = train_bpr(&ds, &BprConfig { factors: 5, epochs: 3, ..BprConfig::default() }).unwrap();
        let mut bytes = Vec::new();
        model.save(&mut bytes).unwrap();
        let back = LatentFactorModel::load(bytes.as_slice()).unwrap();
        assert_eq!(back, model);
        assert!(LatentFactorModel::load(&b"garbage!xxxx"[..]).is_err());
    }
}
