use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn random_instance(
    variant: ModelVariant,
    n: usize,
    seed: u64,
) -> (Network, Covariates, ModelSpec, Params) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < 0.4 {
                net.set_edge(i, j, true);
            }
        }
    }
    if variant == ModelVariant::Undirected {
        net = net.mutual_part();
    }
    let mut zsym = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            zsym[i][j] = rng.random_range(-1.0..1.0);
            zsym[j][i] = zsym[i][j];
        }
    }
    let xs: Vec<Vec<f64>> = (0..n * n).map(|_| vec![1.0, rng.random_range(-1.0..1.0)]).collect();
    let cov = Covariates::from_fn(
        n,
        vec!["const".into(), "x".into()],
        vec!["zc".into(), "z".into()],
        |i, j| xs[i * n + j].clone(),
        |i, j| vec![1.0, zsym[i][j]],
    )
    .unwrap();
    let spec = ModelSpec::for_covariates(variant, &cov);
    let mut params = Params::zeros(&spec, n);
    for v in params.beta.iter_mut() {
        *v = rng.random_range(-0.8..0.8);
    }
    for v in params.rho.iter_mut() {
        *v = rng.random_range(-0.8..0.8);
    }
    for v in params.lambda.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    (net, cov, spec, params)
}

const VARIANTS: [ModelVariant; 3] = [
    ModelVariant::Reciprocal,
    ModelVariant::DirectedNoRecip,
    ModelVariant::Undirected,
];

#[test]
fn zero_params_give_zero_indices() {
    let (_, cov, spec, mut params) = random_instance(ModelVariant::Reciprocal, 4, 1);
    params.beta.fill(0.0);
    params.rho.fill(0.0);
    params.lambda.fill(0.0);
    assert_eq!(
        dyad_indices(&params, &cov, &spec, 0, 2).unwrap(),
        DyadIndices::Directed {
            b_ij: 0.0,
            b_ji: 0.0,
            c_ij: 0.0
        }
    );
}

#[test]
fn hand_computed_indices() {
    let cov = Covariates::from_fn(
        3,
        vec!["x".into()],
        vec!["z".into()],
        |i, j| vec![if (i, j) == (0, 1) { 2.0 } else { 0.0 }],
        |_, _| vec![1.0],
    )
    .unwrap();
    let spec = ModelSpec::new(ModelVariant::Reciprocal, 1, 1).unwrap();
    let mut params = Params::zeros(&spec, 3);
    params.beta[0] = 1.0;
    params.rho[0] = 1.0;
    params.lambda[0] = 0.5; // alpha_0
    params.lambda[3] = -0.5; // gamma_1
    let idx = dyad_indices(&params, &cov, &spec, 0, 1).unwrap();
    assert_eq!(
        idx,
        DyadIndices::Directed {
            b_ij: 2.0,
            b_ji: 0.0,
            c_ij: 1.0
        }
    );
    // The last node has no stored effects.
    let idx = dyad_indices(&params, &cov, &spec, 2, 0).unwrap();
    assert_eq!(
        idx,
        DyadIndices::Directed {
            b_ij: 0.0,
            b_ji: 0.5,
            c_ij: 1.0
        }
    );
    assert!(dyad_indices(&params, &cov, &spec, 1, 1).is_err());
    assert!(dyad_indices(&params, &cov, &spec, 0, 3).is_err());
}

#[test]
fn probabilities_at_hand_values() {
    let p = dyad_probs(DyadIndices::Directed {
        b_ij: 0.0,
        b_ji: 0.0,
        c_ij: 0.0,
    })
    .unwrap();
    assert_eq!((p.pi00, p.p_ij, p.p_ji, p.p11), (0.25, 0.5, 0.5, 0.25));
    let p = dyad_probs(DyadIndices::Directed {
        b_ij: 0.0,
        b_ji: 0.0,
        c_ij: 3f64.ln(),
    })
    .unwrap();
    assert!((p.pi11 - 0.5).abs() < 1e-15);
    for v in [p.pi00, p.pi10, p.pi01] {
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }
    assert!((p.p_ij - 2.0 / 3.0).abs() < 1e-15);
    assert!(dyad_probs(DyadIndices::Directed {
        b_ij: f64::NAN,
        b_ji: 0.0,
        c_ij: 0.0
    })
    .is_err());
}

#[test]
fn factorises_without_reciprocity() {
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    for (b1, b2) in [(0.3, -2.0), (5.0, 4.0), (-30.0, 12.0)] {
        let p = dyad_probs(DyadIndices::Directed {
            b_ij: b1,
            b_ji: b2,
            c_ij: 0.0,
        })
        .unwrap();
        assert!((p.pi11 - sig(b1) * sig(b2)).abs() < 1e-12);
        assert!((p.pi10 - sig(b1) * (1.0 - sig(b2))).abs() < 1e-12);
        assert!((p.p11 - p.p_ij * p.p_ji).abs() < 1e-12);
    }
}

#[test]
fn likelihood_single_dyad_and_uniform() {
    let net = Network::empty(2);
    let cov = Covariates::none(2);
    let spec = ModelSpec::for_covariates(ModelVariant::Reciprocal, &cov);
    let params = Params::zeros(&spec, 2);
    let ll = log_likelihood(&net, &cov, &spec, &params).unwrap();
    assert!((ll - 0.25f64.ln()).abs() < 1e-15);

    let (net, _, _, _) = random_instance(ModelVariant::Reciprocal, 7, 3);
    let cov = Covariates::none(7);
    let spec = ModelSpec::for_covariates(ModelVariant::Reciprocal, &cov);
    let params = Params::zeros(&spec, 7);
    let ll = log_likelihood(&net, &cov, &spec, &params).unwrap();
    assert!((ll + 21.0 * 4f64.ln()).abs() < 1e-12);
}

#[test]
fn likelihood_matches_dyad_enumeration() {
    for variant in VARIANTS {
        for seed in 0..5 {
            let (net, cov, spec, params) = random_instance(variant, 4, seed);
            let ll = log_likelihood(&net, &cov, &spec, &params).unwrap();
            let mut oracle = 0.0;
            for i in 0..4 {
                for j in i + 1..4 {
                    let p = dyad_probs(dyad_indices(&params, &cov, &spec, i, j).unwrap()).unwrap();
                    let (a, b) = (net.has_edge(i, j), net.has_edge(j, i));
                    oracle += match variant {
                        ModelVariant::Undirected => {
                            if a && b {
                                p.pi11.ln()
                            } else {
                                p.pi00.ln()
                            }
                        }
                        _ => match (a, b) {
                            (false, false) => p.pi00.ln(),
                            (true, false) => p.pi10.ln(),
                            (false, true) => p.pi01.ln(),
                            (true, true) => p.pi11.ln(),
                        },
                    };
                }
            }
            assert!((ll - oracle).abs() < 1e-12, "{variant:?} {ll} {oracle}");
            assert!(ll <= 0.0);
        }
    }
}

fn perturb(params: &Params, spec: &ModelSpec, idx: usize, h: f64) -> Params {
    let mut theta = params.theta();
    let mut lambda = params.lambda.clone();
    if idx < theta.len() {
        theta[idx] += h;
    } else {
        lambda[idx - theta.len()] += h;
    }
    Params::from_theta(spec, &theta, lambda)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn score_matches_finite_differences() {
    let h = 1e-6;
    for variant in VARIANTS {
        for seed in 10..14 {
            let (net, cov, spec, params) = random_instance(variant, 5, seed);
            let (gt, gl) = score(&net, &cov, &spec, &params).unwrap();
            let all: Vec<f64> = gt.iter().chain(gl.iter()).copied().collect();
            for (idx, g) in all.iter().enumerate() {
                let up = log_likelihood(&net, &cov, &spec, &perturb(&params, &spec, idx, h)).unwrap();
                let dn = log_likelihood(&net, &cov, &spec, &perturb(&params, &spec, idx, -h)).unwrap();
                let fd = (up - dn) / (2.0 * h);
                assert!(rel_close(*g, fd, 1e-6), "{variant:?} {idx}: {g} vs {fd}");
            }
        }
    }
}

#[test]
fn hessian_matches_finite_differences() {
    let h = 1e-6;
    for variant in VARIANTS {
        for seed in 20..23 {
            let (net, cov, spec, params) = random_instance(variant, 5, seed);
            let hp = hessian_parts(&net, &cov, &spec, &params).unwrap();
            let p = spec.dim_theta();
            let m = spec.dim_lambda(5);
            let mut full = DMatrix::zeros(p + m, p + m);
            full.view_mut((0, 0), (p, p)).copy_from(&hp.neg_h_tt);
            full.view_mut((0, p), (p, m)).copy_from(&hp.neg_h_tl);
            full.view_mut((p, 0), (m, p)).copy_from(&hp.neg_h_tl.transpose());
            full.view_mut((p, p), (m, m)).copy_from(&hp.neg_hll_dense());
            for idx in 0..p + m {
                let (tu, lu) = score(&net, &cov, &spec, &perturb(&params, &spec, idx, h)).unwrap();
                let (td, ld) = score(&net, &cov, &spec, &perturb(&params, &spec, idx, -h)).unwrap();
                let up: Vec<f64> = tu.iter().chain(lu.iter()).copied().collect();
                let dn: Vec<f64> = td.iter().chain(ld.iter()).copied().collect();
                for r in 0..p + m {
                    let fd = -(up[r] - dn[r]) / (2.0 * h);
                    assert!(
                        rel_close(full[(r, idx)], fd, 1e-5),
                        "{variant:?} ({r},{idx}): {} vs {fd}",
                        full[(r, idx)]
                    );
                }
            }
        }
    }
}

#[test]
fn node_blocks_agree_with_dyad_covariances() {
    for variant in VARIANTS {
        let (net, cov, spec, params) = random_instance(variant, 9, 5);
        let hp = hessian_parts(&net, &cov, &spec, &params).unwrap();
        for i in 0..8 {
            let a = hp.blocks[i];
            let b = hp.block_from_dyads(i);
            assert!((a.xx - b.xx).abs() < 1e-10);
            assert!((a.xy - b.xy).abs() < 1e-10);
            assert!((a.yy - b.yy).abs() < 1e-10);
        }
        let dense = hp.neg_hll_dense();
        assert!((&dense - dense.transpose()).amax() < 1e-14);
        let f = DVector::from_fn(dense.nrows(), |r, _| (r as f64 * 0.37).sin());
        assert!((hp.neg_hll_matvec(&f) - &dense * &f).amax() < 1e-12);
        let eig = dense.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > -1e-12));
    }
}

#[test]
fn no_reciprocity_means_diagonal_blocks() {
    let (net, cov, spec, params) = random_instance(ModelVariant::DirectedNoRecip, 6, 8);
    let hp = hessian_parts(&net, &cov, &spec, &params).unwrap();
    assert!(hp.blocks.iter().all(|b| b.xy.abs() < 1e-15));
}

#[test]
fn zero_parameter_blocks() {
    let n = 6;
    let cov = Covariates::none(n);
    let spec = ModelSpec::for_covariates(ModelVariant::Reciprocal, &cov);
    let hp = hessian_parts(&Network::empty(n), &cov, &spec, &Params::zeros(&spec, n)).unwrap();
    for b in &hp.blocks {
        assert_eq!(*b, Sym2::new(1.25, 0.0, 1.25));
    }
}

#[test]
fn score_vanishes_when_statistics_match() {
    // Zero parameters: each link has probability 1/2, so a network where every
    // node sends and receives exactly half its possible links has zero
    // fixed-effect score.
    let n = 5;
    let mut net = Network::empty(n);
    for i in 0..n {
        net.set_edge(i, (i + 1) % n, true);
        net.set_edge(i, (i + 2) % n, true);
    }
    let cov = Covariates::none(n);
    let spec = ModelSpec::for_covariates(ModelVariant::DirectedNoRecip, &cov);
    let (_, gl) = score(&net, &cov, &spec, &Params::zeros(&spec, n)).unwrap();
    assert!(gl.amax() < 1e-14);
}

#[test]
fn undirected_score_is_degree_minus_expectation() {
    let (net, cov, spec, params) = random_instance(ModelVariant::Undirected, 6, 4);
    let (_, gl) = score(&net, &cov, &spec, &params).unwrap();
    for i in 0..5 {
        let mut expected = 0.0;
        let mut degree = 0.0;
        for j in 0..6 {
            if j == i {
                continue;
            }
            let p = dyad_probs(dyad_indices(&params, &cov, &spec, i, j).unwrap()).unwrap();
            expected += p.p_ij;
            degree += f64::from(net.get(i, j));
        }
        assert!((gl[i] - (degree - expected)).abs() < 1e-12);
    }
}

#[test]
fn undirected_is_logistic_on_links() {
    let (net, cov, spec, params) = random_instance(ModelVariant::Undirected, 6, 9);
    let ll = log_likelihood(&net, &cov, &spec, &params).unwrap();
    let mut oracle = 0.0;
    for i in 0..6 {
        for j in i + 1..6 {
            let z = cov.z(i, j);
            let v = z[0] * params.rho[0]
                + z[1] * params.rho[1]
                + params.alpha(&spec, i)
                + params.alpha(&spec, j);
            let y = f64::from(net.get(i, j));
            oracle += y * v - (1.0 + v.exp()).ln();
        }
    }
    assert!((ll - oracle).abs() < 1e-12);
}

#[test]
fn relabelling_nodes_preserves_likelihood() {
    let n = 6;
    let (net, cov, spec, params) = random_instance(ModelVariant::Reciprocal, n, 2);
    // Swap nodes 1 and 3; both keep stored effects.
    let perm = [0, 3, 2, 1, 4, 5];
    let mut net2 = Network::empty(n);
    for (i, j) in net.edges() {
        net2.set_edge(perm[i], perm[j], true);
    }
    let mut inv = [0; 6];
    for (a, &b) in perm.iter().enumerate() {
        inv[b] = a;
    }
    let cov2 = Covariates::from_fn(
        n,
        cov.x_names().to_vec(),
        cov.z_names().to_vec(),
        |i, j| cov.x(inv[i], inv[j]).to_vec(),
        |i, j| cov.z(inv[i], inv[j]).to_vec(),
    )
    .unwrap();
    let mut p2 = params.clone();
    for node in 0..n - 1 {
        for k in 0..2 {
            p2.lambda[perm[node] * 2 + k] = params.lambda[node * 2 + k];
        }
    }
    let a = log_likelihood(&net, &cov, &spec, &params).unwrap();
    let b = log_likelihood(&net2, &cov2, &spec, &p2).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn information_identity_by_simulation() {
    // Covariance of the score over networks drawn from the model equals -H.
    let n = 5;
    let reps = 100_000;
    let (_, cov, spec, params) = random_instance(ModelVariant::Reciprocal, n, 31);
    let model_net = Network::empty(n);
    let model = DyadModel::new(&model_net, &cov, spec).unwrap();
    let theta = params.theta();
    let kernels = model.kernels(theta.as_slice(), params.lambda.as_slice()).unwrap();
    let hp = model.hessian_from(&kernels);
    let p = spec.dim_theta();
    let m = spec.dim_lambda(n);
    let dim = p + m;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut sum = DVector::<f64>::zeros(dim);
    let mut outer = DMatrix::<f64>::zeros(dim, dim);
    let mut fourth = DMatrix::<f64>::zeros(dim, dim);
    let mut jac = vec![0.0; 3 * p];
    for _ in 0..reps {
        let mut s = DVector::<f64>::zeros(dim);
        for (d, k) in kernels.iter().enumerate() {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut state = 3;
            for st in 0..4 {
                acc += k.prob(st);
                if u < acc {
                    state = st;
                    break;
                }
            }
            let t = k.state_stats(state);
            let mu = k.mean();
            let r = [t[0] - mu[0], t[1] - mu[1], t[2] - mu[2]];
            model.theta_jacobian(d, &mut jac);
            for a in 0..3 {
                for q in 0..p {
                    s[q] += jac[a * p + q] * r[a];
                }
            }
            let mut gl = DVector::zeros(m);
            model.scatter_lambda(d, &r, &mut gl);
            for q in 0..m {
                s[p + q] += gl[q];
            }
        }
        sum += &s;
        let o = &s * s.transpose();
        fourth += o.component_mul(&o);
        outer += o;
    }
    let rn = reps as f64;
    let mean = sum / rn;
    let cov_hat = outer / rn - &mean * mean.transpose();
    let mut full = DMatrix::zeros(dim, dim);
    full.view_mut((0, 0), (p, p)).copy_from(&hp.neg_h_tt);
    full.view_mut((0, p), (p, m)).copy_from(&hp.neg_h_tl);
    full.view_mut((p, 0), (m, p)).copy_from(&hp.neg_h_tl.transpose());
    full.view_mut((p, p), (m, m)).copy_from(&hp.neg_hll_dense());
    for r in 0..dim {
        for c in 0..dim {
            let var_prod = fourth[(r, c)] / rn - cov_hat[(r, c)].powi(2);
            let se = (var_prod.max(0.0) / rn).sqrt();
            assert!(
                (cov_hat[(r, c)] - full[(r, c)]).abs() <= 3.0 * se + 1e-9,
                "({r},{c}): {} vs {} (se {se})",
                cov_hat[(r, c)],
                full[(r, c)]
            );
        }
    }
}

proptest! {
    #[test]
    fn kernel_normalised_on_box(b1 in -40.0..40.0f64, b2 in -40.0..40.0f64, c in -40.0..40.0f64) {
        let p = dyad_probs(DyadIndices::Directed { b_ij: b1, b_ji: b2, c_ij: c }).unwrap();
        let total = p.pi00 + p.pi10 + p.pi01 + p.pi11;
        prop_assert!((total - 1.0).abs() < 1e-12);
        for v in [p.pi00, p.pi10, p.pi01, p.pi11] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((p.p_ij - (p.pi10 + p.pi11)).abs() < 1e-15);
    }

    #[test]
    fn factorisation_at_zero_reciprocity(b1 in -40.0..40.0f64, b2 in -40.0..40.0f64) {
        let p = dyad_probs(DyadIndices::Directed { b_ij: b1, b_ji: b2, c_ij: 0.0 }).unwrap();
        prop_assert!((p.pi11 - p.p_ij * p.p_ji).abs() < 1e-12);
    }
}
