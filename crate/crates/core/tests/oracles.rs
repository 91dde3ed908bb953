//! Independent re-derivations pinned against the library: a from-scratch
//! Jacobi eigensolver, an explicit pseudo-inverse predictor, and Monte
//! Carlo checks of the prediction-error decomposition. Everything here
//! works on plain `Vec<Vec<f64>>` so no code path is shared with the crate
//! under test, and the solvers validate themselves against their defining
//! identities before being used as references.

use pathmon::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Mat = Vec<Vec<f64>>;

fn from_dmatrix(m: &nalgebra::DMatrix<f64>) -> Mat {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, inner, m) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), inner);
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn transpose(a: &Mat) -> Mat {
    let (n, m) = (a.len(), a[0].len());
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(&r, &v)| r * v).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn scale_columns(a: &Mat, d: &[f64]) -> Mat {
    a.iter()
        .map(|row| row.iter().zip(d).map(|(&v, &s)| v * s).collect())
        .collect()
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
/// descending order and the matching eigenvectors as columns.
fn jacobi_eigen(mut a: Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut v: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    for _sweep in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum().max(-1.0).min(1.0) as f64;
                let t = if theta == 0.0 {
                    1.0
                } else {
                    t / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (aip, aiq) = (a[i][p], a[i][q]);
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let (apj, aqj) = (a[p][j], a[q][j]);
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let (vip, viq) = (v[i][p], v[i][q]);
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let eigs: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let vecs: Mat = (0..n)
        .map(|i| order.iter().map(|&j| v[i][j]).collect())
        .collect();
    (eigs, vecs)
}

/// The solver has to earn its role as an oracle: residuals of the defining
/// eigen-identity and orthonormality of the basis, both to tight absolute
/// tolerance relative to the matrix scale.
fn assert_eigenpairs(a: &Mat, eigs: &[f64], vecs: &Mat) {
    let n = a.len();
    let scale = eigs[0].abs().max(1.0);
    for e in 0..n {
        let col: Vec<f64> = (0..n).map(|i| vecs[i][e]).collect();
        let av = matvec(a, &col);
        for i in 0..n {
            assert!(
                (av[i] - eigs[e] * col[i]).abs() <= 1e-8 * scale,
                "eigenpair {e} residual {} at row {i}",
                av[i] - eigs[e] * col[i]
            );
        }
    }
    for e1 in 0..n {
        for e2 in 0..n {
            let d: f64 = (0..n).map(|i| vecs[i][e1] * vecs[i][e2]).sum();
            let want = if e1 == e2 { 1.0 } else { 0.0 };
            assert!((d - want).abs() <= 1e-9, "orthonormality ({e1},{e2}): {d}");
        }
    }
}

/// Moore-Penrose pseudo-inverse through the Jacobi solver: eigen-decompose
/// MᵀM, keep eigendirections above the solver's noise floor, assemble
/// V Σ⁺ Uᵀ. The cutoff lives in the eigenvalue domain because Jacobi's
/// zero eigenvalues come out at around 1e-15 of the largest; their square
/// roots would sneak past a singular-value threshold and inject amplified
/// null-space noise.
fn pinv(m: &Mat) -> Mat {
    let mt = transpose(m);
    let mtm = matmul(&mt, m);
    let (eigs, vecs) = jacobi_eigen(mtm);
    let n = m.len();
    let w = m[0].len();
    let cutoff = eigs[0].max(0.0) * 1e-12;
    let mut out = vec![vec![0.0; n]; w];
    for e in 0..w {
        if eigs[e] <= cutoff {
            continue;
        }
        let sv = eigs[e].sqrt();
        let vcol: Vec<f64> = (0..w).map(|i| vecs[i][e]).collect();
        let ucol: Vec<f64> = matvec(m, &vcol).iter().map(|x| x / sv).collect();
        for i in 0..w {
            for j in 0..n {
                out[i][j] += vcol[i] * ucol[j] / sv;
            }
        }
    }
    out
}

/// All four Penrose conditions; the two symmetry conditions are what catch
/// null-space contamination that the reconstruction identities tolerate.
fn assert_pinv_identities(m: &Mat, plus: &Mat) {
    let scale: f64 = m.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max);
    let m_plus_m = matmul(&matmul(m, plus), m);
    for i in 0..m.len() {
        for j in 0..m[0].len() {
            assert!(
                (m_plus_m[i][j] - m[i][j]).abs() <= 1e-8 * scale,
                "M M+ M != M at ({i},{j})"
            );
        }
    }
    let plus_m_plus = matmul(&matmul(plus, m), plus);
    for i in 0..plus.len() {
        for j in 0..plus[0].len() {
            assert!(
                (plus_m_plus[i][j] - plus[i][j]).abs() <= 1e-8 * scale,
                "M+ M M+ != M+ at ({i},{j})"
            );
        }
    }
    let m_plus = matmul(m, plus);
    for i in 0..m_plus.len() {
        for j in 0..m_plus.len() {
            assert!(
                (m_plus[i][j] - m_plus[j][i]).abs() <= 1e-7,
                "M M+ not symmetric at ({i},{j})"
            );
        }
    }
    let plus_m = matmul(plus, m);
    for i in 0..plus_m.len() {
        for j in 0..plus_m.len() {
            assert!(
                (plus_m[i][j] - plus_m[j][i]).abs() <= 1e-7,
                "M+ M not symmetric at ({i},{j})"
            );
        }
    }
}

/// Explicit mean-estimate route: whiten the sampled rows by the link
/// standard deviations, pseudo-invert, lift back. Then predict the
/// functional as (sampled part) + (rest part through the estimated means).
fn oracle_predict(
    gs: &Mat,
    gr: &Mat,
    variances: &[f64],
    l_s: &[f64],
    l_r: &[f64],
    y_s: &[f64],
) -> f64 {
    let c: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let m = scale_columns(gs, &c);
    let plus = pinv(&m);
    assert_pinv_identities(&m, &plus);
    let mu_hat: Vec<f64> = matvec(&plus, y_s)
        .iter()
        .zip(&c)
        .map(|(&w, &s)| s * w)
        .collect();
    dot(l_s, y_s) + dot(l_r, &matvec(gr, &mu_hat))
}

fn line3() -> Topology {
    Topology::from_edge_list(
        "line3",
        &[
            ("A", "B", 1.0),
            ("B", "A", 1.0),
            ("B", "C", 1.0),
            ("C", "B", 1.0),
        ],
    )
    .unwrap()
}

/// Seeded strongly connected digraph on five nodes: a directed ring plus
/// random extra arcs with random small integer weights.
fn random_topology(seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["N0", "N1", "N2", "N3", "N4"];
    let mut edges: Vec<(&str, &str, f64)> = Vec::new();
    for i in 0..5usize {
        edges.push((names[i], names[(i + 1) % 5], rng.random_range(1..=6) as f64));
    }
    for u in 0..5usize {
        for v in 0..5usize {
            if u == v || (v + 5 - u) % 5 == 1 {
                continue;
            }
            if rng.random_range(0.0..1.0) < 0.35 {
                edges.push((names[u], names[v], rng.random_range(1..=9) as f64));
            }
        }
    }
    let t = Topology::from_edge_list(format!("rand5-{seed}"), &edges).unwrap();
    assert!(t.is_strongly_connected());
    t
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn jacobi_matches_line_spectrum() {
    let t = line3();
    let g = build_routing_matrix(&t).unwrap();
    let gm = from_dmatrix(g.entries());
    let gtg = matmul(&transpose(&gm), &gm);
    let (eigs, vecs) = jacobi_eigen(gtg.clone());
    assert_eigenpairs(&gtg, &eigs, &vecs);

    let spec = eigenspectrum(g.entries(), "line").unwrap();
    assert_eq!(spec.len(), 4);
    for (a, b) in eigs.iter().zip(&spec.eigenvalues) {
        assert!(rel_close(*a, *b, 1e-9), "eigenvalue {a} vs {b}");
    }
}

#[test]
fn jacobi_matches_weighted_abilene_spectrum_and_energy() {
    let t = assets::abilene();
    let g = build_routing_matrix(&t).unwrap();
    let cov = assets::abilene_reference_covariance();
    let gw = weighted_matrix(&g, &cov).unwrap();

    let m = from_dmatrix(&gw);
    let mtm = matmul(&transpose(&m), &m);
    let (eigs, vecs) = jacobi_eigen(mtm.clone());
    assert_eigenpairs(&mtm, &eigs, &vecs);

    let spec = eigenspectrum(&gw, "weighted").unwrap();
    assert_eq!(spec.len(), 30);
    let top = eigs[0];
    for (a, b) in eigs.iter().zip(&spec.eigenvalues) {
        assert!((a - b).abs() <= 1e-9 * top, "eigenvalue {a} vs {b}");
    }

    let energy = eigenvector_energy(&gw, 0).unwrap();
    assert!(!energy.ambiguous);
    for j in 0..30 {
        let mine = vecs[j][0] * vecs[j][0];
        assert!(
            (mine - energy.energy[j]).abs() <= 1e-7,
            "energy {j}: {mine} vs {}",
            energy.energy[j]
        );
    }
}

#[test]
fn explicit_pseudo_inverse_reproduces_line_predictions() {
    let t = line3();
    let g = build_routing_matrix(&t).unwrap();
    let cov = CovarianceModel::identity(4);
    // Paths are ordered by (source, destination): (A,B)=0 and (B,C)=3.
    let sel = PathSelection::manual(6, vec![0, 3]).unwrap();
    let part = partition_moments(&g, &cov, &sel).unwrap();
    let l = LinearFunctional::network_average(6).unwrap();
    let model = PredictorModel::new(part, l.clone()).unwrap();

    let x = [1.0, 2.0, 3.0, 4.0];
    let y_s = model.sample_values(&x).unwrap();
    let part = model.partition();
    let (l_s, l_r) = l.split(part).unwrap();
    let oracle = oracle_predict(
        &from_dmatrix(part.gs()),
        &from_dmatrix(part.gr()),
        &[1.0; 4],
        l_s.as_slice(),
        l_r.as_slice(),
        &y_s,
    );
    let lib = model.predict(&y_s).unwrap();
    let via_mu = model.predict_via_mean_estimate(&y_s).unwrap();
    assert!(rel_close(lib, oracle, 1e-12), "{lib} vs {oracle}");
    assert!(rel_close(via_mu, oracle, 1e-12), "{via_mu} vs {oracle}");
}

#[test]
fn mean_estimate_splits_by_variance_weight() {
    let t = line3();
    let g = build_routing_matrix(&t).unwrap();
    let cov = CovarianceModel::from_variances(vec![1.0, 1.0, 4.0, 1.0]).unwrap();
    // Sample only the transit path (A,C) = id 1, traversing links 0 and 2.
    let sel = PathSelection::manual(6, vec![1]).unwrap();
    let part = partition_moments(&g, &cov, &sel).unwrap();

    // Closed form: mu = Sigma Gs^T (Gs Sigma Gs^T)^-1 y = [1, 0, 4, 0] y/5.
    let mu = estimate_mu(&[5.0], &part).unwrap();
    let want = [1.0, 0.0, 4.0, 0.0];
    for j in 0..4 {
        assert!((mu[j] - want[j]).abs() < 1e-12, "mu[{j}] = {}", mu[j]);
    }

    // The lift reproduces the covariance-form prediction for every rest row.
    let gr_mu = part.gr() * &mu;
    let direct = part.prediction_operator() * nalgebra::DVector::from_column_slice(&[5.0]);
    for i in 0..5 {
        assert!((gr_mu[i] - direct[i]).abs() < 1e-12);
    }
}

#[test]
fn dual_forms_agree_for_all_ranks_and_functionals() {
    let topologies = [line3(), random_topology(11), random_topology(17)];
    for t in &topologies {
        let g = build_routing_matrix(t).unwrap();
        let n_paths = g.n_paths();
        let n_links = g.n_links();
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + n_links as u64);

        let mut covs = vec![CovarianceModel::identity(n_links)];
        let vars: Vec<f64> = (0..n_links).map(|_| rng.random_range(0.25..4.0)).collect();
        covs.push(CovarianceModel::from_variances(vars).unwrap());

        let mut functionals = vec![LinearFunctional::network_average(n_paths).unwrap()];
        let g1 = g.origin_paths(&t.nodes()[0]);
        let g2 = g.origin_paths(&t.nodes()[1]);
        functionals.push(LinearFunctional::group_difference(n_paths, &g1, &g2).unwrap());
        functionals.push(LinearFunctional::indicator(n_paths, n_paths - 1).unwrap());
        let w: Vec<f64> = (0..n_paths).map(|_| rng.random_range(-1.0..1.0)).collect();
        functionals.push(LinearFunctional::from_weights(w).unwrap());

        for (ci, cov) in covs.iter().enumerate() {
            let gw = weighted_matrix(&g, cov).unwrap();
            let rank = eigenspectrum(&gw, "oracle").unwrap().rank();
            for k in 1..=rank {
                let sel = select_paths(&g, cov, k).unwrap();
                for (li, l) in functionals.iter().enumerate() {
                    let part = partition_moments(&g, cov, &sel).unwrap();
                    let model = PredictorModel::new(part, l.clone()).unwrap();
                    for draw in 0..3 {
                        let x: Vec<f64> =
                            (0..n_links).map(|_| rng.random_range(0.5..10.0)).collect();
                        let y_s = model.sample_values(&x).unwrap();
                        let part = model.partition();
                        let (l_s, l_r) = l.split(part).unwrap();
                        let oracle = oracle_predict(
                            &from_dmatrix(part.gs()),
                            &from_dmatrix(part.gr()),
                            cov.variances(),
                            l_s.as_slice(),
                            l_r.as_slice(),
                            &y_s,
                        );
                        let lib = model.predict(&y_s).unwrap();
                        let via_mu = model.predict_via_mean_estimate(&y_s).unwrap();
                        assert!(
                            rel_close(lib, oracle, 1e-9),
                            "{} cov={ci} fn={li} k={k} draw={draw}: {lib} vs oracle {oracle}",
                            t.name()
                        );
                        assert!(
                            rel_close(lib, via_mu, 1e-9),
                            "{} cov={ci} fn={li} k={k} draw={draw}: {lib} vs mean-route {via_mu}",
                            t.name()
                        );
                    }
                }
            }
        }
    }
}

struct McStats {
    mean: f64,
    se: f64,
}

fn mc_stats(samples: &[f64]) -> McStats {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    McStats {
        mean,
        se: (var / n).sqrt(),
    }
}

/// Simulates the model the predictor assumes and checks all three pinned
/// quantities at once: the exact-predictor error, the working predictor's
/// systematic offset, and their squared sum.
fn run_monte_carlo(
    t: &Topology,
    variances: Vec<f64>,
    mu: Vec<f64>,
    selected: Vec<usize>,
    draws: usize,
    seed: u64,
) {
    let g = build_routing_matrix(t).unwrap();
    let cov = CovarianceModel::from_variances(variances.clone()).unwrap();
    let sel = PathSelection::manual(g.n_paths(), selected).unwrap();
    let part = partition_moments(&g, &cov, &sel).unwrap();
    let l = LinearFunctional::network_average(g.n_paths()).unwrap();

    let mspe_exact = mspe_blp(&part, &l).unwrap();
    let bias = bias_of_eblp(&part, &l, &mu).unwrap();

    // Exact best predictor, centered on the true means.
    let (l_s, l_r) = l.split(&part).unwrap();
    let mu_v = nalgebra::DVector::from_column_slice(&mu);
    let gs_mu = part.gs() * &mu_v;
    let gr_mu = part.gr() * &mu_v;
    let model = PredictorModel::new(part.clone(), l.clone()).unwrap();

    let stds: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gm = from_dmatrix(g.entries());
    let sampled = part.sampled_ids().to_vec();
    let rest = part.rest_ids().to_vec();

    let mut sq_blp = Vec::with_capacity(draws);
    let mut sq_eblp = Vec::with_capacity(draws);
    let mut err_eblp = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x: Vec<f64> = mu
            .iter()
            .zip(&stds)
            .map(|(&m, &s)| m + s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y = matvec(&gm, &x);
        let y_s: Vec<f64> = sampled.iter().map(|&p| y[p]).collect();
        let truth: f64 = l.weights().iter().zip(&y).map(|(&w, &v)| w * v).sum();

        let ys_v = nalgebra::DVector::from_column_slice(&y_s);
        let centered = part.prediction_operator() * (&ys_v - &gs_mu);
        let p_blp = l_s.dot(&ys_v) + l_r.dot(&gr_mu) + l_r.dot(&centered);
        sq_blp.push((truth - p_blp) * (truth - p_blp));

        let p_eblp = model.predict(&y_s).unwrap();
        sq_eblp.push((truth - p_eblp) * (truth - p_eblp));
        err_eblp.push(p_eblp - truth);
    }

    let blp = mc_stats(&sq_blp);
    assert!(
        (blp.mean - mspe_exact).abs() <= 3.0 * blp.se,
        "BLP MSPE: mc {} +- {} vs exact {mspe_exact}",
        blp.mean,
        blp.se
    );
    let bias_mc = mc_stats(&err_eblp);
    assert!(
        (bias_mc.mean - bias).abs() <= 3.0 * bias_mc.se,
        "bias: mc {} +- {} vs exact {bias}",
        bias_mc.mean,
        bias_mc.se
    );
    let eblp = mc_stats(&sq_eblp);
    let decomposed = mspe_exact + bias * bias;
    assert!(
        (eblp.mean - decomposed).abs() <= 3.0 * eblp.se,
        "E-BLP MSPE: mc {} +- {} vs decomposition {decomposed}",
        eblp.mean,
        eblp.se
    );
}

#[test]
fn monte_carlo_validates_error_decomposition_on_the_line() {
    run_monte_carlo(
        &line3(),
        vec![0.5, 1.0, 2.0, 1.5],
        vec![1.0, 1.0, 1.0, 1.0],
        vec![0, 3],
        100_000,
        2024,
    );
}

#[test]
fn monte_carlo_validates_error_decomposition_on_a_random_graph() {
    let t = random_topology(11);
    let g = build_routing_matrix(&t).unwrap();
    let n_links = g.n_links();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let variances: Vec<f64> = (0..n_links).map(|_| rng.random_range(0.3..2.5)).collect();
    let mu: Vec<f64> = (0..n_links).map(|_| rng.random_range(1.0..8.0)).collect();
    let cov = CovarianceModel::from_variances(variances.clone()).unwrap();
    let k = 4;
    let sel = select_paths(&g, &cov, k).unwrap();
    run_monte_carlo(&t, variances, mu, sel.selected, 100_000, 2025);
}
