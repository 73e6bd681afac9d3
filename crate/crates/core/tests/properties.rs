mod common;

use approx::assert_relative_eq;
use common::*;
use proptest::prelude::*;
use rand::Rng;
use specmargin_core::bounds::{embedding_geometry, generate_instance, log_evec_within_bound, SweepConfig};
use specmargin_core::cluster::*;
use specmargin_core::eigen::{decompose, decompose_with, spectrum, symmetric_eigen, DecomposeOptions, Solver};
use specmargin_core::graph::*;
use specmargin_core::kde::*;
use specmargin_core::matrix::DenseMatrix;
use specmargin_core::*;

fn points_strategy(max_n: usize, d: usize) -> impl Strategy<Value = PointSet> {
    (3..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(-3.0f64..3.0, n * d).prop_map(move |c| PointSet::new(d, c).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_monotone(alpha in 0.5f64..4.0, a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let spec = KernelSpec::exponential_power(alpha, 2).unwrap();
        let (y, x) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(spec.eval(x).unwrap() <= spec.eval(y).unwrap());
    }

    #[test]
    fn scaled_kernel_is_rescaled_argument(alpha in 0.5f64..4.0, x in 0.0f64..50.0, sigma in 1e-3f64..1e3) {
        let spec = KernelSpec::exponential_power(alpha, 1).unwrap();
        prop_assert_eq!(spec.eval_scaled(x, sigma).unwrap().to_bits(), spec.eval(x / sigma).unwrap().to_bits());
    }

    #[test]
    fn laplacians_are_symmetric_psd_with_null_vector(p in points_strategy(14, 2), sigma in 0.5f64..4.0) {
        let spec = KernelSpec::gaussian(2).unwrap();
        for v in Variant::ALL {
            let b = build_bundle(&p, &spec, sigma, v).unwrap();
            let l = b.laplacian();
            let n = b.len();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((l[(i, j)] - l[(j, i)]).abs() <= 1e-12);
                }
            }
            let null: Vec<f64> = match v {
                Variant::Unnormalized => vec![1.0; n],
                _ => b.degree().iter().map(|d| d.sqrt()).collect(),
            };
            let norm = null.iter().map(|x| x * x).sum::<f64>().sqrt();
            let r = l.mul_vec(&null).iter().map(|x| x * x).sum::<f64>().sqrt() / norm;
            prop_assert!(r <= 1e-8, "{v}: residual {r}");
            let (vals, _) = symmetric_eigen(l, Solver::Jacobi).unwrap();
            let scale = vals.last().unwrap().abs().max(1.0);
            prop_assert!(vals[0] >= -1e-12 * scale, "{v}: {}", vals[0]);
            prop_assert!(vals[0].abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn kde_ignores_point_order(p in points_strategy(12, 2), seed in any::<u64>()) {
        let spec = KernelSpec::gaussian(2).unwrap();
        let mut order: Vec<usize> = (0..p.len()).collect();
        let mut r = rng(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, r.random_range(0..=i));
        }
        let shuffled = p.subset(&order).unwrap();
        let a = kde_at(&p, &spec, 0.7, &p, Execution::Sequential).unwrap();
        let b = kde_at(&shuffled, &spec, 0.7, &p, Execution::Sequential).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*x >= 0.0);
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn hungarian_matches_brute_force(a in prop::collection::vec(0usize..4, 1..14), seed in any::<u64>()) {
        let mut r = rng(seed);
        let b: Vec<usize> = a.iter().map(|&x| if r.random::<f64>() < 0.3 { r.random_range(0..4) } else { (x + 1) % 4 }).collect();
        let m = match_labels(&a, &b).unwrap();
        prop_assert_eq!(m.agreement, brute_force_agreement(&a, &b));
        prop_assert_eq!(m.compared, a.len());
    }

    #[test]
    fn linkage_matches_naive_agglomeration(p in points_strategy(16, 3), k in 1usize..4) {
        let rows: Vec<Vec<f64>> = (0..p.len()).map(|i| p.point(i).to_vec()).collect();
        let m = DenseMatrix::from_fn(p.len(), 3, |i, j| p.point(i)[j]);
        let fast = Partition::canonical(&complete_linkage(&m, k).unwrap()).unwrap();
        let slow = Partition::canonical(&naive_complete_linkage(&rows, k)).unwrap();
        prop_assert!(fast.same_clusters(&slow), "{:?} vs {:?}", fast.labels(), slow.labels());
    }

    #[test]
    fn outside_label_hygiene(seed in 0u64..1000) {
        let model = two_gaussians();
        let spec = KernelSpec::gaussian(2).unwrap();
        let pts = sample(&model, 400, seed).unwrap();
        let s = schedule(400, 2, &spec, ScheduleProfile::EvecConsistency, ScheduleParams { slack_scale: 0.004, epsilon: 0.7, ..Default::default() }).unwrap();
        let r = level_set_components(&pts, model.lambda().unwrap(), &spec, &s, Variant::Normalized, Some(2), &ClusterOptions::default()).unwrap();
        let mut seen = vec![false; pts.len()];
        for &i in &r.survivors {
            seen[i] = true;
            prop_assert!(r.labels[i] != OUTSIDE && r.labels[i] < r.cluster.k_used);
        }
        for i in 0..pts.len() {
            prop_assert_eq!(seen[i], r.labels[i] != OUTSIDE);
        }
    }
}

#[test]
fn normalization_matches_quadrature() {
    for alpha in [1.0, 2.0] {
        for d in 1..=3 {
            let spec = KernelSpec::exponential_power(alpha, d).unwrap();
            let q = radial_integral(alpha, d);
            assert!((spec.c_k() * q - 1.0).abs() <= 1e-6, "alpha {alpha} d {d}: {}", spec.c_k() * q);
        }
    }
}

#[test]
fn quadratic_form_matches_double_sum() {
    let mut r = rng(5);
    for draw in 0..100 {
        let n = r.random_range(2..20);
        let d = r.random_range(1..4);
        let alpha = [1.0, 1.5, 2.0][draw % 3];
        let sigma = 0.3 + 2.0 * r.random::<f64>();
        let p = uniform_points(n, d, 3.0, draw as u64);
        let spec = KernelSpec::exponential_power(alpha, d).unwrap();
        let b = build_bundle(&p, &spec, sigma, Variant::Unnormalized).unwrap();
        let u: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
        let q = quadratic_form(&b, &u).unwrap();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = (-(dist(&p, i, j) / sigma).powf(alpha)).exp();
                sum += 0.5 * w * (u[i] - u[j]).powi(2);
            }
        }
        assert!((q.matrix - sum).abs() <= 1e-10 * sum.abs().max(1.0), "draw {draw}: {} vs {sum}", q.matrix);
        assert!((q.pairwise - sum).abs() <= 1e-10 * sum.abs().max(1.0));
    }
}

#[test]
fn cut_objectives_match_double_loop() {
    let spec = KernelSpec::gaussian(2).unwrap();
    for seed in 0..10 {
        let p = uniform_points(8, 2, 2.0, seed);
        let part = Partition::canonical(&[0, 1, 0, 1, 1, 0, 0, 1]).unwrap();
        let c = cut_objectives(&p, &spec, 1.0, &part).unwrap();
        let l = part.labels();
        let (mut cut, mut vol) = ([0.0; 2], [0.0; 2]);
        for i in 0..8 {
            for j in 0..8 {
                let w = (-dist(&p, i, j).powi(2)).exp();
                vol[l[i]] += w;
                if l[i] != l[j] {
                    cut[l[i]] += w;
                }
            }
        }
        assert_relative_eq!(c.rcut, cut[0] / 4.0 + cut[1] / 4.0, max_relative = 1e-10);
        assert_relative_eq!(c.ncut, cut[0] / vol[0] + cut[1] / vol[1], max_relative = 1e-10);
    }
}

#[test]
fn mst_delta_matches_threshold_graph() {
    let mut r = rng(17);
    for trial in 0..60 {
        let n = r.random_range(2..=40);
        let p = uniform_points(n, 2, 5.0, 100 + trial);
        let idx: Vec<usize> = (0..n).collect();
        let mst = mst_edges(&p, &idx).iter().map(|e| e.2).fold(0.0, f64::max);
        assert_eq!(mst, threshold_delta(&p, &idx), "trial {trial}");
        let part = max_margin_partition(&p, 2.min(n)).unwrap();
        let prof = partition_profile(&p, &part).unwrap();
        for (l, members) in part.members().iter().enumerate() {
            assert_eq!(prof.delta[l], threshold_delta(&p, members));
        }
    }
}

#[test]
fn max_margin_matches_exhaustive_search() {
    let mut r = rng(23);
    for trial in 0..60 {
        let n = r.random_range(3..=10);
        let k = r.random_range(2..=3);
        let p = uniform_points(n, 2, 4.0, 500 + trial);
        let part = max_margin_partition(&p, k).unwrap();
        assert_eq!(part.k(), k);
        assert_eq!(min_between(&p, part.labels()), exhaustive_max_margin(&p, k), "trial {trial}");
    }
}

#[test]
fn decompositions_satisfy_invariants() {
    let mut r = rng(31);
    for trial in 0..40 {
        let n = r.random_range(3..60);
        let d = r.random_range(1..4);
        let p = uniform_points(n, d, 4.0, 900 + trial);
        let spec = KernelSpec::exponential_power([1.0, 2.0, 3.0][trial as usize % 3], d).unwrap();
        let sigma = 0.3 + 3.0 * r.random::<f64>();
        for v in Variant::ALL {
            let b = match build_bundle(&p, &spec, sigma, v) {
                Ok(b) => b,
                Err(Error::SingularDegree { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let k = r.random_range(1..=n.min(4));
            let e = decompose(&b, k).unwrap();
            assert!(e.check(&b).passes(1e-8), "{v} trial {trial}: {:?}", e.check(&b));

            let u = e.eigenvectors();
            let l = b.laplacian();
            let mut rayleigh = 0.0;
            for j in 0..k {
                let col = u.column(j);
                rayleigh += col.iter().zip(l.mul_vec(&col)).map(|(a, b)| a * b).sum::<f64>();
            }
            let sum: f64 = e.eigenvalues()[..k].iter().sum();
            assert!((sum - rayleigh).abs() <= 1e-8, "{v}: trace {sum} vs {rayleigh}");

            if v == Variant::Normalized {
                let gram = DenseMatrix::from_fn(k, k, |a, c| (0..n).map(|i| u[(i, a)] * u[(i, c)] / b.degree()[i]).sum());
                let (vals, _) = symmetric_eigen(&gram, Solver::Jacobi).unwrap();
                for g in vals {
                    assert!(g >= 1.0 / n as f64 - 1e-10 && g <= 1.0 + 1e-10, "gram eigenvalue {g}");
                }
            }
        }
    }
}

#[test]
fn solvers_and_spectrum_agree() {
    let spec = KernelSpec::gaussian(2).unwrap();
    let p = uniform_points(80, 2, 4.0, 3);
    for v in Variant::ALL {
        let b = build_bundle(&p, &spec, 0.8, v).unwrap();
        let jac = decompose_with(&b, 3, DecomposeOptions { solver: Solver::Jacobi, refine_small: false }).unwrap();
        let tri = decompose_with(&b, 3, DecomposeOptions { solver: Solver::Tridiagonal, refine_small: false }).unwrap();
        let vals = spectrum(&b, DecomposeOptions { solver: Solver::Tridiagonal, refine_small: false }).unwrap();
        assert!(jac.check(&b).passes(1e-8) && tri.check(&b).passes(1e-8));
        let scale = jac.eigenvalues().last().unwrap().abs();
        for ((a, b), c) in jac.eigenvalues().iter().zip(tri.eigenvalues()).zip(&vals) {
            assert!((a - b).abs() <= 1e-10 * scale && (a - c).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn log_space_bound_matches_direct_evaluation() {
    let cfg = SweepConfig::default();
    let mut compared = 0;
    for id in 0..30 {
        let inst = generate_instance(&cfg, id).unwrap();
        let prof = &inst.profile;
        let (n, k) = (prof.n() as f64, prof.k() as f64);
        for &(variant, sigma) in &inst.evaluations {
            let logs = log_evec_within_bound(prof, &inst.spec, sigma, variant).unwrap();
            let kern = |x: f64| inst.spec.eval_scaled(x, sigma).unwrap();
            for (l, &delta) in prof.delta.iter().enumerate() {
                let cross = (0..prof.k())
                    .map(|m| {
                        let base = kern(prof.separation[m]);
                        if variant == Variant::NormalizedNoSelfLoops { base / kern(prof.delta[m]) } else { base }
                    })
                    .fold(0.0, f64::max);
                let direct = n.powf(1.5) * k.sqrt() * (cross / kern(delta)).sqrt();
                let normal = |x: f64| x.is_normal() && x < 1e300;
                if normal(cross) && normal(kern(delta)) && normal(direct) {
                    assert!((logs[l].exp() - direct).abs() <= 1e-10 * direct, "{} vs {direct}", logs[l].exp());
                    compared += 1;
                }
            }
        }
    }
    assert!(compared > 50);
}

#[test]
fn within_distance_shrinks_with_sigma() {
    let pts = disk_blobs(&[[0.0, 0.0], [6.0, 0.0]], 40, 9);
    let part = max_margin_partition(&pts, 2).unwrap();
    let prof = partition_profile(&pts, &part).unwrap();
    let spec = KernelSpec::gaussian(2).unwrap();
    let grid: Vec<f64> = (0..12).map(|i| prof.margin * 0.9 * 0.8f64.powi(i)).filter(|&s| s > 0.35 * prof.max_delta()).collect();
    assert!(grid.len() >= 6);
    let mut last = f64::INFINITY;
    for &sigma in &grid {
        let b = build_bundle(&pts, &spec, sigma, Variant::Unnormalized).unwrap();
        let e = decompose(&b, 2).unwrap();
        let g = embedding_geometry(e.embedding(), part.labels(), 2, Execution::Sequential).unwrap();
        assert!(g.max_within <= last + 1e-7, "sigma {sigma}: {} after {last}", g.max_within);
        last = g.max_within;
    }
}

#[test]
fn kde_matches_naive_sum() {
    let p = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, -1.1], vec![2.2, 0.1]]).unwrap();
    let q = PointSet::from_rows(&[vec![0.1, 0.2], vec![3.0, -2.0], vec![-1.0, 1.0]]).unwrap();
    for alpha in [1.0, 2.0] {
        let spec = KernelSpec::exponential_power(alpha, 2).unwrap();
        let sigma = 0.8;
        let got = kde_at(&p, &spec, sigma, &q, Execution::Parallel).unwrap();
        let c_k = alpha / (2.0 * std::f64::consts::PI);
        for (t, g) in got.iter().enumerate() {
            let s: f64 = (0..5)
                .map(|i| {
                    let r = q.point(t).iter().zip(p.point(i)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    (-(r / sigma).powf(alpha)).exp()
                })
                .sum();
            let want = c_k * s / (5.0 * sigma * sigma);
            assert!((g - want).abs() <= 1e-12 * want.max(1e-300), "alpha {alpha}: {g} vs {want}");
        }
    }
}

#[test]
fn schedule_decreases_with_n() {
    let spec = KernelSpec::gaussian(2).unwrap();
    for profile in [ScheduleProfile::EvecConsistency, ScheduleProfile::EvalConsistency] {
        let s: Vec<f64> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&n| schedule(n, 2, &spec, profile, ScheduleParams::default()).unwrap().sigma_n)
            .collect();
        assert!(s[0] > s[1] && s[1] > s[2], "{profile}: {s:?}");
    }
}

#[test]
fn sampling_is_deterministic_and_centred() {
    let single = DensityModel::new(vec![GaussianComponent { weight: 1.0, mean: vec![1.0, -2.0], scale: 0.5 }], None).unwrap();
    let n = 100_000;
    let a = sample(&single, n, 4).unwrap();
    assert_eq!(a.coords(), sample(&single, n, 4).unwrap().coords());
    for j in 0..2 {
        let mean = (0..n).map(|i| a.point(i)[j]).sum::<f64>() / n as f64;
        assert!((mean - single.components()[0].mean[j]).abs() <= 4.0 * 0.5 / (n as f64).sqrt());
    }
    let pair = DensityModel::new(
        vec![
            GaussianComponent { weight: 1.0, mean: vec![0.0, 0.0], scale: 0.1 },
            GaussianComponent { weight: 0.0, mean: vec![100.0, 100.0], scale: 0.1 },
        ],
        None,
    )
    .unwrap();
    let s = sample(&pair, 2000, 1).unwrap();
    assert!((0..s.len()).all(|i| s.point(i)[0] < 50.0));
}

#[test]
fn plug_in_error_decreases() {
    let model = two_gaussians();
    let spec = KernelSpec::gaussian(2).unwrap();
    let mut decreasing = 0;
    for seed in 0..20 {
        let errs: Vec<f64> = [500, 2000, 8000]
            .iter()
            .map(|&n| {
                let pts = sample(&model, n, seed).unwrap();
                let s = schedule(n, 2, &spec, ScheduleProfile::EvecConsistency, ScheduleParams::default()).unwrap();
                let est = kde_at(&pts, &spec, s.sigma_n, &pts, Execution::Parallel).unwrap();
                (0..n).map(|i| (est[i] - model.density(pts.point(i))).abs()).fold(0.0, f64::max)
            })
            .collect();
        if errs[0] > errs[1] && errs[1] > errs[2] {
            decreasing += 1;
        }
    }
    assert!(decreasing >= 18, "{decreasing}/20");
}

#[test]
fn survivors_split_by_basin_are_separated() {
    let model = two_gaussians();
    let modes = model.modes();
    let lambda = model.lambda().unwrap();
    let gap = model.segment_gap(&modes[0], &modes[1], lambda);
    assert!(gap > 0.0);
    let spec = KernelSpec::gaussian(2).unwrap();
    let n = 8000;
    let s = schedule(n, 2, &spec, ScheduleProfile::EvecConsistency, ScheduleParams { slack_scale: 0.004, epsilon: 0.7, ..Default::default() }).unwrap();
    let mut ok = 0;
    for seed in 0..20 {
        let pts = sample(&model, n, seed).unwrap();
        let est = truncate(&pts, &spec, lambda, s.sigma_n, s.s_n, Execution::Parallel).unwrap();
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &i in &est.survivors {
            if model.basin_label(&modes, pts.point(i)) == 0 { left.push(i) } else { right.push(i) }
        }
        let cross = left.iter().flat_map(|&i| right.iter().map(move |&j| (i, j))).map(|(i, j)| dist(&pts, i, j)).fold(f64::INFINITY, f64::min);
        if cross >= gap / 2.0 {
            ok += 1;
        }
    }
    assert!(ok >= 18, "{ok}/20");
}

#[test]
fn spectral_cluster_examples() {
    let spec = KernelSpec::gaussian(2).unwrap();
    let two = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
    for v in Variant::ALL {
        let r = spectral_cluster(&two, &spec, 0.5, 2, v).unwrap();
        assert_eq!(Partition::canonical(&r.labels).unwrap().labels(), &[0, 1]);
    }

    let base = disk_blobs(&[[0.0, 0.0], [5.0, 0.0]], 20, 2);
    let mut rows = Vec::new();
    for i in 0..base.len() {
        rows.push(base.point(i).to_vec());
        rows.push(base.point(i).to_vec());
    }
    let doubled = PointSet::from_rows(&rows).unwrap();
    let r = spectral_cluster(&doubled, &spec, 0.6, 2, Variant::Unnormalized).unwrap();
    for i in 0..base.len() {
        assert_eq!(r.labels[2 * i], r.labels[2 * i + 1]);
    }

    let far = disk_blobs(&[[0.0, 0.0], [20.0, 0.0]], 30, 8);
    let mm = max_margin_partition(&far, 2).unwrap();
    for v in Variant::ALL {
        let r = spectral_cluster(&far, &spec, 0.8, 2, v).unwrap();
        assert!(r.partition().unwrap().same_clusters(&mm), "{v}");
    }
}

#[test]
fn single_gaussian_has_one_component() {
    let model = DensityModel::new(vec![GaussianComponent { weight: 1.0, mean: vec![0.0, 0.0], scale: 1.0 }], None).unwrap();
    let lambda = 0.5 * model.density(&[0.0, 0.0]);
    let spec = KernelSpec::gaussian(2).unwrap();
    let n = 2000;
    let s = schedule(n, 2, &spec, ScheduleProfile::EvalConsistency, ScheduleParams { slack_scale: 0.004, epsilon: 0.7, ..Default::default() }).unwrap();
    for seed in 0..20 {
        let pts = sample(&model, n, seed).unwrap();
        let r = level_set_components(&pts, lambda, &spec, &s, Variant::Normalized, None, &ClusterOptions::default()).unwrap();
        assert_eq!(r.count_source, CountSource::Estimated);
        assert_eq!(r.cluster.k_used, 1, "seed {seed}");
        assert!(r.survivors.iter().all(|&i| r.labels[i] == 0));
    }
}

#[test]
fn component_count_is_stable_at_small_sigma() {
    let spec = KernelSpec::gaussian(2).unwrap();
    let grid = [0.8, 0.6, 0.5, 0.4, 0.33];
    for seed in 0..5 {
        let pts = disk_blobs(&triangle_centers(4.0), 150, seed);
        let counts: Vec<usize> = grid
            .iter()
            .map(|&sigma| {
                let b = build_bundle(&pts, &spec, sigma, Variant::Normalized).unwrap();
                let vals = spectrum(&b, DecomposeOptions::default()).unwrap();
                let cfg = ComponentCountConfig::new(&spec, sigma, 1.0, 0.0, 0.5).unwrap();
                estimate_component_count(&vals, pts.len(), &cfg, default_c_max(pts.len())).unwrap()
            })
            .collect();
        let tail = &counts[counts.len() - 3..];
        assert!(tail.iter().all(|&c| c == tail[0]), "seed {seed}: {counts:?}");
        assert_eq!(tail[0], 3, "seed {seed}: {counts:?}");
    }
}

#[test]
fn spectral_labels_reach_max_margin_on_conformance_instances() {
    let cfg = SweepConfig { n_max: 40, ..SweepConfig::default() };
    for id in 0..40 {
        let inst = generate_instance(&cfg, id).unwrap();
        let prof = &inst.profile;
        let k = prof.k();
        let hi = 2.0 * prof.margin.max(prof.max_delta());
        let lo = 0.3 * prof.max_delta();
        let grid: Vec<f64> = (0..16).map(|i| hi * (lo / hi).powf(i as f64 / 15.0)).collect();
        for v in Variant::ALL {
            let entries = sigma_sweep(&inst.points, &inst.spec, k, v, &grid, &ClusterOptions::default()).unwrap();
            if entries.iter().all(|e| !e.applicable) {
                assert_eq!(v, Variant::NormalizedNoSelfLoops, "instance {id}");
                continue;
            }
            assert!(stable_agreement_from(&entries).is_some(), "instance {id} {v}: {:?}", entries.iter().map(|e| e.agreement).collect::<Vec<_>>());
        }
    }
}

#[test]
fn execution_modes_are_bit_identical() {
    let spec = KernelSpec::exponential_power(1.5, 3).unwrap();
    let p = uniform_points(70, 3, 3.0, 12);
    let opts = |exec| BundleOptions { degree_floor: None, exec };
    for v in Variant::ALL {
        let a = build_bundle_with(&p, &spec, 1.1, v, opts(Execution::Sequential)).unwrap();
        let b = build_bundle_with(&p, &spec, 1.1, v, opts(Execution::Parallel)).unwrap();
        assert_eq!(a.laplacian().as_slice(), b.laplacian().as_slice());
    }
    let a = kde_at(&p, &spec, 0.9, &p, Execution::Sequential).unwrap();
    let b = kde_at(&p, &spec, 0.9, &p, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
