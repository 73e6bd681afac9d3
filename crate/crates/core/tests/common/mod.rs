#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specmargin_core::kde::{DensityModel, GaussianComponent};
use specmargin_core::PointSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_points(n: usize, d: usize, scale: f64, seed: u64) -> PointSet {
    let mut r = rng(seed);
    PointSet::new(d, (0..n * d).map(|_| r.random::<f64>() * scale).collect()).unwrap()
}

/// Uniform draws from unit disks around `centers`; point `i` goes to center `i % centers.len()`.
pub fn disk_blobs(centers: &[[f64; 2]], n: usize, seed: u64) -> PointSet {
    let mut r = rng(seed);
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n {
        let rad = r.random::<f64>().sqrt();
        let t = r.random::<f64>() * std::f64::consts::TAU;
        let c = centers[i % centers.len()];
        coords.push(c[0] + rad * t.cos());
        coords.push(c[1] + rad * t.sin());
    }
    PointSet::new(2, coords).unwrap()
}

pub fn triangle_centers(side: f64) -> [[f64; 2]; 3] {
    let h = side * 3f64.sqrt() / 2.0;
    [[-side / 2.0, 0.0], [side / 2.0, 0.0], [0.0, h]]
}

/// Equal-weight unit-scale Gaussians at `means`, with `λ` at 60% of the way
/// from the saddle between the first two modes to the peak.
pub fn mixture(means: &[[f64; 2]]) -> DensityModel {
    let w = 1.0 / means.len() as f64;
    let comps = means.iter().map(|m| GaussianComponent { weight: w, mean: m.to_vec(), scale: 1.0 }).collect();
    let m = DensityModel::new(comps, None).unwrap();
    let modes = m.modes();
    let peak = m.density(&modes[0]);
    let saddle = m.segment_minimum(&modes[0], &modes[1]);
    m.with_lambda(saddle + 0.6 * (peak - saddle)).unwrap()
}

pub fn two_gaussians() -> DensityModel {
    mixture(&[[-2.0, 0.0], [2.0, 0.0]])
}

pub fn dist(p: &PointSet, i: usize, j: usize) -> f64 {
    p.point(i).iter().zip(p.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Every labelling with labels in restricted-growth form and exactly `k` blocks.
pub fn for_each_partition(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(labels: &mut Vec<usize>, n: usize, k: usize, used: usize, f: &mut dyn FnMut(&[usize])) {
        if labels.len() == n {
            if used == k {
                f(labels);
            }
            return;
        }
        let remaining = n - labels.len();
        if used + remaining < k {
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels.push(l);
            rec(labels, n, k, used.max(l + 1), f);
            labels.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), n, k, 0, &mut f);
}

/// Smallest distance between points with different labels.
pub fn min_between(p: &PointSet, labels: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if labels[i] != labels[j] {
                best = best.min(dist(p, i, j));
            }
        }
    }
    best
}

/// Largest achievable smallest between-cluster distance over all `k`-way partitions.
pub fn exhaustive_max_margin(p: &PointSet, k: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for_each_partition(p.len(), k, |labels| best = best.max(min_between(p, labels)));
    best
}

fn components_at(p: &PointSet, idx: &[usize], threshold: f64) -> usize {
    let m = idx.len();
    let mut comp: Vec<usize> = (0..m).collect();
    fn root(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            x = c[x];
        }
        x
    }
    for a in 0..m {
        for b in (a + 1)..m {
            if dist(p, idx[a], idx[b]) <= threshold {
                let (ra, rb) = (root(&mut comp, a), root(&mut comp, b));
                comp[ra] = rb;
            }
        }
    }
    (0..m).filter(|&a| root(&mut comp, a) == a).count()
}

/// Smallest `δ` among pairwise distances such that no split of `idx` has
/// parts more than `δ` apart, i.e. the threshold graph at `δ` is connected.
pub fn threshold_delta(p: &PointSet, idx: &[usize]) -> f64 {
    if idx.len() < 2 {
        return 0.0;
    }
    let mut cands: Vec<f64> = Vec::new();
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            cands.push(dist(p, idx[a], idx[b]));
        }
    }
    cands.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if components_at(p, idx, cands[mid]) == 1 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

/// Agglomerates by repeatedly merging the two clusters with the smallest
/// largest cross distance.
pub fn naive_complete_linkage(rows: &[Vec<f64>], k: usize) -> Vec<usize> {
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let mut clusters: Vec<Vec<usize>> = (0..rows.len()).map(|i| vec![i]).collect();
    while clusters.len() > k {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut h = 0.0f64;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        h = h.max(d(&rows[i], &rows[j]));
                    }
                }
                if h < best.0 {
                    best = (h, a, b);
                }
            }
        }
        let merged = clusters.remove(best.2);
        clusters[best.1].extend(merged);
    }
    let mut labels = vec![0; rows.len()];
    for (l, c) in clusters.iter().enumerate() {
        for &i in c {
            labels[i] = l;
        }
    }
    labels
}

/// Largest number of positions that agree under some bijection of labels.
pub fn brute_force_agreement(a: &[usize], b: &[usize]) -> usize {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let k = ka.max(kb);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let agree = a.iter().zip(b).filter(|(x, y)| p[**x] == **y).count();
        best = best.max(agree);
    });
    best
}

fn permute(p: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, f);
        p.swap(i, j);
    }
}

/// `∫_0^R r^{d-1} exp(-r^α) dr · |S^{d-1}|` by composite Simpson on a fine grid.
pub fn radial_integral(alpha: f64, d: usize) -> f64 {
    let upper = 60f64.powf(1.0 / alpha);
    let steps = 400_000;
    let h = upper / steps as f64;
    let f = |r: f64| r.powi(d as i32 - 1) * (-r.powf(alpha)).exp();
    let mut s = f(0.0) + f(upper);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let pi = std::f64::consts::PI;
    let surface = match d {
        1 => 2.0,
        2 => 2.0 * pi,
        3 => 4.0 * pi,
        _ => panic!("surface area only tabulated for d <= 3"),
    };
    surface * s * h / 3.0
}
