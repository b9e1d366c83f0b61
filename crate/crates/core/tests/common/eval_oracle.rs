//! Independent oracles for the evaluation module.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cyclezsl_core::evaluation::{ausuc_points, knn_classify};
use cyclezsl_core::Tensor;

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, grid: bool) -> Tensor<f64> {
    let data: Vec<f64> = (0..n * d)
        .map(|_| if grid { rng.random_range(0..3) as f64 } else { rng.random_range(-1.0..1.0) })
        .collect();
    Tensor::new(vec![n, d], data).unwrap()
}

/// Every distance, a full sort, and a literal reading of the vote rule.
pub fn brute_force_knn(refs: &Tensor<f64>, labels: &[usize], q: &[f64], k: usize) -> usize {
    let mut all: Vec<(f64, usize)> = (0..refs.rows())
        .map(|i| {
            let d2: f64 = refs.row(i).iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2.sqrt(), labels[i])
        })
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let top = &all[..k];
    let mut candidates: Vec<usize> = top.iter().map(|t| t.1).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let count = |l: usize| top.iter().filter(|t| t.1 == l).count();
    let summed = |l: usize| top.iter().filter(|t| t.1 == l).map(|t| t.0).sum::<f64>();
    let most = candidates.iter().map(|&l| count(l)).max().unwrap();
    let tied: Vec<usize> = candidates.into_iter().filter(|&l| count(l) == most).collect();
    let least = tied.iter().map(|&l| summed(l)).fold(f64::INFINITY, f64::min);
    *tied.iter().find(|&&l| summed(l) == least).unwrap()
}

/// Piecewise-linear interpolation of the sorted, axis-extended polyline,
/// integrated by the midpoint rule on a fine grid.
pub fn dense_integral(points: &[(f64, f64)], steps: usize) -> f64 {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.partial_cmp(&a.1).unwrap()));
    p.insert(0, (0.0, p[0].1));
    let x_end = p.last().unwrap().0;
    let h = x_end / steps as f64;
    let mut seg = 0;
    let mut total = 0.0;
    for i in 0..steps {
        let x = (i as f64 + 0.5) * h;
        while seg + 2 < p.len() && p[seg + 1].0 < x {
            seg += 1;
        }
        let (a, b) = (p[seg], p[seg + 1]);
        let y = if b.0 > a.0 { a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0) } else { b.1 };
        total += y * h;
    }
    total
}


/// Labels of random 50-point reference sets (continuous and on a coarse grid
/// so that distance ties occur) agree with the oracle for k in {1, 3, 5}.
pub fn knn_matches_brute_force() -> Result<(), String> {
    for (seed, grid) in [(1u64, false), (2, false), (3, true), (4, true)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let refs = random_points(&mut rng, 50, 3, grid);
        let labels: Vec<usize> = (0..50).map(|_| rng.random_range(0..4)).collect();
        let queries = random_points(&mut rng, 30, 3, grid);
        for k in [1, 3, 5] {
            let got = knn_classify(&refs, &labels, &queries, k).map_err(|e| e.to_string())?;
            let want: Vec<usize> = (0..30).map(|i| brute_force_knn(&refs, &labels, queries.row(i), k)).collect();
            if got != want {
                return Err(format!("seed {seed} k {k}: {got:?} vs {want:?}"));
            }
        }
    }
    Ok(())
}

/// Trapezoidal AUSUC of random monotone 20-point curves agrees with dense
/// integration within 1e-6.
pub fn ausuc_matches_dense() -> Result<(), String> {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut ys: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let pts: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
        let area = ausuc_points(&pts).map_err(|e| e.to_string())?;
        let oracle = dense_integral(&pts, 2_000_000);
        if (area - oracle).abs() >= 1e-6 {
            return Err(format!("seed {seed}: {area} vs {oracle}"));
        }
    }
    Ok(())
}
