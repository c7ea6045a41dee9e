//! Deliberately naive reference implementations used to cross-check the
//! production code, plus generators for randomized fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Instant-runoff by direct simulation on plain id lists.
///
/// Same rule as the production tally: strict majority of non-exhausted
/// ballots wins; all candidates tied for fewest votes go out together unless
/// that would empty the field, in which case the lowest id among them wins.
pub fn brute_force_irv(ballots: &[Vec<u32>]) -> Option<u32> {
    let mut alive: Vec<u32> = Vec::new();
    for b in ballots {
        for &c in b {
            if !alive.contains(&c) {
                alive.push(c);
            }
        }
    }
    alive.sort_unstable();
    if alive.is_empty() {
        return None;
    }
    loop {
        let mut votes = vec![0u32; alive.len()];
        let mut active = 0u32;
        for b in ballots {
            for c in b {
                if let Some(pos) = alive.iter().position(|a| a == c) {
                    votes[pos] += 1;
                    active += 1;
                    break;
                }
            }
        }
        for (i, &v) in votes.iter().enumerate() {
            if v * 2 > active {
                return Some(alive[i]);
            }
        }
        if alive.len() == 1 {
            return Some(alive[0]);
        }
        let low = *votes.iter().min().unwrap();
        let keep: Vec<u32> = alive.iter().zip(&votes).filter(|(_, &v)| v != low).map(|(&c, _)| c).collect();
        if keep.is_empty() {
            return Some(alive[0]);
        }
        alive = keep;
    }
}

/// Random ranked profile: up to `max_candidates` ids drawn from 0..27, up to
/// `max_voters` ballots of 1 to 5 distinct ids each.
pub fn random_ranked_profile<R: Rng>(rng: &mut R, max_candidates: usize, max_voters: usize) -> Vec<Vec<u32>> {
    let mut pool: Vec<u32> = (0..27).collect();
    pool.shuffle(rng);
    let k = rng.gen_range(1..=max_candidates.clamp(1, 27));
    let candidates = &pool[..k];
    let voters = rng.gen_range(1..=max_voters.max(1));
    (0..voters)
        .map(|_| {
            let len = rng.gen_range(1..=5.min(k));
            let mut c = candidates.to_vec();
            c.shuffle(rng);
            c.truncate(len);
            c
        })
        .collect()
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn gauss_jordan(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (v, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n]).collect())
}

/// OLS coefficients from the normal equations `X'X b = X'y`, with
/// compensated sums and two rounds of iterative refinement.
/// `x` is row-major, one inner vector per observation.
pub fn normal_equations_ols(x: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = x.first()?.len();
    let xtx: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| compensated_sum(x.iter().map(|r| r[i] * r[j]))).collect())
        .collect();
    let xty: Vec<f64> = (0..p).map(|i| compensated_sum(x.iter().zip(y).map(|(r, &yi)| r[i] * yi))).collect();
    let mut beta = gauss_jordan(&xtx, &xty)?;
    for _ in 0..2 {
        let resid: Vec<f64> = (0..p)
            .map(|i| xty[i] - compensated_sum((0..p).map(|j| xtx[i][j] * beta[j])))
            .collect();
        let step = gauss_jordan(&xtx, &resid)?;
        for (b, s) in beta.iter_mut().zip(step) {
            *b += s;
        }
    }
    Some(beta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlsInstance {
    /// Row-major, first column all ones.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Intercept plus `k` uniform covariates on `n` rows, linear response with
/// Gaussian-ish noise. Well conditioned by construction.
pub fn random_ols_instance<R: Rng>(rng: &mut R, n: usize, k: usize) -> OlsInstance {
    let beta: Vec<f64> = (0..=k).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![1.0];
        row.extend((0..k).map(|_| rng.gen_range(0.0..1.0)));
        // sum of uniforms, roughly normal
        let noise: f64 = (0..6).map(|_| rng.gen_range(-0.5..0.5)).sum::<f64>() * 0.1;
        y.push(row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + noise);
        x.push(row);
    }
    OlsInstance { x, y }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrvFixture {
    pub ballots: Vec<Vec<u32>>,
    pub winner: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlsFixture {
    pub instance: OlsInstance,
    pub coefficients: Vec<f64>,
}

/// Seeded random ranked profiles with their brute-force winners.
pub fn irv_fixtures(seed: u64, count: usize) -> Vec<IrvFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let ballots = random_ranked_profile(&mut rng, 27, 77);
            let winner = brute_force_irv(&ballots).expect("nonempty profile");
            IrvFixture { ballots, winner }
        })
        .collect()
}

/// Seeded random regressions (n in 30..200, 1 to 8 covariates) with their
/// normal-equation coefficients.
pub fn ols_fixtures(seed: u64, count: usize) -> Vec<OlsFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=8);
            let n = rng.gen_range(30..200);
            let instance = random_ols_instance(&mut rng, n, k);
            let coefficients = normal_equations_ols(&instance.x, &instance.y).expect("full rank");
            OlsFixture { instance, coefficients }
        })
        .collect()
}
