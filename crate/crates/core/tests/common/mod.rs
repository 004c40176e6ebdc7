//! Reference computations and generators for the integration tests. The
//! oracles are written from first principles and share no code with the
//! library.

#![allow(dead_code)]

pub mod gen;

use std::collections::HashMap;

/// Sum of squared percentage shares.
pub fn hhi(shares: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in shares {
        s += x * x;
    }
    s
}

/// Banzhaf swing counts by listing every coalition as a vector of members.
pub fn swing_counts(weights: &[f64], threshold: f64) -> Vec<u64> {
    let n = weights.len();
    let mut coalitions: Vec<Vec<usize>> = vec![vec![]];
    for i in 0..n {
        let with: Vec<Vec<usize>> = coalitions
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.push(i);
                c
            })
            .collect();
        coalitions.extend(with);
    }
    let weight = |c: &[usize]| c.iter().map(|&i| weights[i]).sum::<f64>();
    let mut counts = vec![0; n];
    for c in &coalitions {
        let w = weight(c);
        if w + 1e-12 >= threshold {
            continue;
        }
        for (i, count) in counts.iter_mut().enumerate() {
            if !c.contains(&i) && w + weights[i] + 1e-12 >= threshold {
                *count += 1;
            }
        }
    }
    counts
}

/// Consensus messages for one IBFT decision with `k` honest validators that
/// each send point to point to the other `k - 1`: one proposal broadcast,
/// then a prepare and a commit broadcast from every validator.
pub fn ibft_messages(k: u64) -> u64 {
    let proposal = k - 1;
    let prepares = k * (k - 1);
    let commits = k * (k - 1);
    proposal + prepares + commits
}

/// Closed-form relative revenue of a selfish miner with share `a` whose
/// blocks win a tie with probability `g`.
pub fn selfish_closed_form(a: f64, g: f64) -> f64 {
    let num = a * (1.0 - a) * (1.0 - a) * (4.0 * a + g * (1.0 - 2.0 * a)) - a * a * a;
    let den = 1.0 - a * (1.0 + (2.0 - a) * a);
    num / den
}

/// Relative revenue of a selfish miner from the stationary distribution of
/// its lead, solved numerically on a truncated chain.
///
/// States: 0 (no lead), 0' (tie race), 1, 2, ... `max_lead`.
pub fn selfish_markov(a: f64, g: f64, max_lead: usize) -> f64 {
    let b = 1.0 - a;
    // index 0 = state 0, index 1 = state 0', index i+1 = lead i for i >= 1
    let size = max_lead + 2;
    let idx = |lead: usize| lead + 1;
    let mut p = vec![vec![0.0; size]; size];
    p[0][idx(1)] += a;
    p[0][0] += b;
    p[1][0] += 1.0;
    p[idx(1)][idx(2)] += a;
    p[idx(1)][1] += b;
    for lead in 2..=max_lead {
        let up = if lead == max_lead { lead } else { lead + 1 };
        p[idx(lead)][idx(up)] += a;
        let down = if lead == 2 { 0 } else { idx(lead - 1) };
        p[idx(lead)][down] += b;
    }
    // power iteration for the stationary distribution
    let mut pi = vec![1.0 / size as f64; size];
    for _ in 0..20_000 {
        let mut next = vec![0.0; size];
        for (i, row) in p.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                next[j] += pi[i] * q;
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(x, y)| (x - y).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    // expected blocks added to the final chain per step, by owner
    let mut pool = 0.0;
    let mut others = 0.0;
    others += pi[0] * b;
    pool += pi[1] * (a * 2.0 + b * g * 1.0);
    others += pi[1] * (b * g * 1.0 + b * (1.0 - g) * 2.0);
    pool += pi[idx(2)] * b * 2.0;
    for lead in 3..=max_lead {
        pool += pi[idx(lead)] * b;
    }
    pool / (pool + others)
}

/// Least-squares slope through the origin and the fit's largest relative
/// residual.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let c = sxy / sxx;
    let worst = x
        .iter()
        .zip(y)
        .map(|(a, b)| ((c * a - b) / b).abs())
        .fold(0.0, f64::max);
    (c, worst)
}

/// Ordinary least squares `y = m x + q`; returns `(m, q, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let m = sxy / sxx;
    let q = my - m * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - (m * a + q)).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (m, q, r2)
}

/// Is `share` within three binomial standard deviations of `p` after
/// `n` trials?
pub fn within_binomial_band(share: f64, p: f64, n: usize) -> bool {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    (share - p).abs() <= 3.0 * sigma
}

/// Ancestry by walking an explicit parent map.
pub struct ParentMap {
    pub parent: HashMap<u64, u64>,
}

impl ParentMap {
    pub fn path(&self, mut b: u64) -> Vec<u64> {
        let mut out = vec![b];
        while let Some(&p) = self.parent.get(&b) {
            out.push(p);
            b = p;
        }
        out
    }

    pub fn is_ancestor(&self, a: u64, b: u64) -> bool {
        self.path(b).contains(&a)
    }
}
