//! Brute-force reference implementations, written without reusing any
//! library code so they can check it.
#![allow(dead_code, clippy::needless_range_loop)]

use critique_core::{ArgumentCandidate, Restaurant};
use rand::Rng;

pub fn precision(labels: &[bool], k: usize) -> f64 {
    let mut hits = 0;
    for i in 0..k {
        if labels[i] {
            hits += 1;
        }
    }
    hits as f64 / k as f64
}

fn dcg(grades: &[u8], k: usize, linear: bool) -> f64 {
    let mut total = 0.0;
    for (i, g) in grades.iter().enumerate() {
        if i >= k {
            break;
        }
        let gain = if linear { *g as f64 } else { 2f64.powi(*g as i32) - 1.0 };
        total += gain * std::f64::consts::LN_2 / ((i + 2) as f64).ln();
    }
    total
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// nDCG with the ideal DCG found by trying every ordering. Keep `grades` short.
pub fn ndcg(grades: &[u8], k: usize, linear: bool) -> f64 {
    let best = permutations(grades)
        .iter()
        .map(|p| dcg(p, k, linear))
        .fold(f64::NEG_INFINITY, f64::max);
    dcg(grades, k, linear) / best
}

/// Kappa from an explicit confusion matrix over categories `0..c`.
pub fn kappa(a: &[usize], b: &[usize], c: usize) -> f64 {
    let mut m = vec![vec![0usize; c]; c];
    for (x, y) in a.iter().zip(b) {
        m[*x][*y] += 1;
    }
    let n = a.len() as f64;
    let po = (0..c).map(|i| m[i][i]).sum::<usize>() as f64 / n;
    let mut pe = 0.0;
    for i in 0..c {
        let row: usize = m[i].iter().sum();
        let col: usize = (0..c).map(|j| m[j][i]).sum();
        pe += (row as f64 / n) * (col as f64 / n);
    }
    if pe == 1.0 {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let mut ss = 0.0;
    for x in v {
        ss += x * x;
    }
    let n = ss.sqrt();
    v.iter().map(|x| x / n).collect()
}

fn cosine_of_units(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s.clamp(-1.0, 1.0)
}

/// O(n*k) selection: k passes, each taking the best remaining candidate by
/// score descending then id ascending. Returns candidate ids.
pub fn top_k(cands: &[ArgumentCandidate], unit_query: &[f64], k: usize) -> Vec<String> {
    let scores: Vec<f64> = cands
        .iter()
        .map(|c| cosine_of_units(&unit(c.embedding.as_ref().unwrap()), unit_query))
        .collect();
    let mut taken = vec![false; cands.len()];
    let mut out = Vec::new();
    for _ in 0..k.min(cands.len()) {
        let mut best: Option<usize> = None;
        for i in 0..cands.len() {
            if taken[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if scores[i] > scores[b] || (scores[i] == scores[b] && cands[i].id < cands[b].id) => Some(i),
                keep => keep,
            };
        }
        let b = best.unwrap();
        taken[b] = true;
        out.push(cands[b].id.clone());
    }
    out
}

/// A random corpus of `n` candidates over a handful of restaurants. Vector
/// entries are small integers so exact score ties are common.
pub fn random_corpus(rng: &mut impl Rng, n: usize, dim: usize) -> (Vec<ArgumentCandidate>, Vec<Restaurant>) {
    let restaurants: Vec<Restaurant> = (0..5)
        .map(|i| Restaurant {
            id: format!("r{i}"),
            name: format!("R{i}"),
            metadata: Default::default(),
        })
        .collect();
    let mut cands = Vec::with_capacity(n);
    for i in 0..n {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-2i32..=2) as f64).collect();
        if v.iter().all(|x| *x == 0.0) {
            v[0] = 1.0;
        }
        // shuffled ids so index order and id order differ
        let id = format!("v{:04}#{}", rng.random_range(0..10_000), i);
        cands.push(ArgumentCandidate {
            id,
            restaurant_id: format!("r{}", rng.random_range(0..5)),
            sentence: format!("s{i}"),
            positivity: 1.0,
            embedding: Some(v),
        });
    }
    (cands, restaurants)
}

pub fn random_query(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let mut q: Vec<f64> = (0..dim).map(|_| rng.random_range(-2i32..=2) as f64).collect();
    if q.iter().all(|x| *x == 0.0) {
        q[0] = 1.0;
    }
    unit(&q)
}
