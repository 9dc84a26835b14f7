//! Defect pairing and correction strings.

use crate::matching::max_weight_matching;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("odd number of defects ({0})")]
    OddDefects(usize),
    #[error("residual defects after decoding")]
    Residual,
}

/// A perfect pairing as index pairs `(i, j)` with `i < j`, sorted by `i`.
pub type Pairing = Vec<(usize, usize)>;

fn normalize(mut p: Pairing) -> Pairing {
    for e in p.iter_mut() {
        if e.0 > e.1 {
            *e = (e.1, e.0);
        }
    }
    p.sort_unstable();
    p
}

pub fn pairing_weight(p: &Pairing, dist: impl Fn(usize, usize) -> u32) -> u64 {
    p.iter().map(|&(i, j)| dist(i, j) as u64).sum()
}

/// Minimum-weight perfect matching of `n` items under `dist`.
pub fn mwpm(n: usize, dist: impl Fn(usize, usize) -> u32) -> Result<Pairing, DecodeError> {
    if n % 2 == 1 {
        return Err(DecodeError::OddDefects(n));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    let mut dmax = 0;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(i, j) as i64;
            dmax = dmax.max(d);
            edges.push((i, j, d));
        }
    }
    for e in edges.iter_mut() {
        e.2 = dmax + 1 - e.2;
    }
    let mate = max_weight_matching(n, &edges, true);
    let pairs = (0..n)
        .filter_map(|i| {
            let j = mate[i].expect("complete graph has a perfect matching");
            (i < j).then_some((i, j))
        })
        .collect();
    Ok(pairs)
}

/// Exhaustive minimum over all perfect pairings; the first minimum in
/// recursion order (pair the lowest free item first) is returned.
pub fn brute_force_mwpm(n: usize, dist: impl Fn(usize, usize) -> u32) -> Result<(u64, Pairing), DecodeError> {
    if n % 2 == 1 {
        return Err(DecodeError::OddDefects(n));
    }
    fn go(
        free: &mut Vec<usize>,
        cur: &mut Pairing,
        w: u64,
        best: &mut Option<(u64, Pairing)>,
        dist: &dyn Fn(usize, usize) -> u32,
    ) {
        if free.is_empty() {
            if best.as_ref().map_or(true, |b| w < b.0) {
                *best = Some((w, cur.clone()));
            }
            return;
        }
        let a = free.remove(0);
        for k in 0..free.len() {
            let b = free.remove(k);
            cur.push((a, b));
            go(free, cur, w + dist(a, b) as u64, best, dist);
            cur.pop();
            free.insert(k, b);
        }
        free.insert(0, a);
    }
    let mut best = None;
    go(&mut (0..n).collect(), &mut Vec::new(), 0, &mut best, &dist);
    Ok(best.unwrap_or((0, Vec::new())))
}

/// Greedy pairing: each unpaired item in index order is paired with its
/// nearest unpaired successor.
pub fn greedy_pairing(n: usize, dist: impl Fn(usize, usize) -> u32) -> Result<Pairing, DecodeError> {
    if n % 2 == 1 {
        return Err(DecodeError::OddDefects(n));
    }
    let mut used = vec![false; n];
    let mut out = Vec::with_capacity(n / 2);
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let j = (i + 1..n).filter(|&j| !used[j]).min_by_key(|&j| dist(i, j)).unwrap();
        used[j] = true;
        out.push((i, j));
    }
    Ok(normalize(out))
}

/// Parity of the number of path edges lying in `boundary`. Paths are edge
/// lists; `boundary` is indexed by edge.
pub fn parity_crossings<'a>(paths: impl IntoIterator<Item = &'a [u32]>, boundary: &[bool]) -> bool {
    paths.into_iter().flat_map(|p| p.iter()).filter(|&&e| boundary[e as usize]).count() % 2 == 1
}
