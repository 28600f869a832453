//! Set families with bounded pairwise intersections.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Rng;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("could only place {built} of {requested} sets")]
    Capacity { built: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, DesignError>;

/// `m` sets of size `k` over `{0, .., d-1}`, pairwise intersections at most `r`.
/// Sets are stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub d: usize,
    pub k: usize,
    pub r: usize,
    pub sets: Vec<Vec<usize>>,
}

impl Design {
    /// Checks shapes (sorted, in range, size `k`) but not intersections.
    pub fn new(d: usize, k: usize, r: usize, mut sets: Vec<Vec<usize>>) -> Result<Self> {
        for s in sets.iter_mut() {
            s.sort_unstable();
            if s.len() != k {
                return Err(DesignError::InvalidParameter(format!(
                    "set of size {} in a design with k={k}",
                    s.len()
                )));
            }
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(DesignError::InvalidParameter("repeated element".into()));
            }
            if s.last().is_some_and(|&e| e >= d) {
                return Err(DesignError::InvalidParameter(format!("element outside 0..{d}")));
            }
        }
        Ok(Design { d, k, r, sets })
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }

    /// Keeps the first `m` sets.
    pub fn truncate_sets(&self, m: usize) -> Result<Self> {
        if m > self.sets.len() {
            return Err(DesignError::InvalidParameter(format!(
                "design has {} sets, {m} requested",
                self.sets.len()
            )));
        }
        Ok(Design {
            sets: self.sets[..m].to_vec(),
            ..self.clone()
        })
    }

    /// Keeps the `k` smallest elements of every set; intersections only shrink.
    pub fn truncate_size(&self, k: usize) -> Result<Self> {
        if k > self.k || k == 0 {
            return Err(DesignError::InvalidParameter(format!(
                "cannot shrink sets of size {} to {k}",
                self.k
            )));
        }
        Ok(Design {
            d: self.d,
            k,
            r: self.r.min(k),
            sets: self.sets.iter().map(|s| s[..k].to_vec()).collect(),
        })
    }

    /// Largest intersection actually present.
    pub fn max_intersection(&self) -> usize {
        let mut worst = 0;
        for (i, a) in self.sets.iter().enumerate() {
            for b in &self.sets[i + 1..] {
                worst = worst.max(intersection(a, b));
            }
        }
        worst
    }
}

/// Size of the intersection of two sorted sets.
pub fn intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

pub fn is_prime(q: usize) -> bool {
    q >= 2 && (2..).take_while(|p| p * p <= q).all(|p| q % p != 0)
}

/// Graphs of polynomials of degree below `c` over `GF(q)`: the set for the
/// polynomial `p` is `{ q*x + p(x) : x in GF(q) }`. Polynomial `w` has
/// coefficients given by the base-`q` digits of `w`, constant term first.
/// Two distinct polynomials agree on at most `c - 1` points.
pub fn poly_design(q: usize, c: usize) -> Result<Design> {
    if !is_prime(q) {
        return Err(DesignError::InvalidParameter(format!("q={q} is not prime")));
    }
    if c == 0 {
        return Err(DesignError::InvalidParameter("c must be >= 1".into()));
    }
    let m = (q as u64)
        .checked_pow(c as u32)
        .filter(|&m| m <= 1 << 20)
        .ok_or_else(|| DesignError::InvalidParameter(format!("q^c too large for q={q}, c={c}")))?
        as usize;
    let sets = (0..m)
        .map(|w| {
            let coeffs: Vec<usize> = (0..c)
                .scan(w, |rest, _| {
                    let digit = *rest % q;
                    *rest /= q;
                    Some(digit)
                })
                .collect();
            (0..q)
                .map(|x| {
                    // Horner, highest coefficient first
                    let y = coeffs.iter().rev().fold(0, |acc, &a| (acc * x + a) % q);
                    q * x + y
                })
                .collect()
        })
        .collect();
    Design::new(q * q, q, c - 1, sets)
}

/// Parameters `(q, c)` for a polynomial design with sets of at least
/// `set_size` elements and at least `family` sets: `q` is the least prime
/// `>= set_size`, `c` the least exponent with `q^c >= family`.
pub fn select_poly_params(set_size: usize, family: usize) -> Result<(usize, usize)> {
    if set_size == 0 || family == 0 {
        return Err(DesignError::InvalidParameter("sizes must be positive".into()));
    }
    let q = (set_size.max(2)..).find(|&q| is_prime(q)).expect("primes are unbounded");
    let mut c = 1;
    let mut m = q;
    while m < family {
        m = m.saturating_mul(q);
        c += 1;
    }
    Ok((q, c))
}

/// Polynomial design cut down to exactly `family` sets of size `set_size`.
pub fn design_for(set_size: usize, family: usize) -> Result<Design> {
    let (q, c) = select_poly_params(set_size, family)?;
    poly_design(q, c)?.truncate_sets(family)?.truncate_size(set_size)
}

/// Randomized greedy construction. Each new set is grown from a random
/// permutation of the universe, skipping elements that would push an
/// intersection over `r`; up to `attempts` tries per set.
pub fn greedy_design(d: usize, k: usize, r: usize, m: usize, rng: &mut Rng) -> Result<Design> {
    greedy_design_with(d, k, r, m, 256, rng)
}

pub fn greedy_design_with(
    d: usize,
    k: usize,
    r: usize,
    m: usize,
    attempts: usize,
    rng: &mut Rng,
) -> Result<Design> {
    if k == 0 || k > d {
        return Err(DesignError::InvalidParameter(format!("need 1 <= k <= d, got k={k}, d={d}")));
    }
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut universe: Vec<usize> = (0..d).collect();
    'outer: while sets.len() < m {
        for _ in 0..attempts {
            universe.shuffle(rng);
            let mut overlap = vec![0usize; sets.len()];
            let mut chosen = Vec::with_capacity(k);
            for &e in &universe {
                let hits: Vec<usize> = sets
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.binary_search(&e).is_ok())
                    .map(|(i, _)| i)
                    .collect();
                if hits.iter().all(|&i| overlap[i] < r) {
                    hits.iter().for_each(|&i| overlap[i] += 1);
                    chosen.push(e);
                    if chosen.len() == k {
                        break;
                    }
                }
            }
            if chosen.len() == k {
                chosen.sort_unstable();
                sets.push(chosen);
                continue 'outer;
            }
        }
        return Err(DesignError::Capacity {
            built: sets.len(),
            requested: m,
        });
    }
    Design::new(d, k, r, sets)
}

/// Whether `design` really has sets of size `k` with intersections at most `r`.
pub fn verify_design(design: &Design) -> Result<bool> {
    if design.sets.len() < 2 {
        return Err(DesignError::InvalidParameter("need at least two sets".into()));
    }
    let shapes_ok = design.sets.iter().all(|s| {
        s.len() == design.k
            && s.windows(2).all(|w| w[0] < w[1])
            && s.last().map_or(true, |&e| e < design.d)
    });
    Ok(shapes_ok && design.max_intersection() <= design.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn smallest_poly_design() {
        let d = poly_design(2, 1).unwrap();
        assert_eq!(d.sets, vec![vec![0, 2], vec![1, 3]]);
        assert_eq!((d.d, d.k, d.r), (4, 2, 0));
    }

    #[test]
    fn q3_c2() {
        let d = poly_design(3, 2).unwrap();
        assert_eq!(d.m(), 9);
        assert!(d.sets.iter().all(|s| s.len() == 3));
        assert!(d.max_intersection() <= 1);
        assert!(verify_design(&d).unwrap());
    }

    #[test]
    fn rejects_composites() {
        assert!(poly_design(4, 1).is_err());
        assert!(poly_design(3, 0).is_err());
    }

    #[test]
    fn parameter_selection() {
        assert_eq!(select_poly_params(16, 8).unwrap(), (17, 1));
        assert_eq!(select_poly_params(16, 300).unwrap(), (17, 3));
        assert_eq!(select_poly_params(8, 8).unwrap(), (11, 1));
        let d = design_for(16, 8).unwrap();
        assert_eq!((d.k, d.m(), d.d), (16, 8, 289));
        assert!(verify_design(&d).unwrap());
    }

    #[test]
    fn greedy_examples() {
        let mut r = rng::from_seed(1);
        let matching = greedy_design(8, 2, 0, 4, &mut r).unwrap();
        let mut all: Vec<usize> = matching.sets.concat();
        all.sort_unstable();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
        match greedy_design(5, 5, 2, 3, &mut r) {
            Err(DesignError::Capacity { built, requested }) => {
                assert_eq!((built, requested), (1, 3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn verify_examples() {
        let equal = Design::new(4, 2, 1, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert!(!verify_design(&equal).unwrap());
        let singletons = Design::new(3, 1, 0, vec![vec![0], vec![1], vec![2]]).unwrap();
        assert!(verify_design(&singletons).unwrap());
        let one = Design::new(3, 1, 0, vec![vec![0]]).unwrap();
        assert!(verify_design(&one).is_err());
    }

    #[test]
    fn poly_invariants_small() {
        for q in [2usize, 3, 5, 7] {
            for c in 1..=3 {
                let d = poly_design(q, c).unwrap();
                assert_eq!(d.m(), q.pow(c as u32));
                assert_eq!(d.d, q * q);
                assert!(d.sets.iter().all(|s| s.len() == q));
                assert!(d.max_intersection() <= c - 1, "q={q} c={c}");
            }
        }
    }

    proptest! {
        #[test]
        fn greedy_outputs_verify(d in 6usize..30, k in 2usize..6, r in 0usize..3, m in 2usize..8, seed: u64) {
            prop_assume!(k <= d && r < k);
            if let Ok(design) = greedy_design(d, k, r, m, &mut rng::from_seed(seed)) {
                prop_assert_eq!(design.m(), m);
                prop_assert!(verify_design(&design).unwrap());
            }
        }

        #[test]
        fn truncation_keeps_bound(q in prop::sample::select(vec![5usize, 7, 11]), c in 1usize..=2, k in 1usize..5, m in 2usize..10) {
            prop_assume!(m <= q.pow(c as u32));
            let d = poly_design(q, c).unwrap().truncate_sets(m).unwrap().truncate_size(k).unwrap();
            prop_assert!(verify_design(&d).unwrap());
        }
    }
}
