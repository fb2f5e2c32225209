use std::collections::{HashMap, HashSet, VecDeque};

use super::surface::{format_word, inverse_letter, inverse_word, Letter};
use super::FuchsianError;

/// Cap on the number of equal-length cyclic words explored per class.
const ORBIT_CAP: usize = 200_000;
/// Extra length allowed for intermediate words, enough to pass through
/// one relator region of a thin annulus at a time.
const SLACK: usize = 2;

pub fn free_reduce(w: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &l in w {
        if out.last() == Some(&inverse_letter(l)) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Free reduction followed by cancellation across the wrap-around.
pub fn cyclic_reduce(w: &[Letter]) -> Vec<Letter> {
    let r = free_reduce(w);
    let mut i = 0;
    let mut j = r.len();
    while j - i >= 2 && r[i] == inverse_letter(r[j - 1]) {
        i += 1;
        j -= 1;
    }
    r[i..j].to_vec()
}

/// Lexicographically least rotation.
pub fn least_rotation(w: &[Letter]) -> Vec<Letter> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best = 0;
    for k in 1..n {
        for i in 0..n {
            let (x, y) = (w[(k + i) % n], w[(best + i) % n]);
            if x != y {
                if x < y {
                    best = k;
                }
                break;
            }
        }
    }
    let mut out = w[best..].to_vec();
    out.extend_from_slice(&w[..best]);
    out
}

/// Conjugacy normal forms for a one-relator surface group.
///
/// Pieces of cyclic relator rotations longer than half the relator are
/// replaced by the shorter complement (Dehn reduction). Words of minimal
/// length are then closed under replacing any shorter piece by its
/// complement, allowing intermediate words at most two letters longer, and
/// the least minimal-length rotation over that finite orbit is the normal form.
#[derive(Debug, Clone)]
pub struct Canonicalizer {
    half: usize,
    max_piece: usize,
    /// piece → complement, for pieces longer than half the relator
    shorten: HashMap<Vec<Letter>, Vec<Letter>>,
    /// piece → complements, for pieces of at most half the relator
    swap: HashMap<Vec<Letter>, Vec<Vec<Letter>>>,
}

impl Canonicalizer {
    pub fn new(relator: &[Letter]) -> Self {
        let n = relator.len();
        let mut shorten = HashMap::new();
        let mut swap: HashMap<Vec<Letter>, Vec<Vec<Letter>>> = HashMap::new();
        for r in [relator.to_vec(), inverse_word(relator)] {
            for k in 0..n {
                let rot: Vec<Letter> = r[k..].iter().chain(&r[..k]).copied().collect();
                for m in 1..=n {
                    let piece = rot[..m].to_vec();
                    let comp = inverse_word(&rot[m..]);
                    if 2 * m > n {
                        shorten.entry(piece).or_insert(comp);
                    } else {
                        let e = swap.entry(piece).or_default();
                        if !e.contains(&comp) {
                            e.push(comp);
                        }
                    }
                }
            }
        }
        Self { half: n / 2, max_piece: n, shorten, swap }
    }

    /// Cyclic Dehn reduction to a fixpoint.
    fn dehn(&self, w: Vec<Letter>, budget: &mut usize) -> Result<Vec<Letter>, ()> {
        let mut w = cyclic_reduce(&w);
        'outer: loop {
            let n = w.len();
            for m in (self.half + 1..=self.max_piece.min(n)).rev() {
                for i in 0..n {
                    let piece: Vec<Letter> = (0..m).map(|j| w[(i + j) % n]).collect();
                    if let Some(comp) = self.shorten.get(&piece) {
                        if *budget == 0 {
                            return Err(());
                        }
                        *budget -= 1;
                        let mut next = comp.clone();
                        next.extend((m..n).map(|j| w[(i + j) % n]));
                        w = cyclic_reduce(&next);
                        continue 'outer;
                    }
                }
            }
            return Ok(w);
        }
    }

    pub fn canonical(&self, word: &[Letter]) -> Result<Vec<Letter>, FuchsianError> {
        let fail = |reason: &str| FuchsianError::Canonicalization { word: format_word(word), reason: reason.into() };
        let mut budget = 10 * word.len().max(1);
        let mut w = self.dehn(word.to_vec(), &mut budget).map_err(|_| fail("rewrite budget exhausted"))?;
        'restart: loop {
            let n = w.len();
            let start = least_rotation(&w);
            let mut seen: HashSet<Vec<Letter>> = HashSet::new();
            seen.insert(start.clone());
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                let k = x.len();
                for m in 1..=self.half.min(k) {
                    for i in 0..k {
                        let piece: Vec<Letter> = (0..m).map(|j| x[(i + j) % k]).collect();
                        let Some(comps) = self.swap.get(&piece) else { continue };
                        for comp in comps {
                            let mut y = comp.clone();
                            y.extend((m..k).map(|j| x[(i + j) % k]));
                            let y = cyclic_reduce(&y);
                            if y.len() > n + SLACK {
                                continue;
                            }
                            // longer intermediates are kept unreduced: Dehn
                            // reduction would undo the move that made them
                            let mut probe_budget = 10 * y.len();
                            let reduced = self
                                .dehn(y.clone(), &mut probe_budget)
                                .map_err(|_| fail("rewrite budget exhausted"))?;
                            if reduced.len() < n {
                                let spent = 10 * y.len() - probe_budget;
                                budget = budget.checked_sub(spent).ok_or_else(|| fail("rewrite budget exhausted"))?;
                                w = reduced;
                                continue 'restart;
                            }
                            let r = least_rotation(&y);
                            if seen.insert(r.clone()) {
                                if seen.len() > ORBIT_CAP {
                                    return Err(fail("orbit cap exceeded"));
                                }
                                queue.push_back(r);
                            }
                        }
                    }
                }
            }
            return Ok(seen.into_iter().filter(|x| x.len() == n).min().unwrap_or_default());
        }
    }
}

/// Canonical cyclic word of the conjugacy class of `word`.
pub fn canonical_class(relator: &[Letter], word: &[Letter]) -> Result<Vec<Letter>, FuchsianError> {
    Canonicalizer::new(relator).canonical(word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{parse_word, SurfaceModel};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_reduced(rng: &mut ChaCha8Rng, len: usize) -> Vec<Letter> {
        let mut w: Vec<Letter> = Vec::new();
        while w.len() < len {
            let l = rng.gen_range(0..8u8);
            if w.last() != Some(&inverse_letter(l)) {
                w.push(l);
            }
        }
        w
    }

    #[test]
    fn reductions() {
        assert_eq!(free_reduce(&[0, 2, 3, 1, 4]), vec![4]);
        assert_eq!(cyclic_reduce(&[2, 0, 4, 3]), vec![0, 4]);
        assert_eq!(cyclic_reduce(&[2, 3]), Vec::<Letter>::new());
        assert_eq!(least_rotation(&[3, 1, 2, 1]), vec![1, 2, 1, 3]);
    }

    #[test]
    fn spec_examples() {
        let s = SurfaceModel::bolza();
        let c = Canonicalizer::new(&s.relator);
        assert_eq!(c.canonical(&parse_word("a").unwrap()).unwrap(), parse_word("a").unwrap());
        assert_eq!(c.canonical(&parse_word("bcB").unwrap()).unwrap(), parse_word("c").unwrap());
        assert!(c.canonical(&s.relator).unwrap().is_empty());
        let five = &s.relator[..5];
        let three = c.canonical(five).unwrap();
        assert_eq!(three.len(), 3);
    }

    #[test]
    fn random_conjugates_share_normal_forms() {
        let s = SurfaceModel::bolza();
        let c = Canonicalizer::new(&s.relator);
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let mut tested = 0;
        while tested < 500 {
            let (lw, lu) = (rng.gen_range(1..=6), rng.gen_range(0..=4));
            let w = random_reduced(&mut rng, lw);
            let u = random_reduced(&mut rng, lu);
            let mut conj = u.clone();
            conj.extend(&w);
            conj.extend(inverse_word(&u));
            let conj = free_reduce(&conj);
            let cw = c.canonical(&w).unwrap();
            if cw.is_empty() {
                continue;
            }
            assert_eq!(cw, c.canonical(&conj).unwrap(), "w={} u={}", format_word(&w), format_word(&u));
            let (tw, tc) = (s.eval(&w).trace().abs(), s.eval(&conj).trace().abs());
            assert!((tw - tc).abs() < 1e-7 * tw.max(1.0));
            assert!((s.eval(&cw).trace().abs() - tw).abs() < 1e-7 * tw.max(1.0));
            tested += 1;
        }
    }

    proptest! {
        #[test]
        fn canonical_is_idempotent(seed in 0u64..10_000, len in 1usize..12) {
            let s = SurfaceModel::bolza();
            let c = Canonicalizer::new(&s.relator);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_reduced(&mut rng, len);
            let once = c.canonical(&w).unwrap();
            prop_assert_eq!(c.canonical(&once).unwrap(), once.clone());
            prop_assert_eq!(least_rotation(&once), once);
        }
    }
}
