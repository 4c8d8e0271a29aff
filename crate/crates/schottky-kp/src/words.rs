//! Reduced words in the free group of rank g.
//!
//! Letters are nonzero signed integers in {+-1, ..., +-g}; negative means the
//! inverse generator. The enumeration order is fixed: shorter words first,
//! then lexicographic with letters ordered 1 < -1 < 2 < -2 < ...

use crate::error::{Error, Result};

/// A reduced word: no adjacent pair (k, -k). Empty word is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupWord(Vec<i32>);

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord(Vec::new())
    }

    /// Builds a word, rejecting non-reduced letter sequences and zero letters.
    pub fn new(letters: Vec<i32>) -> Result<Self> {
        for (k, w) in letters.windows(2).enumerate() {
            if w[0] == -w[1] {
                return Err(Error::WordNotReduced(k));
            }
        }
        if letters.contains(&0) {
            return Err(Error::WordNotReduced(0));
        }
        Ok(GroupWord(letters))
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<i32> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<i32> {
        self.0.last().copied()
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord(self.0.iter().rev().map(|&l| -l).collect())
    }

    /// Concatenation with free reduction at the seam.
    pub fn concat(&self, other: &GroupWord) -> GroupWord {
        let mut out = self.0.clone();
        for &l in &other.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        GroupWord(out)
    }

    /// Cyclic rotation by one letter (for conjugacy tests).
    pub fn rotated(&self) -> GroupWord {
        if self.0.len() < 2 {
            return self.clone();
        }
        let mut v = self.0.clone();
        let head = v.remove(0);
        v.push(head);
        // the rotation of a reduced word may fail to be cyclically reduced; reduce
        GroupWord::identity().concat(&GroupWord(v))
    }
}

/// Position of a letter in the fixed order 1 < -1 < 2 < -2 < ...
fn letter_rank(l: i32) -> usize {
    (l.unsigned_abs() as usize - 1) * 2 + usize::from(l < 0)
}

/// Letter at a given rank position.
fn rank_letter(r: usize) -> i32 {
    let idx = (r / 2 + 1) as i32;
    if r.is_multiple_of(2) {
        idx
    } else {
        -idx
    }
}

/// Iterator over all reduced words of length 0..=max_len, shortest first,
/// lexicographic within each length.
pub struct ReducedWords {
    rank: usize,
    max_len: usize,
    next_len: usize,
    current: Option<Vec<i32>>,
}

impl ReducedWords {
    pub fn new(rank: usize, max_len: usize) -> Self {
        ReducedWords {
            rank,
            max_len,
            next_len: 0,
            current: None,
        }
    }

    /// Smallest allowed letter after `prev` (None for word start).
    fn first_letter(&self, prev: Option<i32>) -> Option<i32> {
        (0..2 * self.rank)
            .map(rank_letter)
            .find(|&l| prev != Some(-l))
    }

    /// Next allowed letter strictly after `cur` in the fixed order.
    fn next_letter(&self, cur: i32, prev: Option<i32>) -> Option<i32> {
        ((letter_rank(cur) + 1)..2 * self.rank)
            .map(rank_letter)
            .find(|&l| prev != Some(-l))
    }

    fn first_word_of_len(&self, len: usize) -> Option<Vec<i32>> {
        let mut w = Vec::with_capacity(len);
        for _ in 0..len {
            let prev = w.last().copied();
            w.push(self.first_letter(prev)?);
        }
        Some(w)
    }

    fn advance(&mut self) -> Option<Vec<i32>> {
        match self.current.take() {
            None => {
                if self.next_len > self.max_len {
                    return None;
                }
                let len = self.next_len;
                self.next_len += 1;
                let w = self.first_word_of_len(len)?;
                self.current = Some(w.clone());
                Some(w)
            }
            Some(mut w) => {
                // odometer: advance the last position; carry left on exhaustion
                let mut pos = w.len();
                loop {
                    if pos == 0 {
                        // exhausted this length; move to the next
                        if self.next_len > self.max_len {
                            return None;
                        }
                        let len = self.next_len;
                        self.next_len += 1;
                        let nw = self.first_word_of_len(len)?;
                        self.current = Some(nw.clone());
                        return Some(nw);
                    }
                    pos -= 1;
                    let prev = if pos == 0 { None } else { Some(w[pos - 1]) };
                    if let Some(nl) = self.next_letter(w[pos], prev) {
                        w[pos] = nl;
                        // refill suffix with smallest allowed letters
                        for k in (pos + 1)..w.len() {
                            let p = Some(w[k - 1]);
                            w[k] = self.first_letter(p).unwrap();
                        }
                        self.current = Some(w.clone());
                        return Some(w);
                    }
                }
            }
        }
    }
}

impl Iterator for ReducedWords {
    type Item = GroupWord;

    fn next(&mut self) -> Option<GroupWord> {
        self.advance().map(GroupWord)
    }
}

/// All reduced words of length 0..=max_len in the fixed order.
pub fn enumerate_reduced_words(rank: usize, max_len: usize) -> ReducedWords {
    ReducedWords::new(rank, max_len)
}

/// Representatives of the left cosets Gamma / <gamma_i>: reduced words whose
/// last letter is not +-i, identity included.
pub fn coset_representatives(
    rank: usize,
    i: usize,
    max_len: usize,
) -> impl Iterator<Item = GroupWord> {
    let gi = i as i32;
    ReducedWords::new(rank, max_len).filter(move |w| match w.last() {
        None => true,
        Some(l) => l.abs() != gi,
    })
}

/// Representatives of the double cosets <gamma_i> \ Gamma / <gamma_j>:
/// identity plus reduced words whose first letter is not +-i and last letter
/// is not +-j.
pub fn double_coset_representatives(
    rank: usize,
    i: usize,
    j: usize,
    max_len: usize,
) -> impl Iterator<Item = GroupWord> {
    let gi = i as i32;
    let gj = j as i32;
    ReducedWords::new(rank, max_len).filter(move |w| match (w.first(), w.last()) {
        (None, None) => true,
        (Some(f), Some(l)) => f.abs() != gi && l.abs() != gj,
        _ => unreachable!(),
    })
}

/// Number of reduced words of exactly length `len`: 2g (2g-1)^(len-1).
pub fn reduced_word_count(rank: usize, len: usize) -> usize {
    if len == 0 {
        return 1;
    }
    2 * rank * (2 * rank - 1).pow(len as u32 - 1)
}
