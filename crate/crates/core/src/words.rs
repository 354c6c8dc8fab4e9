//! Freely reduced words over a rank-`n` alphabet.
//!
//! Letters are signed integers: `+i` is the generator `x_i` and `-i` its
//! inverse, so inversion and the cancellation test are both O(1). The text
//! form writes `x_1, x_2, ...` as `a, b, ...` and inverses in uppercase, so
//! `"abA"` is `x1 x2 x1^-1`. The suffix form `a^-1` is accepted on input.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A generator or inverse generator, encoded as a non-zero signed index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter(i32);

impl Letter {
    /// The generator `x_i` (1-based).
    pub fn generator(i: u32) -> Letter {
        assert!(i >= 1, "generators are 1-based");
        Letter(i as i32)
    }

    /// Builds a letter from its signed code, rejecting zero.
    pub fn from_code(code: i32) -> Result<Letter> {
        if code == 0 {
            return Err(Error::input("letter code 0 is not a generator"));
        }
        Ok(Letter(code))
    }

    pub fn code(self) -> i32 {
        self.0
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    /// 1-based index of the underlying generator.
    pub fn generator_index(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    /// Dense index in `0..2n`: generators first, then their inverses.
    pub fn slot(self, rank: u32) -> usize {
        let g = (self.generator_index() - 1) as usize;
        if self.is_inverse() {
            g + rank as usize
        } else {
            g
        }
    }

    /// Inverse of [`Letter::slot`].
    pub fn from_slot(slot: usize, rank: u32) -> Letter {
        let n = rank as usize;
        if slot < n {
            Letter(slot as i32 + 1)
        } else {
            Letter(-((slot - n) as i32 + 1))
        }
    }

    pub fn cancels(self, other: Letter) -> bool {
        self.0 == -other.0
    }

    fn sort_key(self) -> (bool, u32) {
        (self.is_inverse(), self.generator_index())
    }

    /// Character form: `a..z` for generators, `A..Z` for inverses.
    pub fn to_char(self) -> Option<char> {
        let g = self.generator_index();
        if g > 26 {
            return None;
        }
        let base = if self.is_inverse() { b'A' } else { b'a' };
        Some((base + (g - 1) as u8) as char)
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_char() {
            Some(c) => write!(f, "{c}"),
            None if self.is_inverse() => write!(f, "x{}^-1", self.generator_index()),
            None => write!(f, "x{}", self.generator_index()),
        }
    }
}

/// The symmetric generating set of `F_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    rank: u32,
}

impl Alphabet {
    pub fn new(rank: u32) -> Result<Alphabet> {
        if rank == 0 {
            return Err(Error::input("rank must be at least 1"));
        }
        Ok(Alphabet { rank })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Vertex degree of the Cayley tree, `2n`.
    pub fn degree(&self) -> usize {
        2 * self.rank as usize
    }

    /// All `2n` letters in slot order.
    pub fn letters(&self) -> Vec<Letter> {
        (0..self.degree()).map(|s| Letter::from_slot(s, self.rank)).collect()
    }

    pub fn contains(&self, letter: Letter) -> bool {
        letter.generator_index() >= 1 && letter.generator_index() <= self.rank
    }

    fn check(&self, letter: Letter) -> Result<()> {
        if self.contains(letter) {
            Ok(())
        } else {
            Err(Error::input(format!(
                "letter {letter} is outside the rank-{} alphabet",
                self.rank
            )))
        }
    }

    /// Parses a word literal such as `"abA"` or `"ab^-1"`.
    pub fn parse_letters(&self, text: &str) -> Result<Vec<Letter>> {
        let mut out = Vec::with_capacity(text.len());
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let letter = if c.is_ascii_lowercase() {
                Letter((c as u8 - b'a') as i32 + 1)
            } else if c.is_ascii_uppercase() {
                Letter(-((c as u8 - b'A') as i32 + 1))
            } else {
                return Err(Error::input(format!(
                    "unknown letter symbol {c:?} in word literal {text:?}"
                )));
            };
            i += 1;
            let letter = if chars[i..].starts_with(&['^', '-', '1']) {
                i += 3;
                letter.inverse()
            } else {
                letter
            };
            self.check(letter)?;
            out.push(letter);
        }
        Ok(out)
    }

    /// Parses and freely reduces a word literal.
    pub fn parse(&self, text: &str) -> Result<ReducedWord> {
        let letters = self.parse_letters(text)?;
        reduce(*self, &letters)
    }

    pub fn identity(&self) -> ReducedWord {
        ReducedWord {
            rank: self.rank,
            letters: Vec::new(),
        }
    }

    /// Number of reduced words of length at most `radius`.
    pub fn ball_size(&self, radius: usize) -> u128 {
        let d = self.degree() as u128;
        let mut total: u128 = 1;
        let mut sphere: u128 = 1;
        for k in 1..=radius {
            sphere = if k == 1 { d } else { sphere.saturating_mul(d - 1) };
            total = total.saturating_add(sphere);
        }
        total
    }
}

/// A freely reduced word; the element model for `F_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReducedWord {
    rank: u32,
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn alphabet(&self) -> Alphabet {
        Alphabet { rank: self.rank }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Word norm, which is the distance from the identity in the Cayley tree.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// `self^k` for `k >= 0`.
    pub fn pow(&self, k: usize) -> ReducedWord {
        let mut acc = self.alphabet().identity();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Product without the alphabet check; both sides share the rank.
    pub(crate) fn mul(&self, other: &ReducedWord) -> ReducedWord {
        let mut letters = self.letters.clone();
        push_reduced(&mut letters, &other.letters);
        ReducedWord {
            rank: self.rank,
            letters,
        }
    }

    /// Prefix of length `k`, which is again reduced.
    pub fn prefix(&self, k: usize) -> ReducedWord {
        ReducedWord {
            rank: self.rank,
            letters: self.letters[..k].to_vec(),
        }
    }

    /// Subword `letters[start..end]`, which is again reduced.
    pub fn slice(&self, start: usize, end: usize) -> ReducedWord {
        ReducedWord {
            rank: self.rank,
            letters: self.letters[start..end].to_vec(),
        }
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortlex order.
impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
            .then_with(|| self.rank.cmp(&other.rank))
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Appends `tail` to an already reduced `stack`, cancelling as it goes.
pub(crate) fn push_reduced(stack: &mut Vec<Letter>, tail: &[Letter]) {
    for &l in tail {
        match stack.last() {
            Some(&top) if top.cancels(l) => {
                stack.pop();
            }
            _ => stack.push(l),
        }
    }
}

/// Free reduction of an arbitrary letter sequence.
pub fn reduce(alphabet: Alphabet, raw: &[Letter]) -> Result<ReducedWord> {
    for &l in raw {
        alphabet.check(l)?;
    }
    let mut letters = Vec::with_capacity(raw.len());
    push_reduced(&mut letters, raw);
    Ok(ReducedWord {
        rank: alphabet.rank,
        letters,
    })
}

fn same_alphabet(u: &ReducedWord, v: &ReducedWord) -> Result<()> {
    if u.rank != v.rank {
        return Err(Error::input(format!(
            "alphabet mismatch: rank {} vs rank {}",
            u.rank, v.rank
        )));
    }
    Ok(())
}

pub fn multiply(u: &ReducedWord, v: &ReducedWord) -> Result<ReducedWord> {
    same_alphabet(u, v)?;
    Ok(u.mul(v))
}

/// `reduce(f p f^-1)`.
pub fn conjugate(f: &ReducedWord, p: &ReducedWord) -> Result<ReducedWord> {
    same_alphabet(f, p)?;
    Ok(f.mul(p).mul(&f.inverse()))
}

/// Every reduced word of length at most `radius`, in shortlex order.
pub fn enumerate_ball(alphabet: Alphabet, radius: usize, budget: usize) -> Result<Vec<ReducedWord>> {
    let size = alphabet.ball_size(radius);
    if size > budget as u128 {
        return Err(Error::resource(format!(
            "ball of radius {radius} in rank {} holds {size} words, over the enumeration budget of {budget}",
            alphabet.rank
        )));
    }
    let letters = alphabet.letters();
    let mut sorted_letters = letters.clone();
    sorted_letters.sort();
    let mut out = Vec::with_capacity(size as usize);
    out.push(alphabet.identity());
    let mut start = 0;
    for _ in 0..radius {
        let end = out.len();
        for idx in start..end {
            for &l in &sorted_letters {
                let w = &out[idx];
                if w.last().is_some_and(|t| t.cancels(l)) {
                    continue;
                }
                let mut next = w.letters.clone();
                next.push(l);
                out.push(ReducedWord {
                    rank: alphabet.rank,
                    letters: next,
                });
            }
        }
        start = end;
    }
    Ok(out)
}
