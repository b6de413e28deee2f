//! Moment-matrix relaxations of the commuting-operator correlation set.
//!
//! Words are products of projective effects `A^x_a`, `B^y_b` with the last
//! effect of every measurement eliminated (`a, b < n - 1`). Alice's and Bob's
//! letters commute, so a word is stored as an Alice part followed by a Bob
//! part. Within a party, equal adjacent letters collapse and adjacent letters
//! of the same question with different answers multiply to zero.
//!
//! The moment matrix is taken real symmetric: for real objectives and data,
//! `(Γ + conj Γ) / 2` is feasible whenever `Γ` is, so nothing is lost.

use std::collections::BTreeMap;
use std::fmt;

use crate::config::TOL;
use crate::correlation::Correlation;
use crate::error::{validation, Error, Result};
use crate::games::{BellCertificate, BellFunctional, Game};
use crate::sdp::{solve_sdp, BlockSparse, SdpProblem, SdpSolution, SdpStatus, Sense};

/// Default cap on the number of words at a level.
pub const WORD_CAP: usize = 5000;

/// Letter `(question, answer)`.
pub type Letter = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    pub alice: Vec<Letter>,
    pub bob: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.alice.len() + self.bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reduces both parts; `None` if the product is zero.
    pub fn canonical(&self) -> Option<Self> {
        Some(Self { alice: reduce(&self.alice)?, bob: reduce(&self.bob)? })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            alice: self.alice.iter().rev().copied().collect(),
            bob: self.bob.iter().rev().copied().collect(),
        }
    }

    /// Canonical form of `self^* other`.
    pub fn pair(&self, other: &Self) -> Option<Self> {
        let mut alice: Vec<Letter> = self.alice.iter().rev().copied().collect();
        alice.extend_from_slice(&other.alice);
        let mut bob: Vec<Letter> = self.bob.iter().rev().copied().collect();
        bob.extend_from_slice(&other.bob);
        Self { alice, bob }.canonical()
    }

    /// Parses space-separated letters such as `"B^1_1 A^2_1"` and returns
    /// the canonical word, or `None` if it reduces to zero.
    pub fn parse(s: &str) -> Result<Option<Self>> {
        let mut w = Self::empty();
        for tok in s.split_whitespace() {
            let bad = || validation(format!("malformed letter {tok:?}, expected e.g. A^0_1"));
            let (party, rest) = tok.split_at(1);
            let rest = rest.strip_prefix('^').ok_or_else(bad)?;
            let (q, a) = rest.split_once('_').ok_or_else(bad)?;
            let letter = (q.parse().map_err(|_| bad())?, a.parse().map_err(|_| bad())?);
            match party {
                "A" => w.alice.push(letter),
                "B" => w.bob.push(letter),
                _ => return Err(bad()),
            }
        }
        Ok(w.canonical())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("1");
        }
        let letters = self
            .alice
            .iter()
            .map(|(x, a)| format!("A^{x}_{a}"))
            .chain(self.bob.iter().map(|(y, b)| format!("B^{y}_{b}")));
        f.write_str(&letters.collect::<Vec<_>>().join(" "))
    }
}

fn reduce(letters: &[Letter]) -> Option<Vec<Letter>> {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        match out.last() {
            Some(&prev) if prev == l => {}
            Some(&prev) if prev.0 == l.0 => return None,
            _ => out.push(l),
        }
    }
    Some(out)
}

/// Canonical words up to a level, with their positions.
#[derive(Debug, Clone)]
pub struct WordIndex {
    pub level: usize,
    pub k: usize,
    pub n: usize,
    words: Vec<Word>,
    index: BTreeMap<Word, usize>,
}

impl WordIndex {
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }
}

/// Reduced single-party sequences of length `len`, lexicographic.
fn party_words(k: usize, n: usize, len: usize, cap: usize) -> Result<Vec<Vec<Letter>>> {
    let letters: Vec<Letter> = (0..k).flat_map(|q| (0..n - 1).map(move |a| (q, a))).collect();
    let mut cur: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &cur {
            for &l in &letters {
                if w.last().is_none_or(|p| p.0 != l.0) {
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                    if next.len() > cap {
                        return Err(word_cap_error(cap));
                    }
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

fn word_cap_error(cap: usize) -> Error {
    Error::Resource(format!("NPA word list exceeds the cap of {cap} words"))
}

/// Words of length at most `level`, ordered by length, then by the number of
/// Alice letters (descending), then lexicographically.
pub fn npa_words(k: usize, n: usize, level: usize) -> Result<WordIndex> {
    npa_words_capped(k, n, level, WORD_CAP)
}

pub fn npa_words_capped(k: usize, n: usize, level: usize, cap: usize) -> Result<WordIndex> {
    if k == 0 || n == 0 {
        return Err(validation("NPA words need k >= 1 and n >= 1"));
    }
    let mut words = Vec::new();
    for len in 0..=level {
        for na in (0..=len).rev() {
            let alice = party_words(k, n, na, cap)?;
            let bob = party_words(k, n, len - na, cap)?;
            if words.len() + alice.len() * bob.len() > cap {
                return Err(word_cap_error(cap));
            }
            for a in &alice {
                for b in &bob {
                    words.push(Word { alice: a.clone(), bob: b.clone() });
                }
            }
        }
    }
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok(WordIndex { level, k, n, words, index })
}

/// Moment-matrix structure: cells grouped by the canonical word they
/// evaluate, with a word and its adjoint identified.
#[derive(Debug, Clone)]
pub struct MomentProblem {
    pub words: WordIndex,
    /// Upper-triangle cells `(i, j)`, `i <= j`, sharing one moment.
    pub classes: Vec<Vec<(usize, usize)>>,
    /// Cells whose word is zero.
    pub zeros: Vec<(usize, usize)>,
    /// Cell of the empty word, fixed to 1.
    pub normalization: (usize, usize),
}

impl MomentProblem {
    pub fn new(k: usize, n: usize, level: usize) -> Result<Self> {
        if level == 0 {
            return Err(validation("NPA relaxations need level >= 1"));
        }
        let words = npa_words(k, n, level)?;
        let m = words.len();
        let mut by_key: BTreeMap<Word, usize> = BTreeMap::new();
        let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut zeros = Vec::new();
        for i in 0..m {
            for j in i..m {
                match words.words[i].pair(&words.words[j]) {
                    None => zeros.push((i, j)),
                    Some(w) => {
                        let adj = w.adjoint();
                        let key = if adj < w { adj } else { w };
                        let id = *by_key.entry(key).or_insert_with(|| {
                            classes.push(Vec::new());
                            classes.len() - 1
                        });
                        classes[id].push((i, j));
                    }
                }
            }
        }
        Ok(Self { words, classes, zeros, normalization: (0, 0) })
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    /// Cell holding `<α β>` for single letters or the identity.
    fn cell(&self, a: Option<Letter>, b: Option<Letter>) -> (usize, usize) {
        let pos = |w: Word| self.words.position(&w).expect("level >= 1 holds all letters");
        match (a, b) {
            (None, None) => (0, 0),
            (Some(a), None) => (0, pos(Word { alice: vec![a], bob: vec![] })),
            (None, Some(b)) => (0, pos(Word { alice: vec![], bob: vec![b] })),
            (Some(a), Some(b)) => {
                let i = pos(Word { alice: vec![a], bob: vec![] });
                let j = pos(Word { alice: vec![], bob: vec![b] });
                (i.min(j), i.max(j))
            }
        }
    }

    /// `p(a,b|x,y)` as a combination of cells, expanding eliminated effects.
    fn probability_cells(&self, x: usize, y: usize, a: usize, b: usize) -> Vec<((usize, usize), f64)> {
        let n = self.words.n;
        let expand = |q: usize, r: usize| -> Vec<(Option<Letter>, f64)> {
            if r < n - 1 {
                vec![(Some((q, r)), 1.0)]
            } else {
                std::iter::once((None, 1.0)).chain((0..n - 1).map(|s| (Some((q, s)), -1.0))).collect()
            }
        };
        let mut out = Vec::new();
        for (la, ca) in expand(x, a) {
            for (lb, cb) in expand(y, b) {
                out.push((self.cell(la, lb), ca * cb));
            }
        }
        out
    }

    /// `F(p(Γ))` as a sparse functional on the moment block.
    fn functional_on_block(&self, f: &BellFunctional, block: usize) -> BlockSparse {
        let mut out = BlockSparse::new();
        for x in 0..f.k {
            for y in 0..f.k {
                for a in 0..f.n {
                    for b in 0..f.n {
                        let c = f.coeff(x, y, a, b);
                        if c != 0.0 {
                            for (cell, s) in self.probability_cells(x, y, a, b) {
                                push_cell(&mut out, block, cell, c * s);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Structural constraints on block `block`: normalization, class
    /// equalities and zero cells.
    fn constrain_structure(&self, p: &mut SdpProblem, block: usize) {
        let mut norm = BlockSparse::new();
        push_cell(&mut norm, block, self.normalization, 1.0);
        p.constrain(norm, 1.0);
        for class in &self.classes {
            for &c in &class[1..] {
                let mut row = BlockSparse::new();
                push_cell(&mut row, block, c, 1.0);
                push_cell(&mut row, block, class[0], -1.0);
                p.constrain(row, 0.0);
            }
        }
        for &c in &self.zeros {
            let mut row = BlockSparse::new();
            push_cell(&mut row, block, c, 1.0);
            p.constrain(row, 0.0);
        }
    }
}

/// Adds `coef * Γ[i, j]` (symmetric cell) to a linear form.
fn push_cell(m: &mut BlockSparse, block: usize, (i, j): (usize, usize), coef: f64) {
    let c = if i == j { coef } else { coef / 2.0 };
    m.push_real(block, i, j, c);
}

fn require_optimal(sol: SdpSolution) -> Result<SdpSolution> {
    if sol.status == SdpStatus::Optimal {
        Ok(sol)
    } else {
        Err(Error::Solver {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            gap: sol.gap,
        })
    }
}

/// Upper bound on `max F(p)` over the level-`level` relaxation. The dual
/// objective of the moment SDP is returned.
pub fn npa_functional_max(f: &BellFunctional, level: usize, tol: f64) -> Result<f64> {
    let mp = MomentProblem::new(f.k, f.n, level)?;
    let mut p = SdpProblem::new(Sense::Maximize, vec![mp.dim()], mp.functional_on_block(f, 0));
    mp.constrain_structure(&mut p, 0);
    let sol = require_optimal(solve_sdp(&p, tol, TOL.sdp_max_iters)?)?;
    Ok(sol.dual_objective)
}

/// Upper bound on the commuting-operator value of `g`.
pub fn npa_upper_bound(g: &Game, level: usize, tol: f64) -> Result<f64> {
    npa_functional_max(&g.functional(), level, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpaMembership {
    pub feasible: bool,
    /// Largest `λ ≤ 1` with `λ p + (1 - λ) u` consistent with the level.
    pub visibility: f64,
    /// Present exactly when `feasible` is false.
    pub certificate: Option<BellCertificate>,
}

/// Level-`level` membership via `max λ` such that every entry of
/// `λ p + (1 - λ) u` equals its moment expansion. A signalling `p` has
/// visibility 0. On separation the dual gives a functional `F`; its bound is
/// recomputed by a separate maximization over the relaxation.
pub fn npa_membership(p: &Correlation, level: usize, tol: f64) -> Result<NpaMembership> {
    let (k, n) = (p.k(), p.n());
    let mp = MomentProblem::new(k, n, level)?;
    let (gamma, lam, slack) = (0, 1, 2);
    let mut prob = SdpProblem::new(Sense::Maximize, vec![mp.dim(), 1, 1], BlockSparse::new().with(lam, 0, 0, 1.0));
    let u = 1.0 / (n * n) as f64;
    let cells = k * k * n * n;
    for x in 0..k {
        for y in 0..k {
            for a in 0..n {
                for b in 0..n {
                    let mut row = BlockSparse::new();
                    for (cell, s) in mp.probability_cells(x, y, a, b) {
                        push_cell(&mut row, gamma, cell, s);
                    }
                    let c = u - p.get(x, y, a, b);
                    if c != 0.0 {
                        row.push_real(lam, 0, 0, c);
                    }
                    prob.constrain(row, u);
                }
            }
        }
    }
    prob.constrain(BlockSparse::new().with(lam, 0, 0, 1.0).with(slack, 0, 0, 1.0), 1.0);
    mp.constrain_structure(&mut prob, gamma);

    let sol = require_optimal(solve_sdp(&prob, tol, TOL.sdp_max_iters)?)?;
    let visibility = sol.primal_objective.clamp(0.0, 1.0);
    let raw = BellFunctional { k, n, coeffs: sol.y[..cells].iter().map(|y| -y).collect() };
    // Row `cells + 1` is the normalization; its multiplier bounds F on the
    // relaxation up to dual residuals. Only pay for an exact bound when the
    // dual suggests a separation.
    if raw.evaluate(p)? - sol.y[cells + 1] <= tol && visibility >= 1.0 - tol {
        return Ok(NpaMembership { feasible: true, visibility, certificate: None });
    }
    let Some(functional) = raw.normalized() else {
        return Ok(NpaMembership { feasible: true, visibility, certificate: None });
    };
    let value = functional.evaluate(p)?;
    let bound = npa_functional_max(&functional, level, tol)?;
    let cert = BellCertificate { functional, value, bound };
    if cert.margin() > tol {
        Ok(NpaMembership { feasible: false, visibility, certificate: Some(cert) })
    } else {
        Ok(NpaMembership { feasible: true, visibility, certificate: None })
    }
}
