//! Nonlocal games, their value functional, and a small named corpus.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::correlation::Correlation;
use crate::error::{validation, Error, Result};

pub type Rational = Ratio<i64>;

/// Game with `k` questions and `n` answers per party, question distribution
/// `pi` (exact rationals, `[x][y]` order) and winning predicate stored flat in
/// `[x][y][a][b]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    k: usize,
    n: usize,
    pi: Vec<Rational>,
    win: Vec<bool>,
}

impl Game {
    pub fn new(k: usize, n: usize, pi: Vec<Rational>, win: Vec<bool>) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(validation("game needs k >= 1 and n >= 1"));
        }
        if pi.len() != k * k {
            return Err(validation(format!("pi has {} entries, expected {}", pi.len(), k * k)));
        }
        if win.len() != k * k * n * n {
            return Err(validation(format!("predicate has {} entries, expected {}", win.len(), k * k * n * n)));
        }
        if let Some(i) = pi.iter().position(|r| *r.numer() < 0) {
            return Err(validation(format!("pi entry {i} is negative")));
        }
        let total: f64 = pi.iter().map(to_f64).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(validation(format!("pi sums to {total}, not 1")));
        }
        Ok(Self { k, n, pi, win })
    }

    /// Builds the predicate from a closure `(x, y, a, b) -> wins`.
    pub fn from_predicate(
        k: usize,
        n: usize,
        pi: Vec<Rational>,
        pred: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut win = Vec::with_capacity(k * k * n * n);
        for x in 0..k {
            for y in 0..k {
                for a in 0..n {
                    for b in 0..n {
                        win.push(pred(x, y, a, b));
                    }
                }
            }
        }
        Self::new(k, n, pi, win)
    }

    /// Uniform question distribution.
    pub fn uniform(k: usize, n: usize, pred: impl Fn(usize, usize, usize, usize) -> bool) -> Result<Self> {
        let kk = i64::try_from(k * k).map_err(|_| validation("k too large"))?;
        Self::from_predicate(k, n, vec![Rational::new(1, kk.max(1)); k * k], pred)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi(&self, x: usize, y: usize) -> f64 {
        to_f64(&self.pi[x * self.k + y])
    }

    pub fn pi_exact(&self, x: usize, y: usize) -> Rational {
        self.pi[x * self.k + y]
    }

    pub fn pi_table(&self) -> &[Rational] {
        &self.pi
    }

    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.win[((x * self.k + y) * self.n + a) * self.n + b]
    }

    pub fn win_table(&self) -> &[bool] {
        &self.win
    }

    /// Accepted `(x, y, a, b)` tuples in lexicographic order.
    pub fn accepting_tuples(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for x in 0..self.k {
            for y in 0..self.k {
                for a in 0..self.n {
                    for b in 0..self.n {
                        if self.wins(x, y, a, b) {
                            out.push([x, y, a, b]);
                        }
                    }
                }
            }
        }
        out
    }

    /// Coefficients `π(x,y) D(x,y,a,b)` as a linear functional on correlations.
    pub fn functional(&self) -> BellFunctional {
        let mut coeffs = Vec::with_capacity(self.win.len());
        for x in 0..self.k {
            for y in 0..self.k {
                let w = self.pi(x, y);
                for a in 0..self.n {
                    for b in 0..self.n {
                        coeffs.push(if self.wins(x, y, a, b) { w } else { 0.0 });
                    }
                }
            }
        }
        BellFunctional { k: self.k, n: self.n, coeffs }
    }
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Best rational approximation with denominator at most `10^9` that lies
/// within `1e-12` of `v`, found by continued fractions.
pub fn rational_from_f64(v: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    const MAX_DEN: i64 = 1_000_000_000;
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DEN {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - v).abs() <= 1e-12 {
            return Some(Rational::new(h1, k1));
        }
        let frac = x - a as f64;
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    if k1 > 0 && (h1 as f64 / k1 as f64 - v).abs() <= 1e-12 {
        Some(Rational::new(h1, k1))
    } else {
        None
    }
}

/// Linear functional on correlation tables, coefficients in `[x][y][a][b]`
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    pub k: usize,
    pub n: usize,
    pub coeffs: Vec<f64>,
}

impl BellFunctional {
    pub fn evaluate(&self, p: &Correlation) -> Result<f64> {
        if p.k() != self.k || p.n() != self.n {
            return Err(validation(format!(
                "functional shape ({}, {}) does not match correlation ({}, {})",
                self.k,
                self.n,
                p.k(),
                p.n()
            )));
        }
        Ok(self.coeffs.iter().zip(p.table()).map(|(c, v)| c * v).sum())
    }

    pub fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.coeffs[((x * self.k + y) * self.n + a) * self.n + b]
    }

    /// Rescaled to unit max-norm, so that margins are comparable with a
    /// fixed tolerance. `None` for the zero functional.
    pub fn normalized(mut self) -> Option<Self> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if !(scale > 0.0) {
            return None;
        }
        self.coeffs.iter_mut().for_each(|c| *c /= scale);
        Some(self)
    }
}

/// Separating functional: `value` on the tested correlation exceeds `bound`,
/// the supremum of the functional over the set being tested against.
#[derive(Debug, Clone, PartialEq)]
pub struct BellCertificate {
    pub functional: BellFunctional,
    pub value: f64,
    pub bound: f64,
}

impl BellCertificate {
    pub fn margin(&self) -> f64 {
        self.value - self.bound
    }
}

/// `Σ_{x,y} π(x,y) Σ_{a,b} D(x,y,a,b) p(a,b|x,y)`.
pub fn game_value(g: &Game, p: &Correlation) -> Result<f64> {
    if p.k() != g.k || p.n() != g.n {
        return Err(validation(format!(
            "game shape ({}, {}) does not match correlation ({}, {})",
            g.k,
            g.n,
            p.k(),
            p.n()
        )));
    }
    let mut total = 0.0;
    for x in 0..g.k {
        for y in 0..g.k {
            let w = g.pi(x, y);
            if w == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for a in 0..g.n {
                for b in 0..g.n {
                    if g.wins(x, y, a, b) {
                        s += p.get(x, y, a, b);
                    }
                }
            }
            total += w * s;
        }
    }
    Ok(total)
}

/// CHSH: `k = n = 2`, uniform questions, win iff `a ⊕ b = x·y`.
pub fn chsh() -> Game {
    Game::uniform(2, 2, |x, y, a, b| (a ^ b) == (x & y)).expect("valid game")
}

/// Mermin-Peres magic square. Alice gets a row, Bob a column, each answers
/// three bits (`n = 8`, bit `j` of the answer is the entry in position `j`).
/// Rows must have even parity, columns odd parity, and the shared cell must
/// agree. Answers with the wrong parity always lose.
pub fn magic_square() -> Game {
    let parity = |v: usize| (v.count_ones() & 1) as usize;
    Game::uniform(3, 8, |x, y, a, b| parity(a) == 0 && parity(b) == 1 && ((a >> y) & 1) == ((b >> x) & 1))
        .expect("valid game")
}

/// Game that is always won (`value = 1`).
pub fn always_win(k: usize, n: usize) -> Game {
    Game::uniform(k, n, |_, _, _, _| true).expect("valid game")
}

/// Game that is never won (`value = 0`).
pub fn never_win(k: usize, n: usize) -> Game {
    Game::uniform(k, n, |_, _, _, _| false).expect("valid game")
}

/// Uniform questions, predicate entries i.i.d. fair coins, deterministic in
/// `seed`.
pub fn random_game(k: usize, n: usize, seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let win: Vec<bool> = (0..k * k * n * n).map(|_| rng.gen_bool(0.5)).collect();
    let kk = (k * k) as i64;
    Game::new(k, n, vec![Rational::new(1, kk); k * k], win).expect("valid game")
}

/// Named games known to the CLI.
pub fn named_game(name: &str) -> Option<Game> {
    match name {
        "chsh" => Some(chsh()),
        "magic-square" | "magic_square" => Some(magic_square()),
        "always-win" => Some(always_win(2, 2)),
        "never-win" => Some(never_win(2, 2)),
        _ => None,
    }
}

pub const CORPUS: &[&str] = &["chsh", "magic-square", "always-win", "never-win"];

/// Parameters shared by the three bounds in a sandwich report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichConfig {
    pub dim: usize,
    pub level: usize,
    pub seed: u64,
    pub restarts: usize,
    pub tol: f64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        Self { dim: 2, level: 1, seed: 0, restarts: 8, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub classical: f64,
    pub seesaw: f64,
    pub npa: f64,
    /// `npa - seesaw`.
    pub gap: f64,
}

/// Classical value, see-saw lower bound and NPA upper bound of `g`. Fails
/// with a contract error unless `classical <= seesaw + 1e-6 <= npa + 1e-4`.
pub fn sandwich_report(g: &Game, cfg: &SandwichConfig) -> Result<SandwichReport> {
    let classical = crate::strategies::classical_value(g)?.value;
    let opts = crate::strategies::SeesawOptions { restarts: cfg.restarts, ..Default::default() };
    let seesaw = crate::strategies::seesaw_value(g, cfg.dim, cfg.seed, &opts)?.value;
    let npa = crate::npa::npa_upper_bound(g, cfg.level, cfg.tol)?;
    let report = SandwichReport { classical, seesaw, npa, gap: npa - seesaw };
    if classical > seesaw + 1e-6 || seesaw + 1e-6 > npa + 1e-4 {
        return Err(Error::Contract(format!(
            "bounds out of order: classical {classical}, seesaw {seesaw}, npa {npa}"
        )));
    }
    Ok(report)
}
