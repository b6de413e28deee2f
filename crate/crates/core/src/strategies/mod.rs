//! Deterministic strategies, the local polytope, and see-saw lower bounds.

mod seesaw;

pub use seesaw::{seesaw_run, seesaw_value, SeesawOptions, SeesawResult, SeesawRun};

use num_integer::Integer;

use crate::correlation::Correlation;
use crate::error::{validation, Error, Result};
use crate::games::{game_value, BellCertificate, BellFunctional, Game, Rational};
use crate::povm::Povm;
use crate::sdp::{solve_sdp, BlockSparse, SdpProblem, SdpStatus, Sense};

/// Default cap on the number of deterministic strategy pairs.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// Cap on `vertices * constraint rows` for the local-membership LP, which the
/// solver stores densely.
pub const LOCAL_LP_CAP: u64 = 20_000_000;

/// A pair of answer functions `[k] -> [n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn new(alice: Vec<usize>, bob: Vec<usize>, n: usize) -> Result<Self> {
        if alice.len() != bob.len() {
            return Err(validation("Alice and Bob must answer the same number of questions"));
        }
        if alice.iter().chain(&bob).any(|&a| a >= n) {
            return Err(validation(format!("answer out of range for n = {n}")));
        }
        Ok(Self { alice, bob })
    }

    pub fn k(&self) -> usize {
        self.alice.len()
    }

    /// The vertex `p(a,b|x,y) = [a = f(x)][b = g(y)]`.
    pub fn correlation(&self, n: usize) -> Correlation {
        let k = self.k();
        let mut table = vec![0.0; k * k * n * n];
        for x in 0..k {
            for y in 0..k {
                table[((x * k + y) * n + self.alice[x]) * n + self.bob[y]] = 1.0;
            }
        }
        Correlation::from_raw(k, n, table)
    }

    /// Diagonal projective POVMs on `C^d` realizing this strategy with any
    /// state.
    pub fn povms(&self, n: usize, d: usize) -> (Vec<Povm>, Vec<Povm>) {
        let lift = |f: &[usize]| -> Vec<Povm> {
            f.iter().map(|&a| Povm::from_labels(&vec![a; d], n).expect("answers validated")).collect()
        };
        (lift(&self.alice), lift(&self.bob))
    }
}

fn strategy_count(k: usize, n: usize) -> Result<u64> {
    let over = || Error::Resource(format!("{n}^(2*{k}) deterministic strategies exceed the cap of {ENUMERATION_CAP}"));
    let mut count: u64 = 1;
    for _ in 0..2 * k {
        count = count.checked_mul(n as u64).ok_or_else(over)?;
        if count > ENUMERATION_CAP {
            return Err(over());
        }
    }
    Ok(count)
}

fn decode(mut code: u64, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = (code % n as u64) as usize;
        code /= n as u64;
    }
    out
}

/// Iterator over all `n^k * n^k` strategy pairs in lexicographic order of
/// `(alice, bob)`.
#[derive(Debug, Clone)]
pub struct DeterministicIter {
    k: usize,
    n: usize,
    per_party: u64,
    next: u64,
    total: u64,
}

impl Iterator for DeterministicIter {
    type Item = DeterministicStrategy;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.total {
            return None;
        }
        let code = self.next;
        self.next += 1;
        Some(DeterministicStrategy {
            alice: decode(code / self.per_party, self.k, self.n),
            bob: decode(code % self.per_party, self.k, self.n),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for DeterministicIter {}

pub fn enumerate_deterministic(k: usize, n: usize) -> Result<DeterministicIter> {
    if k == 0 || n == 0 {
        return Err(validation("enumeration needs k >= 1 and n >= 1"));
    }
    let total = strategy_count(k, n)?;
    let per_party = (n as u64).pow(k as u32);
    Ok(DeterministicIter { k, n, per_party, next: 0, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalValue {
    pub value: f64,
    pub exact: Rational,
    pub argmax: DeterministicStrategy,
}

/// Exact optimum over deterministic strategies. For each Alice function the
/// best Bob response is found per question, which visits every pair
/// implicitly; the first maximizer in lexicographic order is returned.
pub fn classical_value(g: &Game) -> Result<ClassicalValue> {
    let (k, n) = (g.k(), g.n());
    strategy_count(k, n)?;
    let lcd = g.pi_table().iter().try_fold(1i64, |acc, r| {
        let l = acc.lcm(r.denom());
        (l > 0 && l < (1 << 40)).then_some(l)
    });
    let lcd = lcd.ok_or_else(|| Error::Resource("question distribution denominators too large".into()))?;
    let weight: Vec<i64> = g.pi_table().iter().map(|r| r.numer() * (lcd / r.denom())).collect();

    let per_party = (n as u64).pow(k as u32);
    let mut best: Option<(i64, DeterministicStrategy)> = None;
    let mut score = vec![0i64; n];
    for code in 0..per_party {
        let alice = decode(code, k, n);
        let mut total = 0i64;
        let mut bob = vec![0usize; k];
        for y in 0..k {
            score.iter_mut().for_each(|s| *s = 0);
            for (x, &a) in alice.iter().enumerate() {
                let w = weight[x * k + y];
                if w == 0 {
                    continue;
                }
                for (b, s) in score.iter_mut().enumerate() {
                    if g.wins(x, y, a, b) {
                        *s += w;
                    }
                }
            }
            let (bb, bs) = score.iter().enumerate().fold((0, score[0]), |acc, (b, &s)| if s > acc.1 { (b, s) } else { acc });
            bob[y] = bb;
            total += bs;
        }
        if best.as_ref().is_none_or(|(v, _)| total > *v) {
            best = Some((total, DeterministicStrategy { alice, bob }));
        }
    }
    let (num, argmax) = best.expect("at least one strategy");
    let exact = Rational::new(num, lcd);
    Ok(ClassicalValue { value: *exact.numer() as f64 / *exact.denom() as f64, exact, argmax })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMembership {
    pub member: bool,
    /// Largest `λ ≤ 1` with `λ p + (1 - λ) u` local, `u` uniform.
    pub visibility: f64,
    /// Present exactly when `member` is false.
    pub certificate: Option<BellCertificate>,
}

/// Local-polytope membership via the visibility LP
/// `max λ  s.t.  Σ_v w_v v = λ p + (1 - λ) u,  w ≥ 0,  0 ≤ λ ≤ 1`,
/// written with `1x1` blocks. The dual gives a functional `F ≤ 0` on every
/// vertex with `F(p) ≥ 1 - λ*`; its vertex maximum is recomputed exactly.
pub fn local_membership(p: &Correlation, tol: f64) -> Result<LocalMembership> {
    let (k, n) = (p.k(), p.n());
    let cells = k * k * n * n;
    let count = strategy_count(k, n)?;
    if count.saturating_mul(cells as u64 + 1) > LOCAL_LP_CAP {
        return Err(Error::Resource(format!(
            "local LP with {count} vertices and {cells} cells exceeds the size cap"
        )));
    }
    let vertices: Vec<DeterministicStrategy> = enumerate_deterministic(k, n)?.collect();
    let u = 1.0 / (n * n) as f64;
    let nv = vertices.len();
    let (lam, slack) = (nv, nv + 1);
    let mut prob = SdpProblem::new(Sense::Maximize, vec![1; nv + 2], BlockSparse::new().with(lam, 0, 0, 1.0));

    let mut rows: Vec<BlockSparse> = vec![BlockSparse::new(); cells];
    for (vi, v) in vertices.iter().enumerate() {
        for x in 0..k {
            for y in 0..k {
                rows[p.index(x, y, v.alice[x], v.bob[y])].push_real(vi, 0, 0, 1.0);
            }
        }
    }
    for (i, mut row) in rows.into_iter().enumerate() {
        let c = u - p.table()[i];
        if c != 0.0 {
            row.push_real(lam, 0, 0, c);
        }
        prob.constrain(row, u);
    }
    prob.constrain(BlockSparse::new().with(lam, 0, 0, 1.0).with(slack, 0, 0, 1.0), 1.0);

    let sol = solve_sdp(&prob, tol, crate::config::TOL.sdp_max_iters)?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            gap: sol.gap,
        });
    }
    let visibility = sol.primal_objective.clamp(0.0, 1.0);
    let functional = BellFunctional { k, n, coeffs: sol.y[..cells].iter().map(|y| -y).collect() }.normalized();
    let certificate = match functional {
        Some(f) => Some(local_certificate(f, p, &vertices)?).filter(|c| c.margin() > tol),
        None => None,
    };
    Ok(LocalMembership { member: certificate.is_none(), visibility, certificate })
}

fn local_certificate(
    functional: BellFunctional,
    p: &Correlation,
    vertices: &[DeterministicStrategy],
) -> Result<BellCertificate> {
    let value = functional.evaluate(p)?;
    let k = p.k();
    let bound = vertices
        .iter()
        .map(|v| {
            let mut s = 0.0;
            for x in 0..k {
                for y in 0..k {
                    s += functional.coeff(x, y, v.alice[x], v.bob[y]);
                }
            }
            s
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BellCertificate { functional, value, bound })
}

/// Maximum of a Bell functional over the local polytope, by enumeration.
pub fn local_bound(f: &BellFunctional) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for v in enumerate_deterministic(f.k, f.n)? {
        let mut s = 0.0;
        for x in 0..f.k {
            for y in 0..f.k {
                s += f.coeff(x, y, v.alice[x], v.bob[y]);
            }
        }
        best = best.max(s);
    }
    Ok(best)
}

/// Game value of a deterministic strategy.
pub fn deterministic_value(g: &Game, s: &DeterministicStrategy) -> Result<f64> {
    game_value(g, &s.correlation(g.n()))
}
