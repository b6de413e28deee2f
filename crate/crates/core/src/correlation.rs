//! Correlation tables `p(a,b|x,y)` and their generation from bipartite
//! density states and local POVMs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TOL;
use crate::error::{validation, Result};
use crate::linalg::{kron, HermitianMatrix, C64};
use crate::povm::{random_povm_from, random_psd, Povm};

/// Joint answer distribution for `k` questions and `n` answers per party,
/// stored flat in `[x][y][a][b]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    k: usize,
    n: usize,
    table: Vec<f64>,
}

impl Correlation {
    /// Validates entry range and per-question normalization at the default
    /// tolerance.
    pub fn new(k: usize, n: usize, table: Vec<f64>) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(validation("correlation needs k >= 1 and n >= 1"));
        }
        let len = k * k * n * n;
        if table.len() != len {
            return Err(validation(format!("correlation table has {} entries, expected {len}", table.len())));
        }
        let tol = TOL.povm;
        if let Some(i) = table.iter().position(|&v| !v.is_finite() || v < -tol || v > 1.0 + tol) {
            return Err(validation(format!("correlation entry {i} = {} outside [0, 1]", table[i])));
        }
        for (q, chunk) in table.chunks(n * n).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(validation(format!(
                    "probabilities for questions (x={}, y={}) sum to {s}, not 1",
                    q / k,
                    q % k
                )));
            }
        }
        Ok(Self { k, n, table })
    }

    pub(crate) fn from_raw(k: usize, n: usize, table: Vec<f64>) -> Self {
        debug_assert_eq!(table.len(), k * k * n * n);
        Self { k, n, table }
    }

    pub fn from_fn(k: usize, n: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut table = Vec::with_capacity(k * k * n * n);
        for x in 0..k {
            for y in 0..k {
                for a in 0..n {
                    for b in 0..n {
                        table.push(f(x, y, a, b));
                    }
                }
            }
        }
        Self::new(k, n, table)
    }

    /// `p ≡ 1/n²`.
    pub fn uniform(k: usize, n: usize) -> Self {
        let v = 1.0 / (n * n) as f64;
        Self::from_raw(k, n, vec![v; k * k * n * n])
    }

    /// Popescu-Rohrlich box: `p = 1/2` iff `a ⊕ b = x·y`.
    pub fn pr_box() -> Self {
        Self::from_fn(2, 2, |x, y, a, b| if (a ^ b) == (x & y) { 0.5 } else { 0.0 }).expect("valid table")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.k + y) * self.n + a) * self.n + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[self.index(x, y, a, b)]
    }

    /// `Σ_b p(a,b|x,y)`.
    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.n).map(|b| self.get(x, y, a, b)).sum()
    }

    /// `Σ_a p(a,b|x,y)`.
    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.n).map(|a| self.get(x, y, a, b)).sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.k == other.k && self.n == other.n
    }
}

/// Density matrix on `C^dim_a ⊗ C^dim_b`, with basis index `i * dim_b + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    dim_a: usize,
    dim_b: usize,
    rho: HermitianMatrix,
}

impl DensityState {
    pub fn new(dim_a: usize, dim_b: usize, rho: HermitianMatrix) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 || rho.dim() != dim_a * dim_b {
            return Err(validation(format!(
                "state of dimension {} does not match {dim_a} x {dim_b}",
                rho.dim()
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > TOL.povm {
            return Err(validation(format!("state has trace {tr}, expected 1")));
        }
        let l = rho.min_eigenvalue();
        if l < -TOL.povm {
            return Err(validation(format!("state is not positive (min eigenvalue {l:.3e})")));
        }
        Ok(Self { dim_a, dim_b, rho })
    }

    pub(crate) fn from_unchecked(dim_a: usize, dim_b: usize, rho: HermitianMatrix) -> Self {
        debug_assert_eq!(rho.dim(), dim_a * dim_b);
        Self { dim_a, dim_b, rho }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(dim_a: usize, dim_b: usize, psi: &[C64]) -> Result<Self> {
        if psi.len() != dim_a * dim_b {
            return Err(validation("state vector length does not match dim_a * dim_b"));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(validation("state vector is zero"));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self::from_unchecked(dim_a, dim_b, HermitianMatrix::outer(&unit)))
    }

    /// `Σ_i |ii⟩ / √d`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut psi = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            psi[i * d + i] = C64::new(1.0, 0.0);
        }
        Self::pure(d, d, &psi).expect("nonzero vector")
    }

    pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Self {
        let d = dim_a * dim_b;
        Self::from_unchecked(dim_a, dim_b, HermitianMatrix::scalar(d, 1.0 / d as f64))
    }

    pub fn product(rho_a: &HermitianMatrix, rho_b: &HermitianMatrix) -> Result<Self> {
        Self::new(rho_a.dim(), rho_b.dim(), kron(rho_a, rho_b))
    }

    /// Full-rank random mixed state `G G^* / tr`, deterministic in `seed`.
    pub fn random(dim_a: usize, dim_b: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_from(dim_a, dim_b, &mut rng)
    }

    pub(crate) fn random_from(dim_a: usize, dim_b: usize, rng: &mut ChaCha8Rng) -> Self {
        let g = random_psd(dim_a * dim_b, rng);
        let tr = g.trace();
        Self::from_unchecked(dim_a, dim_b, g.scale(1.0 / tr))
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    /// `rho[(i,k),(j,l)]`.
    fn entry(&self, i: usize, k: usize, j: usize, l: usize) -> C64 {
        self.rho.get(i * self.dim_b + k, j * self.dim_b + l)
    }

    /// `tr(rho (A ⊗ B))` without forming the Kronecker product.
    pub fn expectation(&self, a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut s = C64::new(0.0, 0.0);
        for i in 0..da {
            for j in 0..da {
                let aji = a.get(j, i);
                if aji == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut inner = C64::new(0.0, 0.0);
                for k in 0..db {
                    for l in 0..db {
                        inner += self.entry(i, k, j, l) * b.get(l, k);
                    }
                }
                s += aji * inner;
            }
        }
        s.re
    }

    /// Operator `R` on Alice's space with `tr(R A) = tr(rho (A ⊗ B))`.
    pub fn contract_bob(&self, b: &HermitianMatrix) -> HermitianMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut data = vec![C64::new(0.0, 0.0); da * da];
        for i in 0..da {
            for j in 0..da {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..db {
                    for l in 0..db {
                        s += self.entry(i, k, j, l) * b.get(l, k);
                    }
                }
                data[i * da + j] = s;
            }
        }
        HermitianMatrix::from_raw(da, data)
    }

    /// Operator `R` on Bob's space with `tr(R B) = tr(rho (A ⊗ B))`.
    pub fn contract_alice(&self, a: &HermitianMatrix) -> HermitianMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut data = vec![C64::new(0.0, 0.0); db * db];
        for k in 0..db {
            for l in 0..db {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..da {
                    for j in 0..da {
                        s += self.entry(i, k, j, l) * a.get(j, i);
                    }
                }
                data[k * db + l] = s;
            }
        }
        HermitianMatrix::from_raw(db, data)
    }

    /// Extends the state to `C^(dim_a+extra_a) ⊗ C^(dim_b+extra_b)`; new
    /// basis vectors carry zero mass.
    pub fn zero_pad(&self, extra_a: usize, extra_b: usize) -> Self {
        let (na, nb) = (self.dim_a + extra_a, self.dim_b + extra_b);
        let d = na * nb;
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..self.dim_a {
            for k in 0..self.dim_b {
                for j in 0..self.dim_a {
                    for l in 0..self.dim_b {
                        data[(i * nb + k) * d + j * nb + l] = self.entry(i, k, j, l);
                    }
                }
            }
        }
        Self::from_unchecked(na, nb, HermitianMatrix::from_raw(d, data))
    }

    /// `λ ρ1 ⊕ (1−λ) ρ2` on `(A1 ⊕ A2) ⊗ (B1 ⊕ B2)`, supported on
    /// `A1⊗B1 ⊕ A2⊗B2`. Paired with direct sums of the POVMs this realizes
    /// the convex combination of the two correlations.
    pub fn direct_sum_mixture(s1: &Self, s2: &Self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(validation("mixing weight must lie in [0, 1]"));
        }
        let (na, nb) = (s1.dim_a + s2.dim_a, s1.dim_b + s2.dim_b);
        let d = na * nb;
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for (s, w, oa, ob) in [(s1, lambda, 0, 0), (s2, 1.0 - lambda, s1.dim_a, s1.dim_b)] {
            for i in 0..s.dim_a {
                for k in 0..s.dim_b {
                    for j in 0..s.dim_a {
                        for l in 0..s.dim_b {
                            data[((oa + i) * nb + ob + k) * d + (oa + j) * nb + ob + l] = s.entry(i, k, j, l) * w;
                        }
                    }
                }
            }
        }
        Ok(Self::from_unchecked(na, nb, HermitianMatrix::from_raw(d, data)))
    }
}

fn check_party(povms: &[Povm], dim: usize, who: &str) -> Result<usize> {
    let Some(first) = povms.first() else {
        return Err(validation(format!("{who} needs at least one POVM")));
    };
    let n = first.len();
    for (x, p) in povms.iter().enumerate() {
        if p.dim() != dim {
            return Err(validation(format!("{who} POVM {x} has dimension {} but the state has {dim}", p.dim())));
        }
        if p.len() != n {
            return Err(validation(format!("{who} POVM {x} has {} outcomes, expected {n}", p.len())));
        }
    }
    Ok(n)
}

/// `p(a,b|x,y) = tr(rho (A^x_a ⊗ B^y_b))`.
pub fn correlation_from_state(s: &DensityState, alice: &[Povm], bob: &[Povm]) -> Result<Correlation> {
    let n = check_party(alice, s.dim_a, "Alice")?;
    let nb = check_party(bob, s.dim_b, "Bob")?;
    if n != nb || alice.len() != bob.len() {
        return Err(validation(format!(
            "parties disagree on shape: Alice has {} questions x {n} answers, Bob {} x {nb}",
            alice.len(),
            bob.len()
        )));
    }
    let k = alice.len();
    let mut table = Vec::with_capacity(k * k * n * n);
    for pa in alice {
        for pb in bob {
            for ea in pa.effects() {
                let r = s.contract_alice(ea);
                for eb in pb.effects() {
                    table.push(crate::linalg::real_inner(&r, eb));
                }
            }
        }
    }
    Ok(Correlation::from_raw(k, n, table))
}

/// Random state and POVMs of local dimension `dim`, deterministic in `seed`.
pub fn random_strategy(dim: usize, k: usize, n: usize, seed: u64) -> (DensityState, Vec<Povm>, Vec<Povm>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = DensityState::random_from(dim, dim, &mut rng);
    let alice = (0..k).map(|_| random_povm_from(dim, n, &mut rng)).collect();
    let bob = (0..k).map(|_| random_povm_from(dim, n, &mut rng)).collect();
    (s, alice, bob)
}

/// Marginals of each party independent of the other party's question.
pub fn is_nonsignalling(p: &Correlation, tol: f64) -> bool {
    let (k, n) = (p.k, p.n);
    for x in 0..k {
        for a in 0..n {
            let m0 = p.alice_marginal(x, 0, a);
            if (1..k).any(|y| (p.alice_marginal(x, y, a) - m0).abs() > tol) {
                return false;
            }
        }
    }
    for y in 0..k {
        for b in 0..n {
            let m0 = p.bob_marginal(0, y, b);
            if (1..k).any(|x| (p.bob_marginal(x, y, b) - m0).abs() > tol) {
                return false;
            }
        }
    }
    true
}

/// `λ p + (1−λ) q`.
pub fn mix(p: &Correlation, q: &Correlation, lambda: f64) -> Result<Correlation> {
    if !p.same_shape(q) {
        return Err(validation("cannot mix correlations of different shapes"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(validation(format!("mixing weight {lambda} outside [0, 1]")));
    }
    let table = p.table.iter().zip(&q.table).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
    Ok(Correlation::from_raw(p.k, p.n, table))
}

/// Max-entry distance.
pub fn corr_distance(p: &Correlation, q: &Correlation) -> Result<f64> {
    if !p.same_shape(q) {
        return Err(validation("cannot compare correlations of different shapes"));
    }
    Ok(p.table.iter().zip(&q.table).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
