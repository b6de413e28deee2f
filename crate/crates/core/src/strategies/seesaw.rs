//! Alternating maximization over the state and each party's POVMs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::classical_value;
use crate::correlation::{correlation_from_state, DensityState};
use crate::error::{validation, Result};
use crate::games::{game_value, Game};
use crate::linalg::{eig_hermitian, kron, psd_project, HermitianMatrix, C64};
use crate::povm::{random_povm_from, Povm};
use crate::sdp::{BlockSparse, Prepared, SdpProblem, Sense, WarmStart};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeesawOptions {
    pub restarts: usize,
    /// Cap on full cycles (Alice, Bob, state) per restart.
    pub iters: usize,
    pub sdp_tol: f64,
    pub sdp_max_iters: usize,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self { restarts: 10, iters: 500, sdp_tol: 1e-7, sdp_max_iters: 5000 }
    }
}

/// Stop once this many consecutive cycles each gain less than `STALL_GAIN`.
const STALL_CYCLES: usize = 5;
const STALL_GAIN: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct SeesawRun {
    pub value: f64,
    pub state: DensityState,
    pub alice: Vec<Povm>,
    pub bob: Vec<Povm>,
    /// Objective after the initial point and after every step.
    pub trace: Vec<f64>,
    pub cycles: usize,
}

#[derive(Debug, Clone)]
pub struct SeesawResult {
    pub value: f64,
    pub state: DensityState,
    pub alice: Vec<Povm>,
    pub bob: Vec<Povm>,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
}

/// Best see-saw value over `opts.restarts` runs in local dimension `d`.
/// Restart 0 starts from the classical optimum embedded as diagonal
/// projectors (when enumeration is within the cap); the others start from
/// random POVMs. Every restart starts from the maximally entangled state.
/// Restart `r` draws from stream `r` of a ChaCha8 generator seeded with
/// `seed`.
pub fn seesaw_value(g: &Game, d: usize, seed: u64, opts: &SeesawOptions) -> Result<SeesawResult> {
    if d == 0 {
        return Err(validation("see-saw needs local dimension d >= 1"));
    }
    if opts.restarts == 0 {
        return Err(validation("see-saw needs at least one restart"));
    }
    let (k, n) = (g.k(), g.n());
    let classical = classical_value(g).ok();
    let mut best: Option<(SeesawRun, usize)> = None;
    let mut restart_values = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let (alice, bob) = match (&classical, r) {
            (Some(c), 0) => c.argmax.povms(n, d),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                let alice = (0..k).map(|_| random_povm_from(d, n, &mut rng)).collect();
                let bob = (0..k).map(|_| random_povm_from(d, n, &mut rng)).collect();
                (alice, bob)
            }
        };
        let run = seesaw_run(g, DensityState::maximally_entangled(d), alice, bob, opts)?;
        restart_values.push(run.value);
        if best.as_ref().is_none_or(|(b, _)| run.value > b.value) {
            best = Some((run, r));
        }
    }
    let (run, best_restart) = best.expect("restarts >= 1");
    Ok(SeesawResult {
        value: run.value,
        state: run.state,
        alice: run.alice,
        bob: run.bob,
        best_restart,
        restart_values,
    })
}

/// One see-saw ascent from the given starting point. A cycle updates Alice,
/// then Bob, then the state. Each step is kept only
/// if it does not lower the objective, so `trace` is nondecreasing.
pub fn seesaw_run(
    g: &Game,
    state: DensityState,
    alice: Vec<Povm>,
    bob: Vec<Povm>,
    opts: &SeesawOptions,
) -> Result<SeesawRun> {
    let (k, n) = (g.k(), g.n());
    check_party(&alice, k, n, state.dim_a(), "Alice")?;
    check_party(&bob, k, n, state.dim_b(), "Bob")?;
    let mut cur = Point { state, alice, bob };
    let mut value = cur.value(g)?;
    let mut trace = vec![value];
    let mut alice_solver = PovmStep::new(cur.state.dim_a(), n, k);
    let mut bob_solver = PovmStep::new(cur.state.dim_b(), n, k);
    let mut stalled = 0;
    let mut cycles = 0;

    while cycles < opts.iters && stalled < STALL_CYCLES {
        cycles += 1;
        let start = value;

        let mut cand = cur.clone();
        for x in 0..k {
            let rs: Vec<HermitianMatrix> = (0..n)
                .map(|a| cur.state.contract_bob(&bob_weighted(g, &cur.bob, x, a)))
                .collect();
            if let Some(p) = alice_solver.solve(x, &rs, opts) {
                cand.alice[x] = p;
            }
        }
        accept(g, &mut cur, cand, &mut value)?;
        trace.push(value);

        let mut cand = cur.clone();
        for y in 0..k {
            let rs: Vec<HermitianMatrix> = (0..n)
                .map(|b| cur.state.contract_alice(&alice_weighted(g, &cur.alice, y, b)))
                .collect();
            if let Some(p) = bob_solver.solve(y, &rs, opts) {
                cand.bob[y] = p;
            }
        }
        accept(g, &mut cur, cand, &mut value)?;
        trace.push(value);

        let cand = Point { state: top_state(g, &cur), ..cur.clone() };
        accept(g, &mut cur, cand, &mut value)?;
        trace.push(value);

        if value - start < STALL_GAIN {
            stalled += 1;
        } else {
            stalled = 0;
        }
    }
    Ok(SeesawRun { value, state: cur.state, alice: cur.alice, bob: cur.bob, trace, cycles })
}

fn check_party(p: &[Povm], k: usize, n: usize, d: usize, who: &str) -> Result<()> {
    if p.len() != k || p.iter().any(|m| m.len() != n || m.dim() != d) {
        return Err(validation(format!("{who} needs {k} POVMs with {n} effects on C^{d}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Point {
    state: DensityState,
    alice: Vec<Povm>,
    bob: Vec<Povm>,
}

impl Point {
    fn value(&self, g: &Game) -> Result<f64> {
        game_value(g, &correlation_from_state(&self.state, &self.alice, &self.bob)?)
    }
}

fn accept(g: &Game, cur: &mut Point, cand: Point, value: &mut f64) -> Result<()> {
    let v = cand.value(g)?;
    if v >= *value {
        *cur = cand;
        *value = v;
    }
    Ok(())
}

/// `Σ_{y,b} π(x,y) D(x,y,a,b) B^y_b`.
fn bob_weighted(g: &Game, bob: &[Povm], x: usize, a: usize) -> HermitianMatrix {
    let mut m = HermitianMatrix::zeros(bob[0].dim());
    for (y, p) in bob.iter().enumerate() {
        let w = g.pi(x, y);
        for (b, e) in p.effects().iter().enumerate() {
            if w != 0.0 && g.wins(x, y, a, b) {
                m.add_scaled(w, e);
            }
        }
    }
    m
}

/// `Σ_{x,a} π(x,y) D(x,y,a,b) A^x_a`.
fn alice_weighted(g: &Game, alice: &[Povm], y: usize, b: usize) -> HermitianMatrix {
    let mut m = HermitianMatrix::zeros(alice[0].dim());
    for (x, p) in alice.iter().enumerate() {
        let w = g.pi(x, y);
        for (a, e) in p.effects().iter().enumerate() {
            if w != 0.0 && g.wins(x, y, a, b) {
                m.add_scaled(w, e);
            }
        }
    }
    m
}

/// Top eigenvector of the game operator `Σ π D A^x_a ⊗ B^y_b`.
fn top_state(g: &Game, cur: &Point) -> DensityState {
    let (da, db) = (cur.state.dim_a(), cur.state.dim_b());
    let mut w = HermitianMatrix::zeros(da * db);
    for (x, p) in cur.alice.iter().enumerate() {
        for (a, e) in p.effects().iter().enumerate() {
            w.add_scaled(1.0, &kron(e, &bob_weighted(g, &cur.bob, x, a)));
        }
    }
    let psi = eig_hermitian(&w).top_vector();
    DensityState::pure(da, db, &psi).expect("eigenvectors are unit vectors")
}

/// Per-party POVM optimizer: `max Σ_a <R_a, A_a>` over `Σ_a A_a = I`,
/// `A_a ⪰ 0`. Constraint data are reduced once per field (real or complex)
/// and each question keeps its own warm start.
struct PovmStep {
    d: usize,
    n: usize,
    prepared: [Option<Prepared>; 2],
    warm: Vec<[Option<WarmStart>; 2]>,
}

impl PovmStep {
    fn new(d: usize, n: usize, k: usize) -> Self {
        Self { d, n, prepared: [None, None], warm: vec![[None, None]; k] }
    }

    fn problem(&self, complex: bool) -> SdpProblem {
        let (d, n) = (self.d, self.n);
        let mut p = SdpProblem::new(Sense::Maximize, vec![d; n], BlockSparse::new());
        for i in 0..d {
            for j in i..d {
                let mut re = BlockSparse::new();
                for a in 0..n {
                    re.push_real(a, i, j, if i == j { 1.0 } else { 0.5 });
                }
                p.constrain(re, if i == j { 1.0 } else { 0.0 });
                if complex && i < j {
                    let mut im = BlockSparse::new();
                    for a in 0..n {
                        im.push(a, i, j, C64::new(0.0, 0.5));
                    }
                    p.constrain(im, 0.0);
                }
            }
        }
        p
    }

    /// Returns `None` when the solver output cannot be repaired into a POVM.
    fn solve(&mut self, question: usize, rs: &[HermitianMatrix], opts: &SeesawOptions) -> Option<Povm> {
        let field = usize::from(rs.iter().any(|r| !r.is_real()));
        if self.prepared[field].is_none() {
            let p = self.problem(field == 1);
            self.prepared[field] = Some(Prepared::new(&p).expect("POVM spectrahedron is well formed"));
        }
        let prepared = self.prepared[field].as_ref().expect("just built");
        let mut obj = BlockSparse::new();
        for (a, r) in rs.iter().enumerate() {
            obj.add_dense(a, r, 1.0);
        }
        let c = prepared.embed_objective(&obj, Sense::Maximize);
        let warm = self.warm[question][field].take();
        let (sol, next) = prepared.run(&c, opts.sdp_tol, opts.sdp_max_iters, warm.as_ref());
        self.warm[question][field] = Some(next);
        repair_povm(&sol.x)
    }
}

/// PSD projection followed by `S^{-1/2}` renormalization, leaving an exact
/// POVM up to rounding.
fn repair_povm(blocks: &[HermitianMatrix]) -> Option<Povm> {
    let xs: Vec<HermitianMatrix> = blocks.iter().map(psd_project).collect();
    let s = HermitianMatrix::sum(&xs)?;
    if !(s.min_eigenvalue() > 0.5) {
        return None;
    }
    let t = s.psd_power(-0.5, 0.0);
    let mut effects: Vec<HermitianMatrix> = xs.iter().map(|x| x.sandwich(&t)).collect();
    let sum = HermitianMatrix::sum(&effects)?;
    let fix = HermitianMatrix::identity(s.dim()).sub(&sum);
    effects.last_mut()?.add_scaled(1.0, &fix);
    Some(Povm::from_unchecked(effects))
}
