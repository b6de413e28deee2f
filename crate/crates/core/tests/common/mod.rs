//! Shared generators for integration tests.
#![allow(dead_code)]

use qcorr::sdp::{BlockSparse, SdpProblem, Sense};
use qcorr::{HermitianMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_hermitian(d: usize, complex: bool, rng: &mut impl Rng) -> HermitianMatrix {
    let mut data = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        data[i * d + i] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in (i + 1)..d {
            let im = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
            let z = C64::new(rng.gen_range(-1.0..1.0), im);
            data[i * d + j] = z;
            data[j * d + i] = z.conj();
        }
    }
    HermitianMatrix::new(d, data).unwrap()
}

pub fn random_psd(d: usize, complex: bool, rng: &mut impl Rng) -> HermitianMatrix {
    let g = random_hermitian(d, complex, rng);
    HermitianMatrix::identity(d).sandwich(&g)
}

pub fn random_block_data(blocks: &[usize], complex: bool, rng: &mut impl Rng) -> (BlockSparse, Vec<HermitianMatrix>) {
    let mut s = BlockSparse::new();
    let mut dense = Vec::new();
    for (b, &d) in blocks.iter().enumerate() {
        let m = random_hermitian(d, complex, rng);
        s.add_dense(b, &m, 1.0);
        dense.push(m);
    }
    (s, dense)
}

/// Random problem with a planted PSD point, bounded by a trace constraint.
pub fn planted_feasible(seed: u64) -> (SdpProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nblocks = rng.gen_range(1..=3);
    let blocks: Vec<usize> = (0..nblocks).map(|_| rng.gen_range(1..=10)).collect();
    let complex = rng.gen_bool(0.3);
    let x0: Vec<HermitianMatrix> = blocks.iter().map(|&d| random_psd(d, complex, &mut rng)).collect();
    let (c, _) = random_block_data(&blocks, complex, &mut rng);
    let mut p = SdpProblem::new(Sense::Maximize, blocks.clone(), c.clone());
    let mut trace = BlockSparse::new();
    for (b, &d) in blocks.iter().enumerate() {
        for i in 0..d {
            trace.push_real(b, i, i, 1.0);
        }
    }
    let t0 = trace.inner(&x0);
    p.constrain(trace, t0);
    let m = rng.gen_range(1..=blocks.iter().sum::<usize>().min(8));
    for _ in 0..m {
        let (a, _) = random_block_data(&blocks, complex, &mut rng);
        let b = a.inner(&x0);
        p.constrain(a, b);
    }
    (p, c.inner(&x0))
}

/// Random problem with a planted Farkas ray `y0`: `sum y0_j A_j ≻ 0`, `b^T y0 = -1`.
pub fn planted_infeasible(seed: u64) -> SdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = vec![rng.gen_range(2..=6), rng.gen_range(1..=4)];
    let m = rng.gen_range(2..=5);
    let y0: Vec<f64> = (0..m).map(|j| if j == m - 1 { 1.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut combo: Vec<HermitianMatrix> = blocks.iter().map(|&d| HermitianMatrix::zeros(d)).collect();
    for yj in &y0[..m - 1] {
        let (a, dense) = random_block_data(&blocks, false, &mut rng);
        for (acc, d) in combo.iter_mut().zip(&dense) {
            acc.add_scaled(*yj, d);
        }
        rows.push(a);
        b.push(rng.gen_range(-1.0..1.0));
    }
    let mut last = BlockSparse::new();
    for (blk, (&d, acc)) in blocks.iter().zip(&combo).enumerate() {
        let pd = random_psd(d, false, &mut rng).add(&HermitianMatrix::identity(d));
        last.add_dense(blk, &pd.sub(acc), 1.0);
    }
    rows.push(last);
    let partial: f64 = b.iter().zip(&y0).map(|(x, y)| x * y).sum();
    b.push(-1.0 - partial);
    let (c, _) = random_block_data(&blocks, false, &mut rng);
    let mut p = SdpProblem::new(Sense::Maximize, blocks, c);
    for (a, bj) in rows.into_iter().zip(b) {
        p.constrain(a, bj);
    }
    p
}
