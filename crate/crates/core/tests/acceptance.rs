//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{planted_feasible, planted_infeasible, random_hermitian};
use qcorr::correlation::{correlation_from_state, is_nonsignalling, random_strategy, Correlation, DensityState};
use qcorr::games::{chsh, game_value, magic_square, named_game, random_game, sandwich_report, Rational, SandwichConfig, CORPUS};
use qcorr::linalg::operator_norm;
use qcorr::npa::{npa_functional_max, npa_membership, npa_upper_bound};
use qcorr::povm::{is_povm, lift_povm_direct_sum, normalize_to_povm, random_povm, Povm};
use qcorr::sdp::{solve_sdp, SdpStatus};
use qcorr::strategies::{classical_value, enumerate_deterministic, local_membership, seesaw_value, SeesawOptions};
use qcorr::{HermitianMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: qcorr::Error) -> String {
    e.to_string()
}

/// Rank-one projector onto `(cos t, sin t)`.
fn ray(t: f64) -> HermitianMatrix {
    HermitianMatrix::outer(&[C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)])
}

fn angle_povm(t: f64) -> Povm {
    Povm::new(vec![ray(t), ray(t + PI / 2.0)]).expect("orthogonal projectors")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let g = chsh();
    let oracle_p = correlation_from_state(
        &DensityState::maximally_entangled(2),
        &[angle_povm(0.0), angle_povm(PI / 4.0)],
        &[angle_povm(PI / 8.0), angle_povm(-PI / 8.0)],
    )
    .map_err(err)?;
    let oracle = game_value(&g, &oracle_p).map_err(err)?;
    let tsirelson = (PI / 8.0).cos().powi(2);
    check((oracle - tsirelson).abs() < 1e-12, format!("qubit oracle {oracle}"))?;

    let c = classical_value(&g).map_err(err)?;
    check(c.exact == Rational::new(3, 4), format!("classical {}", c.exact))?;
    let opts = SeesawOptions { restarts: 10, ..Default::default() };
    let s = seesaw_value(&g, 2, 0, &opts).map_err(err)?.value;
    check(s >= 0.8525, format!("seesaw {s}"))?;
    check(s <= tsirelson + 1e-9, format!("seesaw {s} exceeds the Tsirelson bound"))?;
    let npa = npa_upper_bound(&g, 1, 1e-6).map_err(err)?;
    check((0.8530..=0.8542).contains(&npa), format!("npa {npa}"))?;
    check(npa - s <= 2e-3, format!("gap {}", npa - s))?;
    let t = start.elapsed();
    check(t <= Duration::from_secs(30), format!("runtime {t:?}"))?;
    Ok(format!("classical 3/4, seesaw {s:.6}, npa {npa:.6}, oracle {oracle:.6}, {t:.1?}"))
}

/// Independent oracle: all parity-respecting fills, rows even and columns odd.
fn magic_square_oracle() -> (f64, usize) {
    let g = magic_square();
    let even: Vec<usize> = (0..8).filter(|a: &usize| a.count_ones() % 2 == 0).collect();
    let odd: Vec<usize> = (0..8).filter(|a: &usize| a.count_ones() % 2 == 1).collect();
    let mut best = 0.0f64;
    let mut pairs = 0;
    for &r0 in &even {
        for &r1 in &even {
            for &r2 in &even {
                for &c0 in &odd {
                    for &c1 in &odd {
                        for &c2 in &odd {
                            let (rows, cols) = ([r0, r1, r2], [c0, c1, c2]);
                            let mut v = 0.0;
                            for x in 0..3 {
                                for y in 0..3 {
                                    if g.wins(x, y, rows[x], cols[y]) {
                                        v += g.pi(x, y);
                                    }
                                }
                            }
                            best = best.max(v);
                            pairs += 1;
                        }
                    }
                }
            }
        }
    }
    (best, pairs)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let g = magic_square();
    let (oracle, pairs) = magic_square_oracle();
    check(pairs == 4096, format!("oracle enumerated {pairs} pairs"))?;
    check((oracle - 8.0 / 9.0).abs() < 1e-12, format!("oracle {oracle}"))?;
    let c = classical_value(&g).map_err(err)?;
    check(c.exact == Rational::new(8, 9), format!("classical {}", c.exact))?;
    let opts = SeesawOptions { restarts: 10, ..Default::default() };
    let s = seesaw_value(&g, 4, 0, &opts).map_err(err)?.value;
    check(s >= 0.99, format!("seesaw {s}"))?;
    let npa = npa_upper_bound(&g, 1, 1e-6).map_err(err)?;
    check(npa >= s - 1e-4, format!("npa {npa} below seesaw {s}"))?;
    let t = start.elapsed();
    check(t <= Duration::from_secs(300), format!("runtime {t:?}"))?;
    Ok(format!("classical 8/9, seesaw {s:.6}, npa {npa:.6}, {t:.1?}"))
}

fn criterion_3() -> Outcome {
    let mut games: Vec<(String, qcorr::games::Game, usize)> =
        CORPUS.iter().map(|n| (n.to_string(), named_game(n).expect("corpus name"), 3)).collect();
    for seed in 0..50u64 {
        let (k, n, d) = (1 + seed as usize % 3, 1 + (seed as usize / 3) % 3, 1 + (seed as usize / 9) % 3);
        games.push((format!("random({k},{n},seed {seed})"), random_game(k, n, seed), d));
    }
    let mut violations = Vec::new();
    let mut worst_gap = f64::INFINITY;
    for (name, g, d) in &games {
        let cfg = SandwichConfig { dim: *d, level: 1, seed: 0, restarts: 4, tol: 1e-6 };
        match sandwich_report(g, &cfg) {
            Ok(r) => worst_gap = worst_gap.min(r.npa + 1e-4 - (r.seesaw + 1e-6)),
            Err(e) => violations.push(format!("{name}: {e}")),
        }
    }
    check(violations.is_empty(), violations.join("; "))?;
    Ok(format!("{} games, 0 violations, min slack {worst_gap:.2e}", games.len()))
}

fn criterion_4() -> Outcome {
    for seed in 0..100u64 {
        let (d, k, n) = (1 + seed as usize % 3, 1 + (seed as usize / 3) % 3, 1 + (seed as usize / 9) % 3);
        let (s, a, b) = random_strategy(d, k, n, 10_000 + seed);
        let p = correlation_from_state(&s, &a, &b).map_err(err)?;
        check(is_nonsignalling(&p, 1e-9), format!("seed {seed} signals"))?;
        let m = npa_membership(&p, 1, 1e-6).map_err(err)?;
        check(m.feasible, format!("seed {seed} (d={d}, k={k}, n={n}) separated: {:?}", m.certificate))?;
    }
    Ok("100 of 100 state-generated correlations feasible and nonsignalling".into())
}

/// Least-squares fit `F(v) ≈ α CHSH(v) + β` over the local vertices and the
/// PR box; returns `(α, max residual)`.
fn chsh_fit(f: &qcorr::games::BellFunctional) -> Result<(f64, f64), String> {
    let g = chsh();
    let mut points: Vec<Correlation> = enumerate_deterministic(2, 2).map_err(err)?.map(|v| v.correlation(2)).collect();
    points.push(Correlation::pr_box());
    let xs: Vec<f64> = points.iter().map(|p| game_value(&g, p)).collect::<Result<_, _>>().map_err(err)?;
    let ys: Vec<f64> = points.iter().map(|p| f.evaluate(p)).collect::<Result<_, _>>().map_err(err)?;
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let alpha = sxy / sxx;
    let beta = my - alpha * mx;
    let resid = xs.iter().zip(&ys).map(|(x, y)| (alpha * x + beta - y).abs()).fold(0.0, f64::max);
    Ok((alpha, resid))
}

fn criterion_5() -> Outcome {
    let pr = Correlation::pr_box();
    let g = chsh();
    let chsh_pr = game_value(&g, &pr).map_err(err)?;
    check((chsh_pr - 1.0).abs() < 1e-12, format!("CHSH(PR) = {chsh_pr}"))?;
    let classical = classical_value(&g).map_err(err)?.value;
    check(classical == 0.75, format!("classical {classical}"))?;

    let local = local_membership(&pr, 1e-6).map_err(err)?;
    check(!local.member, "PR box reported local")?;
    let lc = local.certificate.ok_or("no local certificate")?;
    let value = lc.functional.evaluate(&pr).map_err(err)?;
    let bound = enumerate_deterministic(2, 2)
        .map_err(err)?
        .map(|v| lc.functional.evaluate(&v.correlation(2)).expect("shapes match"))
        .fold(f64::NEG_INFINITY, f64::max);
    check((value - lc.value).abs() < 1e-12 && (bound - lc.bound).abs() < 1e-12, "local certificate does not re-verify")?;
    check(value > bound + 1e-6, format!("local margin {}", value - bound))?;
    let (alpha, resid) = chsh_fit(&lc.functional)?;
    check(alpha > 0.0 && resid <= 1e-4 * alpha.abs().max(1.0), format!("local certificate is not CHSH-type (α {alpha}, residual {resid})"))?;

    let npa = npa_membership(&pr, 1, 1e-6).map_err(err)?;
    check(!npa.feasible, "PR box reported NPA-feasible")?;
    let nc = npa.certificate.ok_or("no NPA certificate")?;
    let nvalue = nc.functional.evaluate(&pr).map_err(err)?;
    let nbound = npa_functional_max(&nc.functional, 1, 1e-6).map_err(err)?;
    check((nvalue - nc.value).abs() < 1e-12 && (nbound - nc.bound).abs() < 1e-9, "NPA certificate does not re-verify")?;
    check(nvalue > nbound + 1e-6, format!("NPA margin {}", nvalue - nbound))?;
    for seed in 0..20 {
        let (s, a, b) = random_strategy(2, 2, 2, 500 + seed);
        let q = correlation_from_state(&s, &a, &b).map_err(err)?;
        let fq = nc.functional.evaluate(&q).map_err(err)?;
        check(fq <= nbound + 1e-6, format!("quantum sample {seed} exceeds the NPA certificate bound"))?;
    }
    Ok(format!(
        "CHSH(PR) 1 vs classical 3/4; local margin {:.4}; NPA margin {:.4}",
        value - bound,
        nvalue - nbound
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let epsilons = [0.05, 0.1, 0.5];
    let mut worst = 0.0f64;
    for i in 0..200 {
        let d = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=4);
        let eps = epsilons[i % 3];
        let exact = random_povm(d, n, rng.gen());
        let step = eps / (4.0 * n as f64);
        let perturbed: Vec<HermitianMatrix> = exact
            .effects()
            .iter()
            .map(|e| {
                let q = random_hermitian(d, true, &mut rng);
                let q = HermitianMatrix::identity(d).sandwich(&q);
                let q = q.scale(1.0 / operator_norm(&q).max(1e-300));
                e.scale(1.0 + rng.gen_range(-step..step)).add(&q.scale(rng.gen_range(0.0..step)))
            })
            .collect();
        let sum = HermitianMatrix::sum(&perturbed).expect("n >= 1");
        let dev = operator_norm(&sum.sub(&HermitianMatrix::identity(d)));
        check(dev < eps / 2.0, format!("family {i}: generator produced deviation {dev}"))?;
        let b = normalize_to_povm(&perturbed, eps).map_err(|e| format!("family {i}: {e}"))?;
        check(is_povm(b.effects(), 1e-9).map_err(err)?.valid, format!("family {i}: output is not a POVM"))?;
        let dist = perturbed.iter().zip(b.effects()).map(|(a, b)| operator_norm(&a.sub(b))).fold(0.0, f64::max);
        check(dist < eps, format!("family {i}: distance {dist} >= {eps}"))?;
        worst = worst.max(dist / eps);

        let again = normalize_to_povm(exact.effects(), eps).map_err(err)?;
        let drift = exact.effects().iter().zip(again.effects()).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
        check(drift <= 1e-12, format!("family {i}: not idempotent ({drift})"))?;
    }
    Ok(format!("200 families valid, max distance / ε = {worst:.3}"))
}

fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let (d, k, n, extra) = (1 + seed as usize % 3, 1 + (seed as usize / 3) % 3, 1 + (seed as usize / 9) % 3, 1 + (seed as usize / 2) % 3);
        let (s, a, b) = random_strategy(d, k, n, 7_000 + seed);
        let p = correlation_from_state(&s, &a, &b).map_err(err)?;
        let la: Vec<Povm> = a.iter().map(|m| lift_povm_direct_sum(m, extra)).collect::<Result<_, _>>().map_err(err)?;
        let lb: Vec<Povm> = b.iter().map(|m| lift_povm_direct_sum(m, extra)).collect::<Result<_, _>>().map_err(err)?;
        let q = correlation_from_state(&s.zero_pad(extra, extra), &la, &lb).map_err(err)?;
        let diff = p.table().iter().zip(q.table()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        check(diff <= 1e-12, format!("instance {seed}: difference {diff}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("50 instances, max difference {worst:.1e}"))
}

fn criterion_8() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..20u64 {
        let g = random_game(2, 2, 8_000 + seed);
        let l1 = npa_upper_bound(&g, 1, 1e-6).map_err(err)?;
        let l2 = npa_upper_bound(&g, 2, 1e-6).map_err(err)?;
        check(l2 <= l1 + 1e-5, format!("game {seed}: level 2 {l2} > level 1 {l1}"))?;
        worst = worst.max(l2 - l1);
    }
    Ok(format!("20 games, max (level 2 - level 1) = {worst:.2e}"))
}

fn criterion_9() -> Outcome {
    let tol = 1e-6;
    for seed in 0..100 {
        let (p, planted) = planted_feasible(seed);
        let s = solve_sdp(&p, tol, 50_000).map_err(err)?;
        check(s.status == SdpStatus::Optimal, format!("feasible seed {seed}: {:?}", s.status))?;
        check(s.primal_residual <= tol && s.dual_residual <= tol, format!("feasible seed {seed}: residuals"))?;
        check(s.primal_objective <= s.dual_objective + 10.0 * tol, format!("feasible seed {seed}: weak duality"))?;
        check(s.primal_objective >= planted - 10.0 * tol, format!("feasible seed {seed}: below planted point"))?;
    }
    for seed in 0..10 {
        let s = solve_sdp(&planted_infeasible(seed), tol, 50_000).map_err(err)?;
        check(s.status == SdpStatus::Infeasible, format!("infeasible seed {seed}: {:?}", s.status))?;
    }
    Ok("100 planted-feasible solved, 10 planted-infeasible flagged".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("CHSH numbers", criterion_1),
        ("magic square", criterion_2),
        ("inclusion chain", criterion_3),
        ("state correlations NPA-feasible", criterion_4),
        ("PR-box separation", criterion_5),
        ("POVM normalization", criterion_6),
        ("embedding invariance", criterion_7),
        ("NPA monotonicity", criterion_8),
        ("SDP solver", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({why}) [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
