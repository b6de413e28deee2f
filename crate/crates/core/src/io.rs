//! JSON formats for games, correlations and POVMs.
//!
//! Floats are rounded to 12 significant digits before serialization so that
//! output is byte-stable across runs. Question probabilities are written as
//! exact `"p/q"` strings; plain numbers are accepted on input.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::Correlation;
use crate::error::{validation, Error, Result};
use crate::games::{rational_from_f64, Game, Rational};
use crate::linalg::{HermitianMatrix, C64};

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub(crate) fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

pub(crate) fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(parse_error)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Probability {
    Number(f64),
    Exact(String),
}

impl Probability {
    fn to_rational(&self) -> Result<Rational> {
        match self {
            Probability::Number(v) => {
                rational_from_f64(*v).ok_or_else(|| validation(format!("pi entry {v} is not a rational with denominator <= 1e9")))
            }
            Probability::Exact(s) => {
                Rational::from_str(s.trim()).map_err(|_| validation(format!("pi entry {s:?} is not of the form p/q")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    k: usize,
    n: usize,
    pi: Vec<Vec<Probability>>,
    win: Vec<[usize; 4]>,
}

impl From<&Game> for GameFile {
    fn from(g: &Game) -> Self {
        let k = g.k();
        let pi = (0..k).map(|x| (0..k).map(|y| Probability::Exact(g.pi_exact(x, y).to_string())).collect()).collect();
        Self { k, n: g.n(), pi, win: g.accepting_tuples() }
    }
}

impl GameFile {
    pub fn into_game(self) -> Result<Game> {
        let (k, n) = (self.k, self.n);
        if self.pi.len() != k || self.pi.iter().any(|row| row.len() != k) {
            return Err(validation(format!("pi must be a {k} x {k} table")));
        }
        let pi = self.pi.iter().flatten().map(Probability::to_rational).collect::<Result<Vec<_>>>()?;
        let mut win = vec![false; k * k * n * n];
        for t in &self.win {
            let [x, y, a, b] = *t;
            if x >= k || y >= k || a >= n || b >= n {
                return Err(validation(format!("winning tuple {t:?} out of range for k = {k}, n = {n}")));
            }
            win[((x * k + y) * n + a) * n + b] = true;
        }
        Game::new(k, n, pi, win)
    }
}

pub fn game_to_json(g: &Game) -> String {
    to_json(&GameFile::from(g))
}

pub fn game_from_json(text: &str) -> Result<Game> {
    from_json::<GameFile>(text)?.into_game()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationFile {
    k: usize,
    n: usize,
    p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl From<&Correlation> for CorrelationFile {
    fn from(c: &Correlation) -> Self {
        let (k, n) = (c.k(), c.n());
        let p = (0..k)
            .map(|x| (0..k).map(|y| (0..n).map(|a| (0..n).map(|b| round_sig(c.get(x, y, a, b))).collect()).collect()).collect())
            .collect();
        Self { k, n, p }
    }
}

impl CorrelationFile {
    pub fn into_correlation(self) -> Result<Correlation> {
        let (k, n) = (self.k, self.n);
        let shaped = self.p.len() == k
            && self.p.iter().all(|px| {
                px.len() == k && px.iter().all(|pxy| pxy.len() == n && pxy.iter().all(|pa| pa.len() == n))
            });
        if !shaped {
            return Err(validation(format!("p must have shape [{k}][{k}][{n}][{n}]")));
        }
        let table = self.p.into_iter().flatten().flatten().flatten().collect();
        Correlation::new(k, n, table)
    }
}

pub fn correlation_to_json(c: &Correlation) -> String {
    to_json(&CorrelationFile::from(c))
}

pub fn correlation_from_json(text: &str) -> Result<Correlation> {
    from_json::<CorrelationFile>(text)?.into_correlation()
}

/// A family of Hermitian effects; not required to form a POVM.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectsFile {
    dim: usize,
    effects: Vec<Vec<Vec<[f64; 2]>>>,
}

impl EffectsFile {
    pub fn new(effects: &[HermitianMatrix]) -> Self {
        let dim = effects.first().map_or(0, HermitianMatrix::dim);
        let effects = effects
            .iter()
            .map(|e| {
                (0..dim)
                    .map(|i| (0..dim).map(|j| [round_sig(e.get(i, j).re), round_sig(e.get(i, j).im)]).collect())
                    .collect()
            })
            .collect();
        Self { dim, effects }
    }

    pub fn into_effects(self) -> Result<Vec<HermitianMatrix>> {
        let d = self.dim;
        self.effects
            .into_iter()
            .enumerate()
            .map(|(i, rows)| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(validation(format!("effect {i} is not {d} x {d}")));
                }
                let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
                HermitianMatrix::new(d, data).map_err(|e| validation(format!("effect {i}: {e}")))
            })
            .collect()
    }
}

pub fn effects_to_json(effects: &[HermitianMatrix]) -> String {
    to_json(&EffectsFile::new(effects))
}

pub fn effects_from_json(text: &str) -> Result<Vec<HermitianMatrix>> {
    from_json::<EffectsFile>(text)?.into_effects()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{chsh, magic_square};

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-2.5e-20), -2.5e-20);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn game_round_trip() {
        for g in [chsh(), magic_square()] {
            assert_eq!(game_from_json(&game_to_json(&g)).unwrap(), g);
        }
    }

    #[test]
    fn numeric_pi_accepted() {
        let text = r#"{"k":1,"n":2,"pi":[[1.0]],"win":[[0,0,0,0],[0,0,1,1]]}"#;
        let g = game_from_json(text).unwrap();
        assert!(g.wins(0, 0, 1, 1) && !g.wins(0, 0, 0, 1));
    }

    #[test]
    fn parse_errors_have_positions() {
        match game_from_json("{\n  \"k\": 2,\n  \"n\": x\n}") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(game_from_json(r#"{"k":1,"n":2,"pi":[[1]],"win":[[0,0,5,0]]}"#), Err(Error::Validation(_))));
    }

    #[test]
    fn correlation_round_trip() {
        let c = Correlation::pr_box();
        assert_eq!(correlation_from_json(&correlation_to_json(&c)).unwrap(), c);
    }
}
