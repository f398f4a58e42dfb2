use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::closed_form::harmonic_speed;
use crate::error::{Error, Result};
use crate::model::RateTriple;

/// The three orderings with `beta2 < beta0` and their limiting comb sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombCase {
    /// `beta2 < beta0 <= beta1`
    E1,
    /// `beta2 < beta1 < beta0`
    E2,
    /// `beta1 <= beta2 < beta0`
    E3,
}

impl CombCase {
    pub const ALL: [CombCase; 3] = [CombCase::E1, CombCase::E2, CombCase::E3];

    /// The case whose ordering `beta` satisfies. `None` iff `beta2 >= beta0`.
    pub fn for_rates(beta: &RateTriple) -> Option<CombCase> {
        let (b0, b1, b2) = (beta.beta0(), beta.beta1(), beta.beta2());
        if b2 >= b0 {
            None
        } else if b0 <= b1 {
            Some(CombCase::E1)
        } else if b2 < b1 {
            Some(CombCase::E2)
        } else {
            Some(CombCase::E3)
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CombCase::E1 => "e1",
            CombCase::E2 => "e2",
            CombCase::E3 => "e3",
        }
    }

    /// Roman numeral used for the ordering in messages and tables.
    pub fn numeral(&self) -> &'static str {
        match self {
            CombCase::E1 => "i",
            CombCase::E2 => "ii",
            CombCase::E3 => "iii",
        }
    }

    pub fn ordering(&self) -> &'static str {
        match self {
            CombCase::E1 => "beta2 < beta0 <= beta1",
            CombCase::E2 => "beta2 < beta1 < beta0",
            CombCase::E3 => "beta1 <= beta2 < beta0",
        }
    }

    /// Errors unless `beta` satisfies this case's ordering.
    pub fn check(&self, beta: &RateTriple) -> Result<()> {
        if CombCase::for_rates(beta) == Some(*self) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "case {} requires {}, got beta = ({beta})",
                self.tag(),
                self.ordering()
            )))
        }
    }
}

impl fmt::Display for CombCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CombCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "e1" | "i" | "1" => Ok(CombCase::E1),
            "e2" | "ii" | "2" => Ok(CombCase::E2),
            "e3" | "iii" | "3" => Ok(CombCase::E3),
            other => Err(Error::Parse(format!("unknown comb case '{other}' (expected e1, e2 or e3)"))),
        }
    }
}

/// All speed vectors of length `n` in the comb set of `case`, without
/// duplicates, in a fixed enumeration order.
///
/// * `E1`: `(a1, b2, a2, ..., b2, ak)`, `k >= 1`, blocks `(b0)` or `(v, v)` with
///   `v = 2 b0 b1 / (b0 + b1)`.
/// * `E2`: `(b_{i1}, ..., b_{in})` with `i_j != i_{j+1}` and `i_1, i_n != 2`.
/// * `E3`: `(eL, b0, a1, b0, ..., ak, b0, eR)`, `k >= 0`, blocks `(b2)` or
///   `(w, w)` with `w = 2 b1 b2 / (b1 + b2)`, ends `(b1)` or empty.
pub fn enumerate_comb_set(n: usize, beta: &RateTriple, case: CombCase) -> Result<Vec<Vec<f64>>> {
    case.check(beta)?;
    let (b0, b1, b2) = (beta.beta0(), beta.beta1(), beta.beta2());
    let mut out = Vec::new();
    match case {
        CombCase::E1 => {
            let v = harmonic_speed(b0, b1);
            let mut buf = Vec::with_capacity(n);
            alternating(n, &[b0], &[v, v], b2, &mut buf, &mut out);
        }
        CombCase::E2 => {
            let rates = [b0, b1, b2];
            for idx in index_sequences(n) {
                out.push(idx.iter().map(|&i| rates[i]).collect());
            }
        }
        CombCase::E3 => {
            let w = harmonic_speed(b1, b2);
            for left in [false, true] {
                for right in [false, true] {
                    let ends = left as usize + right as usize;
                    if n < ends + 1 {
                        continue;
                    }
                    let mut cores = Vec::new();
                    // Core is b0 (a b0)^k: one leading b0, then blocks each followed by b0.
                    let mut buf = vec![b0];
                    separated_tail(n - ends - 1, &[b2], &[w, w], b0, &mut buf, &mut cores);
                    for core in cores {
                        let mut v = Vec::with_capacity(n);
                        if left {
                            v.push(b1);
                        }
                        v.extend(core);
                        if right {
                            v.push(b1);
                        }
                        out.push(v);
                    }
                }
            }
        }
    }
    dedup_keep_first(&mut out);
    Ok(out)
}

/// Sequences `block (sep block)*` of exact length `remaining`, appended to `buf`.
fn alternating(
    remaining: usize,
    short: &[f64],
    long: &[f64],
    sep: f64,
    buf: &mut Vec<f64>,
    out: &mut Vec<Vec<f64>>,
) {
    for block in [short, long] {
        if block.len() > remaining {
            continue;
        }
        let mark = buf.len();
        buf.extend_from_slice(block);
        let rest = remaining - block.len();
        if rest == 0 {
            out.push(buf.clone());
        } else if rest >= 2 {
            buf.push(sep);
            alternating(rest - 1, short, long, sep, buf, out);
        }
        buf.truncate(mark);
    }
}

/// Sequences `(block sep)*` of exact length `remaining`, appended to `buf`.
fn separated_tail(
    remaining: usize,
    short: &[f64],
    long: &[f64],
    sep: f64,
    buf: &mut Vec<f64>,
    out: &mut Vec<Vec<f64>>,
) {
    if remaining == 0 {
        out.push(buf.clone());
        return;
    }
    for block in [short, long] {
        if block.len() + 1 > remaining {
            continue;
        }
        let mark = buf.len();
        buf.extend_from_slice(block);
        buf.push(sep);
        separated_tail(remaining - block.len() - 1, short, long, sep, buf, out);
        buf.truncate(mark);
    }
}

/// Index sequences over `{0,1,2}` of length `n`, no two neighbours equal, ends
/// not 2, in lexicographic order.
fn index_sequences(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, buf: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if buf.len() == n {
            if buf.last() != Some(&2) {
                out.push(buf.clone());
            }
            return;
        }
        for i in 0..3 {
            if buf.is_empty() && i == 2 {
                continue;
            }
            if buf.last() == Some(&i) {
                continue;
            }
            buf.push(i);
            go(n, buf, out);
            buf.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        go(n, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

fn dedup_keep_first(v: &mut Vec<Vec<f64>>) {
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(v.len());
    for x in v.drain(..) {
        if !kept.contains(&x) {
            kept.push(x);
        }
    }
    *v = kept;
}
