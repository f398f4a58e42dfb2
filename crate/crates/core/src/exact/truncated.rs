//! Taboo-truncated shape chains for two and three sites, and their
//! stationary laws.
//!
//! The shape coordinates are confined to `[-M, M]`; moves that would leave the
//! box are dropped together with their share of the diagonal. The stationary
//! vector is found by a direct banded LU factorisation of the transposed
//! generator with one row pinned, followed by iterative refinement.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Boundary, RateTriple, Shape};

const MAX_REFINEMENTS: usize = 8;

#[derive(Debug, Clone)]
pub struct TruncatedChain {
    n: usize,
    beta: RateTriple,
    radius: i64,
    dims: usize,
    side: usize,
    bandwidth: usize,
    /// CSR layout: moves of state `i` are `moves[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<usize>,
    moves: Vec<(usize, f64)>,
    exit: Vec<f64>,
}

/// Builds the truncated shape chain of `n` sites (zero condition) with radius `m`.
pub fn build_truncated(n: usize, beta: &RateTriple, m: usize) -> Result<TruncatedChain> {
    if !(2..=3).contains(&n) {
        return Err(Error::Precondition(format!(
            "truncated solves are available for n in {{2, 3}}, got n={n}"
        )));
    }
    if m < 2 {
        return Err(Error::Precondition(format!("truncation radius must be >= 2, got {m}")));
    }
    let dims = n - 1;
    let side = 2 * m + 1;
    let count = side.pow(dims as u32);
    let radius = m as i64;
    let mut chain = TruncatedChain {
        n,
        beta: *beta,
        radius,
        dims,
        side,
        bandwidth: 0,
        offsets: Vec::with_capacity(count + 1),
        moves: Vec::with_capacity(count * n),
        exit: Vec::with_capacity(count),
    };
    chain.offsets.push(0);
    for idx in 0..count {
        let shape = Shape::new(chain.state(idx), Boundary::Zero);
        let mut out = 0.0;
        for j in 0..n {
            let rate = beta.rate(shape.neighbor_count(j));
            let mut next = shape.clone();
            next.step_in_place(j);
            if let Some(to) = chain.index_of(next.diffs()) {
                chain.bandwidth = chain.bandwidth.max(to.abs_diff(idx));
                chain.moves.push((to, rate));
                out += rate;
            }
        }
        chain.exit.push(out);
        chain.offsets.push(chain.moves.len());
    }
    Ok(chain)
}

impl TruncatedChain {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> &RateTriple {
        &self.beta
    }

    pub fn radius(&self) -> usize {
        self.radius as usize
    }

    pub fn state_count(&self) -> usize {
        self.side.pow(self.dims as u32)
    }

    /// Largest index distance between two states joined by a move.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Index of shape `h`, or `None` outside the box.
    pub fn index_of(&self, h: &[i64]) -> Option<usize> {
        if h.len() != self.dims {
            return None;
        }
        let mut idx = 0usize;
        for &c in h {
            if c.abs() > self.radius {
                return None;
            }
            idx = idx * self.side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    /// Shape coordinates of state `idx`.
    pub fn state(&self, idx: usize) -> Vec<i64> {
        decode(idx, self.dims, self.side, self.radius)
    }

    /// Kept moves out of `idx` as `(target, rate)`.
    pub fn moves(&self, idx: usize) -> &[(usize, f64)] {
        &self.moves[self.offsets[idx]..self.offsets[idx + 1]]
    }

    /// Total kept rate out of `idx`.
    pub fn exit_rate(&self, idx: usize) -> f64 {
        self.exit[idx]
    }

    /// Rate of the move `from -> to`, 0 if there is none.
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.moves(from).iter().filter(|(t, _)| *t == to).map(|(_, r)| r).sum()
    }

    /// Largest absolute balance defect `|(pi Q)_i|`.
    pub fn balance_residual(&self, pi: &[f64]) -> f64 {
        let mut flow: Vec<f64> = pi.iter().zip(&self.exit).map(|(p, e)| -p * e).collect();
        for (from, &p) in pi.iter().enumerate() {
            for &(to, r) in self.moves(from) {
                flow[to] += p * r;
            }
        }
        flow.iter().fold(0.0, |m, f| m.max(f.abs()))
    }
}

fn decode(mut idx: usize, dims: usize, side: usize, radius: i64) -> Vec<i64> {
    let mut h = vec![0i64; dims];
    for c in h.iter_mut().rev() {
        *c = (idx % side) as i64 - radius;
        idx /= side;
    }
    h
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarySolve {
    pub n: usize,
    pub beta: RateTriple,
    pub radius: usize,
    pub pi: Vec<f64>,
    pub residual: f64,
    /// Mass on states with some `|h_i| >= M - 1`.
    pub boundary_mass: f64,
    /// `sum_h beta[V_j(h)] pi(h)` for every site `j`.
    pub throughput: Vec<f64>,
    pub refinements: usize,
}

impl StationarySolve {
    pub fn state(&self, idx: usize) -> Vec<i64> {
        decode(idx, self.n - 1, 2 * self.radius + 1, self.radius as i64)
    }

    /// `pi` at shape `h`, `None` outside the box.
    pub fn pi_at(&self, h: &[i64]) -> Option<f64> {
        let r = self.radius as i64;
        if h.len() != self.n - 1 || h.iter().any(|c| c.abs() > r) {
            return None;
        }
        let side = 2 * self.radius + 1;
        let idx = h.iter().fold(0usize, |acc, &c| acc * side + (c + r) as usize);
        Some(self.pi[idx])
    }

    /// `(max - min) / mean` of the per-site throughputs.
    pub fn throughput_spread(&self) -> f64 {
        let max = self.throughput.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.throughput.iter().cloned().fold(f64::MAX, f64::min);
        let mean = self.throughput.iter().sum::<f64>() / self.throughput.len() as f64;
        (max - min) / mean
    }

    /// Whether the boundary mass is below `threshold`. A large boundary mass
    /// means the box does not capture the law, typically because the shape is
    /// not ergodic.
    pub fn certified(&self, threshold: f64) -> bool {
        self.boundary_mass < threshold
    }

    /// CSV with header `h_1,...,h_{n-1},pi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..self.n).map(|i| format!("h_{i}")).collect();
        header.push("pi".into());
        w.write_record(&header)?;
        for (idx, p) in self.pi.iter().enumerate() {
            let mut row: Vec<String> = self.state(idx).iter().map(|c| c.to_string()).collect();
            row.push(format!("{p:e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stationary law of `chain` with balance residual at most `tol`.
pub fn solve_stationary(chain: &TruncatedChain, tol: f64) -> Result<StationarySolve> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let count = chain.state_count();
    let pin = chain.index_of(&vec![0; chain.dims]).expect("the zero shape is always inside the box");

    // Transposed generator, with the balance row of `pin` replaced by `x_pin = 1`
    // (scaled by its exit rate to keep the columns diagonally dominant).
    let mut a = Banded::zeros(count, chain.bandwidth);
    for from in 0..count {
        if from != pin {
            a.set(from, from, -chain.exit[from]);
        }
        for &(to, r) in chain.moves(from) {
            if to != pin {
                *a.at_mut(to, from) += r;
            }
        }
    }
    a.set(pin, pin, chain.exit[pin]);
    let mut rhs = vec![0.0; count];
    rhs[pin] = chain.exit[pin];

    let original = a.clone();
    a.factor()?;
    let mut x = rhs.clone();
    a.solve(&mut x);

    let mut refinements = 0;
    let (mut pi, mut residual) = normalise(chain, &x);
    while residual > tol && refinements < MAX_REFINEMENTS {
        let ax = original.mul(&x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, y)| b - y).collect();
        a.solve(&mut r);
        for (xi, di) in x.iter_mut().zip(&r) {
            *xi += di;
        }
        refinements += 1;
        (pi, residual) = normalise(chain, &x);
    }
    if !(residual <= tol) {
        return Err(Error::NonConvergence { residual, iterations: refinements });
    }

    let edge = chain.radius - 1;
    let mut boundary_mass = 0.0;
    let mut throughput = vec![0.0; chain.n];
    for (idx, &p) in pi.iter().enumerate() {
        let h = chain.state(idx);
        if h.iter().any(|c| c.abs() >= edge) {
            boundary_mass += p;
        }
        let shape = Shape::new(h, Boundary::Zero);
        for (j, v) in throughput.iter_mut().enumerate() {
            *v += chain.beta.rate(shape.neighbor_count(j)) * p;
        }
    }

    Ok(StationarySolve {
        n: chain.n,
        beta: chain.beta,
        radius: chain.radius(),
        pi,
        residual,
        boundary_mass,
        throughput,
        refinements,
    })
}

/// Clips round-off negatives, normalises, and reports the balance residual.
fn normalise(chain: &TruncatedChain, x: &[f64]) -> (Vec<f64>, f64) {
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return (pi, f64::INFINITY);
    }
    for p in &mut pi {
        *p /= total;
    }
    let residual = chain.balance_residual(&pi);
    (pi, residual)
}

/// Square band matrix with equal lower and upper bandwidth, row-major.
#[derive(Debug, Clone)]
struct Banded {
    n: usize,
    bw: usize,
    width: usize,
    data: Vec<f64>,
}

impl Banded {
    fn zeros(n: usize, bw: usize) -> Self {
        let width = 2 * bw + 1;
        Self { n, bw, width, data: vec![0.0; n * width] }
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * self.width + j + self.bw - i
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pos(i, j);
        self.data[p] = v;
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let p = self.pos(i, j);
        &mut self.data[p]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.pos(i, j)]
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU without pivoting. Sound for column diagonally dominant
    /// matrices, whose Schur complements stay dominant.
    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::NonConvergence { residual: f64::INFINITY, iterations: 0 });
            }
            let hi = (k + self.bw).min(n - 1);
            let row_k_start = self.pos(k, k + 1);
            for i in k + 1..=hi {
                let p = self.pos(i, k);
                let l = self.data[p] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[p] = l;
                let len = hi - k;
                let row_i_start = self.pos(i, k + 1);
                let (head, tail) = self.data.split_at_mut(row_i_start);
                let src = &head[row_k_start..row_k_start + len];
                for (d, s) in tail[..len].iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
        Ok(())
    }

    /// Solves with the factors from [`factor`](Self::factor), in place.
    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let lo = i.saturating_sub(self.bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.get(i, k) * b[k];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + self.bw).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=hi {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::closed_form::{mu_n2, v2};

    fn beta(a: f64, b: f64, c: f64) -> RateTriple {
        RateTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn chain_structure() {
        let b = beta(1.0, 2.0, 3.0);
        let c = build_truncated(3, &b, 4).unwrap();
        assert_eq!(c.state_count(), 81);
        assert_eq!(c.bandwidth(), 9);
        for idx in 0..c.state_count() {
            assert_eq!(c.index_of(&c.state(idx)), Some(idx));
            let shape = Shape::new(c.state(idx), Boundary::Zero);
            // Each kept move is some f_j with rate beta[V_j(h)].
            for &(to, r) in c.moves(idx) {
                let ok = (0..3).any(|j| {
                    let next = shape.step(j).unwrap();
                    c.index_of(next.diffs()) == Some(to) && r == b.rate(shape.neighbor_count(j))
                });
                assert!(ok);
            }
        }
        // Corner (4, 4): only f_3 = (0, -1) stays inside.
        let corner = c.index_of(&[4, 4]).unwrap();
        assert_eq!(c.moves(corner).len(), 1);
        assert!(build_truncated(4, &b, 4).is_err());
        assert!(build_truncated(2, &b, 1).is_err());
    }

    #[test]
    fn two_sites_match_geometric_law() {
        let b = beta(1.0, 3.0, 7.0);
        let chain = build_truncated(2, &b, 30).unwrap();
        let sol = solve_stationary(&chain, 1e-12).unwrap();
        assert!(sol.residual <= 1e-12);
        for i in -30..=30 {
            let exact = mu_n2(1.0, 3.0, i).unwrap();
            assert!((sol.pi_at(&[i]).unwrap() - exact).abs() < 1e-8, "i={i}");
        }
        let v = v2(1.0, 3.0).unwrap();
        for t in &sol.throughput {
            assert!((t - v).abs() < 1e-6);
        }
        // Detailed balance across every edge.
        for i in 0..chain.state_count() - 1 {
            let flow = sol.pi[i] * chain.rate(i, i + 1) - sol.pi[i + 1] * chain.rate(i + 1, i);
            assert!(flow.abs() < 1e-12);
        }
    }

    #[test]
    fn three_sites_site_independent() {
        let chain = build_truncated(3, &beta(1.0, 2.0, 3.0), 40).unwrap();
        let sol = solve_stationary(&chain, 1e-10).unwrap();
        assert!(sol.pi.iter().all(|&p| p >= 0.0));
        assert!((sol.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sol.boundary_mass < 1e-8, "boundary mass {}", sol.boundary_mass);
        assert!(sol.throughput_spread() < 1e-6, "{:?}", sol.throughput);
    }

    #[test]
    fn flat_rates_leave_mass_at_the_edge() {
        let b = beta(1.0, 1.0, 1.0);
        let mut last = None;
        for m in [10, 20] {
            let sol = solve_stationary(&build_truncated(3, &b, m).unwrap(), 1e-10).unwrap();
            assert!(!sol.certified(1e-3), "M={m}: {}", sol.boundary_mass);
            last = Some(sol.boundary_mass);
        }
        assert!(last.unwrap() > 1e-2);
    }

    #[test]
    fn csv_layout() {
        let chain = build_truncated(3, &beta(1.0, 2.0, 3.0), 2).unwrap();
        let sol = solve_stationary(&chain, 1e-10).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("h_1,h_2,pi"));
        assert!(lines.next().unwrap().starts_with("-2,-2,"));
        assert_eq!(text.lines().count(), 26);
    }

    #[test]
    fn banded_solve_matches_dense() {
        let mut a = Banded::zeros(5, 1);
        for i in 0..5 {
            a.set(i, i, 4.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
            if i < 4 {
                a.set(i, i + 1, -2.0);
            }
        }
        let x = vec![1.0, -2.0, 3.0, 0.5, 2.0];
        let mut b = a.mul(&x);
        a.factor().unwrap();
        a.solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
