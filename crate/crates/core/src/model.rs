//! State algebra of the crystal process.
//!
//! A [`Configuration`] is a row of pile heights together with a
//! [`Boundary`] convention that supplies the virtual heights left of the
//! first site and right of the last one. The only statistic the dynamics
//! depend on is [`Configuration::neighbor_count`]: how many of the two
//! neighbours of a site are strictly higher than it. Sites are indexed from
//! zero throughout the crate; textual and CSV interfaces label them from one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deposition rates `(beta0, beta1, beta2)` indexed by the neighbour count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct RateTriple {
    rates: [f64; 3],
}

impl RateTriple {
    pub fn new(beta0: f64, beta1: f64, beta2: f64) -> Result<Self> {
        for (name, value) in [("beta0", beta0), ("beta1", beta1), ("beta2", beta2)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidRate { name, value });
            }
        }
        Ok(Self { rates: [beta0, beta1, beta2] })
    }

    pub fn beta0(&self) -> f64 {
        self.rates[0]
    }

    pub fn beta1(&self) -> f64 {
        self.rates[1]
    }

    pub fn beta2(&self) -> f64 {
        self.rates[2]
    }

    /// Rate for a site with `count` strictly higher neighbours.
    #[inline]
    pub fn rate(&self, count: u8) -> f64 {
        self.rates[count as usize]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.rates
    }

    /// The three rates in increasing order.
    pub fn sorted(&self) -> [f64; 3] {
        let mut b = self.rates;
        b.sort_by(f64::total_cmp);
        b
    }

    pub fn max(&self) -> f64 {
        self.sorted()[2]
    }

    pub fn min(&self) -> f64 {
        self.sorted()[0]
    }

    /// `beta0 <= beta1 <= beta2`: the attractive regime.
    pub fn is_monotone(&self) -> bool {
        self.rates[0] <= self.rates[1] && self.rates[1] <= self.rates[2]
    }

    /// Membership in the domain `beta0 < beta2 < beta1`.
    pub fn in_domain_d(&self) -> bool {
        self.rates[0] < self.rates[2] && self.rates[2] < self.rates[1]
    }
}

impl TryFrom<[f64; 3]> for RateTriple {
    type Error = Error;

    fn try_from(r: [f64; 3]) -> Result<Self> {
        Self::new(r[0], r[1], r[2])
    }
}

impl From<RateTriple> for [f64; 3] {
    fn from(b: RateTriple) -> Self {
        b.rates
    }
}

impl fmt::Display for RateTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.rates[0], self.rates[1], self.rates[2])
    }
}

impl FromStr for RateTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let raw = parse_triple(s)?;
        Self::try_from(raw)
    }
}

/// Parse `"a,b,c"` into three floats without validating positivity.
pub fn parse_triple(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("expected three comma-separated rates, got '{s}'")));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| Error::Parse(format!("invalid rate '{p}'")))?;
    }
    Ok(out)
}

/// Convention for the virtual sites `0` and `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Virtual heights are `0`: never strictly higher than a real pile.
    #[default]
    Zero,
    /// The row closes on itself.
    Periodic,
    /// Virtual heights are `+inf`: always strictly higher.
    Infinite,
    /// Left virtual height `0`, right virtual height `+inf`.
    ZeroInfinite,
}

impl Boundary {
    pub fn tag(&self) -> &'static str {
        match self {
            Boundary::Zero => "zero",
            Boundary::Periodic => "periodic",
            Boundary::Infinite => "infinite",
            Boundary::ZeroInfinite => "zero-infinite",
        }
    }

    /// Whether reversing the row maps this convention onto itself.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Boundary::ZeroInfinite)
    }

    fn left_always_higher(&self) -> bool {
        matches!(self, Boundary::Infinite)
    }

    fn right_always_higher(&self) -> bool {
        matches!(self, Boundary::Infinite | Boundary::ZeroInfinite)
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero" => Ok(Boundary::Zero),
            "periodic" => Ok(Boundary::Periodic),
            "infinite" => Ok(Boundary::Infinite),
            "zero-infinite" => Ok(Boundary::ZeroInfinite),
            other => Err(Error::Parse(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Pile heights plus the boundary convention.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    heights: Vec<u64>,
    boundary: Boundary,
}

impl Configuration {
    pub fn new(heights: Vec<u64>, boundary: Boundary) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        Ok(Self { heights, boundary })
    }

    /// Flat configuration of `n` empty piles.
    pub fn flat(n: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![0; n], boundary)
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.heights.iter().sum()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site < self.heights.len() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange { site, n: self.heights.len() })
        }
    }

    /// Number of neighbours of `site` strictly higher than it.
    pub fn neighbor_count(&self, site: usize) -> Result<u8> {
        self.check_site(site)?;
        Ok(self.neighbor_count_unchecked(site))
    }

    /// [`neighbor_count`](Self::neighbor_count) without the range check; used on hot paths.
    #[inline]
    pub fn neighbor_count_unchecked(&self, site: usize) -> u8 {
        let x = &self.heights;
        let n = x.len();
        let here = x[site];
        let left = if site > 0 {
            x[site - 1] > here
        } else {
            match self.boundary {
                Boundary::Periodic => x[n - 1] > here,
                b => b.left_always_higher(),
            }
        };
        let right = if site + 1 < n {
            x[site + 1] > here
        } else {
            match self.boundary {
                Boundary::Periodic => x[0] > here,
                b => b.right_always_higher(),
            }
        };
        left as u8 + right as u8
    }

    /// Jump rate of `site` under `beta`.
    pub fn transition_rate(&self, beta: &RateTriple, site: usize) -> Result<f64> {
        Ok(beta.rate(self.neighbor_count(site)?))
    }

    /// Total jump rate summed over all sites.
    pub fn total_rate(&self, beta: &RateTriple) -> f64 {
        (0..self.len()).map(|j| beta.rate(self.neighbor_count_unchecked(j))).sum()
    }

    /// A copy with one block added at `site`.
    pub fn deposit(&self, site: usize) -> Result<Self> {
        self.check_site(site)?;
        let mut next = self.clone();
        next.deposit_in_place(site);
        Ok(next)
    }

    /// Adds one block at `site`. Overflow panics in debug builds.
    #[inline]
    pub fn deposit_in_place(&mut self, site: usize) {
        self.heights[site] += 1;
    }

    pub fn shape(&self) -> Shape {
        let x = &self.heights;
        let n = x.len();
        let diff = |a: u64, b: u64| a as i64 - b as i64;
        let diffs = match self.boundary {
            Boundary::Periodic => (0..n).map(|i| diff(x[i], x[(i + 1) % n])).collect(),
            _ => x.windows(2).map(|w| diff(w[0], w[1])).collect(),
        };
        Shape { diffs, boundary: self.boundary }
    }

    /// The mirrored row. Rejected for [`Boundary::ZeroInfinite`], whose mirror
    /// image is a different convention.
    pub fn reflect(&self) -> Result<Self> {
        if !self.boundary.is_symmetric() {
            return Err(Error::UnsupportedBoundary(self.boundary.tag()));
        }
        let mut heights = self.heights.clone();
        heights.reverse();
        Ok(Self { heights, boundary: self.boundary })
    }

    /// Componentwise `self <= other` on common sites.
    pub fn dominated_by(&self, other: &Configuration) -> bool {
        self.heights.iter().zip(&other.heights).all(|(a, b)| a <= b)
    }
}

/// Canonical text form: `boundary:h1,h2,...`, e.g. `zero:2,5,3`.
impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.boundary)?;
        for (i, h) in self.heights.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected 'boundary:h1,h2,...', got '{s}'")))?;
        let boundary = tag.parse()?;
        let heights = rest
            .split(',')
            .map(|h| h.trim().parse::<u64>().map_err(|_| Error::Parse(format!("invalid height '{h}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(heights, boundary)
    }
}

/// Consecutive height differences `x(i) - x(i+1)`.
///
/// Non-periodic shapes have `n - 1` entries. Periodic shapes carry the
/// wrap-around difference `x(n) - x(1)` as an `n`-th entry, so their entries
/// always sum to zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Shape {
    diffs: Vec<i64>,
    boundary: Boundary,
}

impl Shape {
    pub fn new(diffs: Vec<i64>, boundary: Boundary) -> Self {
        Self { diffs, boundary }
    }

    pub fn diffs(&self) -> &[i64] {
        &self.diffs
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of sites described by this shape.
    pub fn sites(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.diffs.len().max(1),
            _ => self.diffs.len() + 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.diffs.iter().all(|&d| d == 0)
    }

    /// Largest absolute coordinate (0 for an empty shape).
    pub fn max_abs(&self) -> i64 {
        self.diffs.iter().map(|d| d.abs()).max().unwrap_or(0)
    }

    /// Adds the move vector `f_site`: the shape change caused by a deposit at `site`.
    pub fn step(&self, site: usize) -> Result<Self> {
        let n = self.sites();
        if site >= n {
            return Err(Error::SiteOutOfRange { site, n });
        }
        let mut next = self.clone();
        next.step_in_place(site);
        Ok(next)
    }

    #[inline]
    pub fn step_in_place(&mut self, site: usize) {
        let m = self.diffs.len();
        match self.boundary {
            Boundary::Periodic => {
                if m > 0 {
                    self.diffs[site] += 1;
                    self.diffs[(site + m - 1) % m] -= 1;
                }
            }
            _ => {
                if site < m {
                    self.diffs[site] += 1;
                }
                if site > 0 {
                    self.diffs[site - 1] -= 1;
                }
            }
        }
    }

    /// `V_site` read off the shape alone.
    pub fn neighbor_count(&self, site: usize) -> u8 {
        let m = self.diffs.len();
        let n = self.sites();
        let (left, right) = match self.boundary {
            Boundary::Periodic => {
                if m == 0 {
                    (false, false)
                } else {
                    (self.diffs[(site + m - 1) % m] > 0, self.diffs[site] < 0)
                }
            }
            b => {
                let left = if site > 0 { self.diffs[site - 1] > 0 } else { b.left_always_higher() };
                let right = if site + 1 < n { self.diffs[site] < 0 } else { b.right_always_higher() };
                (left, right)
            }
        };
        left as u8 + right as u8
    }
}
