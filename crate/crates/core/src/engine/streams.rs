//! Lazily generated thinned Poisson streams.
//!
//! For a dominating triple with sorted rates `b0 <= b1 <= b2`, every site owns
//! three independent sub-streams with intensities `b0`, `b1 - b0` and
//! `b2 - b1`. The superposition of the first `k + 1` sub-streams is a Poisson
//! stream of intensity `b_k`. Only the pending arrival of each sub-stream is
//! kept, in a min-heap, so one event costs `O(log n)`.
//!
//! Each event also carries a mark drawn uniformly from its level's band
//! `[b_{k-1}, b_k)` (with `b_{-1} = 0`). Pooled over levels the mark is
//! uniform on `[0, b2)`, which is what the coupling harness thins against.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::model::RateTriple;
use crate::seed;

/// One arrival of a sub-stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub site: usize,
    /// Which sub-stream fired: 0, 1 or 2.
    pub level: u8,
    /// Uniform mark in `[b_{level-1}, b_level)`, in rate units.
    pub mark: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    site: usize,
    level: u8,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Exact time ties are broken by (site, level).
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.site.cmp(&other.site)).then(self.level.cmp(&other.level))
    }
}

#[derive(Debug, Clone)]
pub struct StreamFamily {
    levels: [f64; 3],
    intensities: [f64; 3],
    rngs: Vec<ChaCha8Rng>,
    queue: BinaryHeap<Reverse<Pending>>,
}

impl StreamFamily {
    pub fn new(dominating: &RateTriple, sites: usize, seed: u64) -> Self {
        let levels = dominating.sorted();
        let intensities = [levels[0], levels[1] - levels[0], levels[2] - levels[1]];
        let mut family = Self {
            levels,
            intensities,
            rngs: Vec::with_capacity(3 * sites),
            queue: BinaryHeap::with_capacity(3 * sites),
        };
        for site in 0..sites {
            for level in 0..3u8 {
                let stream = (3 * site + level as usize) as u64;
                family.rngs.push(seed::stream_rng(seed, stream));
                family.schedule(site, level, 0.0);
            }
        }
        family
    }

    fn schedule(&mut self, site: usize, level: u8, now: f64) {
        let rate = self.intensities[level as usize];
        if rate <= 0.0 {
            return;
        }
        let rng = &mut self.rngs[3 * site + level as usize];
        let gap: f64 = Exp1.sample(rng);
        self.queue.push(Reverse(Pending { time: now + gap / rate, site, level }));
    }

    /// Sorted rates `b0 <= b1 <= b2` of the dominating triple.
    pub fn levels(&self) -> [f64; 3] {
        self.levels
    }

    /// Intensities of the three sub-streams of each site.
    pub fn intensities(&self) -> [f64; 3] {
        self.intensities
    }

    pub fn sites(&self) -> usize {
        self.rngs.len() / 3
    }

    /// Time of the next arrival, if any stream has positive intensity.
    pub fn peek_time(&self) -> Option<f64> {
        self.queue.peek().map(|p| p.0.time)
    }

    /// Pops the earliest arrival and schedules the next one of the same sub-stream.
    pub fn next_event(&mut self) -> Option<Event> {
        let Reverse(p) = self.queue.pop()?;
        let lo = if p.level == 0 { 0.0 } else { self.levels[p.level as usize - 1] };
        let hi = self.levels[p.level as usize];
        let u: f64 = self.rngs[3 * p.site + p.level as usize].random();
        let mark = lo + u * (hi - lo);
        self.schedule(p.site, p.level, p.time);
        Some(Event { time: p.time, site: p.site, level: p.level, mark })
    }
}
