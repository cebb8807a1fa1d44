//! Microscopic lattice gas on the discrete torus `Z/NZ`.
//!
//! The dynamics superposes symmetric stirring sped up by `N²` (every bond
//! exchanges its two occupation variables at rate `N²/2`) and a spin-flip
//! dynamics in which site `x` flips at rate `c(τ_x η)` for a strictly
//! positive cylinder function `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::{Error, Result};

/// Default number of Fourier modes kept on each side of the metric.
pub const DEFAULT_TRUNCATION: usize = 20;

/// Occupation variables `η(x) ∈ {0, 1}` on the discrete torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeConfig {
    occupancy: Vec<u8>,
}

impl LatticeConfig {
    pub fn new(occupancy: Vec<u8>) -> Result<Self> {
        if occupancy.is_empty() {
            return Err(Error::InvalidArgument("empty lattice".into()));
        }
        if let Some(v) = occupancy.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidArgument(format!("occupation value {v} is not 0 or 1")));
        }
        Ok(Self { occupancy })
    }

    pub fn empty(n: usize) -> Self {
        Self { occupancy: vec![0; n] }
    }

    pub fn full(n: usize) -> Self {
        Self { occupancy: vec![1; n] }
    }

    /// Independent Bernoulli occupations with density `profile(x / N)`.
    pub fn sample_product<R: Rng>(n: usize, profile: impl Fn(f64) -> f64, rng: &mut R) -> Self {
        let occupancy = (0..n).map(|x| u8::from(rng.gen::<f64>() < profile(x as f64 / n as f64))).collect();
        Self { occupancy }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let occupancy = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidArgument(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(occupancy)
    }

    pub fn n_sites(&self) -> usize {
        self.occupancy.len()
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occupancy
    }

    /// `η(x)` with `x` taken modulo `N`.
    pub fn get(&self, x: i64) -> u8 {
        let n = self.occupancy.len() as i64;
        self.occupancy[x.rem_euclid(n) as usize]
    }

    pub fn particles(&self) -> usize {
        self.occupancy.iter().map(|&v| v as usize).sum()
    }

    /// `η^x`: the configuration with site `x` flipped.
    pub fn flipped(&self, x: usize) -> Self {
        let mut c = self.clone();
        c.occupancy[x] ^= 1;
        c
    }

    /// `η^{x,x+1}`: the configuration with the bond `(x, x+1)` exchanged.
    pub fn exchanged(&self, x: usize) -> Self {
        let mut c = self.clone();
        let y = (x + 1) % c.occupancy.len();
        c.occupancy.swap(x, y);
        c
    }

    /// Index in `0..2^N` with site 0 as the most significant bit.
    pub fn to_index(&self) -> usize {
        self.occupancy.iter().fold(0, |acc, &v| (acc << 1) | v as usize)
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let occupancy = (0..n).map(|x| ((index >> (n - 1 - x)) & 1) as u8).collect();
        Self { occupancy }
    }

    pub fn to_bits(&self) -> String {
        self.occupancy.iter().map(|&v| if v == 1 { '1' } else { '0' }).collect()
    }
}

/// A strictly positive cylinder function `c(η)` depending on
/// `η(-r), ..., η(r)`.
///
/// The table is indexed by the local pattern read as a binary number with
/// `η(-r)` as the most significant bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderRate {
    radius: usize,
    table: Vec<f64>,
}

impl CylinderRate {
    pub fn from_table(radius: usize, table: Vec<f64>) -> Result<Self> {
        let expected = 1usize << (2 * radius + 1);
        if table.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "radius {radius} needs a table of {expected} entries, got {}",
                table.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::NonPositiveRate(bad));
        }
        Ok(Self { radius, table })
    }

    /// Nearest-neighbour rates: `a2` if `η(-1) ≠ η(1)`, `a1` if
    /// `η(-1) = η(0) = η(1)` and `a0` if `η(-1) = η(1) ≠ η(0)`.
    pub fn from_triple(a0: f64, a1: f64, a2: f64) -> Result<Self> {
        let table = (0..8)
            .map(|idx| {
                let (l, c, r) = ((idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
                if l != r {
                    a2
                } else if l == c {
                    a1
                } else {
                    a0
                }
            })
            .collect();
        Self::from_table(1, table)
    }

    pub fn constant(radius: usize, value: f64) -> Result<Self> {
        Self::from_table(radius, vec![value; 1 << (2 * radius + 1)])
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn window(&self) -> usize {
        2 * self.radius + 1
    }

    /// Rate for an explicit local pattern `(η(-r), ..., η(r))`.
    pub fn rate_of_pattern(&self, pattern: &[u8]) -> f64 {
        debug_assert_eq!(pattern.len(), self.window());
        let idx = pattern.iter().fold(0usize, |acc, &v| (acc << 1) | v as usize);
        self.table[idx]
    }

    /// `c(τ_x η)`.
    pub fn rate_at(&self, config: &LatticeConfig, x: usize) -> f64 {
        let r = self.radius as i64;
        let idx = (-r..=r).fold(0usize, |acc, dy| (acc << 1) | config.get(x as i64 + dy) as usize);
        self.table[idx]
    }

    pub fn min_rate(&self) -> f64 {
        self.table.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rate(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    /// Whether `c(η) = c(1 - η)`.
    pub fn is_flip_symmetric(&self) -> bool {
        let mask = self.table.len() - 1;
        (0..self.table.len()).all(|i| self.table[i] == self.table[!i & mask])
    }
}

/// Complete binary tree of partial sums over event rates.
///
/// Internal nodes are always recomputed from their two children, so the
/// stored sums are a pure function of the leaves.
#[derive(Debug, Clone, PartialEq)]
struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(n_leaves: usize) -> Self {
        let size = n_leaves.next_power_of_two().max(1);
        Self { size, nodes: vec![0.0; 2 * size] }
    }

    fn from_leaves(leaves: &[f64]) -> Self {
        let mut t = Self::new(leaves.len());
        t.nodes[t.size..t.size + leaves.len()].copy_from_slice(leaves);
        for p in (1..t.size).rev() {
            t.nodes[p] = t.nodes[2 * p] + t.nodes[2 * p + 1];
        }
        t
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut p = self.size + i;
        self.nodes[p] = value;
        while p > 1 {
            p /= 2;
            self.nodes[p] = self.nodes[2 * p] + self.nodes[2 * p + 1];
        }
    }

    fn leaf(&self, i: usize) -> f64 {
        self.nodes[self.size + i]
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf whose cumulative interval contains `u ∈ [0, total)`.
    fn find(&self, mut u: f64) -> usize {
        let mut p = 1;
        while p < self.size {
            let left = self.nodes[2 * p];
            if u < left {
                p *= 2;
            } else {
                u -= left;
                p = 2 * p + 1;
            }
        }
        p - self.size
    }
}

/// Which parts of the generator are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    /// Stirring sped up by `N²` plus spin flips.
    ReactionDiffusion,
    /// Spin flips switched off: symmetric simple exclusion, which conserves
    /// the number of particles.
    ExclusionOnly,
}

/// The kind of the last event performed by [`Simulator::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Flip(usize),
    Exchange(usize),
}

/// Exact event-driven (rejection-free) simulation of the generator
/// `N² L_K + L_G`.
///
/// Only bonds carrying different occupations are scheduled: exchanging equal
/// values is a no-op and does not change the law of the process.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: LatticeConfig,
    rates: CylinderRate,
    dynamics: Dynamics,
    exchange_rate: f64,
    tree: SumTree,
    time: f64,
    rng: ChaCha8Rng,
    events: u64,
}

/// Random stream keyed by `(seed, replica)`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

impl Simulator {
    pub fn new(init: LatticeConfig, rates: &CylinderRate, seed: u64, replica: u64) -> Result<Self> {
        Self::with_dynamics(init, rates, Dynamics::ReactionDiffusion, seed, replica)
    }

    pub fn with_dynamics(
        init: LatticeConfig,
        rates: &CylinderRate,
        dynamics: Dynamics,
        seed: u64,
        replica: u64,
    ) -> Result<Self> {
        let n = init.n_sites();
        if n <= 2 * rates.radius() {
            return Err(Error::InvalidArgument(format!(
                "N = {n} must exceed twice the rate radius {}",
                rates.radius()
            )));
        }
        let exchange_rate = 0.5 * (n * n) as f64;
        let mut sim = Self {
            config: init,
            rates: rates.clone(),
            dynamics,
            exchange_rate,
            tree: SumTree::new(2 * n),
            time: 0.0,
            rng: replica_rng(seed, replica),
            events: 0,
        };
        sim.tree = SumTree::from_leaves(&sim.fresh_leaves());
        Ok(sim)
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    fn n(&self) -> usize {
        self.config.n_sites()
    }

    fn flip_rate(&self, x: usize) -> f64 {
        match self.dynamics {
            Dynamics::ReactionDiffusion => self.rates.rate_at(&self.config, x),
            Dynamics::ExclusionOnly => 0.0,
        }
    }

    fn bond_rate(&self, x: usize) -> f64 {
        let y = (x + 1) % self.n();
        if self.config.occupancy[x] != self.config.occupancy[y] {
            self.exchange_rate
        } else {
            0.0
        }
    }

    fn fresh_leaves(&self) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|x| self.flip_rate(x)).chain((0..n).map(|x| self.bond_rate(x))).collect()
    }

    /// True when the maintained sum tree equals one rebuilt from scratch,
    /// bit for bit.
    pub fn rates_consistent(&self) -> bool {
        SumTree::from_leaves(&self.fresh_leaves()) == self.tree
    }

    fn refresh_sites(&mut self, from: i64, to: i64) {
        let n = self.n() as i64;
        for x in from..=to {
            let x = x.rem_euclid(n) as usize;
            let r = self.flip_rate(x);
            if self.tree.leaf(x) != r {
                self.tree.set(x, r);
            }
        }
    }

    fn refresh_bonds(&mut self, from: i64, to: i64) {
        let n = self.n() as i64;
        for b in from..=to {
            let b = b.rem_euclid(n) as usize;
            let r = self.bond_rate(b);
            if self.tree.leaf(self.n() + b) != r {
                self.tree.set(self.n() + b, r);
            }
        }
    }

    fn apply(&mut self, event: Event) {
        let r = self.rates.radius() as i64;
        match event {
            Event::Flip(x) => {
                self.config.occupancy[x] ^= 1;
                let x = x as i64;
                self.refresh_sites(x - r, x + r);
                self.refresh_bonds(x - 1, x);
            }
            Event::Exchange(b) => {
                let n = self.n();
                self.config.occupancy.swap(b, (b + 1) % n);
                let b = b as i64;
                self.refresh_sites(b - r, b + 1 + r);
                self.refresh_bonds(b - 1, b + 1);
            }
        }
        self.events += 1;
    }

    fn pick_event(&mut self) -> Event {
        let total = self.tree.total();
        loop {
            let u = self.rng.gen::<f64>() * total;
            let leaf = self.tree.find(u);
            // Rounding can land on an empty leaf at the right edge; redraw.
            if leaf < 2 * self.n() && self.tree.leaf(leaf) > 0.0 {
                return if leaf < self.n() { Event::Flip(leaf) } else { Event::Exchange(leaf - self.n()) };
            }
        }
    }

    fn waiting_time(&mut self) -> f64 {
        let total = self.tree.total();
        if total <= 0.0 {
            return f64::INFINITY;
        }
        let u: f64 = self.rng.gen();
        -(1.0 - u).ln() / total
    }

    /// Performs one event and returns it, or `None` when the chain is frozen.
    pub fn step(&mut self) -> Option<Event> {
        let tau = self.waiting_time();
        if !tau.is_finite() {
            self.time = f64::INFINITY;
            return None;
        }
        self.time += tau;
        let e = self.pick_event();
        self.apply(e);
        Some(e)
    }

    /// Runs the chain up to `t_end`, leaving the state as it is at `t_end`.
    ///
    /// By memorylessness the pending waiting time can be discarded at
    /// `t_end`, so consecutive calls sample the process exactly.
    pub fn advance_to(&mut self, t_end: f64) {
        loop {
            let tau = self.waiting_time();
            if self.time + tau > t_end {
                self.time = t_end;
                return;
            }
            self.time += tau;
            let e = self.pick_event();
            self.apply(e);
        }
    }
}

/// A configuration observed at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub config: LatticeConfig,
}

/// Simulates the chain from `init` and records a snapshot at every time in
/// `observe_at`.
pub fn kmc_run(
    init: &LatticeConfig,
    rates: &CylinderRate,
    horizon: f64,
    seed: u64,
    observe_at: &[f64],
) -> Result<Vec<Snapshot>> {
    kmc_run_replica(init, rates, horizon, seed, 0, observe_at)
}

pub fn kmc_run_replica(
    init: &LatticeConfig,
    rates: &CylinderRate,
    horizon: f64,
    seed: u64,
    replica: u64,
    observe_at: &[f64],
) -> Result<Vec<Snapshot>> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be nonnegative")));
    }
    if observe_at.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("observation times must be sorted".into()));
    }
    if observe_at.iter().any(|&t| t < 0.0 || t > horizon) {
        return Err(Error::InvalidArgument("observation times must lie in [0, horizon]".into()));
    }
    let mut sim = Simulator::new(init.clone(), rates, seed, replica)?;
    let mut out = Vec::with_capacity(observe_at.len());
    for &t in observe_at {
        sim.advance_to(t);
        out.push(Snapshot { time: t, config: sim.config().clone() });
    }
    Ok(out)
}

/// Writes snapshots as `t=<time> <bits>` lines.
pub fn write_snapshots<W: Write>(mut w: W, snapshots: &[Snapshot]) -> Result<()> {
    for s in snapshots {
        writeln!(w, "t={} {}", s.time, s.config.to_bits())?;
    }
    Ok(())
}

pub fn read_snapshots<R: BufRead>(r: R) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (t, bits) = line
            .strip_prefix("t=")
            .and_then(|rest| rest.split_once(' '))
            .ok_or_else(|| Error::InvalidArgument(format!("malformed snapshot line {line:?}")))?;
        let time = t.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad time {t:?}: {e}")))?;
        out.push(Snapshot { time, config: LatticeConfig::parse_bits(bits.trim())? });
    }
    Ok(out)
}

/// `e_0 = 1`, `e_k = √2 cos(2πkθ)`, `e_{-k} = √2 sin(2πkθ)`.
pub fn basis_function(k: i64, theta: f64) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 1.0,
        k if k > 0 => SQRT_2 * (2.0 * PI * k as f64 * theta).cos(),
        k => SQRT_2 * (2.0 * PI * (-k) as f64 * theta).sin(),
    }
}

/// Truncated Fourier coordinates `⟨ϱ, e_k⟩`, `|k| ≤ K`, of a measure on the
/// torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureCoords {
    truncation: usize,
    coeffs: Vec<f64>,
}

impl MeasureCoords {
    pub fn from_coeffs(truncation: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != 2 * truncation + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                2 * truncation + 1,
                coeffs.len()
            )));
        }
        Ok(Self { truncation, coeffs })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `⟨ϱ, e_k⟩`.
    pub fn coeff(&self, k: i64) -> f64 {
        self.coeffs[(k + self.truncation as i64) as usize]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Precomputed `e_k(x/N)` table for repeated empirical measures.
#[derive(Debug, Clone)]
pub struct FourierTable {
    n: usize,
    truncation: usize,
    values: Vec<Vec<f64>>,
}

impl FourierTable {
    pub fn new(n: usize, truncation: usize) -> Self {
        let k = truncation as i64;
        let values = (-k..=k).map(|k| (0..n).map(|x| basis_function(k, x as f64 / n as f64)).collect()).collect();
        Self { n, truncation, values }
    }

    /// Coordinates of `(1/N) Σ_x w(x) δ_{x/N}`.
    pub fn project(&self, weights: impl Fn(usize) -> f64) -> MeasureCoords {
        let w: Vec<f64> = (0..self.n).map(weights).collect();
        let coeffs =
            self.values.iter().map(|row| row.iter().zip(&w).map(|(e, w)| e * w).sum::<f64>() / self.n as f64).collect();
        MeasureCoords { truncation: self.truncation, coeffs }
    }

    pub fn empirical(&self, config: &LatticeConfig) -> MeasureCoords {
        assert_eq!(config.n_sites(), self.n);
        self.project(|x| config.occupancy[x] as f64)
    }
}

/// Empirical measure `π^N(η)`: mass `1/N` at each particle position `x/N`.
pub fn empirical_measure(config: &LatticeConfig, truncation: usize) -> MeasureCoords {
    FourierTable::new(config.n_sites(), truncation).empirical(config)
}

/// Coordinates of the absolutely continuous measure `ρ(θ) dθ`, with `ρ`
/// given on the uniform grid `θ_j = j/M` (rectangle rule, exact for
/// trigonometric polynomials of degree below `M`).
pub fn profile_measure(values: &[f64], truncation: usize) -> MeasureCoords {
    FourierTable::new(values.len(), truncation).project(|j| values[j])
}

/// Truncated distance with a rigorous bound on the omitted modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub tail_bound: f64,
}

/// `Σ_{|k|≤K} 2^{-|k|} |⟨ϱ₁, e_k⟩ - ⟨ϱ₂, e_k⟩|`.
///
/// The omitted modes contribute at most `2 · 2√2 · 2^{-K}` since both
/// measures have mass at most one and `|e_k| ≤ √2`.
pub fn measure_distance(a: &MeasureCoords, b: &MeasureCoords) -> Result<Distance> {
    if a.truncation != b.truncation {
        return Err(Error::Mismatch(format!("truncations differ: {} vs {}", a.truncation, b.truncation)));
    }
    let k = a.truncation as i64;
    let value = (-k..=k).map(|k| 0.5_f64.powi(k.abs() as i32) * (a.coeff(k) - b.coeff(k)).abs()).sum();
    Ok(Distance { value, tail_bound: tail_bound(a.truncation) })
}

pub fn tail_bound(truncation: usize) -> f64 {
    2.0 * 2.0 * SQRT_2 * 0.5_f64.powi(truncation as i32)
}

impl std::fmt::Display for LatticeConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::with_capacity(self.n_sites());
        for &v in &self.occupancy {
            let _ = write!(s, "{v}");
        }
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_rates() -> CylinderRate {
        CylinderRate::from_triple(17.0, 1.0, 5.0).unwrap()
    }

    #[test]
    fn triple_rates_by_pattern() {
        let c = paper_rates();
        assert_eq!(c.rate_of_pattern(&[0, 0, 0]), 1.0);
        assert_eq!(c.rate_of_pattern(&[1, 1, 1]), 1.0);
        assert_eq!(c.rate_of_pattern(&[0, 1, 0]), 17.0);
        assert_eq!(c.rate_of_pattern(&[1, 0, 1]), 17.0);
        for mid in 0..2 {
            assert_eq!(c.rate_of_pattern(&[0, mid, 1]), 5.0);
            assert_eq!(c.rate_of_pattern(&[1, mid, 0]), 5.0);
        }
        assert_eq!(c.min_rate(), 1.0);
        assert!(c.is_flip_symmetric());
    }

    #[test]
    fn constant_table() {
        let c = CylinderRate::constant(1, 1.0).unwrap();
        assert!(c.table().iter().all(|&v| v == 1.0));
        assert_eq!(c.table().len(), 8);
    }

    #[test]
    fn nonpositive_rates_are_rejected() {
        assert!(matches!(CylinderRate::from_triple(1.0, 0.0, 1.0), Err(Error::NonPositiveRate(_))));
        assert!(CylinderRate::from_table(1, vec![1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(CylinderRate::from_table(1, vec![1.0; 4]).is_err());
    }

    #[test]
    fn rate_lookup_is_translation_covariant() {
        let c = CylinderRate::from_table(1, (1..=8).map(f64::from).collect()).unwrap();
        let eta = LatticeConfig::parse_bits("0110100").unwrap();
        let n = eta.n_sites();
        for s in 0..n {
            let shifted = LatticeConfig::new((0..n).map(|x| eta.get((x + s) as i64)).collect()).unwrap();
            for x in 0..n {
                assert_eq!(c.rate_at(&shifted, x), c.rate_at(&eta, (x + s) % n));
            }
        }
    }

    #[test]
    fn small_lattice_is_rejected() {
        let c = paper_rates();
        assert!(Simulator::new(LatticeConfig::empty(2), &c, 0, 0).is_err());
        assert!(Simulator::new(LatticeConfig::empty(3), &c, 0, 0).is_ok());
    }

    #[test]
    fn zero_horizon_returns_init() {
        let init = LatticeConfig::parse_bits("1010011").unwrap();
        let snaps = kmc_run(&init, &paper_rates(), 0.0, 9, &[0.0]).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].config, init);
    }

    #[test]
    fn identical_seeds_reproduce_trajectories() {
        let init = LatticeConfig::parse_bits("1010011100").unwrap();
        let times: Vec<f64> = (1..=5).map(|i| 0.05 * i as f64).collect();
        let a = kmc_run(&init, &paper_rates(), 0.25, 42, &times).unwrap();
        let b = kmc_run(&init, &paper_rates(), 0.25, 42, &times).unwrap();
        assert_eq!(a, b);
        let c = kmc_run_replica(&init, &paper_rates(), 0.25, 42, 1, &times).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn incremental_rates_match_rebuild_after_every_event() {
        let rates = CylinderRate::from_table(2, (0..32).map(|i| 0.5 + (i % 7) as f64).collect()).unwrap();
        let init = LatticeConfig::sample_product(23, |_| 0.4, &mut replica_rng(3, 0));
        let mut sim = Simulator::new(init, &rates, 11, 0).unwrap();
        for _ in 0..5000 {
            sim.step();
            assert!(sim.rates_consistent());
        }
    }

    #[test]
    fn exclusion_conserves_particles_and_flips_do_not() {
        let init = LatticeConfig::parse_bits("110010001101").unwrap();
        let mut sim = Simulator::with_dynamics(init.clone(), &paper_rates(), Dynamics::ExclusionOnly, 5, 0).unwrap();
        for _ in 0..2000 {
            sim.step();
            assert_eq!(sim.config().particles(), init.particles());
        }
        let mut sim = Simulator::new(init.clone(), &paper_rates(), 5, 0).unwrap();
        let mut changed = false;
        while !changed {
            if let Some(Event::Flip(_)) = sim.step() {
                changed = true;
            }
        }
        assert_ne!(sim.config().particles(), init.particles());
    }

    #[test]
    fn snapshot_format_round_trips() {
        let snaps = vec![
            Snapshot { time: 0.0, config: LatticeConfig::parse_bits("0101").unwrap() },
            Snapshot { time: 0.125, config: LatticeConfig::parse_bits("1100").unwrap() },
        ];
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &snaps).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "t=0 0101\nt=0.125 1100\n");
        assert_eq!(read_snapshots(buf.as_slice()).unwrap(), snaps);
    }

    #[test]
    fn empirical_measure_examples() {
        let full = empirical_measure(&LatticeConfig::full(16), 5);
        assert!((full.coeff(0) - 1.0).abs() < 1e-15);
        for k in 1..=5 {
            assert!(full.coeff(k).abs() < 1e-14 && full.coeff(-k).abs() < 1e-14);
        }
        let empty = empirical_measure(&LatticeConfig::empty(16), 5);
        assert!(empty.coeffs().iter().all(|&c| c == 0.0));
        let single = empirical_measure(&LatticeConfig::parse_bits("1000").unwrap(), 1);
        assert_eq!(single.coeff(0), 0.25);
        assert!((single.coeff(1) - SQRT_2 / 4.0).abs() < 1e-15);
        assert_eq!(single.coeff(-1), 0.0);
    }

    #[test]
    fn distance_examples() {
        let m = 64;
        let eps = 0.1;
        let one = vec![1.0; m];
        let bumped: Vec<f64> = (0..m).map(|j| 1.0 + eps * basis_function(1, j as f64 / m as f64)).collect();
        let d = measure_distance(&profile_measure(&one, 10), &profile_measure(&bumped, 10)).unwrap();
        assert!((d.value - eps / 2.0).abs() < 1e-13);
        assert!(measure_distance(&profile_measure(&one, 10), &profile_measure(&one, 10)).unwrap().value == 0.0);
        assert!(measure_distance(&profile_measure(&one, 10), &profile_measure(&one, 9)).is_err());
        assert!((d.tail_bound - 4.0 * SQRT_2 / 1024.0).abs() < 1e-15);
    }
}
