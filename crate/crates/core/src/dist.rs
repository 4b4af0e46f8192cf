//! Finite discrete loss distributions.
//!
//! A [`DiscreteDist`] is a strictly increasing grid of nonnegative loss
//! amounts with a probability mass on each point. Values are immutable once
//! built. Arithmetic never renormalizes: only the parametric constructors
//! rescale their masses, so a leak introduced downstream shows up as an error
//! instead of being papered over.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use statrs::distribution::{Binomial, Discrete, Poisson};

use crate::error::{Error, Result};

/// Support points closer than this (currency units) are the same point.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default cap on the number of support points a convolution may produce.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

/// Smallest accepted cumulative-probability cutoff for truncated families.
pub const MIN_TRUNCATION_QUANTILE: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    support: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteDist {
    /// Builds a distribution from `(loss, probability)` pairs in any order.
    ///
    /// Points within [`MERGE_TOLERANCE`] of each other are merged onto the
    /// smallest of them. The masses must already sum to one within
    /// [`MASS_TOLERANCE`].
    pub fn from_points<I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
        if pts.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        for &(loss, mass) in &pts {
            if !loss.is_finite() || loss < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "loss {loss} must be finite and nonnegative"
                )));
            }
            if !mass.is_finite() || mass < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "probability {mass} at loss {loss} must be finite and nonnegative"
                )));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));

        let (support, masses) = merge_sorted(pts.into_iter());
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { support, masses })
    }

    /// Unit mass at `loss`.
    pub fn point_mass(loss: f64) -> Result<Self> {
        Self::from_points([(loss, 1.0)])
    }

    /// Loss `loss` with probability `q`, nothing otherwise.
    pub fn bernoulli(q: f64, loss: f64) -> Result<Self> {
        check_probability(q)?;
        Self::normalized(vec![(0.0, 1.0 - q), (loss, q)])
    }

    /// Number of events out of `n` independent trials of probability `q`,
    /// each costing `per_event_loss`.
    pub fn binomial(n: u64, q: f64, per_event_loss: f64) -> Result<Self> {
        check_probability(q)?;
        check_loss(per_event_loss)?;
        let law = Binomial::new(q, n).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let pts = (0..=n)
            .map(|k| (k as f64 * per_event_loss, law.pmf(k)))
            .collect();
        Self::normalized(pts)
    }

    /// Poisson event count with mean `lambda`, truncated at the smallest count
    /// whose cumulative probability reaches `cutoff`, then renormalized.
    pub fn truncated_poisson(lambda: f64, per_event_loss: f64, cutoff: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "poisson mean {lambda} must be finite and nonnegative"
            )));
        }
        check_loss(per_event_loss)?;
        if !(MIN_TRUNCATION_QUANTILE..1.0).contains(&cutoff) {
            return Err(Error::InvalidDistribution(format!(
                "truncation quantile {cutoff} must lie in [{MIN_TRUNCATION_QUANTILE}, 1)"
            )));
        }
        if lambda == 0.0 {
            return Self::point_mass(0.0);
        }
        let law = Poisson::new(lambda).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let mut pts = Vec::new();
        let mut cumulative = 0.0;
        for k in 0u64.. {
            let p = law.pmf(k);
            cumulative += p;
            pts.push((k as f64 * per_event_loss, p));
            if cumulative >= cutoff || (p == 0.0 && k as f64 > lambda) {
                break;
            }
            if pts.len() > DEFAULT_SIZE_CAP {
                return Err(Error::SizeLimit {
                    cap: DEFAULT_SIZE_CAP,
                });
            }
        }
        Self::normalized(pts)
    }

    fn normalized(pts: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = pts.iter().map(|p| p.1).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        Self::from_points(pts.into_iter().map(|(x, p)| (x, p / total)))
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support
            .iter()
            .copied()
            .zip(self.masses.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Largest loss carrying strictly positive mass.
    pub fn max_loss(&self) -> f64 {
        self.points()
            .filter(|&(_, p)| p > 0.0)
            .map(|(x, _)| x)
            .last()
            .unwrap_or(self.support[self.support.len() - 1])
    }

    /// True when all positive mass sits on a single support point.
    pub fn is_degenerate(&self) -> bool {
        self.masses.iter().filter(|&&p| p > 0.0).count() <= 1
    }

    pub fn expectation(&self) -> f64 {
        self.points().map(|(x, p)| x * p).sum()
    }

    /// `E[exp(theta * X)]`.
    pub fn exp_moment(&self, theta: f64) -> Result<f64> {
        if !theta.is_finite() || theta <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "exponential moment rate {theta} must be positive"
            )));
        }
        let m: f64 = self.points().map(|(x, p)| p * (theta * x).exp()).sum();
        if !m.is_finite() {
            return Err(Error::Range(format!(
                "exp({theta} * {}) overflows",
                self.max_loss()
            )));
        }
        Ok(m)
    }

    /// Distribution of the sum of independent draws from `self` and `other`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.convolve_capped(other, DEFAULT_SIZE_CAP)
    }

    /// Like [`convolve`](Self::convolve) with an explicit support-size cap.
    ///
    /// Every pair of support points is enumerated. Rows `self[i] + other[..]`
    /// are already sorted, so a k-way merge emits the pairwise sums in order
    /// and collisions are merged on the fly without materializing all pairs.
    pub fn convolve_capped(&self, other: &Self, cap: usize) -> Result<Self> {
        let (a, b) = (self, other);
        let mut heap: BinaryHeap<Reverse<Cursor>> = (0..a.len())
            .map(|i| {
                Reverse(Cursor {
                    sum: a.support[i] + b.support[0],
                    row: i,
                    col: 0,
                })
            })
            .collect();

        let mut support: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        while let Some(Reverse(c)) = heap.pop() {
            let mass = a.masses[c.row] * b.masses[c.col];
            match support.last() {
                Some(&anchor) if c.sum - anchor <= MERGE_TOLERANCE => {
                    *masses.last_mut().unwrap() += mass;
                }
                _ => {
                    if support.len() == cap {
                        return Err(Error::SizeLimit { cap });
                    }
                    support.push(c.sum);
                    masses.push(mass);
                }
            }
            if c.col + 1 < b.len() {
                heap.push(Reverse(Cursor {
                    sum: a.support[c.row] + b.support[c.col + 1],
                    row: c.row,
                    col: c.col + 1,
                }));
            }
        }

        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-11 {
            return Err(Error::InvalidDistribution(format!(
                "convolution leaked mass: total {total}"
            )));
        }
        Ok(Self { support, masses })
    }

    /// Equality up to `tol` per point mass after aligning supports within
    /// [`MERGE_TOLERANCE`]. Unmatched points must carry at most `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let (a, b) = (self, other);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if i < a.len() && j < b.len() {
                let (xa, xb) = (a.support[i], b.support[j]);
                if (xa - xb).abs() <= MERGE_TOLERANCE {
                    if (a.masses[i] - b.masses[j]).abs() > tol {
                        return false;
                    }
                    i += 1;
                    j += 1;
                } else if xa < xb {
                    if a.masses[i] > tol {
                        return false;
                    }
                    i += 1;
                } else {
                    if b.masses[j] > tol {
                        return false;
                    }
                    j += 1;
                }
            } else if i < a.len() {
                if a.masses[i] > tol {
                    return false;
                }
                i += 1;
            } else {
                if b.masses[j] > tol {
                    return false;
                }
                j += 1;
            }
        }
        true
    }
}

pub fn convolve(a: &DiscreteDist, b: &DiscreteDist) -> Result<DiscreteDist> {
    a.convolve(b)
}

pub fn dist_equal(a: &DiscreteDist, b: &DiscreteDist, tol: f64) -> bool {
    a.approx_eq(b, tol)
}

pub fn expectation(d: &DiscreteDist) -> f64 {
    d.expectation()
}

pub fn exp_moment(d: &DiscreteDist, theta: f64) -> Result<f64> {
    d.exp_moment(theta)
}

#[derive(Debug, Clone, Copy)]
struct Cursor {
    sum: f64,
    row: usize,
    col: usize,
}

impl PartialEq for Cursor {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cursor {}

impl PartialOrd for Cursor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cursor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sum
            .total_cmp(&other.sum)
            .then(self.row.cmp(&other.row))
    }
}

// Input must be sorted by loss.
fn merge_sorted(pts: impl Iterator<Item = (f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    let mut support: Vec<f64> = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    for (x, p) in pts {
        match support.last() {
            Some(&anchor) if x - anchor <= MERGE_TOLERANCE => *masses.last_mut().unwrap() += p,
            _ => {
                support.push(x);
                masses.push(p);
            }
        }
    }
    (support, masses)
}

fn check_probability(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidDistribution(format!(
            "probability {q} must lie in [0, 1]"
        )));
    }
    Ok(())
}

fn check_loss(loss: f64) -> Result<()> {
    if !loss.is_finite() || loss < 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "per-event loss {loss} must be finite and nonnegative"
        )));
    }
    Ok(())
}
