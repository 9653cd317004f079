//! Stochastic resampling of rejected proposals, used to cross-check the
//! closed form in `mhcoupling::decomposition::algorithm1_resampled_qbar`.
//!
//! Draw a proposal pair and acceptance bits. Each chain that rejects replaces
//! its proposal by the matching coordinate of a fresh pair whose bits equal
//! the original bits, found by its own rejection loop.

use rand::Rng;

use mhcoupling::decomposition::{AcceptanceCoupling, Outcome};
use mhcoupling::rational::to_f64;
use mhcoupling::JointDist;

use crate::error::{Result, SamplerError};
use crate::finite::JointSampler;

/// Floating-point copy of an acceptance coupling for sampling.
#[derive(Debug, Clone)]
pub struct AcceptanceSampler {
    n: usize,
    cumulative: Vec<[f64; 4]>,
}

impl AcceptanceSampler {
    pub fn new(b: &AcceptanceCoupling) -> Self {
        let n = b.n();
        let mut cumulative = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                let mut row = [0.0; 4];
                for (k, v) in b.probs(i, j).iter().enumerate() {
                    acc += to_f64(v);
                    row[k] = acc;
                }
                row[3] = f64::INFINITY;
                cumulative.push(row);
            }
        }
        AcceptanceSampler { n, cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> Outcome {
        let u: f64 = rng.random();
        let row = &self.cumulative[i * self.n + j];
        let k = row.iter().position(|&c| u < c).unwrap_or(3);
        Outcome::ALL[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Algorithm1Draw {
    pub x_prime: usize,
    pub y_prime: usize,
    pub outcome: Outcome,
}

pub struct Algorithm1 {
    qm: JointSampler,
    bm: AcceptanceSampler,
    pub max_loop: usize,
}

impl Algorithm1 {
    pub fn new(qm: &JointDist, bm: &AcceptanceCoupling) -> Self {
        Algorithm1 {
            qm: JointSampler::new(qm),
            bm: AcceptanceSampler::new(bm),
            max_loop: 1_000_000,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ((usize, usize), Outcome) {
        let cell = self.qm.sample(rng);
        (cell, self.bm.sample(cell.0, cell.1, rng))
    }

    fn redraw<R: Rng + ?Sized>(&self, want: Outcome, rng: &mut R) -> Result<(usize, usize)> {
        for _ in 0..self.max_loop {
            let (cell, b) = self.draw(rng);
            if b == want {
                return Ok(cell);
            }
        }
        Err(SamplerError::LoopLimit {
            max_loop: self.max_loop,
            detail: format!("outcome {} has near-zero probability", want.code()),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Algorithm1Draw> {
        let ((xm, ym), outcome) = self.draw(rng);
        let (b_x, b_y) = outcome.bits();
        let x_prime = if b_x { xm } else { self.redraw(outcome, rng)?.0 };
        let y_prime = if b_y { ym } else { self.redraw(outcome, rng)?.1 };
        Ok(Algorithm1Draw {
            x_prime,
            y_prime,
            outcome,
        })
    }
}

/// Empirical law of `(x', y')` and of `(x', y', outcome)` over `draws` runs.
#[derive(Debug, Clone)]
pub struct Algorithm1Counts {
    pub n: usize,
    pub draws: u64,
    pub cells: Vec<u64>,
    pub cells_by_outcome: Vec<[u64; 4]>,
}

impl Algorithm1Counts {
    pub fn cell(&self, i: usize, j: usize) -> u64 {
        self.cells[i * self.n + j]
    }

    pub fn cell_outcome(&self, i: usize, j: usize, o: Outcome) -> u64 {
        self.cells_by_outcome[i * self.n + j][o.index()]
    }
}

pub fn algorithm1_empirical<R: Rng + ?Sized>(
    qm: &JointDist,
    bm: &AcceptanceCoupling,
    draws: u64,
    rng: &mut R,
) -> Result<Algorithm1Counts> {
    let alg = Algorithm1::new(qm, bm);
    let n = qm.n();
    let mut counts = Algorithm1Counts {
        n,
        draws,
        cells: vec![0; n * n],
        cells_by_outcome: vec![[0; 4]; n * n],
    };
    for _ in 0..draws {
        let d = alg.sample(rng)?;
        let k = d.x_prime * n + d.y_prime;
        counts.cells[k] += 1;
        counts.cells_by_outcome[k][d.outcome.index()] += 1;
    }
    Ok(counts)
}
