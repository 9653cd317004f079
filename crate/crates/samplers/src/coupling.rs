//! Two-step coupled MH transitions on R^d: a proposal coupling followed by an
//! acceptance coupling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SamplerError};
use crate::proposal::{innovation, log_mh_ratio, log_normal, log_uniform, mh_step, Proposal};
use crate::target::{norm, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalCoupling {
    Independent,
    /// Both chains use the same Gaussian innovation.
    Crn,
    /// Innovation reflected across the hyperplane bisecting the two means.
    Reflection,
    /// Coupled rejection sampler attaining `P(x' = y') = 1 - TV`.
    Maximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceCoupling {
    CommonUniform,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub proposal: ProposalCoupling,
    pub acceptance: AcceptanceCoupling,
    /// Once equal, the chains share every later move.
    pub faithful: bool,
}

impl CouplingSpec {
    pub fn new(proposal: ProposalCoupling, acceptance: AcceptanceCoupling) -> Self {
        CouplingSpec {
            proposal,
            acceptance,
            faithful: true,
        }
    }

    pub fn validate(&self, proposal: &Proposal) -> Result<()> {
        if self.proposal == ProposalCoupling::Reflection && !proposal.is_symmetric() {
            return Err(SamplerError::Config(
                "reflection coupling needs a spherically symmetric proposal; MALA proposals are drifted".into(),
            ));
        }
        Ok(())
    }

    /// Every valid spec for the given proposal kind.
    pub fn all_for(proposal: &Proposal) -> Vec<CouplingSpec> {
        let kinds = [
            ProposalCoupling::Independent,
            ProposalCoupling::Crn,
            ProposalCoupling::Reflection,
            ProposalCoupling::Maximal,
        ];
        let accepts = [AcceptanceCoupling::CommonUniform, AcceptanceCoupling::Independent];
        kinds
            .iter()
            .flat_map(|&k| accepts.iter().map(move |&a| CouplingSpec::new(k, a)))
            .filter(|s| s.validate(proposal).is_ok())
            .collect()
    }
}

impl fmt::Display for CouplingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.proposal {
            ProposalCoupling::Independent => "independent",
            ProposalCoupling::Crn => "crn",
            ProposalCoupling::Reflection => "reflection",
            ProposalCoupling::Maximal => "maximal",
        };
        let a = match self.acceptance {
            AcceptanceCoupling::CommonUniform => "common_uniform",
            AcceptanceCoupling::Independent => "independent",
        };
        write!(f, "{p}:{a}")?;
        if !self.faithful {
            write!(f, ":unfaithful")?;
        }
        Ok(())
    }
}

/// Parses `proposal[:acceptance][:unfaithful]`, for example `maximal` or
/// `crn:independent`. The acceptance coupling defaults to `common_uniform`.
impl FromStr for CouplingSpec {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let proposal = match parts.next().unwrap_or("") {
            "independent" => ProposalCoupling::Independent,
            "crn" => ProposalCoupling::Crn,
            "reflection" => ProposalCoupling::Reflection,
            "maximal" => ProposalCoupling::Maximal,
            other => return Err(SamplerError::Config(format!("unknown proposal coupling '{other}'"))),
        };
        let mut spec = CouplingSpec::new(proposal, AcceptanceCoupling::CommonUniform);
        for part in parts {
            match part {
                "common_uniform" => spec.acceptance = AcceptanceCoupling::CommonUniform,
                "independent" => spec.acceptance = AcceptanceCoupling::Independent,
                "unfaithful" => spec.faithful = false,
                "faithful" => spec.faithful = true,
                other => return Err(SamplerError::Config(format!("unknown coupling option '{other}'"))),
            }
        }
        Ok(spec)
    }
}

/// One coupled transition: current pair, proposals and acceptance bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_prop: Vec<f64>,
    pub y_prop: Vec<f64>,
    pub b_x: bool,
    pub b_y: bool,
}

impl StepRecord {
    pub fn next_x(&self) -> &[f64] {
        if self.b_x {
            &self.x_prop
        } else {
            &self.x
        }
    }

    pub fn next_y(&self) -> &[f64] {
        if self.b_y {
            &self.y_prop
        } else {
            &self.y
        }
    }

    pub fn met(&self) -> bool {
        self.next_x() == self.next_y()
    }
}

/// Draw `(x', y')` from the chosen proposal coupling.
pub fn coupled_proposals<R: Rng + ?Sized>(
    target: &dyn Target,
    proposal: &Proposal,
    kind: ProposalCoupling,
    x: &[f64],
    y: &[f64],
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let d = x.len();
    let mx = proposal.mean(target, x);
    let my = proposal.mean(target, y);
    match kind {
        ProposalCoupling::Independent => {
            let zx = innovation(d, rng);
            let zy = innovation(d, rng);
            (proposal.shift(&mx, &zx), proposal.shift(&my, &zy))
        }
        ProposalCoupling::Crn => {
            let z = innovation(d, rng);
            (proposal.shift(&mx, &z), proposal.shift(&my, &z))
        }
        ProposalCoupling::Reflection => {
            let z = innovation(d, rng);
            let gap: Vec<f64> = mx.iter().zip(&my).map(|(a, b)| a - b).collect();
            let len = norm(&gap);
            let zy = if len == 0.0 {
                z.clone()
            } else {
                let e: Vec<f64> = gap.iter().map(|g| g / len).collect();
                let dot: f64 = e.iter().zip(&z).map(|(a, b)| a * b).sum();
                z.iter().zip(&e).map(|(zi, ei)| zi - 2.0 * dot * ei).collect()
            };
            (proposal.shift(&mx, &z), proposal.shift(&my, &zy))
        }
        ProposalCoupling::Maximal => maximal_gaussian_pair(&mx, &my, proposal.sd(), rng),
    }
}

/// Coupled rejection sampler for `N(mx, s^2 I)` and `N(my, s^2 I)`.
pub fn maximal_gaussian_pair<R: Rng + ?Sized>(
    mx: &[f64],
    my: &[f64],
    s: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let d = mx.len();
    let draw = |m: &[f64], rng: &mut R| -> Vec<f64> {
        let z = innovation(d, rng);
        m.iter().zip(&z).map(|(a, b)| a + s * b).collect()
    };
    let x_prime = draw(mx, rng);
    if log_uniform(rng) + log_normal(&x_prime, mx, s) <= log_normal(&x_prime, my, s) {
        return (x_prime.clone(), x_prime);
    }
    loop {
        let cand = draw(my, rng);
        if log_uniform(rng) + log_normal(&cand, my, s) > log_normal(&cand, mx, s) {
            return (x_prime, cand);
        }
    }
}

pub fn coupled_step<R: Rng + ?Sized>(
    target: &dyn Target,
    proposal: &Proposal,
    spec: &CouplingSpec,
    x: &[f64],
    y: &[f64],
    rng: &mut R,
) -> Result<StepRecord> {
    spec.validate(proposal)?;
    if spec.faithful && x == y {
        let s = mh_step(target, proposal, x, rng);
        return Ok(StepRecord {
            x: x.to_vec(),
            y: y.to_vec(),
            x_prop: s.proposal.clone(),
            y_prop: s.proposal,
            b_x: s.accepted,
            b_y: s.accepted,
        });
    }
    let (x_prop, y_prop) = coupled_proposals(target, proposal, spec.proposal, x, y, rng);
    let rx = log_mh_ratio(target, proposal, x, &x_prop);
    let ry = log_mh_ratio(target, proposal, y, &y_prop);
    let (b_x, b_y) = match spec.acceptance {
        AcceptanceCoupling::CommonUniform => {
            let u = log_uniform(rng);
            (u <= rx, u <= ry)
        }
        AcceptanceCoupling::Independent => (log_uniform(rng) <= rx, log_uniform(rng) <= ry),
    };
    Ok(StepRecord {
        x: x.to_vec(),
        y: y.to_vec(),
        x_prop,
        y_prop,
        b_x,
        b_y,
    })
}
