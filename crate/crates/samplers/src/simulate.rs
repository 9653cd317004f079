//! Meeting-time simulation over many independent replicates.

use std::collections::BTreeMap;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{coupled_step, CouplingSpec, StepRecord};
use crate::error::Result;
use crate::proposal::Proposal;
use crate::rng::{stream, Role};
use crate::stats::Frequency;
use crate::target::Target;

/// A coupled transition kernel that can be iterated.
pub trait CoupledChain: Sync {
    type State: Clone + PartialEq + Send + Sync;

    fn step(&self, x: &Self::State, y: &Self::State, rng: &mut ChaCha8Rng) -> Result<(Self::State, Self::State)>;

    /// Finite chains report the pair index so meeting frequencies can be
    /// compared with the exact bound at each pair.
    fn pair_key(&self, _x: &Self::State, _y: &Self::State) -> Option<(usize, usize)> {
        None
    }
}

/// Continuous two-step coupling.
pub struct ContinuousCoupling<'a> {
    pub target: &'a dyn Target,
    pub proposal: Proposal,
    pub spec: CouplingSpec,
}

impl<'a> ContinuousCoupling<'a> {
    pub fn new(target: &'a dyn Target, proposal: Proposal, spec: CouplingSpec) -> Result<Self> {
        proposal.validate(target)?;
        spec.validate(&proposal)?;
        Ok(ContinuousCoupling { target, proposal, spec })
    }

    pub fn record(&self, x: &[f64], y: &[f64], rng: &mut ChaCha8Rng) -> Result<StepRecord> {
        coupled_step(self.target, &self.proposal, &self.spec, x, y, rng)
    }
}

impl CoupledChain for ContinuousCoupling<'_> {
    type State = Vec<f64>;

    fn step(&self, x: &Vec<f64>, y: &Vec<f64>, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<f64>)> {
        let r = self.record(x, y, rng)?;
        Ok((r.next_x().to_vec(), r.next_y().to_vec()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeetingRecord {
    pub replicate: u64,
    /// First `t` with `X_t = Y_t`; `None` if the horizon was reached first.
    pub meeting_time: Option<usize>,
    pub met: u8,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeetingSummary {
    pub records: Vec<MeetingRecord>,
    /// `survival[t]` is the fraction of replicates not met by time `t`.
    pub survival: Vec<f64>,
    /// At step `t` (1-based, index `t-1`): among replicates apart before the
    /// step, how many met during it.
    pub step_meetings: Vec<Frequency>,
    /// Per-pair one-step meeting counts (finite chains only).
    pub pair_meetings: BTreeMap<(usize, usize), Frequency>,
}

impl MeetingSummary {
    pub fn fraction_met(&self) -> f64 {
        self.records.iter().filter(|r| r.met == 1).count() as f64 / self.records.len() as f64
    }

    pub fn mean_meeting_time(&self) -> Option<f64> {
        let times: Vec<f64> = self.records.iter().filter_map(|r| r.meeting_time).map(|t| t as f64).collect();
        (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64)
    }

    pub fn median_meeting_time(&self) -> Option<f64> {
        let mut times: Vec<usize> = self.records.iter().filter_map(|r| r.meeting_time).collect();
        if times.is_empty() {
            return None;
        }
        times.sort_unstable();
        let n = times.len();
        Some(if n % 2 == 1 {
            times[n / 2] as f64
        } else {
            (times[n / 2 - 1] + times[n / 2]) as f64 / 2.0
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Replicate {
    meeting_time: Option<usize>,
    pairs: Vec<((usize, usize), bool)>,
}

fn run_replicate<C: CoupledChain>(
    chain: &C,
    init: &(C::State, C::State),
    horizon: usize,
    seed: u64,
    replicate: u64,
) -> Result<Replicate> {
    let mut rng = stream(seed, replicate, Role::Chain);
    let (mut x, mut y) = init.clone();
    let mut pairs = Vec::new();
    if x == y {
        return Ok(Replicate { meeting_time: Some(0), pairs });
    }
    for t in 1..=horizon {
        let key = chain.pair_key(&x, &y);
        let (nx, ny) = chain.step(&x, &y, &mut rng)?;
        let met = nx == ny;
        if let Some(k) = key {
            pairs.push((k, met));
        }
        if met {
            return Ok(Replicate { meeting_time: Some(t), pairs });
        }
        x = nx;
        y = ny;
    }
    Ok(Replicate { meeting_time: None, pairs })
}

/// Run `replicates` coupled chains from `init` until they meet or reach
/// `horizon`. Replicate `r` draws from its own stream, so results do not
/// depend on thread scheduling.
pub fn simulate_meetings<C: CoupledChain>(
    chain: &C,
    init: (C::State, C::State),
    horizon: usize,
    replicates: u64,
    seed: u64,
) -> Result<MeetingSummary> {
    let runs: Vec<Replicate> = (0..replicates)
        .into_par_iter()
        .map(|r| run_replicate(chain, &init, horizon, seed, r))
        .collect::<Result<_>>()?;
    let records: Vec<MeetingRecord> = runs
        .iter()
        .enumerate()
        .map(|(r, run)| MeetingRecord {
            replicate: r as u64,
            meeting_time: run.meeting_time,
            met: run.meeting_time.is_some() as u8,
            horizon,
        })
        .collect();
    let n = replicates as f64;
    let survival = (0..=horizon)
        .map(|t| runs.iter().filter(|r| r.meeting_time.is_none_or(|m| m > t)).count() as f64 / n)
        .collect();
    let step_meetings = (1..=horizon)
        .map(|t| {
            let at_risk = runs.iter().filter(|r| r.meeting_time.is_none_or(|m| m >= t) && r.meeting_time != Some(0));
            let (mut hits, mut trials) = (0, 0);
            for r in at_risk {
                trials += 1;
                hits += (r.meeting_time == Some(t)) as u64;
            }
            Frequency { hits, trials }
        })
        .collect();
    let mut pair_meetings: BTreeMap<(usize, usize), Frequency> = BTreeMap::new();
    for (k, met) in runs.iter().flat_map(|r| r.pairs.iter()) {
        let f = pair_meetings.entry(*k).or_insert(Frequency { hits: 0, trials: 0 });
        f.trials += 1;
        f.hits += *met as u64;
    }
    Ok(MeetingSummary {
        records,
        survival,
        step_meetings,
        pair_meetings,
    })
}

/// Run a continuous coupled chain for a fixed number of steps, keeping every
/// step record.
pub fn run_trajectory(
    coupling: &ContinuousCoupling<'_>,
    init: (Vec<f64>, Vec<f64>),
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<StepRecord>> {
    let (mut x, mut y) = init;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let r = coupling.record(&x, &y, rng)?;
        x = r.next_x().to_vec();
        y = r.next_y().to_vec();
        out.push(r);
    }
    Ok(out)
}

/// First step index (1-based) after which the chains are equal.
pub fn meeting_time(records: &[StepRecord]) -> Option<usize> {
    records.iter().position(StepRecord::met).map(|i| i + 1)
}

/// One JSON object per line.
pub fn write_trajectory_jsonl<W: Write>(mut out: W, records: &[StepRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{AcceptanceCoupling, ProposalCoupling};
    use crate::target::StandardGaussian;
    use rand::SeedableRng;

    fn maximal() -> CouplingSpec {
        CouplingSpec::new(ProposalCoupling::Maximal, AcceptanceCoupling::CommonUniform)
    }

    #[test]
    fn faithful_chains_stay_together() {
        let t = StandardGaussian { d: 1 };
        let c = ContinuousCoupling::new(&t, Proposal::Rwm { sigma: 1.0 }, maximal()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let recs = run_trajectory(&c, (vec![-1.0], vec![1.0]), 500, &mut rng).unwrap();
        let tau = meeting_time(&recs).expect("maximal RWM meets quickly");
        for r in &recs[tau..] {
            assert_eq!(r.x, r.y);
            assert_eq!(r.next_x(), r.next_y());
        }
    }

    #[test]
    fn crn_never_meets_exactly() {
        let t = StandardGaussian { d: 1 };
        let spec = CouplingSpec::new(ProposalCoupling::Crn, AcceptanceCoupling::CommonUniform);
        let c = ContinuousCoupling::new(&t, Proposal::Rwm { sigma: 1.0 }, spec).unwrap();
        let s = simulate_meetings(&c, (vec![-1.0], vec![1.0]), 50, 20, 3).unwrap();
        assert!(s.records.iter().all(|r| r.met == 0));
        assert_eq!(s.fraction_met(), 0.0);
    }

    #[test]
    fn simulation_is_deterministic_and_writes_csv() {
        let t = StandardGaussian { d: 1 };
        let c = ContinuousCoupling::new(&t, Proposal::Rwm { sigma: 1.0 }, maximal()).unwrap();
        let run = || {
            let s = simulate_meetings(&c, (vec![-2.0], vec![2.0]), 200, 16, 7).unwrap();
            let mut buf = Vec::new();
            s.write_csv(&mut buf).unwrap();
            buf
        };
        let a = run();
        assert_eq!(a, run());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("replicate,meeting_time,met,horizon\n"));
    }

    #[test]
    fn survival_is_monotone() {
        let t = StandardGaussian { d: 1 };
        let c = ContinuousCoupling::new(&t, Proposal::Rwm { sigma: 1.0 }, maximal()).unwrap();
        let s = simulate_meetings(&c, (vec![-2.0], vec![2.0]), 100, 64, 8).unwrap();
        assert_eq!(s.survival[0], 1.0);
        assert!(s.survival.windows(2).all(|w| w[1] <= w[0]));
        assert!(s.mean_meeting_time().is_some() && s.median_meeting_time().is_some());
    }

    #[test]
    fn jsonl_has_one_line_per_step() {
        let t = StandardGaussian { d: 1 };
        let c = ContinuousCoupling::new(&t, Proposal::Rwm { sigma: 1.0 }, maximal()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let recs = run_trajectory(&c, (vec![0.0], vec![1.0]), 5, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_trajectory_jsonl(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().next().unwrap().contains("\"b_x\""));
    }
}
