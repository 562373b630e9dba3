//! Two-step self-organised resource allocation: every cell picks a band
//! portion with a UCB bandit, then schedules its users inside that portion.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::geometry::{
    Access, Antenna, CellSite, Mobility, Position, Rect, ScenarioLayout, Tier, UserTerminal, Wrap,
};
use crate::green::{pf_schedule, pf_update};
use crate::link::LinkAbstraction;
use crate::rng;
use crate::scenario::Realization;

/// `k` contiguous portions; the first `total % k` get one extra RB.
pub fn partition_band(total_rbs: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k == 0 || k > total_rbs {
        return Err(Error::invalid(format!(
            "cannot split {total_rbs} RBs into {k} portions"
        )));
    }
    let (base, extra) = (total_rbs / k, total_rbs % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BanditState {
    pub pulls: Vec<u64>,
    pub mean_reward: Vec<f64>,
    pub t: u64,
    /// Rewards that had to be clamped into [0, 1].
    pub clamped: u64,
}

impl BanditState {
    pub fn new(arms: usize) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("a bandit needs at least one arm"));
        }
        Ok(BanditState {
            pulls: vec![0; arms],
            mean_reward: vec![0.0; arms],
            t: 0,
            clamped: 0,
        })
    }

    pub fn arm_count(&self) -> usize {
        self.pulls.len()
    }
}

/// UCB1: the first unpulled arm, else argmax of `mean + c sqrt(2 ln t / n)`.
pub fn ucb_select(state: &BanditState, exploration_c: f64) -> usize {
    if let Some(a) = state.pulls.iter().position(|&n| n == 0) {
        return a;
    }
    let ln_t = (state.t.max(1) as f64).ln();
    let mut best = (0, f64::NEG_INFINITY);
    for (a, (&n, &m)) in state.pulls.iter().zip(&state.mean_reward).enumerate() {
        let score = m + exploration_c * (2.0 * ln_t / n as f64).sqrt();
        if score > best.1 {
            best = (a, score);
        }
    }
    best.0
}

/// Incremental mean update. Out-of-range or NaN rewards are clamped and
/// counted.
pub fn reward_update(state: &mut BanditState, arm: usize, observed: f64) -> Result<()> {
    if arm >= state.arm_count() {
        return Err(Error::invalid(format!("arm {arm} out of range")));
    }
    let r = if observed.is_nan() {
        0.0
    } else {
        observed.clamp(0.0, 1.0)
    };
    if r != observed {
        state.clamped += 1;
    }
    state.pulls[arm] += 1;
    state.t += 1;
    let n = state.pulls[arm] as f64;
    state.mean_reward[arm] += (r - state.mean_reward[arm]) / n;
    Ok(())
}

/// Outcome of a stationary Bernoulli bandit run.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliRun {
    pub pulls: Vec<u64>,
    /// Expected regret after each step.
    pub regret: Vec<f64>,
}

pub fn bernoulli_bandit(
    probs: &[f64],
    steps: usize,
    exploration_c: f64,
    seed: u64,
) -> Result<BernoulliRun> {
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("arm probabilities must lie in [0, 1]"));
    }
    let mut state = BanditState::new(probs.len())?;
    let best = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut r = rng::stream(seed, 0, "bandit");
    let mut regret = Vec::with_capacity(steps);
    let mut cum = 0.0;
    for _ in 0..steps {
        let a = ucb_select(&state, exploration_c);
        let x = if r.random_bool(probs[a]) { 1.0 } else { 0.0 };
        reward_update(&mut state, a, x)?;
        cum += best - probs[a];
        regret.push(cum);
    }
    Ok(BernoulliRun {
        pulls: state.pulls,
        regret,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheduler {
    ProportionalFair,
    RoundRobin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnParams {
    pub n_rb: usize,
    pub portions: usize,
    pub epoch_slots: usize,
    pub exploration_c: f64,
    pub rb_bandwidth: f64,
    pub tti_s: f64,
    pub link: LinkAbstraction,
    pub scheduler: Scheduler,
    pub pf_window: f64,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            n_rb: 20,
            portions: 2,
            epoch_slots: 10,
            exploration_c: 1.0,
            rb_bandwidth: 180e3,
            tti_s: 1e-3,
            link: LinkAbstraction::default(),
            scheduler: Scheduler::ProportionalFair,
            pf_window: 100.0,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<()> {
        if self.epoch_slots == 0 {
            return Err(Error::invalid("epoch length must be >= 1 slot"));
        }
        partition_band(self.n_rb, self.portions)?;
        Ok(())
    }
}

/// A realised network with fixed user attachment.
#[derive(Clone, Debug)]
pub struct LearnNetwork {
    pub real: Realization,
    pub ue_cell: Vec<Option<usize>>,
}

/// Cells on a line `spacing` metres apart, each with `ues_per_cell` users
/// uniform in a disc of radius `radius` around it and attached to it.
#[allow(clippy::too_many_arguments)]
pub fn line_fixture(
    n_cells: usize,
    spacing: f64,
    radius: f64,
    ues_per_cell: usize,
    tx_power_w: f64,
    channel: &ChannelParams,
    master: u64,
    drop: u64,
) -> Result<LearnNetwork> {
    if n_cells == 0 || !(radius > 0.0) || !(spacing >= 0.0) {
        return Err(Error::invalid(
            "need >= 1 cell, positive radius and non-negative spacing",
        ));
    }
    let mut r = rng::stream(master, drop, "layout");
    let cells: Vec<CellSite> = (0..n_cells)
        .map(|id| CellSite {
            id,
            site: id,
            tier: Tier::Pico,
            position: Position::new(id as f64 * spacing, 0.0),
            max_tx_power: tx_power_w,
            n_sectors: 1,
            antenna: Antenna::Omni,
            boresight: 0.0,
            access: Access::Open,
        })
        .collect();
    let mut ues = Vec::new();
    let mut ue_cell = Vec::new();
    for c in &cells {
        for _ in 0..ues_per_cell {
            let rho = radius * r.random::<f64>().sqrt();
            let phi = 2.0 * PI * r.random::<f64>();
            ues.push(UserTerminal {
                id: ues.len(),
                position: Position::new(
                    c.position.x + rho * phi.cos(),
                    c.position.y + rho * phi.sin(),
                ),
                mobility: Mobility::StaticHotspot,
                csg_allowed: BTreeSet::new(),
                hotspot: None,
                apartment: None,
            });
            ue_cell.push(Some(c.id));
        }
    }
    let span = (n_cells - 1) as f64 * spacing;
    let bounds = Rect::new(-radius, -radius, span + radius, radius);
    let layout = ScenarioLayout::new(
        cells,
        ues,
        bounds,
        Wrap::None,
        rng::mix(master, drop, "layout"),
        vec![],
    )?;
    let real = Realization::draw(layout, channel, master, drop)?;
    Ok(LearnNetwork { real, ue_cell })
}

/// Bits a cell delivers over one epoch on `portion` given every cell's
/// portion, with the interference-free bound. Updates `avg` as it goes.
fn cell_epoch(
    net: &LearnNetwork,
    p: &LearnParams,
    bands: &[Range<usize>],
    arms: &[usize],
    cell: usize,
    epoch: u64,
    avg: &mut [f64],
) -> (f64, f64) {
    let n_cells = net.real.layout.cells().len();
    let tx: Vec<f64> = net
        .real
        .layout
        .cells()
        .iter()
        .map(|c| c.max_tx_power / p.n_rb as f64)
        .collect();
    let ues: Vec<usize> = (0..net.ue_cell.len())
        .filter(|&u| net.ue_cell[u] == Some(cell))
        .collect();
    let band = bands[arms[cell]].clone();
    // Well past saturation the cap is exact, so the log can be skipped.
    let sat = p.link.saturation_sinr() * (1.0 + 1e-9);
    let capped = p.rb_bandwidth * p.link.se_cap * p.tti_s;
    let bits = |s: f64| {
        if s > sat {
            capped
        } else {
            p.rb_bandwidth * p.link.spectral_efficiency(s) * p.tti_s
        }
    };
    let (mut got, mut bound) = (0.0, 0.0);
    if ues.is_empty() {
        return (0.0, 0.0);
    }
    for s in 0..p.epoch_slots {
        let slot = epoch as usize * p.epoch_slots + s;
        let mut rates = vec![vec![0.0; p.n_rb]; ues.len()];
        let (g, f, noise) = (&net.real.gains, &net.real.fading, net.real.noise_w);
        for rb in band.clone() {
            let mut free_best = 0.0f64;
            for (k, &u) in ues.iter().enumerate() {
                // Same arithmetic as `sinr`, sharing the signal term.
                let signal = tx[cell] * g.get(cell, u) * f.h(cell, u, rb, slot);
                let mut i = 0.0;
                for j in (0..n_cells)
                    .filter(|&j| j != cell && tx[j] > 0.0 && bands[arms[j]].contains(&rb))
                {
                    i += tx[j] * g.get(j, u) * f.h(j, u, rb, slot);
                }
                rates[k][rb] = bits(signal / (i + noise));
                free_best = free_best.max(signal);
            }
            bound += bits(free_best / noise);
        }
        let assign: Vec<Option<usize>> = match p.scheduler {
            Scheduler::ProportionalFair => {
                let local: Vec<f64> = ues.iter().map(|&u| avg[u]).collect();
                let mut backlog = vec![f64::INFINITY; ues.len()];
                pf_schedule(&rates, &local, &mut backlog)
            }
            Scheduler::RoundRobin => (0..p.n_rb)
                .map(|rb| {
                    band.contains(&rb)
                        .then(|| (slot * band.len() + rb - band.start) % ues.len())
                })
                .collect(),
        };
        let mut served = vec![0.0; ues.len()];
        for (rb, k) in assign.into_iter().enumerate() {
            if let Some(k) = k {
                served[k] += rates[k][rb];
            }
        }
        got += served.iter().sum::<f64>();
        let mut local: Vec<f64> = ues.iter().map(|&u| avg[u]).collect();
        pf_update(&mut local, &served, p.pf_window);
        for (k, &u) in ues.iter().enumerate() {
            avg[u] = local[k];
        }
    }
    (got, bound)
}

fn normalised(got: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        got / bound
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochOutcome {
    pub arms: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Bits delivered per cell over the epoch.
    pub delivered_bits: Vec<f64>,
    /// Interference-free bound per cell over the epoch.
    pub bound_bits: Vec<f64>,
    /// Best counterfactual reward minus the obtained one, others held fixed.
    pub regret: Vec<f64>,
}

/// One synchronised epoch: all cells select, then all are evaluated against
/// the joint choice, then all update.
pub fn hierarchical_epoch(
    net: &LearnNetwork,
    p: &LearnParams,
    bandits: &mut [BanditState],
    avg: &mut [f64],
    epoch: u64,
) -> Result<EpochOutcome> {
    p.validate()?;
    let n_cells = net.real.layout.cells().len();
    if bandits.len() != n_cells || avg.len() != net.ue_cell.len() {
        return Err(Error::invalid(
            "one bandit per cell and one average per UE required",
        ));
    }
    if bandits.iter().any(|b| b.arm_count() != p.portions) {
        return Err(Error::invalid(
            "bandit arm count must equal the number of portions",
        ));
    }
    let bands = partition_band(p.n_rb, p.portions)?;
    let arms: Vec<usize> = bandits
        .iter()
        .map(|b| ucb_select(b, p.exploration_c))
        .collect();
    let mut out = EpochOutcome {
        arms: arms.clone(),
        rewards: vec![0.0; n_cells],
        delivered_bits: vec![0.0; n_cells],
        bound_bits: vec![0.0; n_cells],
        regret: vec![0.0; n_cells],
    };
    let start = avg.to_vec();
    for c in 0..n_cells {
        let mut best = f64::NEG_INFINITY;
        for a in 0..p.portions {
            if a == arms[c] {
                continue;
            }
            let mut alt = arms.clone();
            alt[c] = a;
            let mut scratch = start.clone();
            let (g, b) = cell_epoch(net, p, &bands, &alt, c, epoch, &mut scratch);
            best = best.max(normalised(g, b));
        }
        let (g, b) = cell_epoch(net, p, &bands, &arms, c, epoch, avg);
        let r = normalised(g, b);
        out.delivered_bits[c] = g;
        out.bound_bits[c] = b;
        out.rewards[c] = r;
        out.regret[c] = (best - r).max(0.0);
    }
    for (c, b) in bandits.iter_mut().enumerate() {
        reward_update(b, arms[c], out.rewards[c])?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnTraceRow {
    pub epoch: u64,
    pub cell: usize,
    pub arm: usize,
    pub reward: f64,
    pub cumulative_regret: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnRun {
    pub trace: Vec<LearnTraceRow>,
    pub bandits: Vec<BanditState>,
}

impl LearnRun {
    /// Fraction of the last `window` epochs in which all cells held distinct
    /// portions.
    pub fn orthogonal_fraction(&self, n_cells: usize, window: usize) -> f64 {
        let epochs = self.trace.len() / n_cells.max(1);
        let from = epochs.saturating_sub(window);
        let mut hits = 0;
        for e in from..epochs {
            let arms: BTreeSet<usize> = self.trace[e * n_cells..(e + 1) * n_cells]
                .iter()
                .map(|r| r.arm)
                .collect();
            hits += usize::from(arms.len() == n_cells);
        }
        if epochs == from {
            0.0
        } else {
            hits as f64 / (epochs - from) as f64
        }
    }
}

pub fn run_learning(net: &LearnNetwork, p: &LearnParams, epochs: u64) -> Result<LearnRun> {
    let n_cells = net.real.layout.cells().len();
    let mut bandits: Vec<BanditState> = (0..n_cells)
        .map(|_| BanditState::new(p.portions))
        .collect::<Result<_>>()?;
    let mut avg = vec![1.0; net.ue_cell.len()];
    let mut cum = vec![0.0; n_cells];
    let mut trace = Vec::with_capacity(epochs as usize * n_cells);
    for e in 0..epochs {
        let o = hierarchical_epoch(net, p, &mut bandits, &mut avg, e)?;
        for c in 0..n_cells {
            cum[c] += o.regret[c];
            trace.push(LearnTraceRow {
                epoch: e,
                cell: c,
                arm: o.arms[c],
                reward: o.rewards[c],
                cumulative_regret: cum[c],
            });
        }
    }
    Ok(LearnRun { trace, bandits })
}
