//! Range expansion with macro/pico coordination: UPD, UPD+RP, ABS and the
//! coordinated RB and power allocation (coRPA) with per-RB macro power caps.

use std::collections::BTreeSet;

use crate::channel::{FadingField, GainMatrix};
use crate::error::{Error, Result};
use crate::link::LinkAbstraction;

/// Per-cell, per-RB transmit power and RB owner for one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct RbGrid {
    pub n_rb: usize,
    pub power: Vec<Vec<f64>>,
    pub owner: Vec<Vec<Option<usize>>>,
}

impl RbGrid {
    pub fn idle(n_cells: usize, n_rb: usize) -> Self {
        RbGrid {
            n_rb,
            power: vec![vec![0.0; n_rb]; n_cells],
            owner: vec![vec![None; n_rb]; n_cells],
        }
    }

    pub fn set_row(&mut self, cell: usize, row: CellRow) {
        self.power[cell] = row.power;
        self.owner[cell] = row.owner;
    }
}

/// One cell's share of an [`RbGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct CellRow {
    pub power: Vec<f64>,
    pub owner: Vec<Option<usize>>,
}

impl CellRow {
    pub fn idle(n_rb: usize) -> Self {
        CellRow {
            power: vec![0.0; n_rb],
            owner: vec![None; n_rb],
        }
    }

    pub fn rb_count(&self, ue: usize) -> usize {
        self.owner.iter().filter(|o| **o == Some(ue)).count()
    }
}

/// Splits `rbs` into contiguous blocks, one per UE in the given order; the
/// first `len % n` UEs receive one extra RB. With more UEs than RBs only the
/// first `len` UEs are scheduled.
pub fn block_split(rbs: &[usize], ues: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let n = ues.len().min(rbs.len());
    if n == 0 {
        return Vec::new();
    }
    let (base, extra) = (rbs.len() / n, rbs.len() % n);
    let mut out = Vec::with_capacity(n);
    let mut at = 0;
    for (k, &u) in ues.iter().take(n).enumerate() {
        let len = base + usize::from(k < extra);
        out.push((u, rbs[at..at + len].to_vec()));
        at += len;
    }
    out
}

/// Uniform power `max_power / n_rb` on the RBs in `rbs`, which are shared
/// among `ues` by [`block_split`]. `per_ue` limits each UE's demand; RBs
/// beyond the total demand stay idle.
pub fn upd_allocate_on(
    n_rb: usize,
    max_power: f64,
    ues: &[usize],
    rbs: &[usize],
    per_ue: Option<usize>,
) -> CellRow {
    let mut row = CellRow::idle(n_rb);
    let p = max_power / n_rb as f64;
    let used = per_ue.map_or(rbs.len(), |k| rbs.len().min(k.saturating_mul(ues.len())));
    for (u, block) in block_split(&rbs[..used], ues) {
        for rb in block {
            row.owner[rb] = Some(u);
            row.power[rb] = p;
        }
    }
    row
}

/// Uniform power over the whole band, reuse 1.
pub fn upd_allocate(n_rb: usize, max_power: f64, ues: &[usize], per_ue: Option<usize>) -> CellRow {
    let all: Vec<usize> = (0..n_rb).collect();
    upd_allocate_on(n_rb, max_power, ues, &all, per_ue)
}

/// Macro RBs `[0, ceil(n/2))`, pico RBs the rest. An odd RB count gives the
/// extra RB to the macro.
pub fn rp_split(n_rb: usize) -> (Vec<usize>, Vec<usize>) {
    let m = n_rb.div_ceil(2);
    ((0..m).collect(), (m..n_rb).collect())
}

/// UPD with resource partitioning between tiers.
pub fn upd_rp_allocate(
    n_rb: usize,
    max_power: f64,
    ues: &[usize],
    is_macro: bool,
    per_ue: Option<usize>,
) -> CellRow {
    let (m, p) = rp_split(n_rb);
    upd_allocate_on(n_rb, max_power, ues, if is_macro { &m } else { &p }, per_ue)
}

/// Cap the macro must respect on the RBs of one pico's ER PUEs.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerCapMessage {
    pub pico: usize,
    pub macro_id: usize,
    pub rbs: Vec<usize>,
    pub caps: Vec<f64>,
    /// The target is out of reach even with the macro silent on the RB.
    pub infeasible: Vec<bool>,
}

/// `cap = (S / gamma - n - I_other) / G_macro`, floored at zero.
#[inline]
pub fn power_cap(
    signal_w: f64,
    gamma: f64,
    noise_w: f64,
    other_w: f64,
    gain_macro: f64,
) -> (f64, bool) {
    let headroom = signal_w / gamma - noise_w - other_w;
    if headroom < 0.0 {
        (0.0, true)
    } else {
        (headroom / gain_macro, false)
    }
}

/// Network view shared by the range-expansion schemes.
#[derive(Clone, Debug)]
pub struct EicicNetwork<'a> {
    pub gains: &'a GainMatrix,
    pub ue_cell: &'a [Option<usize>],
    /// Attached to a pico only because of the range-expansion bias.
    pub er: &'a [bool],
    pub macro_id: usize,
    pub max_power: &'a [f64],
    pub n_rb: usize,
    pub noise_w: f64,
    pub gamma: f64,
    pub fading: FadingField,
    pub rb_bandwidth: f64,
    /// RBs each UE asks for per slot; `None` is full buffer.
    pub rbs_per_ue: Option<usize>,
    /// Per-UE rate ceiling in bit/s; `None` is unlimited.
    pub ue_demand_bps: Option<f64>,
}

impl EicicNetwork<'_> {
    pub fn n_cells(&self) -> usize {
        self.gains.n_cells()
    }

    pub fn cell_ues(&self, cell: usize) -> Vec<usize> {
        (0..self.ue_cell.len())
            .filter(|&u| self.ue_cell[u] == Some(cell))
            .collect()
    }

    /// Pico UEs with ER PUEs first, ascending id within each group.
    pub fn pico_order(&self, cell: usize) -> Vec<usize> {
        let ues = self.cell_ues(cell);
        let (mut er, rest): (Vec<usize>, Vec<usize>) = ues.into_iter().partition(|&u| self.er[u]);
        er.extend(rest);
        er
    }

    fn interference(
        &self,
        grid: &RbGrid,
        ue: usize,
        rb: usize,
        slot: usize,
        skip: &[usize],
    ) -> f64 {
        let mut i = 0.0;
        for j in 0..self.n_cells() {
            let p = grid.power[j][rb];
            if p > 0.0 && !skip.contains(&j) {
                i += p * self.gains.get(j, ue) * self.fading.h(j, ue, rb, slot);
            }
        }
        i
    }

    pub fn sinr(&self, grid: &RbGrid, ue: usize, rb: usize, slot: usize) -> f64 {
        let Some(s) = self.ue_cell[ue] else {
            return 0.0;
        };
        let signal = grid.power[s][rb] * self.gains.get(s, ue) * self.fading.h(s, ue, rb, slot);
        signal / (self.interference(grid, ue, rb, slot, &[s]) + self.noise_w)
    }
}

/// Caps from the picos' allocation in `grid` (macro row ignored).
pub fn compute_power_caps(net: &EicicNetwork, grid: &RbGrid) -> Vec<PowerCapMessage> {
    let m = net.macro_id;
    let mut out = Vec::new();
    for pico in 0..net.n_cells() {
        if pico == m {
            continue;
        }
        let mut msg = PowerCapMessage {
            pico,
            macro_id: m,
            rbs: Vec::new(),
            caps: Vec::new(),
            infeasible: Vec::new(),
        };
        for rb in 0..net.n_rb {
            let Some(u) = grid.owner[pico][rb] else {
                continue;
            };
            if !net.er[u] {
                continue;
            }
            let signal = grid.power[pico][rb] * net.gains.get(pico, u);
            let other: f64 = (0..net.n_cells())
                .filter(|&j| j != pico && j != m)
                .map(|j| grid.power[j][rb] * net.gains.get(j, u))
                .sum();
            let (cap, bad) = power_cap(signal, net.gamma, net.noise_w, other, net.gains.get(m, u));
            msg.rbs.push(rb);
            msg.caps.push(cap);
            msg.infeasible.push(bad);
        }
        if !msg.rbs.is_empty() {
            out.push(msg);
        }
    }
    out
}

/// Tightest cap per RB across all messages.
pub fn merge_caps(n_rb: usize, msgs: &[PowerCapMessage]) -> Vec<Option<f64>> {
    let mut caps: Vec<Option<f64>> = vec![None; n_rb];
    for msg in msgs {
        for (&rb, &c) in msg.rbs.iter().zip(&msg.caps) {
            caps[rb] = Some(caps[rb].map_or(c, |x: f64| x.min(c)));
        }
    }
    caps
}

/// Macro allocation under per-RB caps.
///
/// `req[k][rb]` is the power MUE `mues[k]` needs on `rb` to reach the SINR
/// target. MUEs are ranked by their smallest requirement; capped RBs are
/// visited by ascending cap and each takes the best-ranked unmatched MUE that
/// fits under `min(cap, p_uniform)`. Remaining MUEs get one uncapped RB each
/// in rank order, then spare RBs are shared round-robin among served MUEs
/// (capped RBs only with MUEs that fit). Powers are `p_uniform` on uncapped
/// RBs and `min(cap, p_uniform)` on capped ones. No MUE exceeds `per_ue`
/// RBs. Without caps this is [`upd_allocate`].
pub fn corpa_allocate(
    n_rb: usize,
    max_power: f64,
    mues: &[usize],
    req: &[Vec<f64>],
    caps: &[Option<f64>],
    per_ue: Option<usize>,
) -> CellRow {
    if caps.iter().all(Option::is_none) {
        return upd_allocate(n_rb, max_power, mues, per_ue);
    }
    let p_uni = max_power / n_rb as f64;
    let limit = |rb: usize| caps[rb].map_or(p_uni, |c| c.min(p_uni));
    let best = |k: usize| req[k].iter().copied().fold(f64::INFINITY, f64::min);
    let mut rank: Vec<usize> = (0..mues.len()).filter(|&k| best(k) <= p_uni).collect();
    rank.sort_by(|&a, &b| best(a).total_cmp(&best(b)).then(a.cmp(&b)));

    let mut row = CellRow::idle(n_rb);
    let mut matched = vec![false; mues.len()];
    let mut capped: Vec<usize> = (0..n_rb).filter(|&rb| caps[rb].is_some()).collect();
    capped.sort_by(|&a, &b| {
        caps[a]
            .unwrap()
            .total_cmp(&caps[b].unwrap())
            .then(a.cmp(&b))
    });
    for &rb in &capped {
        if let Some(&k) = rank
            .iter()
            .find(|&&k| !matched[k] && req[k][rb] <= limit(rb))
        {
            matched[k] = true;
            row.owner[rb] = Some(mues[k]);
            row.power[rb] = limit(rb);
        }
    }
    let mut free: Vec<usize> = (0..n_rb).filter(|&rb| caps[rb].is_none()).collect();
    for &k in &rank {
        if matched[k] {
            continue;
        }
        let fit = free.iter().position(|&rb| req[k][rb] <= p_uni);
        if let Some(pos) = fit {
            let rb = free.remove(pos);
            matched[k] = true;
            row.owner[rb] = Some(mues[k]);
            row.power[rb] = p_uni;
        }
    }
    let served: Vec<usize> = rank.iter().copied().filter(|&k| matched[k]).collect();
    let cap_k = per_ue.unwrap_or(usize::MAX);
    if served.is_empty() || cap_k <= 1 {
        return row;
    }
    let mut held = vec![1usize; mues.len()];
    let mut turn = 0;
    for rb in 0..n_rb {
        if row.owner[rb].is_some() {
            continue;
        }
        for step in 0..served.len() {
            let k = served[(turn + step) % served.len()];
            if held[k] < cap_k && req[k][rb] <= limit(rb) {
                held[k] += 1;
                row.owner[rb] = Some(mues[k]);
                row.power[rb] = limit(rb);
                turn = (turn + step + 1) % served.len();
                break;
            }
        }
    }
    row
}

/// Power each MUE needs per RB to reach `gamma` against the picos' power in
/// `grid` (fading excluded).
pub fn macro_requirements(net: &EicicNetwork, grid: &RbGrid, mues: &[usize]) -> Vec<Vec<f64>> {
    let m = net.macro_id;
    mues.iter()
        .map(|&u| {
            (0..net.n_rb)
                .map(|rb| {
                    let mut i = 0.0;
                    for j in 0..net.n_cells() {
                        if j != m {
                            i += grid.power[j][rb] * net.gains.get(j, u);
                        }
                    }
                    net.gamma * (net.noise_w + i) / net.gains.get(m, u)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EicicScheme {
    Upd,
    UpdRp,
    Corpa,
    Abs,
}

/// Almost-blank-subframe pattern: `true` marks a muted macro subframe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbsPattern(pub Vec<bool>);

impl AbsPattern {
    /// `k` muted subframes at the start of a period of `len`.
    pub fn k_in(k: usize, len: usize) -> Result<Self> {
        if len == 0 || k > len {
            return Err(Error::invalid(
                "ABS pattern needs 0 <= k <= len and len >= 1",
            ));
        }
        Ok(AbsPattern((0..len).map(|s| s < k).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_abs(&self, slot: usize) -> bool {
        !self.0.is_empty() && self.0[slot % self.0.len()]
    }

    pub fn fully_muted(&self) -> bool {
        !self.0.is_empty() && self.0.iter().all(|&b| b)
    }
}

/// One-subframe ABS schedule: the macro is silent in ABS subframes; ER PUEs
/// are scheduled only there, other PUEs in every subframe.
pub fn abs_allocate(net: &EicicNetwork, pattern: &AbsPattern, slot: usize) -> RbGrid {
    let mut grid = RbGrid::idle(net.n_cells(), net.n_rb);
    let muted = pattern.is_abs(slot);
    for cell in 0..net.n_cells() {
        if cell == net.macro_id {
            if !muted {
                grid.set_row(
                    cell,
                    upd_allocate(
                        net.n_rb,
                        net.max_power[cell],
                        &net.cell_ues(cell),
                        net.rbs_per_ue,
                    ),
                );
            }
        } else {
            let ues: Vec<usize> = net
                .pico_order(cell)
                .into_iter()
                .filter(|&u| muted || !net.er[u])
                .collect();
            grid.set_row(
                cell,
                upd_allocate(net.n_rb, net.max_power[cell], &ues, net.rbs_per_ue),
            );
        }
    }
    grid
}

/// Per-slot serving state and rates.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotService {
    pub served: Vec<bool>,
    pub rate: Vec<f64>,
}

/// A UE is served when at least one of its RBs meets the SINR target; only
/// served UEs carry traffic.
pub fn evaluate_grid(
    net: &EicicNetwork,
    grid: &RbGrid,
    link: &LinkAbstraction,
    slot: usize,
) -> SlotService {
    let n_ue = net.ue_cell.len();
    let mut served = vec![false; n_ue];
    let mut rate = vec![0.0; n_ue];
    let floor = net.gamma * (1.0 - 1e-9);
    for cell in 0..net.n_cells() {
        for rb in 0..net.n_rb {
            let Some(u) = grid.owner[cell][rb] else {
                continue;
            };
            let s = net.sinr(grid, u, rb, slot);
            if s >= floor {
                served[u] = true;
            }
            rate[u] += net.rb_bandwidth * link.spectral_efficiency(s);
        }
    }
    for u in 0..n_ue {
        if !served[u] {
            rate[u] = 0.0;
        } else if let Some(d) = net.ue_demand_bps {
            rate[u] = rate[u].min(d);
        }
    }
    SlotService { served, rate }
}

/// Outage, connection and throughput KPIs of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KpiRecord {
    pub ue_outages: usize,
    pub connected_ues: f64,
    pub network_throughput: f64,
}

/// Accumulates epochs: an outage is each transition of a UE into the
/// unserved state, the first epoch included.
#[derive(Clone, Debug, Default)]
pub struct KpiAccumulator {
    prev: Option<Vec<bool>>,
    outages: usize,
    connected_sum: f64,
    epochs: usize,
    throughput_sum: f64,
    slots: usize,
}

impl KpiAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// `served` for one scheduling epoch and the rates of its slots.
    pub fn push_epoch(&mut self, served: &[bool], slot_rates: &[f64]) {
        for (u, &s) in served.iter().enumerate() {
            let was = self.prev.as_ref().map_or(true, |p| p[u]);
            if !s && was {
                self.outages += 1;
            }
        }
        self.connected_sum += served.iter().filter(|&&s| s).count() as f64;
        self.epochs += 1;
        self.throughput_sum += slot_rates.iter().sum::<f64>();
        self.slots += slot_rates.len();
        self.prev = Some(served.to_vec());
    }

    pub fn finish(&self) -> KpiRecord {
        KpiRecord {
            ue_outages: self.outages,
            connected_ues: self.connected_sum / self.epochs.max(1) as f64,
            network_throughput: self.throughput_sum / self.slots.max(1) as f64,
        }
    }
}

/// Protection audit of the capped RBs in one slot.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CapAudit {
    pub capped_rbs: usize,
    pub cap_violations: usize,
    pub infeasible_rbs: usize,
    /// Feasible capped RBs where an ER PUE fell below target minus 0.1 dB.
    pub protection_failures: usize,
    pub worst_margin_db: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EicicRun {
    pub kpi: KpiRecord,
    pub audit: CapAudit,
    pub final_service: SlotService,
}

fn pico_rows(net: &EicicNetwork, rp: bool) -> RbGrid {
    let mut grid = RbGrid::idle(net.n_cells(), net.n_rb);
    for cell in 0..net.n_cells() {
        if cell != net.macro_id {
            let ues = net.pico_order(cell);
            let row = if rp {
                upd_rp_allocate(net.n_rb, net.max_power[cell], &ues, false, net.rbs_per_ue)
            } else {
                upd_allocate(net.n_rb, net.max_power[cell], &ues, net.rbs_per_ue)
            };
            grid.set_row(cell, row);
        }
    }
    grid
}

/// Runs `slots` slots of a scheme. ABS evaluates serving state once per
/// pattern period.
pub fn run_eicic(
    net: &EicicNetwork,
    scheme: EicicScheme,
    slots: usize,
    pattern: &AbsPattern,
    link: &LinkAbstraction,
) -> Result<EicicRun> {
    if slots == 0 {
        return Err(Error::invalid("at least one slot"));
    }
    if scheme == EicicScheme::Abs && (pattern.is_empty() || slots % pattern.len() != 0) {
        return Err(Error::invalid(
            "ABS pattern length must divide the slot count",
        ));
    }
    let m = net.macro_id;
    let mues = net.cell_ues(m);
    let mut acc = KpiAccumulator::new();
    let mut audit = CapAudit {
        worst_margin_db: f64::INFINITY,
        ..Default::default()
    };
    let mut last = None;
    let mut prev_pico: Option<RbGrid> = None;
    let epoch = if scheme == EicicScheme::Abs {
        pattern.len()
    } else {
        1
    };
    let mut epoch_served = vec![false; net.ue_cell.len()];
    let mut epoch_rates = Vec::with_capacity(epoch);
    for slot in 0..slots {
        let grid = match scheme {
            EicicScheme::Upd => {
                let mut g = pico_rows(net, false);
                g.set_row(
                    m,
                    upd_allocate(net.n_rb, net.max_power[m], &mues, net.rbs_per_ue),
                );
                g
            }
            EicicScheme::UpdRp => {
                let mut g = pico_rows(net, true);
                g.set_row(
                    m,
                    upd_rp_allocate(net.n_rb, net.max_power[m], &mues, true, net.rbs_per_ue),
                );
                g
            }
            EicicScheme::Abs => abs_allocate(net, pattern, slot),
            EicicScheme::Corpa => {
                let mut g = pico_rows(net, false);
                // caps follow the previous slot's pico allocation
                let basis = prev_pico.replace(g.clone()).unwrap_or_else(|| g.clone());
                let msgs = compute_power_caps(net, &basis);
                let caps = merge_caps(net.n_rb, &msgs);
                let req = macro_requirements(net, &basis, &mues);
                g.set_row(
                    m,
                    corpa_allocate(
                        net.n_rb,
                        net.max_power[m],
                        &mues,
                        &req,
                        &caps,
                        net.rbs_per_ue,
                    ),
                );
                audit_caps(net, &g, &msgs, slot, &mut audit);
                g
            }
        };
        let svc = evaluate_grid(net, &grid, link, slot);
        for (acc_s, s) in epoch_served.iter_mut().zip(&svc.served) {
            *acc_s |= *s;
        }
        epoch_rates.push(svc.rate.iter().sum::<f64>());
        if (slot + 1) % epoch == 0 {
            acc.push_epoch(&epoch_served, &epoch_rates);
            epoch_served.iter_mut().for_each(|s| *s = false);
            epoch_rates.clear();
        }
        last = Some(svc);
    }
    if audit.capped_rbs == 0 {
        audit.worst_margin_db = 0.0;
    }
    Ok(EicicRun {
        kpi: acc.finish(),
        audit,
        final_service: last.expect("slots >= 1"),
    })
}

fn audit_caps(
    net: &EicicNetwork,
    grid: &RbGrid,
    msgs: &[PowerCapMessage],
    slot: usize,
    audit: &mut CapAudit,
) {
    let m = net.macro_id;
    let target_db = 10.0 * net.gamma.log10();
    for msg in msgs {
        for ((&rb, &cap), &bad) in msg.rbs.iter().zip(&msg.caps).zip(&msg.infeasible) {
            audit.capped_rbs += 1;
            if grid.power[m][rb] > cap {
                audit.cap_violations += 1;
            }
            if bad {
                audit.infeasible_rbs += 1;
                continue;
            }
            let Some(u) = grid.owner[msg.pico][rb] else {
                continue;
            };
            let margin = 10.0 * net.sinr(grid, u, rb, slot).log10() - target_db;
            audit.worst_margin_db = audit.worst_margin_db.min(margin);
            if margin < -0.1 {
                audit.protection_failures += 1;
            }
        }
    }
}

/// Indices of UEs whose biased choice differs from their strongest cell.
pub fn expanded_region(biased: &[Option<usize>], strongest: &[Option<usize>]) -> Vec<bool> {
    biased
        .iter()
        .zip(strongest)
        .map(|(b, s)| b.is_some() && b != s)
        .collect()
}

/// Set of all cells that carry at least one UE.
pub fn active_cells(ue_cell: &[Option<usize>]) -> BTreeSet<usize> {
    ue_cell.iter().flatten().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn upd_examples() {
        let row = upd_allocate(100, 20.0, &[0, 1, 2, 3], None);
        assert!(row.power.iter().all(|&p| (p - 0.2).abs() < 1e-15));
        for u in 0..4 {
            assert_eq!(row.rb_count(u), 25);
        }
        let row = upd_allocate(100, 20.0, &[5, 6, 7], None);
        assert_eq!(
            [row.rb_count(5), row.rb_count(6), row.rb_count(7)],
            [34, 33, 33]
        );
        let crowded = upd_allocate(2, 1.0, &[0, 1, 2], None);
        assert_eq!(crowded.rb_count(2), 0);
    }

    #[test]
    fn demand_leaves_spare_rbs_idle() {
        let row = upd_allocate(10, 10.0, &[0, 1, 2], Some(1));
        assert_eq!(row.owner[..3], [Some(0), Some(1), Some(2)]);
        assert!(row.owner[3..].iter().all(Option::is_none));
        assert!(row.power[3..].iter().all(|&p| p == 0.0));
        let full = upd_allocate(4, 4.0, &[0, 1, 2, 3, 4, 5], Some(1));
        assert_eq!(full.owner, vec![Some(0), Some(1), Some(2), Some(3)]);
        let req = vec![vec![0.1; 4], vec![0.1; 4]];
        let row = corpa_allocate(
            4,
            4.0,
            &[7, 8],
            &req,
            &[Some(0.5), None, None, None],
            Some(1),
        );
        assert_eq!(row.rb_count(7) + row.rb_count(8), 2);
    }

    #[test]
    fn rp_split_examples() {
        let (m, p) = rp_split(100);
        assert_eq!(m, (0..50).collect::<Vec<_>>());
        assert_eq!(p, (50..100).collect::<Vec<_>>());
        let (m, p) = rp_split(7);
        assert_eq!((m.len(), p.len()), (4, 3));
    }

    #[test]
    fn cap_examples() {
        let n = 1e-13;
        assert_eq!(power_cap(n, 1.0, n, 0.0, 1.0), (0.0, false));
        let (cap, bad) = power_cap(10.0 * n, 2.0, n, 0.0, 1.0);
        assert!(!bad);
        assert!((cap - 4.0 * n).abs() < 1e-25);
        assert_eq!(power_cap(n, 2.0, n, 0.0, 1.0), (0.0, true));
    }

    fn two_cell(
        g: Vec<Vec<f64>>,
        ue_cell: Vec<Option<usize>>,
        er: Vec<bool>,
    ) -> (GainMatrix, Vec<Option<usize>>, Vec<bool>) {
        (GainMatrix::from_rows(g).unwrap(), ue_cell, er)
    }

    #[test]
    fn cap_closes_the_loop() {
        // macro 0, pico 1, ER PUE 0, MUE 1
        let (g, uc, er) = two_cell(
            vec![vec![3e-9, 1e-7], vec![2e-9, 1e-12]],
            vec![Some(1), Some(0)],
            vec![true, false],
        );
        let power = [40.0, 1.0];
        let net = EicicNetwork {
            gains: &g,
            ue_cell: &uc,
            er: &er,
            macro_id: 0,
            max_power: &power,
            n_rb: 4,
            noise_w: 1e-14,
            gamma: 1.0,
            fading: FadingField::disabled(),
            rb_bandwidth: 180e3,
            rbs_per_ue: None,
            ue_demand_bps: None,
        };
        let mut grid = RbGrid::idle(2, 4);
        grid.set_row(1, upd_allocate(4, 1.0, &[0], None));
        let msgs = compute_power_caps(&net, &grid);
        assert_eq!(msgs.len(), 1);
        for (&rb, &cap) in msgs[0].rbs.iter().zip(&msgs[0].caps) {
            grid.power[0][rb] = cap;
            grid.owner[0][rb] = Some(1);
            let s = net.sinr(&grid, 0, rb, 0);
            assert!((s - 1.0).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn corpa_without_caps_is_upd() {
        let req = vec![vec![0.1; 10]; 3];
        let row = corpa_allocate(10, 10.0, &[4, 5, 6], &req, &[None; 10], None);
        assert_eq!(row, upd_allocate(10, 10.0, &[4, 5, 6], None));
    }

    #[test]
    fn near_mue_takes_the_capped_rb() {
        // RB 0 capped at 0.05 W, RB 1 free; MUE 0 near (needs 0.01), MUE 1 far (needs 0.5)
        let req = vec![vec![0.01, 0.01], vec![0.5, 0.5]];
        let row = corpa_allocate(2, 2.0, &[0, 1], &req, &[Some(0.05), None], None);
        assert_eq!(row.owner, vec![Some(0), Some(1)]);
        assert!((row.power[0] - 0.05).abs() < 1e-15);
        assert!((row.power[1] - 1.0).abs() < 1e-15);
    }

    /// Largest number of MUEs that can each get one RB they fit on.
    fn brute_force_served(req: &[Vec<f64>], limit: &[f64]) -> usize {
        fn go(k: usize, req: &[Vec<f64>], limit: &[f64], used: &mut Vec<bool>) -> usize {
            if k == req.len() {
                return 0;
            }
            let mut best = go(k + 1, req, limit, used);
            for rb in 0..limit.len() {
                if !used[rb] && req[k][rb] <= limit[rb] {
                    used[rb] = true;
                    best = best.max(1 + go(k + 1, req, limit, used));
                    used[rb] = false;
                }
            }
            best
        }
        go(0, req, limit, &mut vec![false; limit.len()])
    }

    proptest! {
        #[test]
        fn corpa_serves_as_many_as_exhaustive_search(
            n_rb in 1usize..=6,
            n_mue in 1usize..=5,
            reqs in proptest::collection::vec(0.0f64..1.0, 5),
            caps in proptest::collection::vec(proptest::option::of(0.0f64..1.0), 6),
        ) {
            let p_uni = 0.8;
            let caps = &caps[..n_rb];
            // without caps the allocator is plain UPD, covered elsewhere
            prop_assume!(caps.iter().any(Option::is_some));
            let req: Vec<Vec<f64>> = (0..n_mue).map(|k| vec![reqs[k]; n_rb]).collect();
            let mues: Vec<usize> = (0..n_mue).collect();
            let row = corpa_allocate(n_rb, p_uni * n_rb as f64, &mues, &req, caps, None);
            let limit: Vec<f64> = caps.iter().map(|c| c.map_or(p_uni, |c| c.min(p_uni))).collect();
            let served: BTreeSet<usize> = row.owner.iter().flatten().copied().collect();
            prop_assert_eq!(served.len(), brute_force_served(&req, &limit));
            for rb in 0..n_rb {
                prop_assert!(row.power[rb] <= limit[rb] + 1e-15);
                if let Some(u) = row.owner[rb] {
                    prop_assert!(req[u][rb] <= row.power[rb] + 1e-15);
                }
            }
        }

        #[test]
        fn block_split_partitions(n_rb in 1usize..200, n_ue in 0usize..60) {
            let rbs: Vec<usize> = (0..n_rb).collect();
            let ues: Vec<usize> = (0..n_ue).collect();
            let parts = block_split(&rbs, &ues);
            let total: usize = parts.iter().map(|(_, b)| b.len()).sum();
            prop_assert_eq!(total, if n_ue == 0 { 0 } else { n_rb });
            let sizes: Vec<usize> = parts.iter().map(|(_, b)| b.len()).collect();
            if let (Some(mx), Some(mn)) = (sizes.iter().max(), sizes.iter().min()) {
                prop_assert!(mx - mn <= 1);
            }
        }
    }

    fn fixture() -> (GainMatrix, Vec<Option<usize>>, Vec<bool>, Vec<f64>) {
        // macro 0, pico 1; UE 0 MUE, UE 1 ER PUE, UE 2 inner PUE
        let g =
            GainMatrix::from_rows(vec![vec![1e-9, 2e-10, 1e-13], vec![1e-14, 1e-9, 1e-8]]).unwrap();
        (
            g,
            vec![Some(0), Some(1), Some(1)],
            vec![false, true, false],
            vec![10.0, 1.0],
        )
    }

    fn fixture_net<'a>(
        g: &'a GainMatrix,
        uc: &'a [Option<usize>],
        er: &'a [bool],
        p: &'a [f64],
    ) -> EicicNetwork<'a> {
        EicicNetwork {
            gains: g,
            ue_cell: uc,
            er,
            macro_id: 0,
            max_power: p,
            n_rb: 10,
            noise_w: 1e-15,
            gamma: 1.0,
            fading: FadingField::disabled(),
            rb_bandwidth: 180e3,
            rbs_per_ue: None,
            ue_demand_bps: None,
        }
    }

    #[test]
    fn rp_removes_cross_tier_overlap() {
        let (g, uc, er, p) = fixture();
        let net = fixture_net(&g, &uc, &er, &p);
        let mut grid = pico_rows(&net, true);
        grid.set_row(0, upd_rp_allocate(10, 10.0, &[0], true, None));
        for rb in 0..10 {
            assert!(grid.power[0][rb] == 0.0 || grid.power[1][rb] == 0.0);
        }
    }

    #[test]
    fn rp_halves_isolated_macro_capacity() {
        let g = GainMatrix::from_rows(vec![vec![1e-10]]).unwrap();
        let (uc, er, p) = (vec![Some(0)], vec![false], vec![10.0]);
        let net = fixture_net(&g, &uc, &er, &p);
        let l = LinkAbstraction::default();
        let upd = run_eicic(&net, EicicScheme::Upd, 1, &AbsPattern(vec![]), &l).unwrap();
        let rp = run_eicic(&net, EicicScheme::UpdRp, 1, &AbsPattern(vec![]), &l).unwrap();
        let ratio = rp.kpi.network_throughput / upd.kpi.network_throughput;
        assert!((ratio - 0.5).abs() < 1e-9);
    }

    #[test]
    fn abs_duty_cycle_and_empty_pattern() {
        let g = GainMatrix::from_rows(vec![vec![1e-10]]).unwrap();
        let (uc, er, p) = (vec![Some(0)], vec![false], vec![10.0]);
        let net = fixture_net(&g, &uc, &er, &p);
        let l = LinkAbstraction::default();
        let upd = run_eicic(&net, EicicScheme::Upd, 8, &AbsPattern(vec![]), &l).unwrap();
        let none = run_eicic(
            &net,
            EicicScheme::Abs,
            8,
            &AbsPattern::k_in(0, 8).unwrap(),
            &l,
        )
        .unwrap();
        assert_eq!(none.kpi, upd.kpi);
        let one = run_eicic(
            &net,
            EicicScheme::Abs,
            8,
            &AbsPattern::k_in(1, 8).unwrap(),
            &l,
        )
        .unwrap();
        let ratio = one.kpi.network_throughput / upd.kpi.network_throughput;
        assert!((ratio - 7.0 / 8.0).abs() < 1e-9);
        assert!(AbsPattern::k_in(8, 8).unwrap().fully_muted());
    }

    #[test]
    fn abs_protects_er_pues() {
        let (g, uc, er, p) = fixture();
        let net = fixture_net(&g, &uc, &er, &p);
        let pat = AbsPattern::k_in(1, 2).unwrap();
        let muted = abs_allocate(&net, &pat, 0);
        let loud = abs_allocate(&net, &pat, 1);
        assert!(loud.owner[1].iter().all(|o| *o != Some(1)));
        // same RB position evaluated with and without the macro
        let mut probe = loud.clone();
        probe.owner[1] = muted.owner[1].clone();
        probe.power[1] = muted.power[1].clone();
        for rb in 0..10 {
            if muted.owner[1][rb] == Some(1) {
                assert!(net.sinr(&muted, 1, rb, 0) >= net.sinr(&probe, 1, rb, 1));
            }
        }
    }

    #[test]
    fn corpa_fixture_protects_and_serves() {
        let (g, uc, er, p) = fixture();
        let net = fixture_net(&g, &uc, &er, &p);
        let l = LinkAbstraction::default();
        let upd = run_eicic(&net, EicicScheme::Upd, 3, &AbsPattern(vec![]), &l).unwrap();
        let co = run_eicic(&net, EicicScheme::Corpa, 3, &AbsPattern(vec![]), &l).unwrap();
        assert!(!upd.final_service.served[1]);
        assert!(co.final_service.served.iter().all(|&s| s));
        assert_eq!(co.kpi.ue_outages, 0);
        assert_eq!(co.audit.cap_violations, 0);
        assert_eq!(co.audit.protection_failures, 0);
        assert!(co.audit.capped_rbs > 0);
    }

    #[test]
    fn kpi_accumulator_counts_transitions() {
        let mut acc = KpiAccumulator::new();
        acc.push_epoch(&[true, true], &[1.0]);
        acc.push_epoch(&[false, true], &[1.0]);
        acc.push_epoch(&[false, true], &[1.0]);
        acc.push_epoch(&[true, false], &[4.0]);
        let k = acc.finish();
        assert_eq!(k.ue_outages, 2);
        assert!((k.connected_ues - 1.25).abs() < 1e-12);
        assert!((k.network_throughput - 1.75).abs() < 1e-12);
        let mut all = KpiAccumulator::new();
        all.push_epoch(&[true; 5], &[2.0]);
        assert_eq!(all.finish().ue_outages, 0);
        assert_eq!(all.finish().connected_ues, 5.0);
    }
}
