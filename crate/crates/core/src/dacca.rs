//! Dynamic autonomous component-carrier assignment (PCC/SCC protocol), static
//! FFR carrier baselines, the macro FFR sub-band plan and femto
//! minimum-interference sub-band selection.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::channel::{FadingField, GainMatrix};
use crate::error::{Error, Result};
use crate::geometry::{Antenna, ScenarioLayout, Tier};
use crate::link::{effective_sinr, LinkAbstraction};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentCarrier {
    pub index: usize,
    pub bandwidth: f64,
    pub rb_count: usize,
}

/// System band made of equal, disjoint component carriers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub n_cc: usize,
    pub rbs_per_cc: usize,
    pub cc_bandwidth: f64,
    pub rb_bandwidth: f64,
}

impl Default for Spectrum {
    fn default() -> Self {
        Spectrum {
            n_cc: 4,
            rbs_per_cc: 50,
            cc_bandwidth: 10e6,
            rb_bandwidth: 180e3,
        }
    }
}

impl Spectrum {
    pub fn validate(&self) -> Result<()> {
        if self.n_cc == 0 || self.rbs_per_cc == 0 || !(self.rb_bandwidth > 0.0) {
            return Err(Error::invalid(
                "spectrum needs >= 1 CC, >= 1 RB per CC and positive RB bandwidth",
            ));
        }
        if self.rbs_per_cc as f64 * self.rb_bandwidth > self.cc_bandwidth * (1.0 + 1e-9) {
            return Err(Error::invalid("RBs do not fit inside the CC bandwidth"));
        }
        Ok(())
    }

    pub fn n_rb(&self) -> usize {
        self.n_cc * self.rbs_per_cc
    }

    pub fn carriers(&self) -> Vec<ComponentCarrier> {
        (0..self.n_cc)
            .map(|index| ComponentCarrier {
                index,
                bandwidth: self.cc_bandwidth,
                rb_count: self.rbs_per_cc,
            })
            .collect()
    }

    pub fn rbs_of(&self, cc: usize) -> std::ops::Range<usize> {
        cc * self.rbs_per_cc..(cc + 1) * self.rbs_per_cc
    }

    pub fn cc_of(&self, rb: usize) -> usize {
        rb / self.rbs_per_cc
    }
}

/// Per-cell carrier assignment for one slot.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CarrierState {
    pub pcc: BTreeSet<usize>,
    pub scc: BTreeSet<usize>,
    pub blocked: BTreeSet<usize>,
    /// PCC this cell claims but may not use this slot because a
    /// higher-priority neighbour still blocks it.
    pub held: Option<usize>,
    /// Every CC was blocked and the previous PCC was kept regardless.
    pub contention: bool,
}

impl CarrierState {
    /// The PCC the cell advertises in its indicators.
    pub fn claimed(&self) -> Option<usize> {
        self.pcc.iter().next().copied().or(self.held)
    }

    pub fn used(&self) -> BTreeSet<usize> {
        self.pcc.union(&self.scc).copied().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PccIndicator {
    pub from_cell: usize,
    pub to_cell: usize,
    pub cc_index: usize,
    pub slot: usize,
}

/// Inputs shared by the carrier schemes: link gains, attachment, per-RB
/// transmit power and noise.
#[derive(Clone, Debug)]
pub struct CarrierNetwork<'a> {
    pub gains: &'a GainMatrix,
    pub ue_cell: &'a [Option<usize>],
    /// Transmit power per RB of each cell (constant PSD across the band).
    pub rb_power: &'a [f64],
    pub noise_w: f64,
    pub fading: FadingField,
    pub spectrum: Spectrum,
}

impl CarrierNetwork<'_> {
    pub fn n_cells(&self) -> usize {
        self.gains.n_cells()
    }

    pub fn cell_ues(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_cells()];
        for (u, c) in self.ue_cell.iter().enumerate() {
            if let Some(c) = c {
                out[*c].push(u);
            }
        }
        out
    }

    fn rx(&self, cell: usize, ue: usize) -> f64 {
        self.rb_power[cell] * self.gains.get(cell, ue)
    }

    /// Wideband SINR of `ue` with every other cell transmitting (pilot based,
    /// no fading), excluding the cells in `removed`.
    pub fn reference_sinr(&self, ue: usize, removed: &BTreeSet<usize>) -> f64 {
        let serving = match self.ue_cell[ue] {
            Some(c) => c,
            None => return 0.0,
        };
        let i: f64 = (0..self.n_cells())
            .filter(|&j| j != serving && !removed.contains(&j))
            .map(|j| self.rx(j, ue))
            .sum();
        self.rx(serving, ue) / (i + self.noise_w)
    }
}

/// Neighbours whose interference keeps one of `cell`'s UEs below `gamma_th`.
///
/// For each UE under the threshold, interferers are removed strongest first
/// (ties to the lower id) until the UE clears the threshold; every removed
/// cell is reported. The first removal is the UE's dominant interferer.
pub fn identify_interferers(
    net: &CarrierNetwork,
    cell: usize,
    gamma_th_db: f64,
) -> BTreeSet<usize> {
    let gamma = 10f64.powf(gamma_th_db / 10.0);
    let mut out = BTreeSet::new();
    for (u, c) in net.ue_cell.iter().enumerate() {
        if *c != Some(cell) {
            continue;
        }
        let mut removed = BTreeSet::new();
        if net.reference_sinr(u, &removed) >= gamma {
            continue;
        }
        let mut ranked: Vec<usize> = (0..net.n_cells()).filter(|&j| j != cell).collect();
        ranked.sort_by(|&a, &b| net.rx(b, u).total_cmp(&net.rx(a, u)).then(a.cmp(&b)));
        for j in ranked {
            removed.insert(j);
            out.insert(j);
            if net.reference_sinr(u, &removed) >= gamma {
                break;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DaccaParams {
    pub gamma_th_db: f64,
    pub slots: usize,
}

impl Default for DaccaParams {
    fn default() -> Self {
        DaccaParams {
            gamma_th_db: 5.0,
            slots: 20,
        }
    }
}

/// Per-UE outcome of one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct UeOutcome {
    /// Capacity-equivalent SINR over allocated RBs (0 when unscheduled).
    pub effective_sinr: f64,
    pub throughput: f64,
    pub n_rb: usize,
}

#[derive(Clone, Debug)]
pub struct SlotTrace {
    pub slot: usize,
    pub states: Vec<CarrierState>,
    pub indicators_sent: Vec<PccIndicator>,
    /// RBs used on CCs that the cell had blocked.
    pub blocked_transmissions: usize,
}

#[derive(Clone, Debug)]
pub struct DaccaOutcome {
    pub trace: Vec<SlotTrace>,
    /// First slot whose state equals the previous slot's.
    pub fixed_point_slot: Option<usize>,
    pub contention_events: usize,
    pub final_ues: Vec<UeOutcome>,
}

impl DaccaOutcome {
    pub fn blocked_transmissions(&self) -> usize {
        self.trace.iter().map(|t| t.blocked_transmissions).sum()
    }

    pub fn final_states(&self) -> &[CarrierState] {
        &self.trace.last().expect("at least one slot").states
    }
}

/// RB owner per cell, `None` for idle RBs.
pub type Allocation = Vec<Vec<Option<usize>>>;

/// Round-robin of `ues` over `rbs`, in order.
fn round_robin(row: &mut [Option<usize>], rbs: impl Iterator<Item = usize>, ues: &[usize]) {
    if ues.is_empty() {
        return;
    }
    for (k, rb) in rbs.enumerate() {
        row[rb] = Some(ues[k % ues.len()]);
    }
}

/// SINR of every allocated RB and the resulting per-UE KPIs.
pub fn evaluate_allocation(
    net: &CarrierNetwork,
    alloc: &Allocation,
    link: &LinkAbstraction,
    slot: usize,
) -> Vec<UeOutcome> {
    let n_ue = net.ue_cell.len();
    let mut per_ue: Vec<Vec<f64>> = vec![Vec::new(); n_ue];
    for (cell, row) in alloc.iter().enumerate() {
        for (rb, owner) in row.iter().enumerate() {
            let Some(u) = *owner else { continue };
            let f = &net.fading;
            let signal = net.rx(cell, u) * f.h(cell, u, rb, slot);
            let mut i = 0.0;
            for (j, other) in alloc.iter().enumerate() {
                if j != cell && other[rb].is_some() {
                    i += net.rx(j, u) * f.h(j, u, rb, slot);
                }
            }
            per_ue[u].push(signal / (i + net.noise_w));
        }
    }
    per_ue
        .into_iter()
        .map(|s| UeOutcome {
            effective_sinr: effective_sinr(&s).unwrap_or(0.0),
            throughput: link.throughput(&s, net.spectrum.rb_bandwidth),
            n_rb: s.len(),
        })
        .collect()
}

struct Protocol<'a, 'b> {
    net: &'a CarrierNetwork<'b>,
    cell_ues: Vec<Vec<usize>>,
    edge: Vec<bool>,
    interferers: Vec<BTreeSet<usize>>,
}

impl Protocol<'_, '_> {
    fn allocate(&self, states: &[CarrierState]) -> Allocation {
        let sp = &self.net.spectrum;
        let mut alloc = vec![vec![None; sp.n_rb()]; self.net.n_cells()];
        for (cell, st) in states.iter().enumerate() {
            let ues = &self.cell_ues[cell];
            let (edge, centre): (Vec<usize>, Vec<usize>) = ues.iter().partition(|&&u| self.edge[u]);
            let pcc_rbs = st.pcc.iter().flat_map(|&c| sp.rbs_of(c));
            if edge.is_empty() {
                let all = pcc_rbs.chain(st.scc.iter().flat_map(|&c| sp.rbs_of(c)));
                round_robin(&mut alloc[cell], all, &centre);
            } else {
                round_robin(&mut alloc[cell], pcc_rbs, &edge);
                round_robin(
                    &mut alloc[cell],
                    st.scc.iter().flat_map(|&c| sp.rbs_of(c)),
                    &centre,
                );
            }
        }
        alloc
    }

    /// Mean interference power per CC seen by the cell's edge UEs (all UEs if
    /// none are at the edge) during the slot.
    fn measured_interference(&self, cell: usize, alloc: &Allocation) -> Vec<f64> {
        let sp = &self.net.spectrum;
        let edge: Vec<usize> = self.cell_ues[cell]
            .iter()
            .copied()
            .filter(|&u| self.edge[u])
            .collect();
        let probes = if edge.is_empty() {
            &self.cell_ues[cell]
        } else {
            &edge
        };
        (0..sp.n_cc)
            .map(|cc| {
                let mut total = 0.0;
                for &u in probes {
                    for (j, row) in alloc.iter().enumerate() {
                        if j == cell {
                            continue;
                        }
                        let busy = sp.rbs_of(cc).filter(|&rb| row[rb].is_some()).count();
                        total += self.net.rx(j, u) * busy as f64;
                    }
                }
                total / probes.len().max(1) as f64
            })
            .collect()
    }

    fn indicators(&self, states: &[CarrierState], slot: usize) -> Vec<PccIndicator> {
        let mut out = Vec::new();
        for (cell, st) in states.iter().enumerate() {
            if let Some(p) = st.claimed() {
                for &j in &self.interferers[cell] {
                    out.push(PccIndicator {
                        from_cell: cell,
                        to_cell: j,
                        cc_index: p,
                        slot,
                    });
                }
            }
        }
        out
    }

    fn next_state(
        &self,
        cell: usize,
        prev: &CarrierState,
        sent: &[PccIndicator],
        received: &[PccIndicator],
        interference: &[f64],
    ) -> CarrierState {
        let n_cc = self.net.spectrum.n_cc;
        let mut blocked: BTreeSet<usize> = received.iter().map(|m| m.cc_index).collect();
        let mut st = CarrierState {
            blocked: BTreeSet::new(),
            ..Default::default()
        };
        let Some(p) = prev.claimed() else {
            st.blocked = blocked;
            return st;
        };
        let mut primary = p;
        if blocked.contains(&p) {
            let senders: Vec<usize> = received
                .iter()
                .filter(|m| m.cc_index == p)
                .map(|m| m.from_cell)
                .collect();
            let mutual_and_senior = senders
                .iter()
                .all(|&j| cell < j && sent.iter().any(|m| m.to_cell == j && m.cc_index == p));
            if mutual_and_senior {
                st.held = Some(p);
            } else {
                let pick = (0..n_cc)
                    .filter(|c| !blocked.contains(c))
                    .min_by(|&a, &b| interference[a].total_cmp(&interference[b]).then(a.cmp(&b)));
                match pick {
                    Some(c) => primary = c,
                    None => {
                        blocked.remove(&p);
                        st.contention = true;
                    }
                }
            }
        }
        if st.held.is_none() {
            st.pcc.insert(primary);
        }
        st.scc = (0..n_cc)
            .filter(|c| !blocked.contains(c) && !st.pcc.contains(c) && st.held != Some(*c))
            .collect();
        st.blocked = blocked;
        st
    }
}

/// Runs the protocol for `params.slots` slots. `initial_pcc[c]` is the PCC of
/// cell `c` in slot 0; cells without UEs hold no carriers.
pub fn run_dacca(
    net: &CarrierNetwork,
    params: &DaccaParams,
    initial_pcc: &[usize],
    link: &LinkAbstraction,
) -> Result<DaccaOutcome> {
    net.spectrum.validate()?;
    let n = net.n_cells();
    if initial_pcc.len() != n || initial_pcc.iter().any(|&c| c >= net.spectrum.n_cc) {
        return Err(Error::invalid(
            "one initial PCC per cell, within the CC range",
        ));
    }
    if params.slots == 0 {
        return Err(Error::invalid("at least one slot"));
    }
    let gamma = 10f64.powf(params.gamma_th_db / 10.0);
    let cell_ues = net.cell_ues();
    let edge: Vec<bool> = (0..net.ue_cell.len())
        .map(|u| net.reference_sinr(u, &BTreeSet::new()) < gamma)
        .collect();
    let interferers = (0..n)
        .map(|c| identify_interferers(net, c, params.gamma_th_db))
        .collect();
    let proto = Protocol {
        net,
        cell_ues,
        edge,
        interferers,
    };

    let mut states: Vec<CarrierState> = (0..n)
        .map(|c| {
            if proto.cell_ues[c].is_empty() {
                return CarrierState::default();
            }
            let pcc = initial_pcc[c];
            CarrierState {
                pcc: BTreeSet::from([pcc]),
                scc: (0..net.spectrum.n_cc).filter(|&k| k != pcc).collect(),
                ..Default::default()
            }
        })
        .collect();
    let mut trace: Vec<SlotTrace> = Vec::with_capacity(params.slots);
    let mut fixed_point_slot = None;
    let mut contention_events = 0;
    let mut final_ues = Vec::new();
    for slot in 0..params.slots {
        let alloc = proto.allocate(&states);
        let blocked_transmissions = states
            .iter()
            .zip(&alloc)
            .map(|(st, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(rb, o)| o.is_some() && st.blocked.contains(&net.spectrum.cc_of(*rb)))
                    .count()
            })
            .sum();
        contention_events += states.iter().filter(|s| s.contention).count();
        let sent = proto.indicators(&states, slot);
        if slot > 0 && fixed_point_slot.is_none() && trace[slot - 1].states == states {
            fixed_point_slot = Some(slot);
        }
        if slot + 1 == params.slots {
            final_ues = evaluate_allocation(net, &alloc, link, slot);
        }
        let next: Vec<CarrierState> = (0..n)
            .map(|c| {
                let mine: Vec<PccIndicator> =
                    sent.iter().filter(|m| m.from_cell == c).copied().collect();
                let recv: Vec<PccIndicator> =
                    sent.iter().filter(|m| m.to_cell == c).copied().collect();
                let meas = proto.measured_interference(c, &alloc);
                proto.next_state(c, &states[c], &mine, &recv, &meas)
            })
            .collect();
        trace.push(SlotTrace {
            slot,
            states,
            indicators_sent: sent,
            blocked_transmissions,
        });
        states = next;
    }
    Ok(DaccaOutcome {
        trace,
        fixed_point_slot,
        contention_events,
        final_ues,
    })
}

/// Uniform random initial PCC per cell.
pub fn random_initial_pcc(n_cells: usize, n_cc: usize, rng: &mut SimRng) -> Vec<usize> {
    (0..n_cells).map(|_| rng.random_range(0..n_cc)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FfrReuse {
    /// One of four CCs per cell.
    OneOfFour,
    /// Two of four CCs per cell.
    TwoOfFour,
}

impl FfrReuse {
    pub fn ccs_per_cell(self) -> usize {
        match self {
            FfrReuse::OneOfFour => 1,
            FfrReuse::TwoOfFour => 2,
        }
    }
}

/// Static FFR carrier baseline: each cell draws its CCs uniformly at random.
pub fn ffr_assignment(
    n_cells: usize,
    n_cc: usize,
    reuse: FfrReuse,
    rng: &mut SimRng,
) -> Result<Vec<CarrierState>> {
    let k = reuse.ccs_per_cell();
    if n_cc < k {
        return Err(Error::invalid(format!("FFR needs at least {k} CCs")));
    }
    Ok((0..n_cells)
        .map(|_| CarrierState {
            scc: sample(rng, n_cc, k).into_iter().collect(),
            ..Default::default()
        })
        .collect())
}

/// Every UE of a cell shares all RBs of the cell's carriers round-robin.
pub fn allocate_static(net: &CarrierNetwork, states: &[CarrierState]) -> Allocation {
    let sp = &net.spectrum;
    let cell_ues = net.cell_ues();
    let mut alloc = vec![vec![None; sp.n_rb()]; net.n_cells()];
    for (cell, st) in states.iter().enumerate() {
        let rbs = st.used().into_iter().flat_map(|c| sp.rbs_of(c));
        round_robin(&mut alloc[cell], rbs, &cell_ues[cell]);
    }
    alloc
}

/// Sub-band partition for macro FFR: `s[0]` is the reuse-1 inner band,
/// `s[1..4]` the reuse-3 outer bands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FfrPlan {
    pub s: [Vec<usize>; 4],
    pub n_subbands: usize,
}

impl FfrPlan {
    /// `|S1| = |S2| = |S3| = n / 4` rounded down, the rest goes to `S0`.
    pub fn new(n_subbands: usize) -> Result<Self> {
        if n_subbands < 4 {
            return Err(Error::invalid("FFR plan needs at least 4 sub-bands"));
        }
        let m = n_subbands / 4;
        let s0 = n_subbands - 3 * m;
        let s = [
            (0..s0).collect(),
            (s0..s0 + m).collect(),
            (s0 + m..s0 + 2 * m).collect(),
            (s0 + 2 * m..n_subbands).collect(),
        ];
        Ok(FfrPlan { s, n_subbands })
    }
}

/// Macro FFR: the shared plan, the outer colour (1..=3) of each macro sector
/// and the inner radius.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroFfr {
    pub plan: FfrPlan,
    /// Indexed by cell id; `None` for non-macro cells.
    pub colour: Vec<Option<usize>>,
    pub inner_radius: f64,
}

impl MacroFfr {
    /// Inner iff the projection of the UE onto the sector boresight is below
    /// the inner radius (radial distance for omni cells).
    pub fn is_inner(
        &self,
        layout: &ScenarioLayout,
        cell: usize,
        pos: &crate::geometry::Position,
    ) -> bool {
        let c = &layout.cells()[cell];
        let (dx, dy) = layout.displacement(&c.position, pos);
        let along = match c.antenna {
            Antenna::TriSector => dx * c.boresight.cos() + dy * c.boresight.sin(),
            Antenna::Omni => (dx * dx + dy * dy).sqrt(),
        };
        along < self.inner_radius
    }

    /// Sub-bands a UE of `cell` at `pos` may be scheduled on.
    pub fn subbands_for(
        &self,
        layout: &ScenarioLayout,
        cell: usize,
        pos: &crate::geometry::Position,
    ) -> &[usize] {
        if self.is_inner(layout, cell, pos) {
            &self.plan.s[0]
        } else {
            &self.plan.s[self.colour[cell].unwrap_or(1)]
        }
    }
}

/// Sector centre: a third of the site spacing along the boresight.
fn sector_anchor(layout: &ScenarioLayout, cell: usize, isd: f64) -> crate::geometry::Position {
    let c = &layout.cells()[cell];
    let mut p = c.position;
    if c.antenna == Antenna::TriSector {
        p.x += isd / 3.0 * c.boresight.cos();
        p.y += isd / 3.0 * c.boresight.sin();
    }
    p
}

/// Macro sectors whose coverage hexagons share an edge.
pub fn sector_adjacency(layout: &ScenarioLayout, isd: f64) -> Vec<(usize, usize)> {
    let macros: Vec<usize> = layout
        .cells()
        .iter()
        .filter(|c| c.tier == Tier::Macro)
        .map(|c| c.id)
        .collect();
    let tri = layout
        .cells()
        .iter()
        .any(|c| c.tier == Tier::Macro && c.antenna == Antenna::TriSector);
    let spacing = if tri { isd / 3f64.sqrt() } else { isd };
    let mut out = Vec::new();
    for (k, &a) in macros.iter().enumerate() {
        for &b in &macros[k + 1..] {
            let (pa, pb) = (sector_anchor(layout, a, isd), sector_anchor(layout, b, isd));
            let (dx, dy) = layout.displacement(&pa, &pb);
            if (dx * dx + dy * dy).sqrt() < spacing * 1.01 {
                out.push((a, b));
            }
        }
    }
    out
}

/// Builds the macro FFR plan with a proper 3-colouring of the sector
/// adjacency graph (backtracking, lowest colour first).
pub fn ffr_macro_plan(
    layout: &ScenarioLayout,
    isd: f64,
    inner_radius: f64,
    n_subbands: usize,
) -> Result<MacroFfr> {
    let plan = FfrPlan::new(n_subbands)?;
    let n = layout.cells().len();
    let macros: Vec<usize> = layout
        .cells()
        .iter()
        .filter(|c| c.tier == Tier::Macro)
        .map(|c| c.id)
        .collect();
    let mut nbrs = vec![Vec::new(); n];
    for (a, b) in sector_adjacency(layout, isd) {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let mut colour: Vec<Option<usize>> = vec![None; n];
    fn assign(
        k: usize,
        order: &[usize],
        nbrs: &[Vec<usize>],
        colour: &mut [Option<usize>],
    ) -> bool {
        let Some(&v) = order.get(k) else { return true };
        for c in 1..=3 {
            if nbrs[v].iter().all(|&u| colour[u] != Some(c)) {
                colour[v] = Some(c);
                if assign(k + 1, order, nbrs, colour) {
                    return true;
                }
            }
        }
        colour[v] = None;
        false
    }
    if !assign(0, &macros, &nbrs, &mut colour) {
        return Err(Error::invalid("macro sectors admit no 3-colouring"));
    }
    Ok(MacroFfr {
        plan,
        colour,
        inner_radius,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubbandChoice {
    pub subbands: BTreeSet<usize>,
    /// The eligible set was empty and the global minimum was used instead.
    pub fallback: bool,
}

/// Sub-bands a femto may use: everything outside the local sector's plan,
/// plus the inner band when the femto sits in the sector's outer region.
pub fn femto_eligible(plan: &FfrPlan, sector_colour: usize, at_edge: bool) -> BTreeSet<usize> {
    (0..plan.n_subbands)
        .filter(|b| !plan.s[sector_colour].contains(b) && (at_edge || !plan.s[0].contains(b)))
        .collect()
}

/// The `k` eligible sub-bands with the lowest measured RSS, ties to the lower
/// index. An empty eligible set falls back to the whole band.
pub fn femto_subband_select(
    rss_per_subband: &[f64],
    eligible: &BTreeSet<usize>,
    k: usize,
) -> SubbandChoice {
    let fallback = eligible.iter().all(|&b| b >= rss_per_subband.len());
    let mut pool: Vec<usize> = if fallback {
        (0..rss_per_subband.len()).collect()
    } else {
        eligible
            .iter()
            .copied()
            .filter(|&b| b < rss_per_subband.len())
            .collect()
    };
    pool.sort_by(|&a, &b| {
        rss_per_subband[a]
            .total_cmp(&rss_per_subband[b])
            .then(a.cmp(&b))
    });
    SubbandChoice {
        subbands: pool.into_iter().take(k).collect(),
        fallback,
    }
}

/// Aggregate RSS per sub-band at `femto` from every other cell transmitting
/// on it (`usage[cell]` lists its sub-bands, `power[cell]` is per sub-band).
pub fn measure_subband_rss(
    gains_to_point: &[f64],
    usage: &[BTreeSet<usize>],
    power: &[f64],
    femto: usize,
    n_subbands: usize,
) -> Vec<f64> {
    let mut rss = vec![0.0; n_subbands];
    for (cell, bands) in usage.iter().enumerate() {
        if cell == femto {
            continue;
        }
        for &b in bands {
            if b < n_subbands {
                rss[b] += power[cell] * gains_to_point[cell];
            }
        }
    }
    rss
}
