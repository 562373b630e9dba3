//! Base-station power and cost models, the density/load efficiency sweep,
//! and cell DTX schedulers (classic, E-DTX, multi-cell DTX) driven by NRTV
//! traffic.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Pareto};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::geometry::{
    build_apartment_grid, build_hex_grid, drop_ues_in_hex_cells, ApartmentParams, Tier,
};
use crate::link::{cell_load, LinkAbstraction, TierOffsets};
use crate::rng::{self, SimRng};
use crate::scenario::Realization;

/// Load-dependent base-station power model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerModelParams {
    pub n_antennas: u32,
    pub radio_head_efficiency: f64,
    pub overhead_power: f64,
}

impl PowerModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas < 1 {
            return Err(Error::invalid("n_antennas must be >= 1"));
        }
        if !(self.radio_head_efficiency > 0.0 && self.radio_head_efficiency <= 1.0) {
            return Err(Error::invalid("radio_head_efficiency must lie in (0, 1]"));
        }
        if !(self.overhead_power >= 0.0) {
            return Err(Error::invalid("overhead_power must be >= 0"));
        }
        Ok(())
    }
}

/// `N_a (p_tx L / mu + P_OH)` with `p_tx` per antenna.
pub fn bs_power(params: &PowerModelParams, p_tx: f64, load: f64) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&load) {
        return Err(Error::invalid(format!(
            "load must lie in [0, 1], got {load}"
        )));
    }
    if !(p_tx >= 0.0) {
        return Err(Error::invalid("p_tx must be >= 0"));
    }
    let n = params.n_antennas as f64;
    Ok(n * (p_tx * load / params.radio_head_efficiency + params.overhead_power))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModelParams {
    /// $/kWh.
    pub electricity_price: f64,
    /// Hours per year the BS is on.
    pub active_hours: f64,
    /// $/year for site and backhaul.
    pub rental: f64,
}

impl CostModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.electricity_price >= 0.0 && self.active_hours >= 0.0 && self.rental >= 0.0) {
            return Err(Error::invalid("cost parameters must be >= 0"));
        }
        Ok(())
    }
}

/// Annual cost in $ of a BS drawing `p_bs_w` watts.
pub fn bs_cost(params: &CostModelParams, p_bs_w: f64) -> f64 {
    p_bs_w / 1e3 * params.active_hours * params.electricity_price + params.rental
}

/// Network-wide sums from one drop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NetworkTotals {
    /// Sum over cells of the achievable cell rate at the operating point.
    pub capacity_bps: f64,
    pub served_bps: f64,
    /// Sum of the cells' bandwidths.
    pub bandwidth_hz: f64,
    pub power_w: f64,
    /// $/year.
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Efficiency {
    /// bit/s/Hz.
    pub se: f64,
    /// bit/J.
    pub ee: f64,
    /// bit/s per $/year.
    pub ce: f64,
}

pub fn efficiency_triplet(t: &NetworkTotals) -> Result<Efficiency> {
    if !(t.bandwidth_hz > 0.0) {
        return Err(Error::UndefinedRatio(
            "spectral efficiency with zero bandwidth".into(),
        ));
    }
    if !(t.power_w > 0.0) {
        return Err(Error::UndefinedRatio(
            "energy efficiency with zero power".into(),
        ));
    }
    if !(t.cost > 0.0) {
        return Err(Error::UndefinedRatio(
            "cost efficiency with zero cost".into(),
        ));
    }
    Ok(Efficiency {
        se: t.capacity_bps / t.bandwidth_hz,
        ee: t.served_bps / t.power_w,
        ce: t.served_bps / t.cost,
    })
}

/// Input-power model with a sleep state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtxParams {
    pub p0: f64,
    pub delta_p: f64,
    pub p_max: f64,
    pub p_sleep: f64,
}

impl DtxParams {
    pub fn macro_cell() -> Self {
        DtxParams {
            p0: 130.0,
            delta_p: 4.7,
            p_max: 20.0,
            p_sleep: 75.0,
        }
    }

    pub fn small_cell() -> Self {
        DtxParams {
            p0: 6.8,
            delta_p: 4.0,
            p_max: 0.13,
            p_sleep: 4.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_sleep >= 0.0
            && self.p_sleep < self.p0
            && self.delta_p >= 0.0
            && self.p_max > 0.0)
        {
            return Err(Error::invalid(
                "DTX parameters need 0 <= p_sleep < p0, delta_p >= 0, p_max > 0",
            ));
        }
        Ok(())
    }
}

/// `p_sleep` at zero output, `p0 + delta_p * p_out` otherwise.
pub fn dtx_input_power(params: &DtxParams, p_out: f64) -> Result<f64> {
    if !(p_out >= 0.0) || p_out > params.p_max {
        return Err(Error::invalid(format!(
            "p_out {p_out} outside [0, {}]",
            params.p_max
        )));
    }
    Ok(if p_out == 0.0 {
        params.p_sleep
    } else {
        params.p0 + params.delta_p * p_out
    })
}

// ---------------------------------------------------------------------------
// Density / load sweep

/// One deployment archetype of the sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Deployment {
    pub tier: Tier,
    pub sectors: u8,
    /// Per antenna; a sector radiates `n_antennas * tx_power_w`.
    pub tx_power_w: f64,
    /// Per sector.
    pub power: PowerModelParams,
    /// Per site.
    pub cost: CostModelParams,
}

impl Deployment {
    pub fn pico() -> Self {
        Deployment {
            tier: Tier::Pico,
            sectors: 1,
            tx_power_w: 0.13,
            power: PowerModelParams {
                n_antennas: 2,
                radio_head_efficiency: 0.25,
                overhead_power: 26.0,
            },
            cost: CostModelParams {
                electricity_price: 0.10,
                active_hours: 8760.0,
                rental: 2_000.0,
            },
        }
    }

    pub fn micro_reference() -> Self {
        Deployment {
            tier: Tier::Micro3Sector,
            sectors: 3,
            tx_power_w: 6.3,
            power: PowerModelParams {
                n_antennas: 2,
                radio_head_efficiency: 1.0 / 2.6,
                overhead_power: 56.0,
            },
            cost: CostModelParams {
                electricity_price: 0.10,
                active_hours: 8760.0,
                rental: 10_000.0,
            },
        }
    }

    fn radiated_w(&self) -> f64 {
        self.tx_power_w * self.power.n_antennas as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepParams {
    pub small: Deployment,
    pub reference: Deployment,
    pub channel: ChannelParams,
    pub link: LinkAbstraction,
    pub n_rb: usize,
    pub rb_bandwidth: f64,
    pub ues_per_cell: usize,
    /// Area traffic at load 1, bit/s/km².
    pub peak_demand_bps_km2: f64,
    /// Reference grid density for the matched comparison, sites/km².
    pub matched_ref_density: f64,
    /// Area traffic offered to both deployments in the matched comparison.
    pub matched_demand_bps_km2: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            small: Deployment::pico(),
            reference: Deployment::micro_reference(),
            channel: ChannelParams::default(),
            link: LinkAbstraction::default(),
            n_rb: 50,
            rb_bandwidth: 180e3,
            ues_per_cell: 10,
            peak_demand_bps_km2: 150e6,
            matched_ref_density: 0.4,
            matched_demand_bps_km2: 20e6,
        }
    }
}

/// Inter-site distance in metres of a hexagonal grid with `density` sites per
/// km².
pub fn density_to_isd(density: f64) -> Result<f64> {
    if !(density > 0.0) {
        return Err(Error::invalid("density must be positive"));
    }
    Ok((2.0 / (3f64.sqrt() * density)).sqrt() * 1e3)
}

/// Operating point of one drop with load-coupled interference.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatingPoint {
    pub loads: Vec<f64>,
    pub area_km2: f64,
    pub totals: NetworkTotals,
    /// Per km².
    pub served_bps_km2: f64,
    pub power_w_km2: f64,
    pub cost_km2: f64,
}

/// Seven-site wraparound grid at `density` sites/km² with `demand` bit/s/km²
/// spread evenly over its UEs. Interferers radiate in proportion to their
/// load; loads are the least fixed point of the served-load map.
pub fn load_coupled_drop(
    p: &SweepParams,
    dep: &Deployment,
    density: f64,
    demand_bps_km2: f64,
    master: u64,
    drop: u64,
) -> Result<OperatingPoint> {
    dep.power.validate()?;
    dep.cost.validate()?;
    if !(demand_bps_km2 >= 0.0) {
        return Err(Error::invalid("demand must be >= 0"));
    }
    let isd = density_to_isd(density)?;
    let grid = build_hex_grid(7, dep.sectors, isd, dep.radiated_w(), true, dep.tier)?;
    let layout =
        drop_ues_in_hex_cells(grid, p.ues_per_cell, isd, rng::mix(master, drop, "layout"))?;
    let real = Realization::draw(layout, &p.channel, master, drop)?;
    let ue_cell = real.attach(&TierOffsets::default(), p.n_rb);
    let n_cells = real.layout.cells().len();
    let area_km2 = 7.0 * 3f64.sqrt() / 2.0 * (isd / 1e3).powi(2);
    let n_ues = ue_cell.iter().flatten().count();
    let per_ue = if n_ues == 0 {
        0.0
    } else {
        demand_bps_km2 * area_km2 / n_ues as f64
    };
    let bw = p.n_rb as f64 * p.rb_bandwidth;
    let p_rb = dep.radiated_w() / p.n_rb as f64;

    let sinr = |ue: usize, s: usize, loads: &[f64]| {
        let mut i = 0.0;
        for (j, &l) in loads.iter().enumerate() {
            if j != s {
                i += l * p_rb * real.gains.get(j, ue);
            }
        }
        p_rb * real.gains.get(s, ue) / (i + real.noise_w)
    };
    // Per cell: sum over its UEs of 1 / SE, and the UE count.
    let inverse_se = |loads: &[f64]| {
        let mut inv = vec![0.0; n_cells];
        let mut count = vec![0usize; n_cells];
        for (u, c) in ue_cell.iter().enumerate() {
            let Some(s) = *c else { continue };
            let se = p.link.spectral_efficiency(sinr(u, s, loads));
            inv[s] += if se > 0.0 { 1.0 / se } else { f64::INFINITY };
            count[s] += 1;
        }
        (inv, count)
    };
    let mut loads = vec![0.0; n_cells];
    for _ in 0..1000 {
        let (inv, _) = inverse_se(&loads);
        let next: Vec<f64> = inv.iter().map(|&s| (per_ue * s / bw).min(1.0)).collect();
        let moved = next
            .iter()
            .zip(&loads)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        loads = next;
        if moved < 1e-12 {
            break;
        }
    }
    let (inv, count) = inverse_se(&loads);
    let mut totals = NetworkTotals {
        bandwidth_hz: bw * n_cells as f64,
        ..Default::default()
    };
    let mut site_power = vec![0.0; 7];
    for c in 0..n_cells {
        let hm_se = if count[c] == 0 {
            0.0
        } else {
            count[c] as f64 / inv[c]
        };
        let state = cell_load(per_ue * count[c] as f64, bw, hm_se)?;
        totals.capacity_bps += bw * hm_se;
        totals.served_bps += state.offered_rate.min(bw * hm_se);
        site_power[real.layout.cells()[c].site] +=
            bs_power(&dep.power, dep.tx_power_w, state.load)?;
    }
    for &w in &site_power {
        totals.power_w += w;
        totals.cost += bs_cost(&dep.cost, w);
    }
    Ok(OperatingPoint {
        loads,
        area_km2,
        served_bps_km2: totals.served_bps / area_km2,
        power_w_km2: totals.power_w / area_km2,
        cost_km2: totals.cost / area_km2,
        totals,
    })
}

/// One grid point of the sweep: Monte-Carlo means over drops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub density: f64,
    pub load: f64,
    pub se: f64,
    pub ee: f64,
    pub ce: f64,
}

pub fn sweep_point(
    p: &SweepParams,
    density: f64,
    load: f64,
    drops: u64,
    master: u64,
) -> Result<SweepRow> {
    if drops == 0 {
        return Err(Error::invalid("drops must be >= 1"));
    }
    let mut acc = Efficiency::default();
    for d in 0..drops {
        let op = load_coupled_drop(
            p,
            &p.small,
            density,
            load * p.peak_demand_bps_km2,
            master,
            d,
        )?;
        let e = efficiency_triplet(&op.totals)?;
        acc.se += e.se;
        acc.ee += e.ee;
        acc.ce += e.ce;
    }
    let n = drops as f64;
    Ok(SweepRow {
        density,
        load,
        se: acc.se / n,
        ee: acc.ee / n,
        ce: acc.ce / n,
    })
}

/// At least three densities spanning a decade and at least one load.
pub fn check_sweep_grid(densities: &[f64], loads: &[f64]) -> Result<()> {
    if densities.len() < 3 || loads.is_empty() {
        return Err(Error::invalid("at least three densities and one load"));
    }
    let (lo, hi) = densities
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if hi < 10.0 * lo {
        return Err(Error::invalid("densities must span an order of magnitude"));
    }
    Ok(())
}

/// Efficiency surface of the small-cell deployment, rows in load-major order.
pub fn density_load_sweep(
    p: &SweepParams,
    densities: &[f64],
    loads: &[f64],
    drops: u64,
    master: u64,
) -> Result<Vec<SweepRow>> {
    check_sweep_grid(densities, loads)?;
    let mut rows = Vec::with_capacity(densities.len() * loads.len());
    for &l in loads {
        for &d in densities {
            rows.push(sweep_point(p, d, l, drops, master)?);
        }
    }
    Ok(rows)
}

/// Small cells against the reference at the same delivered area throughput.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchedComparison {
    pub small_density: f64,
    /// Per drop, `1 - P_small / P_ref` per km².
    pub energy_saving: Vec<f64>,
    /// Per drop, `C_small / C_ref - 1` per km².
    pub cost_increase: Vec<f64>,
}

/// The reference grid at `ref_density` carries `demand`; the small-cell
/// density is the sparsest candidate whose mean served throughput matches
/// the reference's within 0.1 %.
pub fn matched_throughput(
    p: &SweepParams,
    ref_density: f64,
    demand_bps_km2: f64,
    candidates: &[f64],
    drops: u64,
    master: u64,
) -> Result<MatchedComparison> {
    if drops == 0 {
        return Err(Error::invalid("drops must be >= 1"));
    }
    let reference: Vec<OperatingPoint> = (0..drops)
        .map(|d| load_coupled_drop(p, &p.reference, ref_density, demand_bps_km2, master, d))
        .collect::<Result<_>>()?;
    let target = reference.iter().map(|o| o.served_bps_km2).sum::<f64>() / drops as f64;
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &dens in &sorted {
        let small: Vec<OperatingPoint> = (0..drops)
            .map(|d| load_coupled_drop(p, &p.small, dens, demand_bps_km2, master, d))
            .collect::<Result<_>>()?;
        let served = small.iter().map(|o| o.served_bps_km2).sum::<f64>() / drops as f64;
        if served >= target * (1.0 - 1e-3) {
            return Ok(MatchedComparison {
                small_density: dens,
                energy_saving: small
                    .iter()
                    .zip(&reference)
                    .map(|(s, r)| 1.0 - s.power_w_km2 / r.power_w_km2)
                    .collect(),
                cost_increase: small
                    .iter()
                    .zip(&reference)
                    .map(|(s, r)| s.cost_km2 / r.cost_km2 - 1.0)
                    .collect(),
            });
        }
    }
    Err(Error::invalid(
        "no candidate density matches the reference throughput",
    ))
}

// ---------------------------------------------------------------------------
// NRTV traffic

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NrtvParams {
    pub period_slots: u64,
    pub mean_bytes: f64,
    pub max_bytes: f64,
    pub shape: f64,
    /// Deadline offset from arrival.
    pub deadline_slots: u64,
}

impl Default for NrtvParams {
    fn default() -> Self {
        NrtvParams {
            period_slots: 100,
            mean_bytes: 3000.0,
            max_bytes: 12_000.0,
            shape: 1.2,
            deadline_slots: 150,
        }
    }
}

impl NrtvParams {
    pub fn validate(&self) -> Result<()> {
        if self.period_slots == 0 || self.deadline_slots == 0 {
            return Err(Error::invalid("NRTV period and deadline must be >= 1 slot"));
        }
        if !(self.shape > 0.0) {
            return Err(Error::invalid("Pareto shape must be positive"));
        }
        if !(self.mean_bytes > 0.0 && self.mean_bytes < self.max_bytes) {
            return Err(Error::invalid("NRTV mean frame size must lie in (0, max)"));
        }
        Ok(())
    }
}

/// Mean of `min(X, max)` for `X ~ Pareto(scale, shape)` and `scale <= max`.
pub fn clipped_pareto_mean(scale: f64, shape: f64, max: f64) -> f64 {
    let tail = if (shape - 1.0).abs() < 1e-12 {
        scale * (max / scale).ln()
    } else {
        scale.powf(shape) * (max.powf(1.0 - shape) - scale.powf(1.0 - shape)) / (1.0 - shape)
    };
    scale + tail
}

/// Pareto scale whose clipped mean equals `mean`, by bisection.
pub fn pareto_scale_for_mean(shape: f64, max: f64, mean: f64) -> Result<f64> {
    if !(shape > 0.0 && mean > 0.0 && mean < max) {
        return Err(Error::invalid("need shape > 0 and 0 < mean < max"));
    }
    let (mut lo, mut hi) = (0.0f64, max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || clipped_pareto_mean(mid, shape, max) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Priority {
    High,
    Low,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Packet {
    pub ue: usize,
    /// Bytes still to deliver.
    pub bytes: f64,
    pub arrival: u64,
    /// First slot at which the packet is dropped.
    pub deadline: u64,
}

impl Packet {
    pub fn priority(&self, slot: u64, horizon: u64) -> Priority {
        if self.deadline.saturating_sub(slot) <= horizon {
            Priority::High
        } else {
            Priority::Low
        }
    }
}

/// Per-UE FIFO.
pub type TrafficQueue = VecDeque<Packet>;

/// Frame arrivals per UE over `slots`, each UE with a uniform random phase.
pub fn nrtv_traffic(
    params: &NrtvParams,
    n_ues: usize,
    slots: u64,
    seed: u64,
) -> Result<Vec<Vec<Packet>>> {
    params.validate()?;
    let scale = pareto_scale_for_mean(params.shape, params.max_bytes, params.mean_bytes)?;
    let pareto = Pareto::new(scale, params.shape).map_err(|e| Error::invalid(e.to_string()))?;
    let mut r: SimRng = rng::stream(seed, 0, "nrtv");
    let mut out = Vec::with_capacity(n_ues);
    for ue in 0..n_ues {
        let mut t = r.random_range(0..params.period_slots);
        let mut frames = Vec::new();
        while t < slots {
            let bytes = pareto.sample(&mut r).min(params.max_bytes);
            frames.push(Packet {
                ue,
                bytes,
                arrival: t,
                deadline: t + params.deadline_slots,
            });
            t += params.period_slots;
        }
        out.push(frames);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Proportional fair scheduling

/// Per RB, the UE with backlog maximising `rates[u][rb] / avg[u]`, lowest
/// index on ties. `backlog` is drawn down as RBs are handed out; use
/// `f64::INFINITY` for full buffer.
pub fn pf_schedule(rates: &[Vec<f64>], avg: &[f64], backlog: &mut [f64]) -> Vec<Option<usize>> {
    let n_rb = rates.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![None; n_rb];
    for (rb, slot) in out.iter_mut().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (u, r) in rates.iter().enumerate() {
            let rate = r.get(rb).copied().unwrap_or(0.0);
            if !(backlog[u] > 0.0) || !(rate > 0.0) {
                continue;
            }
            let metric = rate / avg[u].max(f64::MIN_POSITIVE);
            if best.map_or(true, |(_, m)| metric > m) {
                best = Some((u, metric));
            }
        }
        if let Some((u, _)) = best {
            backlog[u] -= rates[u][rb];
            *slot = Some(u);
        }
    }
    out
}

/// Exponential smoothing with window `window` slots.
pub fn pf_update(avg: &mut [f64], served: &[f64], window: f64) {
    let a = 1.0 / window.max(1.0);
    for (m, &s) in avg.iter_mut().zip(served) {
        *m = (1.0 - a) * *m + a * s;
    }
}

// ---------------------------------------------------------------------------
// DTX schedulers

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DtxScheme {
    /// Transmit whenever there is backlog, PF across backlogged UEs.
    Classic,
    /// Buffer until a packet turns high priority, then drain by deadline.
    Enhanced,
    /// Cluster-wide packing with activation control.
    MultiCell,
}

impl DtxScheme {
    pub fn name(self) -> &'static str {
        match self {
            DtxScheme::Classic => "dtx",
            DtxScheme::Enhanced => "edtx",
            DtxScheme::MultiCell => "mcdtx",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellAccess {
    /// Home cell only.
    Closed,
    /// Any cell with a usable link.
    Open,
}

impl CellAccess {
    pub fn name(self) -> &'static str {
        match self {
            CellAccess::Closed => "closed",
            CellAccess::Open => "open",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellState {
    Tx,
    Sleep,
    Off,
}

impl CellState {
    pub fn name(self) -> &'static str {
        match self {
            CellState::Tx => "tx",
            CellState::Sleep => "sleep",
            CellState::Off => "off",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DtxConfig {
    pub scheme: DtxScheme,
    pub access: CellAccess,
    pub params: DtxParams,
    pub n_rb: usize,
    pub slots: u64,
    /// Seconds per slot.
    pub tti_s: f64,
    pub priority_horizon: u64,
    pub pf_window: f64,
    /// Idle slots before a multi-cell DTX cell may switch off.
    pub deactivate_after: u64,
    /// Input power of a switched-off cell.
    pub off_power_w: f64,
    pub trace: bool,
}

impl DtxConfig {
    pub fn new(scheme: DtxScheme, access: CellAccess) -> Self {
        DtxConfig {
            scheme,
            access,
            params: DtxParams::small_cell(),
            n_rb: 50,
            slots: 2000,
            tti_s: 1e-3,
            priority_horizon: 5,
            pf_window: 100.0,
            deactivate_after: 10,
            off_power_w: 0.0,
            trace: false,
        }
    }
}

/// Link table of one DTX cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct DtxLinks {
    /// `bytes_per_rb[c][u]`: bytes one RB of cell `c` carries to `u` per slot;
    /// zero marks an unusable link.
    pub bytes_per_rb: Vec<Vec<f64>>,
    /// Closed-access cell of each UE.
    pub home: Vec<Option<usize>>,
    /// Full-band output power of each cell.
    pub tx_power_w: Vec<f64>,
}

impl DtxLinks {
    fn n_ues(&self) -> usize {
        self.home.len()
    }

    fn usable(&self, c: usize, u: usize) -> bool {
        self.bytes_per_rb[c][u] > 0.0
    }

    /// Strongest usable cell, lowest id on ties.
    fn best_cell(&self, u: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..self.bytes_per_rb.len() {
            let b = self.bytes_per_rb[c][u];
            if b > 0.0 && best.map_or(true, |(_, x)| b > x) {
                best = Some((c, b));
            }
        }
        best.map(|(c, _)| c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtxTraceRow {
    pub slot: u64,
    pub cell: usize,
    pub state: CellState,
    pub p_out: f64,
    pub p_in: f64,
    pub served_bytes: f64,
    pub drops: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DtxOutcome {
    pub cells: usize,
    pub slots: u64,
    pub energy_j: f64,
    /// Cluster input power averaged over slots.
    pub mean_power_w: f64,
    /// Cell-slots in the tx state.
    pub tx_slots: u64,
    /// Cell-slots not transmitting (sleep or off).
    pub sleep_slots: u64,
    pub off_slots: u64,
    pub delivered_packets: u64,
    pub dropped_packets: u64,
    pub delivered_bytes: f64,
    /// Packets of UEs without any usable cell; never offered.
    pub unreachable_packets: u64,
    pub trace: Vec<DtxTraceRow>,
}

/// Gives one RB worth `bytes` to the head of `q`, spilling into later
/// packets of the same UE. Returns (bytes delivered, packets completed).
fn drain(q: &mut TrafficQueue, mut bytes: f64) -> (f64, u64) {
    let mut delivered = 0.0;
    let mut done = 0;
    while bytes > 0.0 {
        let Some(head) = q.front_mut() else { break };
        let take = head.bytes.min(bytes);
        head.bytes -= take;
        bytes -= take;
        delivered += take;
        if head.bytes <= 1e-9 {
            q.pop_front();
            done += 1;
        }
    }
    (delivered, done)
}

/// UE among `ues` with the earliest head deadline, lowest index on ties.
fn earliest_head(queues: &[TrafficQueue], ues: impl Iterator<Item = usize>) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for u in ues {
        if let Some(p) = queues[u].front() {
            if best.map_or(true, |(_, d)| p.deadline < d) {
                best = Some((u, p.deadline));
            }
        }
    }
    best.map(|(u, _)| u)
}

/// Flags UEs holding a packet that turns high priority under a horizon
/// stretched by the slots cell `c` needs to drain, in deadline order, all of
/// `ues`' backlog up to and including that packet.
fn urgent_ues(
    queues: &[TrafficQueue],
    ues: &[usize],
    rate: impl Fn(usize) -> f64,
    slot: u64,
    horizon: u64,
    n_rb: usize,
    flags: &mut [bool],
) {
    let mut backlog: Vec<&Packet> = ues.iter().flat_map(|&u| queues[u].iter()).collect();
    backlog.sort_by_key(|p| (p.deadline, p.ue, p.arrival));
    let mut rbs = 0.0;
    for p in backlog {
        rbs += p.bytes / rate(p.ue);
        let need = (rbs / n_rb as f64).ceil() as u64;
        if p.priority(slot, horizon.saturating_add(need)) == Priority::High {
            flags[p.ue] = true;
        }
    }
}

/// Runs one cluster for `cfg.slots` slots on the given arrivals.
pub fn simulate_dtx(
    cfg: &DtxConfig,
    links: &DtxLinks,
    arrivals: &[Vec<Packet>],
) -> Result<DtxOutcome> {
    cfg.params.validate()?;
    let n_cells = links.bytes_per_rb.len();
    let n_ues = links.n_ues();
    if links.tx_power_w.len() != n_cells || links.bytes_per_rb.iter().any(|r| r.len() != n_ues) {
        return Err(Error::invalid("link table dimensions disagree"));
    }
    if arrivals.len() != n_ues {
        return Err(Error::invalid("one arrival list per UE required"));
    }
    if links
        .tx_power_w
        .iter()
        .any(|&p| !(p > 0.0) || p > cfg.params.p_max)
    {
        return Err(Error::invalid("cell tx power must lie in (0, p_max]"));
    }
    if cfg.n_rb == 0 {
        return Err(Error::invalid("n_rb must be >= 1"));
    }
    if cfg.scheme == DtxScheme::MultiCell && cfg.access == CellAccess::Closed {
        return Err(Error::invalid(
            "multi-cell DTX needs an open-access cluster",
        ));
    }

    // Fixed serving cell for single-cell schemes; drop attribution for all.
    let anchor: Vec<Option<usize>> = (0..n_ues)
        .map(|u| match cfg.access {
            CellAccess::Closed => links.home[u].filter(|&c| links.usable(c, u)),
            CellAccess::Open => links.best_cell(u),
        })
        .collect();
    let mut out = DtxOutcome {
        cells: n_cells,
        slots: cfg.slots,
        ..Default::default()
    };
    let mut pending: Vec<std::slice::Iter<Packet>> = arrivals.iter().map(|a| a.iter()).collect();
    let mut queues: Vec<TrafficQueue> = vec![VecDeque::new(); n_ues];
    let mut avg = vec![1.0; n_ues];
    let mut on = vec![true; n_cells];
    let mut idle = vec![0u64; n_cells];
    let members: Vec<Vec<usize>> = (0..n_cells)
        .map(|c| (0..n_ues).filter(|&u| anchor[u] == Some(c)).collect())
        .collect();

    for slot in 0..cfg.slots {
        let mut drops = vec![0u64; n_cells];
        for u in 0..n_ues {
            while let Some(p) = pending[u].as_slice().first() {
                if p.arrival > slot {
                    break;
                }
                pending[u].next();
                if anchor[u].is_some() {
                    queues[u].push_back(*p);
                } else {
                    out.unreachable_packets += 1;
                }
            }
            let before = queues[u].len();
            queues[u].retain(|p| p.deadline > slot);
            let lost = (before - queues[u].len()) as u64;
            if lost > 0 {
                out.dropped_packets += lost;
                drops[anchor[u].expect("queued UEs have an anchor")] += lost;
            }
        }

        let mut urgent = vec![false; n_ues];
        if cfg.scheme != DtxScheme::Classic {
            for c in 0..n_cells {
                let rate = |u: usize| links.bytes_per_rb[c][u];
                urgent_ues(
                    &queues,
                    &members[c],
                    rate,
                    slot,
                    cfg.priority_horizon,
                    cfg.n_rb,
                    &mut urgent,
                );
            }
        }
        let mut used = vec![0usize; n_cells];
        let mut served = vec![0.0; n_cells];
        let mut give = |c: usize,
                        u: usize,
                        queues: &mut [TrafficQueue],
                        used: &mut [usize],
                        out: &mut DtxOutcome| {
            let (b, done) = drain(&mut queues[u], links.bytes_per_rb[c][u]);
            used[c] += 1;
            served[c] += b;
            out.delivered_bytes += b;
            out.delivered_packets += done;
            b
        };

        match cfg.scheme {
            DtxScheme::Classic => {
                let mut got = vec![0.0; n_ues];
                for c in 0..n_cells {
                    let ues = &members[c];
                    if ues.iter().all(|&u| queues[u].is_empty()) {
                        continue;
                    }
                    let rates: Vec<Vec<f64>> = ues
                        .iter()
                        .map(|&u| vec![links.bytes_per_rb[c][u]; cfg.n_rb])
                        .collect();
                    let local_avg: Vec<f64> = ues.iter().map(|&u| avg[u]).collect();
                    let mut backlog: Vec<f64> = ues
                        .iter()
                        .map(|&u| queues[u].iter().map(|p| p.bytes).sum())
                        .collect();
                    for k in pf_schedule(&rates, &local_avg, &mut backlog)
                        .into_iter()
                        .flatten()
                    {
                        let u = ues[k];
                        got[u] += give(c, u, &mut queues, &mut used, &mut out);
                    }
                }
                pf_update(&mut avg, &got, cfg.pf_window);
            }
            DtxScheme::Enhanced => {
                for c in 0..n_cells {
                    let ues = &members[c];
                    let urgent: Vec<usize> = ues.iter().copied().filter(|&u| urgent[u]).collect();
                    if urgent.is_empty() {
                        continue;
                    }
                    while used[c] < cfg.n_rb {
                        let Some(u) = earliest_head(&queues, urgent.iter().copied()) else {
                            break;
                        };
                        give(c, u, &mut queues, &mut used, &mut out);
                    }
                    while used[c] < cfg.n_rb {
                        let Some(u) = earliest_head(&queues, ues.iter().copied()) else {
                            break;
                        };
                        give(c, u, &mut queues, &mut used, &mut out);
                    }
                }
            }
            DtxScheme::MultiCell => {
                // High priority first, packed onto transmitting, then awake,
                // then sleeping-off cells.
                let urgent: Vec<usize> = (0..n_ues).filter(|&u| urgent[u]).collect();
                loop {
                    let high = urgent.iter().copied().filter(|&u| {
                        (0..n_cells).any(|c| links.usable(c, u) && used[c] < cfg.n_rb)
                    });
                    let Some(u) = earliest_head(&queues, high) else {
                        break;
                    };
                    let rank = |c: usize| {
                        (
                            if used[c] > 0 {
                                0
                            } else if on[c] {
                                1
                            } else {
                                2
                            },
                            c,
                        )
                    };
                    let c = (0..n_cells)
                        .filter(|&c| links.usable(c, u) && used[c] < cfg.n_rb)
                        .min_by(|&a, &b| {
                            let (ga, _) = rank(a);
                            let (gb, _) = rank(b);
                            ga.cmp(&gb)
                                .then(links.bytes_per_rb[b][u].total_cmp(&links.bytes_per_rb[a][u]))
                                .then(a.cmp(&b))
                        })
                        .expect("filtered UE has a free usable cell");
                    on[c] = true;
                    give(c, u, &mut queues, &mut used, &mut out);
                }
                for c in 0..n_cells {
                    if used[c] == 0 {
                        continue;
                    }
                    while used[c] < cfg.n_rb {
                        let reach = (0..n_ues).filter(|&u| links.usable(c, u));
                        let Some(u) = earliest_head(&queues, reach) else {
                            break;
                        };
                        give(c, u, &mut queues, &mut used, &mut out);
                    }
                }
            }
        }

        for c in 0..n_cells {
            let state = if used[c] > 0 {
                CellState::Tx
            } else if on[c] {
                CellState::Sleep
            } else {
                CellState::Off
            };
            let p_out = used[c] as f64 / cfg.n_rb as f64 * links.tx_power_w[c];
            let p_in = match state {
                CellState::Off => cfg.off_power_w,
                _ => dtx_input_power(&cfg.params, p_out)?,
            };
            out.energy_j += p_in * cfg.tti_s;
            match state {
                CellState::Tx => out.tx_slots += 1,
                CellState::Sleep => out.sleep_slots += 1,
                CellState::Off => {
                    out.sleep_slots += 1;
                    out.off_slots += 1;
                }
            }
            if cfg.trace {
                out.trace.push(DtxTraceRow {
                    slot,
                    cell: c,
                    state,
                    p_out,
                    p_in,
                    served_bytes: served[c],
                    drops: drops[c],
                });
            }
        }

        if cfg.scheme == DtxScheme::MultiCell {
            for c in 0..n_cells {
                idle[c] = if used[c] > 0 { 0 } else { idle[c] + 1 };
                if !on[c] || idle[c] < cfg.deactivate_after {
                    continue;
                }
                // Switch off only while every UE it reaches keeps another awake cell.
                let covered = (0..n_ues)
                    .filter(|&u| anchor[u].is_some() && links.usable(c, u))
                    .all(|u| (0..n_cells).any(|o| o != c && on[o] && links.usable(o, u)));
                if covered {
                    on[c] = false;
                }
            }
        }
    }
    out.mean_power_w = if cfg.slots == 0 {
        0.0
    } else {
        out.energy_j / (cfg.slots as f64 * cfg.tti_s)
    };
    Ok(out)
}

// ---------------------------------------------------------------------------
// Femto apartment preset

#[derive(Clone, Debug, PartialEq)]
pub struct FemtoDtxPreset {
    pub apartment: ApartmentParams,
    pub channel: ChannelParams,
    pub link: LinkAbstraction,
    pub nrtv: NrtvParams,
    pub dtx: DtxParams,
    pub n_rb: usize,
    pub rb_bandwidth: f64,
    pub tti_s: f64,
    pub slots: u64,
    pub priority_horizon: u64,
    pub pf_window: f64,
    pub deactivate_after: u64,
    /// Links below this SNR are unusable.
    pub min_snr_db: f64,
}

impl Default for FemtoDtxPreset {
    fn default() -> Self {
        FemtoDtxPreset {
            apartment: ApartmentParams {
                ues_everywhere: true,
                ..ApartmentParams::default()
            },
            channel: ChannelParams::default(),
            link: LinkAbstraction::default(),
            nrtv: NrtvParams::default(),
            dtx: DtxParams::small_cell(),
            n_rb: 50,
            rb_bandwidth: 180e3,
            tti_s: 1e-3,
            slots: 2000,
            priority_horizon: 5,
            pf_window: 100.0,
            deactivate_after: 10,
            min_snr_db: 0.0,
        }
    }
}

impl FemtoDtxPreset {
    pub fn config(&self, scheme: DtxScheme, access: CellAccess) -> DtxConfig {
        DtxConfig {
            params: self.dtx,
            n_rb: self.n_rb,
            slots: self.slots,
            tti_s: self.tti_s,
            priority_horizon: self.priority_horizon,
            pf_window: self.pf_window,
            deactivate_after: self.deactivate_after,
            ..DtxConfig::new(scheme, access)
        }
    }
}

/// Per-RB byte rates from the SNR of each femto link; other femtos'
/// interference is not modelled.
pub fn femto_links(preset: &FemtoDtxPreset, real: &Realization) -> DtxLinks {
    let cells = real.layout.cells();
    let ues = real.layout.ues();
    let min_snr = crate::link::db_to_lin(preset.min_snr_db);
    let bytes_per_rb = cells
        .iter()
        .map(|c| {
            ues.iter()
                .map(|u| {
                    let snr = c.max_tx_power / preset.n_rb as f64 * real.gains.get(c.id, u.id)
                        / real.noise_w;
                    if snr < min_snr {
                        0.0
                    } else {
                        preset.rb_bandwidth * preset.link.spectral_efficiency(snr) * preset.tti_s
                            / 8.0
                    }
                })
                .collect()
        })
        .collect();
    let home = ues
        .iter()
        .map(|u| u.csg_allowed.iter().next().copied())
        .collect();
    DtxLinks {
        bytes_per_rb,
        home,
        tx_power_w: cells.iter().map(|c| c.max_tx_power).collect(),
    }
}

/// One drop of the 5x5 apartment preset at femto deployment ratio `rho`.
pub fn femto_dtx_drop(
    preset: &FemtoDtxPreset,
    rho: f64,
    scheme: DtxScheme,
    access: CellAccess,
    master: u64,
    drop: u64,
    trace: bool,
) -> Result<DtxOutcome> {
    let params = ApartmentParams {
        femto_prob: rho,
        ..preset.apartment.clone()
    };
    let layout = build_apartment_grid(&params, rng::mix(master, drop, "layout"))?;
    let n_ues = layout.ues().len();
    let real = Realization::draw(layout, &preset.channel, master, drop)?;
    let links = femto_links(preset, &real);
    let arrivals = nrtv_traffic(
        &preset.nrtv,
        n_ues,
        preset.slots,
        rng::mix(master, drop, "traffic"),
    )?;
    let cfg = DtxConfig {
        trace,
        ..preset.config(scheme, access)
    };
    simulate_dtx(&cfg, &links, &arrivals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(n: u32, mu: f64, oh: f64) -> PowerModelParams {
        PowerModelParams {
            n_antennas: n,
            radio_head_efficiency: mu,
            overhead_power: oh,
        }
    }

    #[test]
    fn bs_power_examples() {
        let p = pm(2, 0.25, 6.8);
        assert_eq!(bs_power(&p, 0.13, 0.0).unwrap(), 2.0 * 6.8);
        assert!((bs_power(&pm(1, 0.5, 100.0), 20.0, 1.0).unwrap() - 140.0).abs() < 1e-12);
        let (a, b, m) = (
            bs_power(&p, 1.0, 0.0).unwrap(),
            bs_power(&p, 1.0, 1.0).unwrap(),
            bs_power(&p, 1.0, 0.5).unwrap(),
        );
        assert!((m - (a + b) / 2.0).abs() < 1e-12);
        let h = 1e-3;
        let slope =
            (bs_power(&p, 3.0, 0.5 + h).unwrap() - bs_power(&p, 3.0, 0.5 - h).unwrap()) / (2.0 * h);
        assert!((slope - 2.0 * 3.0 / 0.25).abs() < 1e-6);
        assert!(bs_power(&p, 1.0, 1.5).is_err());
        assert!(bs_power(&pm(0, 0.5, 1.0), 1.0, 0.5).is_err());
        assert!(bs_power(&pm(1, 0.0, 1.0), 1.0, 0.5).is_err());
        assert!(bs_power(&pm(1, 0.5, -1.0), 1.0, 0.5).is_err());
    }

    #[test]
    fn bs_cost_examples() {
        let c = CostModelParams {
            electricity_price: 0.1,
            active_hours: 8760.0,
            rental: 1000.0,
        };
        assert_eq!(bs_cost(&c, 0.0), 1000.0);
        assert!((bs_cost(&c, 1000.0) - 1876.0).abs() < 1e-9);
        assert!(bs_cost(&c, 10.0) < bs_cost(&c, 11.0));
    }

    #[test]
    fn efficiency_ratios() {
        let t = NetworkTotals {
            capacity_bps: 10e6,
            served_bps: 5e6,
            bandwidth_hz: 10e6,
            power_w: 100.0,
            cost: 1e4,
        };
        let e = efficiency_triplet(&t).unwrap();
        assert_eq!(e.se, 1.0);
        let e2 = efficiency_triplet(&NetworkTotals {
            served_bps: 10e6,
            ..t
        })
        .unwrap();
        assert!((e2.ee - 2.0 * e.ee).abs() < 1e-9);
        assert!(matches!(
            efficiency_triplet(&NetworkTotals { power_w: 0.0, ..t }),
            Err(Error::UndefinedRatio(_))
        ));
        assert!(matches!(
            efficiency_triplet(&NetworkTotals { cost: 0.0, ..t }),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn dtx_input_power_examples() {
        let p = DtxParams::small_cell();
        assert_eq!(dtx_input_power(&p, 0.0).unwrap(), p.p_sleep);
        assert!((dtx_input_power(&p, 1e-12).unwrap() - p.p0).abs() < 1e-9);
        let q = DtxParams {
            p0: 10.0,
            delta_p: 4.0,
            p_max: 10.0,
            p_sleep: 1.0,
        };
        assert!((dtx_input_power(&q, 5.0).unwrap() - 30.0).abs() < 1e-12);
        assert!(dtx_input_power(&q, 10.5).is_err());
        assert!(DtxParams { p_sleep: 11.0, ..q }.validate().is_err());
    }

    #[test]
    fn density_and_isd_are_inverse() {
        for d in [0.5, 4.0, 30.0] {
            let isd_km = density_to_isd(d).unwrap() / 1e3;
            let hex_area = 3f64.sqrt() / 2.0 * isd_km * isd_km;
            assert!((1.0 / hex_area - d).abs() < 1e-9 * d);
        }
        assert!(density_to_isd(0.0).is_err());
    }

    #[test]
    fn sweep_rejects_narrow_grids() {
        let p = SweepParams::default();
        assert!(density_load_sweep(&p, &[1.0, 10.0], &[0.5], 1, 1).is_err());
        assert!(density_load_sweep(&p, &[1.0, 2.0, 5.0], &[0.5], 1, 1).is_err());
    }

    #[test]
    fn load_coupling_fixed_point() {
        let p = SweepParams::default();
        let op = load_coupled_drop(&p, &p.small, 8.0, 30e6, 3, 0).unwrap();
        assert!(op.loads.iter().all(|&l| (0.0..=1.0).contains(&l)));
        let more = load_coupled_drop(&p, &p.small, 8.0, 60e6, 3, 0).unwrap();
        assert!(more.loads.iter().zip(&op.loads).all(|(a, b)| a >= b));
        assert!(more.power_w_km2 > op.power_w_km2);
    }

    #[test]
    fn clipped_pareto_mean_matches_quadrature() {
        // E[min(X, M)] as the integral of the survival function.
        let (xm, a, m) = (700.0, 1.2, 12_000.0);
        let n = 200_000;
        let h = m / n as f64;
        let surv = |x: f64| if x < xm { 1.0 } else { (xm / x).powf(a) };
        let integral: f64 = (0..n).map(|i| surv((i as f64 + 0.5) * h) * h).sum();
        assert!((clipped_pareto_mean(xm, a, m) - integral).abs() < 1e-3 * integral);
        let s = pareto_scale_for_mean(1.2, 12_000.0, 3000.0).unwrap();
        let closed = 6.0 * s - 5.0 * s.powf(1.2) * 12_000f64.powf(-0.2);
        assert!((closed - 3000.0).abs() < 1e-6);
        assert!(pareto_scale_for_mean(1.2, 12_000.0, 13_000.0).is_err());
    }

    #[test]
    fn nrtv_frames() {
        let p = NrtvParams::default();
        let a = nrtv_traffic(&p, 50, 1000, 9).unwrap();
        assert!(a.iter().all(|f| f.len() == 10));
        for f in a.iter().flatten() {
            assert!(f.bytes > 0.0 && f.bytes <= 12_000.0);
            assert_eq!(f.deadline, f.arrival + 150);
        }
        let big = nrtv_traffic(&p, 1000, 10_000, 10).unwrap();
        let frames: Vec<f64> = big.iter().flatten().map(|f| f.bytes).collect();
        assert_eq!(frames.len(), 100_000);
        let mean = frames.iter().sum::<f64>() / frames.len() as f64;
        assert!((mean - 3000.0).abs() <= 0.05 * 3000.0, "mean {mean}");
    }

    #[test]
    fn priority_classes() {
        let pk = Packet {
            ue: 0,
            bytes: 1.0,
            arrival: 0,
            deadline: 150,
        };
        assert_eq!(pk.priority(145, 5), Priority::High);
        assert_eq!(pk.priority(144, 5), Priority::Low);
    }

    #[test]
    fn pf_single_ue_takes_all() {
        let mut backlog = [f64::INFINITY];
        let a = pf_schedule(&[vec![1.0; 6]], &[1.0], &mut backlog);
        assert_eq!(a, vec![Some(0); 6]);
    }

    #[test]
    fn pf_double_rate_wins_first_slot() {
        let mut backlog = [f64::INFINITY; 2];
        let a = pf_schedule(&[vec![1.0; 4], vec![2.0; 4]], &[1.0, 1.0], &mut backlog);
        assert_eq!(a, vec![Some(1); 4]);
    }

    #[test]
    fn pf_symmetric_shares() {
        let n = 4;
        let rates = vec![vec![1.0; 10]; n];
        let mut avg = vec![1.0; n];
        let mut share = vec![0usize; n];
        for _ in 0..10_000 {
            let mut backlog = vec![f64::INFINITY; n];
            let a = pf_schedule(&rates, &avg, &mut backlog);
            let mut got = vec![0.0; n];
            for u in a.into_iter().flatten() {
                share[u] += 1;
                got[u] += 1.0;
            }
            pf_update(&mut avg, &got, 100.0);
        }
        let total: usize = share.iter().sum();
        for s in share {
            assert!((s as f64 / total as f64 - 0.25).abs() <= 0.02 * 0.25);
        }
    }

    #[test]
    fn pf_skips_drained_ues() {
        let mut backlog = [1.5, f64::INFINITY];
        let a = pf_schedule(&[vec![1.0; 4], vec![1.0; 4]], &[0.1, 1.0], &mut backlog);
        assert_eq!(a, vec![Some(0), Some(0), Some(1), Some(1)]);
    }

    fn one_cell(rate: f64, tx: f64) -> DtxLinks {
        DtxLinks {
            bytes_per_rb: vec![vec![rate]],
            home: vec![Some(0)],
            tx_power_w: vec![tx],
        }
    }

    fn fixture_cfg(scheme: DtxScheme, slots: u64) -> DtxConfig {
        DtxConfig {
            n_rb: 10,
            slots,
            priority_horizon: 2,
            trace: true,
            ..DtxConfig::new(scheme, CellAccess::Open)
        }
    }

    #[test]
    fn empty_queues_sleep_throughout() {
        let links = one_cell(100.0, 0.1);
        let o = simulate_dtx(&fixture_cfg(DtxScheme::Enhanced, 50), &links, &[vec![]]).unwrap();
        assert_eq!(o.sleep_slots, 50);
        assert!((o.energy_j - 4.3 * 50.0 * 1e-3).abs() < 1e-12);
    }

    #[test]
    fn classic_and_enhanced_on_periodic_fixture() {
        // 500 B every 5 slots, deadline 10, 1000 B per slot of capacity.
        let arrivals: Vec<Packet> = [0, 5, 10, 15]
            .iter()
            .map(|&t| Packet {
                ue: 0,
                bytes: 500.0,
                arrival: t,
                deadline: t + 10,
            })
            .collect();
        let links = one_cell(100.0, 0.1);
        let c = simulate_dtx(
            &fixture_cfg(DtxScheme::Classic, 20),
            &links,
            &[arrivals.clone()],
        )
        .unwrap();
        let e = simulate_dtx(&fixture_cfg(DtxScheme::Enhanced, 20), &links, &[arrivals]).unwrap();
        let tx = |o: &DtxOutcome| {
            o.trace
                .iter()
                .filter(|r| r.state == CellState::Tx)
                .map(|r| r.slot)
                .collect::<Vec<_>>()
        };
        assert_eq!(tx(&c), vec![0, 5, 10, 15]);
        // Slack 3 = horizon 2 + one slot to drain: first flush at 7, second at 17.
        assert_eq!(tx(&e), vec![7, 17]);
        assert_eq!((c.sleep_slots, e.sleep_slots), (16, 18));
        assert_eq!((c.dropped_packets, e.dropped_packets), (0, 0));
        assert_eq!(c.delivered_packets, 4);
        assert_eq!(e.delivered_packets, 4);
        let p = DtxParams::small_cell();
        let expect_c = 4.0 * (p.p0 + p.delta_p * 0.05) + 16.0 * p.p_sleep;
        let expect_e = 2.0 * (p.p0 + p.delta_p * 0.1) + 18.0 * p.p_sleep;
        assert!((c.energy_j - expect_c * 1e-3).abs() < 1e-12);
        assert!((e.energy_j - expect_e * 1e-3).abs() < 1e-12);
    }

    #[test]
    fn late_packets_are_dropped() {
        let links = one_cell(1.0, 0.1);
        let a = vec![Packet {
            ue: 0,
            bytes: 1000.0,
            arrival: 0,
            deadline: 5,
        }];
        let o = simulate_dtx(&fixture_cfg(DtxScheme::Classic, 10), &links, &[a]).unwrap();
        assert_eq!(o.dropped_packets, 1);
        assert_eq!(o.trace.iter().map(|r| r.drops).sum::<u64>(), 1);
        assert_eq!(o.trace[5].drops, 1);
    }

    #[test]
    fn single_cell_cluster_is_enhanced_dtx() {
        let links = DtxLinks {
            bytes_per_rb: vec![vec![40.0, 90.0, 12.0]],
            home: vec![Some(0); 3],
            tx_power_w: vec![0.1],
        };
        let arrivals = nrtv_traffic(&NrtvParams::default(), 3, 3000, 4).unwrap();
        let cfg = |s| DtxConfig {
            slots: 3000,
            trace: true,
            ..DtxConfig::new(s, CellAccess::Open)
        };
        let e = simulate_dtx(&cfg(DtxScheme::Enhanced), &links, &arrivals).unwrap();
        let m = simulate_dtx(&cfg(DtxScheme::MultiCell), &links, &arrivals).unwrap();
        assert!(e.tx_slots > 0);
        assert_eq!(e, m);
    }

    #[test]
    fn two_cell_cluster_packs_onto_one() {
        let links = DtxLinks {
            bytes_per_rb: vec![vec![100.0, 80.0], vec![80.0, 100.0]],
            home: vec![Some(0), Some(1)],
            tx_power_w: vec![0.1, 0.1],
        };
        let arrivals: Vec<Vec<Packet>> = (0..2)
            .map(|u| {
                (0..20)
                    .map(|k| Packet {
                        ue: u,
                        bytes: 300.0,
                        arrival: 10 * k + u as u64 * 3,
                        deadline: 10 * k + 30,
                    })
                    .collect()
            })
            .collect();
        let cfg = DtxConfig {
            n_rb: 50,
            slots: 250,
            trace: true,
            ..DtxConfig::new(DtxScheme::MultiCell, CellAccess::Open)
        };
        let o = simulate_dtx(&cfg, &links, &arrivals).unwrap();
        assert_eq!(o.dropped_packets, 0);
        assert_eq!(o.delivered_packets, 40);
        let mut busy = 0;
        for s in 0..250 {
            let active = o
                .trace
                .iter()
                .filter(|r| r.slot == s && r.state == CellState::Tx)
                .count();
            let served: f64 = o
                .trace
                .iter()
                .filter(|r| r.slot == s)
                .map(|r| r.served_bytes)
                .sum();
            if served > 0.0 {
                busy += 1;
                assert_eq!(active, 1, "slot {s}");
            } else {
                assert_eq!(active, 0);
            }
        }
        assert!(busy > 0);
        assert!(o.off_slots > 0);
    }

    #[test]
    fn multicell_requires_open_access() {
        let links = one_cell(10.0, 0.1);
        let cfg = DtxConfig::new(DtxScheme::MultiCell, CellAccess::Closed);
        assert!(simulate_dtx(&cfg, &links, &[vec![]]).is_err());
        let hot = one_cell(10.0, 1.0);
        assert!(simulate_dtx(
            &DtxConfig::new(DtxScheme::Classic, CellAccess::Open),
            &hot,
            &[vec![]]
        )
        .is_err());
    }

    #[test]
    fn femto_preset_invariants() {
        let p = FemtoDtxPreset {
            slots: 1000,
            ..FemtoDtxPreset::default()
        };
        for drop in 0..3 {
            let run = |s, a| femto_dtx_drop(&p, 0.6, s, a, 5, drop, false).unwrap();
            let e = run(DtxScheme::Enhanced, CellAccess::Open);
            let m = run(DtxScheme::MultiCell, CellAccess::Open);
            let c = run(DtxScheme::Classic, CellAccess::Open);
            assert!(m.dropped_packets <= e.dropped_packets);
            assert!(e.sleep_slots >= c.sleep_slots);
            assert!(e.energy_j >= e.cells as f64 * p.dtx.p_sleep * 1000.0 * 1e-3 - 1e-9);
            assert!(m.energy_j > 0.0);
        }
    }

    #[test]
    fn femto_preset_closed_access_is_cheaper_when_sparse() {
        let p = FemtoDtxPreset {
            slots: 1000,
            ..FemtoDtxPreset::default()
        };
        for drop in 0..5 {
            let closed = femto_dtx_drop(
                &p,
                0.1,
                DtxScheme::Enhanced,
                CellAccess::Closed,
                6,
                drop,
                false,
            )
            .unwrap();
            let open = femto_dtx_drop(
                &p,
                0.1,
                DtxScheme::Enhanced,
                CellAccess::Open,
                6,
                drop,
                false,
            )
            .unwrap();
            assert!(closed.mean_power_w <= open.mean_power_w + 1e-12);
        }
    }
}
