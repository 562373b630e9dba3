//! Drop-level experiment drivers shared by the CLI and the test-suite.

use crate::channel::ChannelParams;
use crate::dacca::{
    allocate_static, evaluate_allocation, femto_eligible, femto_subband_select, ffr_assignment,
    ffr_macro_plan, measure_subband_rss, random_initial_pcc, run_dacca, CarrierNetwork,
    DaccaParams, FfrReuse, SlotTrace, Spectrum, UeOutcome,
};
use crate::eicic::{expanded_region, run_eicic, AbsPattern, EicicNetwork, EicicRun, EicicScheme};
use crate::error::{Error, Result};
use crate::geometry::{
    build_apartment_grid, build_dual_stripe_with, build_hex_macro_grid, dbm_to_watts,
    drop_picocell_hotspots, drop_ues_in_hex_cells, scatter_femto_apartments, ApartmentParams,
    HotspotParams, Tier,
};
use crate::learn::LearnNetwork;
use crate::link::{effective_sinr, LinkAbstraction, TierOffsets};
use crate::rng;
use crate::scenario::Realization;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarrierScheme {
    Dacca,
    Ffr1of4,
    Ffr2of4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FemtoLayout {
    Grid5x5,
    DualStripe,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FemtoGridParams {
    pub layout: FemtoLayout,
    pub apartments: ApartmentParams,
    pub channel: ChannelParams,
    pub spectrum: Spectrum,
    pub dacca: DaccaParams,
    pub link: LinkAbstraction,
}

impl Default for FemtoGridParams {
    fn default() -> Self {
        FemtoGridParams {
            layout: FemtoLayout::Grid5x5,
            apartments: ApartmentParams {
                femto_prob: 0.5,
                ues_per_apartment: 2,
                ..ApartmentParams::default()
            },
            channel: ChannelParams::default(),
            spectrum: Spectrum::default(),
            dacca: DaccaParams::default(),
            link: LinkAbstraction::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CarrierDrop {
    pub ues: Vec<UeOutcome>,
    pub fixed_point_slot: Option<usize>,
    pub blocked_transmissions: usize,
    pub contention_events: usize,
    pub trace: Vec<SlotTrace>,
}

/// One drop of the femto apartment grid under a carrier scheme.
pub fn carrier_drop(
    p: &FemtoGridParams,
    scheme: CarrierScheme,
    master: u64,
    drop: u64,
) -> Result<CarrierDrop> {
    let seed = rng::mix(master, drop, "layout");
    let layout = match p.layout {
        FemtoLayout::Grid5x5 => build_apartment_grid(&p.apartments, seed)?,
        FemtoLayout::DualStripe => build_dual_stripe_with(&p.apartments, seed)?,
    };
    let real = Realization::draw(layout, &p.channel, master, drop)?;
    let n_rb = p.spectrum.n_rb();
    let ue_cell = real.attach(&TierOffsets::default(), n_rb);
    let rb_power: Vec<f64> = real
        .layout
        .cells()
        .iter()
        .map(|c| c.max_tx_power / n_rb as f64)
        .collect();
    let net = CarrierNetwork {
        gains: &real.gains,
        ue_cell: &ue_cell,
        rb_power: &rb_power,
        noise_w: real.noise_w,
        fading: real.fading,
        spectrum: p.spectrum,
    };
    let n_cells = net.n_cells();
    match scheme {
        CarrierScheme::Dacca => {
            let mut r = rng::stream(master, drop, "dacca-init");
            let init = random_initial_pcc(n_cells, p.spectrum.n_cc, &mut r);
            let out = run_dacca(&net, &p.dacca, &init, &p.link)?;
            Ok(CarrierDrop {
                blocked_transmissions: out.blocked_transmissions(),
                fixed_point_slot: out.fixed_point_slot,
                contention_events: out.contention_events,
                ues: out.final_ues,
                trace: out.trace,
            })
        }
        CarrierScheme::Ffr1of4 | CarrierScheme::Ffr2of4 => {
            let reuse = if scheme == CarrierScheme::Ffr1of4 {
                FfrReuse::OneOfFour
            } else {
                FfrReuse::TwoOfFour
            };
            let mut r = rng::stream(master, drop, "ffr");
            let states = ffr_assignment(n_cells, p.spectrum.n_cc, reuse, &mut r)?;
            let alloc = allocate_static(&net, &states);
            let slot = p.dacca.slots.saturating_sub(1);
            Ok(CarrierDrop {
                ues: evaluate_allocation(&net, &alloc, &p.link, slot),
                fixed_point_slot: Some(0),
                blocked_transmissions: 0,
                contention_events: 0,
                trace: Vec::new(),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HotspotScenario {
    pub hotspots: HotspotParams,
    pub macro_power_w: f64,
    pub n_rb: usize,
    pub rb_bandwidth: f64,
    pub channel: ChannelParams,
    pub gamma_target_db: f64,
    pub slots: usize,
    /// Muted subframes per ABS period and the period length.
    pub abs_muted: usize,
    pub abs_period: usize,
    /// RBs each UE requests per slot; `None` is full buffer.
    pub rbs_per_ue: Option<usize>,
    /// Served UEs carry the rate of their RBs at exactly the target SINR.
    pub constant_rate: bool,
    pub link: LinkAbstraction,
}

impl Default for HotspotScenario {
    fn default() -> Self {
        HotspotScenario {
            hotspots: HotspotParams::default(),
            macro_power_w: dbm_to_watts(46.0),
            n_rb: 50,
            rb_bandwidth: 180e3,
            channel: ChannelParams::default(),
            gamma_target_db: 0.0,
            slots: 8,
            abs_muted: 2,
            abs_period: 8,
            rbs_per_ue: Some(1),
            constant_rate: true,
            link: LinkAbstraction::default(),
        }
    }
}

impl HotspotScenario {
    pub fn with_picos(n_picos: usize) -> Self {
        let mut s = Self::default();
        s.hotspots.n_picos = n_picos;
        s
    }
}

/// One drop of the macro/pico hotspot scenario. The layout and channel depend
/// only on `(master, drop)`, so schemes and offsets see the same drop.
pub fn eicic_drop(
    p: &HotspotScenario,
    scheme: EicicScheme,
    delta_er_db: f64,
    master: u64,
    drop: u64,
) -> Result<EicicRun> {
    let base = build_hex_macro_grid(1, 1, 500.0, p.macro_power_w, false)?;
    let layout = drop_picocell_hotspots(base, &p.hotspots, rng::mix(master, drop, "layout"))?;
    let real = Realization::draw(layout, &p.channel, master, drop)?;
    let biased = real.attach(&TierOffsets::pico(delta_er_db), p.n_rb);
    let strongest = real.attach(&TierOffsets::default(), p.n_rb);
    let er = expanded_region(&biased, &strongest);
    let max_power: Vec<f64> = real.layout.cells().iter().map(|c| c.max_tx_power).collect();
    let net = EicicNetwork {
        gains: &real.gains,
        ue_cell: &biased,
        er: &er,
        macro_id: 0,
        max_power: &max_power,
        n_rb: p.n_rb,
        noise_w: real.noise_w,
        gamma: 10f64.powf(p.gamma_target_db / 10.0),
        fading: real.fading,
        rb_bandwidth: p.rb_bandwidth,
        rbs_per_ue: p.rbs_per_ue,
        ue_demand_bps: p.constant_rate.then(|| {
            let gamma = 10f64.powf(p.gamma_target_db / 10.0);
            p.rb_bandwidth
                * p.link.spectral_efficiency(gamma)
                * p.rbs_per_ue.unwrap_or(p.n_rb) as f64
        }),
    };
    let pattern = AbsPattern::k_in(p.abs_muted, p.abs_period)?;
    run_eicic(&net, scheme, p.slots, &pattern, &p.link)
}

/// The hotspot drop of [`eicic_drop`] as a learning network: UEs stay on
/// their biased-association cell.
pub fn hotspot_learn_network(
    p: &HotspotScenario,
    delta_er_db: f64,
    master: u64,
    drop: u64,
) -> Result<LearnNetwork> {
    let base = build_hex_macro_grid(1, 1, 500.0, p.macro_power_w, false)?;
    let layout = drop_picocell_hotspots(base, &p.hotspots, rng::mix(master, drop, "layout"))?;
    let real = Realization::draw(layout, &p.channel, master, drop)?;
    let ue_cell = real.attach(&TierOffsets::pico(delta_er_db), p.n_rb);
    Ok(LearnNetwork { real, ue_cell })
}

/// Tri-sector macro grid with FFR and scattered CSG femtos.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroFfrScenario {
    pub isd: f64,
    pub macro_power_w: f64,
    pub ues_per_sector: usize,
    /// Inner-region boundary as a fraction of the site circumradius.
    pub inner_fraction: f64,
    pub n_rb: usize,
    pub n_subbands: usize,
    pub femtos: usize,
    pub femto_power_w: f64,
    pub femto_side: f64,
    pub ues_per_femto: usize,
    /// Sub-bands each femto picks.
    pub femto_subbands: usize,
    pub rb_bandwidth: f64,
    pub channel: ChannelParams,
    pub link: LinkAbstraction,
}

impl Default for MacroFfrScenario {
    fn default() -> Self {
        MacroFfrScenario {
            isd: 500.0,
            macro_power_w: dbm_to_watts(46.0),
            ues_per_sector: 10,
            inner_fraction: 0.6,
            n_rb: 48,
            n_subbands: 12,
            femtos: 30,
            femto_power_w: dbm_to_watts(20.0),
            femto_side: 10.0,
            ues_per_femto: 1,
            femto_subbands: 3,
            rb_bandwidth: 180e3,
            channel: ChannelParams::default(),
            link: LinkAbstraction::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FemtoBandPolicy {
    /// Lowest measured RSS among the sub-bands the local sector leaves free.
    MinInterference,
    /// Whole band.
    Reuse1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FfrDrop {
    pub macro_ues: Vec<UeOutcome>,
    pub femto_ues: Vec<UeOutcome>,
    /// Femtos whose eligible set was empty.
    pub fallbacks: usize,
}

pub fn ffr_drop(
    p: &MacroFfrScenario,
    policy: FemtoBandPolicy,
    master: u64,
    drop: u64,
) -> Result<FfrDrop> {
    if p.n_subbands == 0 || p.n_rb % p.n_subbands != 0 {
        return Err(Error::invalid("n_rb must be a multiple of n_subbands"));
    }
    let grid = build_hex_macro_grid(7, 3, p.isd, p.macro_power_w, true)?;
    let with_ues = drop_ues_in_hex_cells(
        grid,
        p.ues_per_sector,
        p.isd,
        rng::mix(master, drop, "layout"),
    )?;
    let layout = scatter_femto_apartments(
        with_ues,
        p.femtos,
        p.femto_side,
        p.isd,
        p.femto_power_w,
        p.ues_per_femto,
        rng::mix(master, drop, "femtos"),
    )?;
    let real = Realization::draw(layout, &p.channel, master, drop)?;
    let layout = &real.layout;
    let cells = layout.cells();
    let ue_cell = real.attach(&TierOffsets::default(), p.n_rb);
    let ffr = ffr_macro_plan(
        layout,
        p.isd,
        p.inner_fraction * p.isd / 3f64.sqrt(),
        p.n_subbands,
    )?;
    let width = p.n_rb / p.n_subbands;
    let macros: Vec<usize> = cells
        .iter()
        .filter(|c| c.tier == Tier::Macro)
        .map(|c| c.id)
        .collect();

    // Planned sub-band usage: macros on the inner band plus their colour.
    let mut usage: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); cells.len()];
    for &m in &macros {
        let colour = ffr.colour[m].expect("macro sectors are coloured");
        usage[m] = ffr.plan.s[0]
            .iter()
            .chain(&ffr.plan.s[colour])
            .copied()
            .collect();
    }
    let sub_power: Vec<f64> = cells
        .iter()
        .map(|c| c.max_tx_power * width as f64 / p.n_rb as f64)
        .collect();
    let mut fallbacks = 0;
    for f in cells.iter().filter(|c| c.tier == Tier::Femto) {
        // The femto measures through its first subscriber.
        let Some(probe) = layout.ues().iter().find(|u| u.csg_allowed.contains(&f.id)) else {
            continue;
        };
        usage[f.id] = match policy {
            FemtoBandPolicy::Reuse1 => (0..p.n_subbands).collect(),
            FemtoBandPolicy::MinInterference => {
                let sector = *macros
                    .iter()
                    .max_by(|&&a, &&b| {
                        real.gains
                            .get(a, probe.id)
                            .total_cmp(&real.gains.get(b, probe.id))
                            .then(b.cmp(&a))
                    })
                    .expect("grid has macros");
                let colour = ffr.colour[sector].expect("macro sectors are coloured");
                let edge = !ffr.is_inner(layout, sector, &f.position);
                let eligible = femto_eligible(&ffr.plan, colour, edge);
                let to_point: Vec<f64> = (0..cells.len())
                    .map(|c| real.gains.get(c, probe.id))
                    .collect();
                let rss = measure_subband_rss(&to_point, &usage, &sub_power, f.id, p.n_subbands);
                let choice = femto_subband_select(&rss, &eligible, p.femto_subbands);
                fallbacks += usize::from(choice.fallback);
                choice.subbands
            }
        };
    }

    // RBs of each UE: its allowed sub-bands, shared round-robin with the
    // cell's other UEs holding the same set.
    let allowed = |u: usize, c: usize| -> Vec<usize> {
        let bands: Vec<usize> = if cells[c].tier == Tier::Macro {
            ffr.subbands_for(layout, c, &layout.ues()[u].position)
                .to_vec()
        } else {
            usage[c].iter().copied().collect()
        };
        bands
            .iter()
            .flat_map(|&b| b * width..(b + 1) * width)
            .collect()
    };
    let mut owner: Vec<Vec<Option<usize>>> = vec![vec![None; p.n_rb]; cells.len()];
    for c in 0..cells.len() {
        let mut groups: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
        for u in (0..ue_cell.len()).filter(|&u| ue_cell[u] == Some(c)) {
            groups.entry(allowed(u, c)).or_default().push(u);
        }
        for (rbs, ues) in groups {
            for (k, rb) in rbs.into_iter().enumerate() {
                owner[c][rb] = Some(ues[k % ues.len()]);
            }
        }
    }
    let rb_power: Vec<f64> = cells
        .iter()
        .map(|c| c.max_tx_power / p.n_rb as f64)
        .collect();
    let mut per_ue: Vec<Vec<f64>> = vec![Vec::new(); ue_cell.len()];
    for rb in 0..p.n_rb {
        let active: Vec<usize> = (0..cells.len())
            .filter(|&c| owner[c][rb].is_some())
            .collect();
        for &c in &active {
            let u = owner[c][rb].expect("active cells own the RB");
            let h = |j: usize| real.fading.h(j, u, rb, 0);
            let signal = rb_power[c] * real.gains.get(c, u) * h(c);
            let interference: f64 = active
                .iter()
                .filter(|&&j| j != c)
                .map(|&j| rb_power[j] * real.gains.get(j, u) * h(j))
                .sum();
            per_ue[u].push(signal / (interference + real.noise_w));
        }
    }
    let mut out = FfrDrop {
        macro_ues: Vec::new(),
        femto_ues: Vec::new(),
        fallbacks,
    };
    for (u, sinrs) in per_ue.iter().enumerate() {
        let Some(c) = ue_cell[u] else { continue };
        let o = UeOutcome {
            effective_sinr: if sinrs.is_empty() {
                0.0
            } else {
                effective_sinr(sinrs)?
            },
            throughput: p.link.throughput(sinrs, p.rb_bandwidth),
            n_rb: sinrs.len(),
        };
        if cells[c].tier == Tier::Macro {
            out.macro_ues.push(o);
        } else {
            out.femto_ues.push(o);
        }
    }
    Ok(out)
}
