//! Scenario presets, schemes, the flat key registry and the config-file
//! parser.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::experiments::{FemtoGridParams, FemtoLayout, HotspotScenario, MacroFfrScenario};
use crate::green::{CellAccess, FemtoDtxPreset, SweepParams};
use crate::learn::{LearnParams, Scheduler};
use crate::link::LinkAbstraction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    Grid5x5,
    DualStripe,
    PicoHotspot2,
    PicoHotspot4,
    Hex7Ffr,
    GreenSweep,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Grid5x5,
        Preset::DualStripe,
        Preset::PicoHotspot2,
        Preset::PicoHotspot4,
        Preset::Hex7Ffr,
        Preset::GreenSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Grid5x5 => "grid5x5",
            Preset::DualStripe => "dualstripe",
            Preset::PicoHotspot2 => "pico_hotspot_2",
            Preset::PicoHotspot4 => "pico_hotspot_4",
            Preset::Hex7Ffr => "hex7_ffr",
            Preset::GreenSweep => "green_sweep",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Grid5x5 => "5x5 apartment block with femtos and one macro",
            Preset::DualStripe => "two apartment stripes with femtos and one macro",
            Preset::PicoHotspot2 => "one macro with 2 pico hotspots",
            Preset::PicoHotspot4 => "one macro with 4 pico hotspots",
            Preset::Hex7Ffr => "7-site tri-sector grid with FFR and scattered femtos",
            Preset::GreenSweep => {
                "density/load efficiency sweep of small cells vs a macro reference"
            }
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "preset",
                name: name.to_string(),
                valid: Self::ALL.map(|p| p.name()).join(", "),
            })
    }

    pub fn schemes(self) -> &'static [Scheme] {
        use Scheme::*;
        match self {
            Preset::Grid5x5 => &[Dacca, Ffr1of4, Ffr2of4, Dtx, Edtx, Mcdtx],
            Preset::DualStripe => &[Dacca, Ffr1of4, Ffr2of4],
            Preset::PicoHotspot2 | Preset::PicoHotspot4 => &[Upd, UpdRp, Corpa, Abs, Ucb],
            Preset::Hex7Ffr => &[FfrMinInt, FfrReuse1],
            Preset::GreenSweep => &[Sweep, Matched],
        }
    }

    /// Preset defaults with the shared channel and link applied.
    pub fn settings(self) -> Settings {
        let mut s = Settings::default();
        match self {
            Preset::DualStripe => s.femto_grid.layout = FemtoLayout::DualStripe,
            Preset::PicoHotspot2 => s.hotspot.hotspots.n_picos = 2,
            _ => {}
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Dacca,
    Ffr1of4,
    Ffr2of4,
    Dtx,
    Edtx,
    Mcdtx,
    Upd,
    UpdRp,
    Corpa,
    Abs,
    Ucb,
    FfrMinInt,
    FfrReuse1,
    Sweep,
    Matched,
}

impl Scheme {
    pub const ALL: [Scheme; 15] = [
        Scheme::Dacca,
        Scheme::Ffr1of4,
        Scheme::Ffr2of4,
        Scheme::Dtx,
        Scheme::Edtx,
        Scheme::Mcdtx,
        Scheme::Upd,
        Scheme::UpdRp,
        Scheme::Corpa,
        Scheme::Abs,
        Scheme::Ucb,
        Scheme::FfrMinInt,
        Scheme::FfrReuse1,
        Scheme::Sweep,
        Scheme::Matched,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dacca => "dacca",
            Scheme::Ffr1of4 => "ffr1of4",
            Scheme::Ffr2of4 => "ffr2of4",
            Scheme::Dtx => "dtx",
            Scheme::Edtx => "edtx",
            Scheme::Mcdtx => "mcdtx",
            Scheme::Upd => "upd",
            Scheme::UpdRp => "upd_rp",
            Scheme::Corpa => "corpa",
            Scheme::Abs => "abs",
            Scheme::Ucb => "ucb",
            Scheme::FfrMinInt => "ffr_minint",
            Scheme::FfrReuse1 => "ffr_reuse1",
            Scheme::Sweep => "sweep",
            Scheme::Matched => "matched",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scheme::Dacca => "distributed autonomous component-carrier selection",
            Scheme::Ffr1of4 => "femtos on one random CC of four",
            Scheme::Ffr2of4 => "femtos on two random CCs of four",
            Scheme::Dtx => "classic per-cell DTX with PF scheduling",
            Scheme::Edtx => "DTX with deadline-aware EDF bursts",
            Scheme::Mcdtx => "multi-cell DTX packing urgent traffic on few cells",
            Scheme::Upd => "uniform power distribution",
            Scheme::UpdRp => "uniform power with reduced power on ER-PUE RBs",
            Scheme::Corpa => "coordinated RB and power allocation",
            Scheme::Abs => "almost blank subframes",
            Scheme::Ucb => "UCB1 band-portion selection per cell",
            Scheme::FfrMinInt => "femtos pick the least-interfered FFR sub-bands",
            Scheme::FfrReuse1 => "femtos use the whole band",
            Scheme::Sweep => "efficiency over the density x load grid",
            Scheme::Matched => "small cells vs reference at equal throughput",
        }
    }

    /// Looks `name` up among the schemes of `preset`.
    pub fn parse(name: &str, preset: Preset) -> Result<Self> {
        preset
            .schemes()
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "scheme",
                name: name.to_string(),
                valid: preset
                    .schemes()
                    .iter()
                    .map(|s| s.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }
}

/// Every tunable parameter. Shared channel and link settings are copied into
/// the scenario structs by [`Settings::resolved`].
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub channel: ChannelParams,
    pub link: LinkAbstraction,
    pub femto_grid: FemtoGridParams,
    pub hotspot: HotspotScenario,
    pub delta_er_db: f64,
    pub ffr: MacroFfrScenario,
    pub green: SweepParams,
    pub densities: Vec<f64>,
    pub loads: Vec<f64>,
    /// Small-cell densities tried by the matched comparison.
    pub matched_candidates: Vec<f64>,
    pub electricity_price: f64,
    pub active_hours: f64,
    pub dtx: FemtoDtxPreset,
    pub dtx_rho: f64,
    pub dtx_access: CellAccess,
    pub learn: LearnParams,
    pub learn_epochs: u64,
}

impl Default for Settings {
    fn default() -> Self {
        let green = SweepParams::default();
        Settings {
            channel: ChannelParams::default(),
            link: LinkAbstraction::default(),
            femto_grid: FemtoGridParams::default(),
            hotspot: HotspotScenario::default(),
            delta_er_db: 8.0,
            ffr: MacroFfrScenario::default(),
            electricity_price: green.small.cost.electricity_price,
            active_hours: green.small.cost.active_hours,
            green,
            densities: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            loads: vec![0.25, 0.5, 1.0],
            matched_candidates: (0..60).map(|k| 0.5 * 1.1f64.powi(k)).collect(),
            dtx: FemtoDtxPreset::default(),
            dtx_rho: 0.5,
            dtx_access: CellAccess::Open,
            learn: LearnParams::default(),
            learn_epochs: 200,
        }
    }
}

impl Settings {
    /// Copies the shared sections into every scenario.
    pub fn resolved(&self) -> Settings {
        let mut s = self.clone();
        s.femto_grid.channel = s.channel.clone();
        s.hotspot.channel = s.channel.clone();
        s.ffr.channel = s.channel.clone();
        s.green.channel = s.channel.clone();
        s.dtx.channel = s.channel.clone();
        s.femto_grid.link = s.link;
        s.hotspot.link = s.link;
        s.ffr.link = s.link;
        s.green.link = s.link;
        s.dtx.link = s.link;
        s.learn.link = s.link;
        for d in [&mut s.green.small, &mut s.green.reference] {
            d.cost.electricity_price = s.electricity_price;
            d.cost.active_hours = s.active_hours;
        }
        s
    }

    /// Sets one registry key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let def = lookup(key).ok_or_else(|| "unknown key".to_string())?;
        (def.set)(self, value.trim())
            .map_err(|kind| format!("expected {kind}, got `{}`", value.trim()))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        lookup(key).map(|d| (d.get)(self))
    }

    /// Applies the run-level slot count to the scheme's own horizon.
    pub fn apply_slots(&mut self, scheme: Scheme, slots: u64) {
        match scheme {
            Scheme::Dacca | Scheme::Ffr1of4 | Scheme::Ffr2of4 => {
                self.femto_grid.dacca.slots = slots as usize
            }
            Scheme::Upd | Scheme::UpdRp | Scheme::Corpa | Scheme::Abs => {
                self.hotspot.slots = slots as usize
            }
            Scheme::Dtx | Scheme::Edtx | Scheme::Mcdtx => self.dtx.slots = slots,
            Scheme::Ucb => self.learn_epochs = slots,
            Scheme::FfrMinInt | Scheme::FfrReuse1 | Scheme::Sweep | Scheme::Matched => {}
        }
    }
}

trait Value: Sized {
    const KIND: &'static str;
    fn parse(s: &str) -> Option<Self>;
    fn render(&self) -> String;
}

impl Value for f64 {
    const KIND: &'static str = "float";
    fn parse(s: &str) -> Option<Self> {
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    }
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Value for usize {
    const KIND: &'static str = "unsigned integer";
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for u64 {
    const KIND: &'static str = "unsigned integer";
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for u32 {
    const KIND: &'static str = "unsigned integer";
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for bool {
    const KIND: &'static str = "bool";
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for Vec<f64> {
    const KIND: &'static str = "comma-separated float list";
    fn parse(s: &str) -> Option<Self> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']');
        let v: Option<Vec<f64>> = s
            .split(',')
            .map(|x| <f64 as Value>::parse(x.trim()))
            .collect();
        v.filter(|v| !v.is_empty())
    }
    fn render(&self) -> String {
        self.iter()
            .map(|x| x.render())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// RBs per UE, or `full` for full buffer.
impl Value for Option<usize> {
    const KIND: &'static str = "unsigned integer or `full`";
    fn parse(s: &str) -> Option<Self> {
        if s == "full" {
            Some(None)
        } else {
            s.parse().ok().map(Some)
        }
    }
    fn render(&self) -> String {
        self.map_or_else(|| "full".to_string(), |n| n.to_string())
    }
}

impl Value for CellAccess {
    const KIND: &'static str = "`open` or `closed`";
    fn parse(s: &str) -> Option<Self> {
        [CellAccess::Open, CellAccess::Closed]
            .into_iter()
            .find(|a| a.name() == s)
    }
    fn render(&self) -> String {
        self.name().to_string()
    }
}

impl Value for Scheduler {
    const KIND: &'static str = "`pf` or `rr`";
    fn parse(s: &str) -> Option<Self> {
        match s {
            "pf" => Some(Scheduler::ProportionalFair),
            "rr" => Some(Scheduler::RoundRobin),
            _ => None,
        }
    }
    fn render(&self) -> String {
        match self {
            Scheduler::ProportionalFair => "pf",
            Scheduler::RoundRobin => "rr",
        }
        .to_string()
    }
}

pub struct KeyDef {
    pub key: &'static str,
    pub kind: &'static str,
    pub doc: &'static str,
    get: fn(&Settings) -> String,
    set: fn(&mut Settings, &str) -> std::result::Result<(), &'static str>,
}

macro_rules! registry {
    ($( $key:literal : $ty:ty => |$s:ident| $place:expr, $doc:literal; )*) => {
        /// All settable keys in listing order.
        pub static KEYS: &[KeyDef] = &[$(
            KeyDef {
                key: $key,
                kind: <$ty as Value>::KIND,
                doc: $doc,
                get: |$s: &Settings| <$ty as Value>::render(&$place),
                set: |$s: &mut Settings, v: &str| {
                    $place = <$ty as Value>::parse(v).ok_or(<$ty as Value>::KIND)?;
                    Ok(())
                },
            },
        )*];
    };
}

registry! {
    "channel.shadow_sigma_db": f64 => |s| s.channel.shadow_sigma_outdoor_db, "outdoor log-normal shadowing std, dB";
    "channel.shadow_sigma_indoor_db": f64 => |s| s.channel.shadow_sigma_indoor_db, "indoor shadowing std, dB";
    "channel.penetration_loss_db": f64 => |s| s.channel.penetration_loss_db, "outdoor-to-indoor loss, dB";
    "channel.wall_loss_db": f64 => |s| s.channel.femto_pl.wall_loss_db, "loss per internal wall, dB";
    "channel.fast_fading": bool => |s| s.channel.fast_fading, "per-RB Rayleigh fading";
    "channel.noise_density_dbm_hz": f64 => |s| s.channel.noise.density_dbm_hz, "thermal noise density";
    "channel.noise_figure_db": f64 => |s| s.channel.noise.noise_figure_db, "UE noise figure";
    "channel.rb_bandwidth_hz": f64 => |s| s.channel.noise.rb_bandwidth_hz, "noise bandwidth of one RB";
    "channel.antenna_theta_3db_deg": f64 => |s| s.channel.antenna.theta_3db_deg, "sector half-power beamwidth";
    "channel.antenna_max_attenuation_db": f64 => |s| s.channel.antenna.max_attenuation_db, "sector front-to-back cap";
    "link.coding_gap": f64 => |s| s.link.coding_gap, "SNR gap of the capacity mapping";
    "link.se_cap": f64 => |s| s.link.se_cap, "spectral-efficiency ceiling, bit/s/Hz";
    "femto.femto_prob": f64 => |s| s.femto_grid.apartments.femto_prob, "probability an apartment hosts a femto";
    "femto.apartment_side_m": f64 => |s| s.femto_grid.apartments.side, "apartment side length";
    "femto.ues_per_apartment": usize => |s| s.femto_grid.apartments.ues_per_apartment, "UEs per femto apartment";
    "femto.femto_power_w": f64 => |s| s.femto_grid.apartments.femto_power_w, "femto transmit power";
    "spectrum.n_cc": usize => |s| s.femto_grid.spectrum.n_cc, "component carriers";
    "spectrum.rbs_per_cc": usize => |s| s.femto_grid.spectrum.rbs_per_cc, "RBs per component carrier";
    "spectrum.cc_bandwidth_hz": f64 => |s| s.femto_grid.spectrum.cc_bandwidth, "component-carrier bandwidth";
    "spectrum.rb_bandwidth_hz": f64 => |s| s.femto_grid.spectrum.rb_bandwidth, "RB bandwidth";
    "dacca.gamma_th_db": f64 => |s| s.femto_grid.dacca.gamma_th_db, "SINR threshold for adding SCCs";
    "dacca.slots": usize => |s| s.femto_grid.dacca.slots, "slots simulated per drop";
    "eicic.n_picos": usize => |s| s.hotspot.hotspots.n_picos, "pico hotspots";
    "eicic.hotspot_radius_m": f64 => |s| s.hotspot.hotspots.hotspot_radius, "hotspot radius";
    "eicic.ues_per_hotspot": usize => |s| s.hotspot.hotspots.ues_per_hotspot, "UEs per hotspot";
    "eicic.mobile_mues": usize => |s| s.hotspot.hotspots.n_mobile_mues, "uniform macro-area UEs";
    "eicic.pico_power_w": f64 => |s| s.hotspot.hotspots.pico_power_w, "pico transmit power";
    "eicic.macro_power_w": f64 => |s| s.hotspot.macro_power_w, "macro transmit power";
    "eicic.delta_er_db": f64 => |s| s.delta_er_db, "range-expansion bias";
    "eicic.gamma_target_db": f64 => |s| s.hotspot.gamma_target_db, "ER-PUE SINR target";
    "eicic.n_rb": usize => |s| s.hotspot.n_rb, "RBs";
    "eicic.rb_bandwidth_hz": f64 => |s| s.hotspot.rb_bandwidth, "RB bandwidth";
    "eicic.slots": usize => |s| s.hotspot.slots, "slots per drop";
    "eicic.abs_muted": usize => |s| s.hotspot.abs_muted, "muted subframes per ABS period";
    "eicic.abs_period": usize => |s| s.hotspot.abs_period, "ABS period, subframes";
    "eicic.rbs_per_ue": Option<usize> => |s| s.hotspot.rbs_per_ue, "RBs requested per UE per slot";
    "eicic.constant_rate": bool => |s| s.hotspot.constant_rate, "served UEs get the target-SINR rate";
    "ffr.isd_m": f64 => |s| s.ffr.isd, "inter-site distance";
    "ffr.macro_power_w": f64 => |s| s.ffr.macro_power_w, "macro sector transmit power";
    "ffr.ues_per_sector": usize => |s| s.ffr.ues_per_sector, "macro UEs per sector";
    "ffr.inner_fraction": f64 => |s| s.ffr.inner_fraction, "inner radius over site circumradius";
    "ffr.n_rb": usize => |s| s.ffr.n_rb, "RBs";
    "ffr.n_subbands": usize => |s| s.ffr.n_subbands, "FFR sub-bands";
    "ffr.femtos": usize => |s| s.ffr.femtos, "femto apartments";
    "ffr.femto_power_w": f64 => |s| s.ffr.femto_power_w, "femto transmit power";
    "ffr.femto_side_m": f64 => |s| s.ffr.femto_side, "femto apartment side";
    "ffr.ues_per_femto": usize => |s| s.ffr.ues_per_femto, "subscribers per femto";
    "ffr.femto_subbands": usize => |s| s.ffr.femto_subbands, "sub-bands each femto uses";
    "ffr.rb_bandwidth_hz": f64 => |s| s.ffr.rb_bandwidth, "RB bandwidth";
    "green.densities": Vec<f64> => |s| s.densities, "small-cell densities, sites/km2";
    "green.loads": Vec<f64> => |s| s.loads, "offered load fractions";
    "green.matched_candidates": Vec<f64> => |s| s.matched_candidates, "densities tried by the matched comparison";
    "green.n_rb": usize => |s| s.green.n_rb, "RBs";
    "green.rb_bandwidth_hz": f64 => |s| s.green.rb_bandwidth, "RB bandwidth";
    "green.ues_per_cell": usize => |s| s.green.ues_per_cell, "UEs per cell";
    "green.peak_demand_bps_km2": f64 => |s| s.green.peak_demand_bps_km2, "area traffic at load 1";
    "green.matched_ref_density": f64 => |s| s.green.matched_ref_density, "reference density of the matched comparison";
    "green.matched_demand_bps_km2": f64 => |s| s.green.matched_demand_bps_km2, "area traffic of the matched comparison";
    "green.electricity_price": f64 => |s| s.electricity_price, "price per kWh";
    "green.active_hours": f64 => |s| s.active_hours, "operating hours per year";
    "green.small_tx_power_w": f64 => |s| s.green.small.tx_power_w, "small-cell power per antenna";
    "green.small_antennas": u32 => |s| s.green.small.power.n_antennas, "small-cell antennas";
    "green.small_efficiency": f64 => |s| s.green.small.power.radio_head_efficiency, "small-cell radio-head efficiency";
    "green.small_overhead_w": f64 => |s| s.green.small.power.overhead_power, "small-cell overhead power";
    "green.small_rental": f64 => |s| s.green.small.cost.rental, "small-cell yearly rental";
    "green.ref_tx_power_w": f64 => |s| s.green.reference.tx_power_w, "reference power per antenna";
    "green.ref_antennas": u32 => |s| s.green.reference.power.n_antennas, "reference antennas per sector";
    "green.ref_efficiency": f64 => |s| s.green.reference.power.radio_head_efficiency, "reference radio-head efficiency";
    "green.ref_overhead_w": f64 => |s| s.green.reference.power.overhead_power, "reference overhead power per sector";
    "green.ref_rental": f64 => |s| s.green.reference.cost.rental, "reference yearly rental per site";
    "dtx.rho": f64 => |s| s.dtx_rho, "femto deployment ratio";
    "dtx.access": CellAccess => |s| s.dtx_access, "femto access mode";
    "dtx.slots": u64 => |s| s.dtx.slots, "slots per drop";
    "dtx.n_rb": usize => |s| s.dtx.n_rb, "RBs per femto";
    "dtx.priority_horizon": u64 => |s| s.dtx.priority_horizon, "slots before deadline that make a packet high priority";
    "dtx.pf_window": f64 => |s| s.dtx.pf_window, "PF averaging window, slots";
    "dtx.deactivate_after": u64 => |s| s.dtx.deactivate_after, "idle slots before a cell switches off";
    "dtx.min_snr_db": f64 => |s| s.dtx.min_snr_db, "SNR below which a link is unusable";
    "dtx.femto_power_w": f64 => |s| s.dtx.apartment.femto_power_w, "femto transmit power";
    "dtx.p0_w": f64 => |s| s.dtx.dtx.p0, "input power at zero output when active";
    "dtx.delta_p": f64 => |s| s.dtx.dtx.delta_p, "slope of input over output power";
    "dtx.p_max_w": f64 => |s| s.dtx.dtx.p_max, "maximum output power";
    "dtx.p_sleep_w": f64 => |s| s.dtx.dtx.p_sleep, "sleep input power";
    "nrtv.period_slots": u64 => |s| s.dtx.nrtv.period_slots, "frame period";
    "nrtv.mean_bytes": f64 => |s| s.dtx.nrtv.mean_bytes, "mean frame size";
    "nrtv.max_bytes": f64 => |s| s.dtx.nrtv.max_bytes, "frame size cap";
    "nrtv.shape": f64 => |s| s.dtx.nrtv.shape, "Pareto shape";
    "nrtv.deadline_slots": u64 => |s| s.dtx.nrtv.deadline_slots, "deadline after arrival";
    "learn.epochs": u64 => |s| s.learn_epochs, "epochs per drop";
    "learn.n_rb": usize => |s| s.learn.n_rb, "RBs";
    "learn.portions": usize => |s| s.learn.portions, "band portions (arms)";
    "learn.epoch_slots": usize => |s| s.learn.epoch_slots, "slots per epoch";
    "learn.exploration_c": f64 => |s| s.learn.exploration_c, "UCB exploration constant";
    "learn.scheduler": Scheduler => |s| s.learn.scheduler, "intra-cell scheduler";
    "learn.pf_window": f64 => |s| s.learn.pf_window, "PF averaging window, slots";
}

/// Keys handled by the run itself rather than by [`Settings`].
pub const RUN_KEYS: [(&str, &str, &str); 5] = [
    (
        "preset",
        "name",
        "scenario preset (required unless given on the command line)",
    ),
    (
        "scheme",
        "name",
        "scheme of the preset (required unless given on the command line)",
    ),
    ("run.drops", "unsigned integer", "Monte-Carlo drops"),
    ("run.seed", "unsigned integer", "master seed"),
    (
        "run.slots",
        "unsigned integer",
        "slots per drop (epochs for ucb; ignored by static schemes)",
    ),
];

pub fn lookup(key: &str) -> Option<&'static KeyDef> {
    KEYS.iter().find(|d| d.key == key)
}

/// One `key = value` line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Splits a config file into entries. `#` starts a comment; blank lines are
/// ignored. Duplicate keys are rejected.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(Error::Config {
                key: body.to_string(),
                line,
                message: "expected `key = value`".into(),
            });
        };
        let (key, value) = (k.trim(), v.trim());
        if key.is_empty() {
            return Err(Error::Config {
                key: String::new(),
                line,
                message: "empty key".into(),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Config {
                key: key.into(),
                line,
                message: format!("duplicate key (first set on line {})", prev.line),
            });
        }
        out.push(Entry {
            key: key.into(),
            value: value.into(),
            line,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub scheme: Scheme,
    /// Registry key to raw value.
    pub overrides: BTreeMap<String, String>,
    pub drops: u64,
    /// Overrides the scheme's own horizon when set.
    pub slots: Option<u64>,
    pub master_seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Run drops on the rayon pool.
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn new(preset: Preset, scheme: Scheme) -> Self {
        ExperimentConfig {
            preset,
            scheme,
            overrides: BTreeMap::new(),
            drops: 10,
            slots: None,
            master_seed: 1,
            out_dir: None,
            parallel: true,
        }
    }

    /// Preset defaults plus overrides, shared sections copied through.
    pub fn settings(&self) -> Result<Settings> {
        if self.drops == 0 {
            return Err(Error::Config {
                key: "run.drops".into(),
                line: 0,
                message: "must be >= 1".into(),
            });
        }
        if !self.preset.schemes().contains(&self.scheme) {
            return Err(Scheme::parse(self.scheme.name(), self.preset).unwrap_err());
        }
        let mut s = self.preset.settings();
        for (k, v) in &self.overrides {
            s.set(k, v).map_err(|message| Error::Config {
                key: k.clone(),
                line: 0,
                message,
            })?;
        }
        if let Some(n) = self.slots {
            s.apply_slots(self.scheme, n);
        }
        Ok(s.resolved())
    }

    /// `key = value` lines of the fully resolved configuration.
    pub fn manifest(&self) -> Result<String> {
        let s = self.settings()?;
        let mut m = String::new();
        let _ = writeln!(m, "preset = {}", self.preset.name());
        let _ = writeln!(m, "scheme = {}", self.scheme.name());
        let _ = writeln!(m, "run.drops = {}", self.drops);
        let _ = writeln!(m, "run.seed = {}", self.master_seed);
        if let Some(n) = self.slots {
            let _ = writeln!(m, "run.slots = {n}");
        }
        for d in KEYS {
            let _ = writeln!(m, "{} = {}", d.key, (d.get)(&s));
        }
        Ok(m)
    }
}

fn parse_run_u64(e: &Entry) -> Result<u64> {
    e.value.parse().map_err(|_| Error::Config {
        key: e.key.clone(),
        line: e.line,
        message: format!("expected unsigned integer, got `{}`", e.value),
    })
}

/// Parses a config file. `preset` and `scheme` given here win over the file;
/// each must be present in one of the two.
pub fn parse_config(
    text: &str,
    preset: Option<&str>,
    scheme: Option<&str>,
) -> Result<ExperimentConfig> {
    let entries = parse_entries(text)?;
    let find = |k: &str| entries.iter().find(|e| e.key == k);
    let preset_name = match (preset, find("preset")) {
        (Some(p), _) => p.to_string(),
        (None, Some(e)) => e.value.clone(),
        (None, None) => {
            return Err(Error::Config {
                key: "preset".into(),
                line: 0,
                message: "required but not set".into(),
            })
        }
    };
    let preset = Preset::parse(&preset_name)?;
    let scheme_name = match (scheme, find("scheme")) {
        (Some(s), _) => s.to_string(),
        (None, Some(e)) => e.value.clone(),
        (None, None) => {
            return Err(Error::Config {
                key: "scheme".into(),
                line: 0,
                message: "required but not set".into(),
            })
        }
    };
    let scheme = Scheme::parse(&scheme_name, preset)?;
    let mut cfg = ExperimentConfig::new(preset, scheme);
    let mut probe = preset.settings();
    for e in &entries {
        match e.key.as_str() {
            "preset" | "scheme" => {}
            "run.drops" => cfg.drops = parse_run_u64(e)?,
            "run.seed" => cfg.master_seed = parse_run_u64(e)?,
            "run.slots" => cfg.slots = Some(parse_run_u64(e)?),
            key => {
                probe.set(key, &e.value).map_err(|message| Error::Config {
                    key: key.into(),
                    line: e.line,
                    message,
                })?;
                cfg.overrides.insert(key.into(), e.value.clone());
            }
        }
    }
    if cfg.drops == 0 {
        let line = find("run.drops").map_or(0, |e| e.line);
        return Err(Error::Config {
            key: "run.drops".into(),
            line,
            message: "must be >= 1".into(),
        });
    }
    Ok(cfg)
}
