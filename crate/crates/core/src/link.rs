//! Link abstraction: SINR to spectral efficiency, throughput, effective SINR,
//! cell load and biased cell selection.

use crate::error::{Error, Result};
use crate::geometry::{Access, CellSite, Tier, UserTerminal};

/// Truncated-Shannon mapping `min(log2(1 + sinr / gap), cap)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkAbstraction {
    pub coding_gap: f64,
    pub se_cap: f64,
}

impl Default for LinkAbstraction {
    fn default() -> Self {
        LinkAbstraction {
            coding_gap: 1.5,
            se_cap: 4.2,
        }
    }
}

impl LinkAbstraction {
    pub fn new(coding_gap: f64, se_cap: f64) -> Result<Self> {
        if !(coding_gap >= 1.0) || !(se_cap > 0.0) {
            return Err(Error::invalid("coding_gap must be >= 1 and se_cap > 0"));
        }
        Ok(LinkAbstraction { coding_gap, se_cap })
    }

    /// bit/s/Hz for a linear SINR. Negative inputs are treated as zero.
    #[inline]
    pub fn spectral_efficiency(&self, sinr: f64) -> f64 {
        (1.0 + sinr.max(0.0) / self.coding_gap)
            .log2()
            .min(self.se_cap)
    }

    /// Smallest SINR at which the cap is reached.
    pub fn saturation_sinr(&self) -> f64 {
        self.coding_gap * (2f64.powf(self.se_cap) - 1.0)
    }

    /// Sum over allocated RBs of `rb_bandwidth * SE(sinr_rb)`, in bit/s.
    pub fn throughput(&self, per_rb_sinr: &[f64], rb_bandwidth_hz: f64) -> f64 {
        per_rb_sinr
            .iter()
            .map(|&s| rb_bandwidth_hz * self.spectral_efficiency(s))
            .sum()
    }
}

/// Capacity-equivalent (mean instantaneous capacity) aggregation:
/// `2^(mean log2(1 + sinr_k)) - 1`.
pub fn effective_sinr(per_rb_sinrs: &[f64]) -> Result<f64> {
    if per_rb_sinrs.is_empty() {
        return Err(Error::invalid("effective SINR of an empty RB set"));
    }
    let mean_cap = per_rb_sinrs
        .iter()
        .map(|&s| (1.0 + s.max(0.0)).log2())
        .sum::<f64>()
        / per_rb_sinrs.len() as f64;
    Ok(2f64.powf(mean_cap) - 1.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-tier cell-selection bias in dB.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TierOffsets {
    pub macro_db: f64,
    pub micro_db: f64,
    pub pico_db: f64,
    pub femto_db: f64,
}

impl TierOffsets {
    pub fn pico(db: f64) -> Self {
        TierOffsets {
            pico_db: db,
            ..Default::default()
        }
    }

    pub fn get(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Macro => self.macro_db,
            Tier::Micro3Sector => self.micro_db,
            Tier::Pico => self.pico_db,
            Tier::Femto => self.femto_db,
        }
    }
}

pub fn can_access(ue: &UserTerminal, cell: &CellSite) -> bool {
    match cell.access {
        Access::Open => true,
        Access::Csg => ue.csg_allowed.contains(&cell.id),
    }
}

/// Biased strongest-cell selection: argmax over accessible cells of
/// `rss_dbm[cell] + offset(tier)`, lowest id on ties. `None` means the UE
/// cannot attach anywhere.
pub fn select_cell(
    ue: &UserTerminal,
    cells: &[CellSite],
    rss_dbm: &[f64],
    offsets: &TierOffsets,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for cell in cells {
        if !can_access(ue, cell) {
            continue;
        }
        let score = rss_dbm[cell.id] + offsets.get(cell.tier);
        if best.map_or(true, |(_, b)| score > b) {
            best = Some((cell.id, score));
        }
    }
    best.map(|(id, _)| id)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellLoadState {
    pub offered_rate: f64,
    pub bandwidth: f64,
    /// Clamped to [0, 1].
    pub load: f64,
    /// `R / (B * SE)`, infinite when the cell has no usable efficiency.
    pub unclamped: f64,
}

impl CellLoadState {
    pub fn overloaded(&self) -> bool {
        self.unclamped > 1.0
    }
}

/// `L = R_traffic / (B * eta_SE)`.
pub fn cell_load(offered: f64, bandwidth: f64, se: f64) -> Result<CellLoadState> {
    if !(bandwidth > 0.0) {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    if offered < 0.0 || se < 0.0 {
        return Err(Error::invalid("offered rate and SE must be non-negative"));
    }
    let unclamped = if se == 0.0 {
        if offered == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        offered / (bandwidth * se)
    };
    let load = if se == 0.0 && offered > 0.0 {
        1.0
    } else {
        unclamped.clamp(0.0, 1.0)
    };
    Ok(CellLoadState {
        offered_rate: offered,
        bandwidth,
        load,
        unclamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Antenna, Mobility, Position};
    use std::collections::BTreeSet;

    fn cell(id: usize, tier: Tier) -> CellSite {
        CellSite {
            id,
            site: id,
            tier,
            position: Position::new(0.0, 0.0),
            max_tx_power: 1.0,
            n_sectors: 1,
            antenna: Antenna::Omni,
            boresight: 0.0,
            access: Access::Open,
        }
    }

    fn ue() -> UserTerminal {
        UserTerminal {
            id: 0,
            position: Position::new(0.0, 0.0),
            mobility: Mobility::Mobile,
            csg_allowed: BTreeSet::new(),
            hotspot: None,
            apartment: None,
        }
    }

    #[test]
    fn se_examples() {
        let l = LinkAbstraction::default();
        assert_eq!(l.spectral_efficiency(0.0), 0.0);
        assert!((l.spectral_efficiency(1.5) - 1.0).abs() < 1e-12);
        let sat = 1.5 * (2f64.powf(4.2) - 1.0);
        assert!((l.saturation_sinr() - sat).abs() < 1e-12);
        assert!((sat - 26.06).abs() < 0.01);
        assert_eq!(l.spectral_efficiency(sat * 1.0001), 4.2);
        assert_eq!(l.spectral_efficiency(1e6), 4.2);
        assert!(LinkAbstraction::new(0.9, 4.2).is_err());
    }

    #[test]
    fn throughput_examples() {
        let l = LinkAbstraction::default();
        assert!((l.throughput(&[1.5], 180e3) - 180e3).abs() < 1e-6);
        assert_eq!(l.throughput(&[], 180e3), 0.0);
        assert!((l.throughput(&[1e4; 50], 180e3) - 37.8e6).abs() < 1e-3);
    }

    #[test]
    fn effective_sinr_examples() {
        assert!((effective_sinr(&[2.5, 2.5, 2.5]).unwrap() - 2.5).abs() < 1e-12);
        assert!((effective_sinr(&[0.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(effective_sinr(&[]).is_err());
    }

    #[test]
    fn selection_with_range_expansion() {
        let cells = [cell(0, Tier::Macro), cell(1, Tier::Pico)];
        let rss = [-80.0, -90.0];
        assert_eq!(
            select_cell(&ue(), &cells, &rss, &TierOffsets::default()),
            Some(0)
        );
        assert_eq!(
            select_cell(&ue(), &cells, &rss, &TierOffsets::pico(16.0)),
            Some(1)
        );
        assert_eq!(
            select_cell(&ue(), &cells, &rss, &TierOffsets::pico(8.0)),
            Some(0)
        );
    }

    #[test]
    fn selection_respects_csg_and_ties() {
        let mut f = cell(1, Tier::Femto);
        f.access = Access::Csg;
        let cells = [cell(0, Tier::Macro), f];
        assert_eq!(
            select_cell(&ue(), &cells, &[-90.0, -50.0], &TierOffsets::default()),
            Some(0)
        );
        let mut u = ue();
        u.csg_allowed.insert(1);
        assert_eq!(
            select_cell(&u, &cells, &[-90.0, -50.0], &TierOffsets::default()),
            Some(1)
        );
        let open = [cell(0, Tier::Pico), cell(1, Tier::Pico)];
        assert_eq!(
            select_cell(&ue(), &open, &[-70.0, -70.0], &TierOffsets::default()),
            Some(0)
        );
        let csg_only = [f_only()];
        assert_eq!(
            select_cell(&ue(), &csg_only, &[-50.0], &TierOffsets::default()),
            None
        );
    }

    fn f_only() -> CellSite {
        let mut f = cell(0, Tier::Femto);
        f.access = Access::Csg;
        f
    }

    #[test]
    fn load_examples() {
        let b = 10e6;
        assert!((cell_load(b * 2.0, b, 2.0).unwrap().load - 1.0).abs() < 1e-12);
        assert_eq!(cell_load(0.0, b, 2.0).unwrap().load, 0.0);
        assert!((cell_load(5e6, b, 2.0).unwrap().load - 0.25).abs() < 1e-12);
        let over = cell_load(5e6, b, 0.0).unwrap();
        assert_eq!(over.load, 1.0);
        assert!(over.unclamped.is_infinite() && over.overloaded());
        let heavy = cell_load(4e7, b, 2.0).unwrap();
        assert_eq!(heavy.load, 1.0);
        assert!((heavy.unclamped - 2.0).abs() < 1e-12);
    }
}
