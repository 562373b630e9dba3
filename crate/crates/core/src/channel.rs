//! Link gains and per-RB SINR.
//!
//! Path loss is carried as `PL_dB = -10 log10(lambda) + 10 alpha log10(d_m)`
//! plus wall and floor penetration terms, which is the linear `lambda d^-alpha`
//! form written in decibels. The 3GPP "model 1" formulas are the defaults;
//! `alpha` and `lambda_const` can be overridden to use any power law.

use std::str::FromStr;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{Antenna, CellSite, ScenarioLayout, Tier, UserTerminal};
use crate::rng::{hash_uniform, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathLossModel {
    MacroOutdoor,
    PicoOutdoor,
    FemtoIndoor,
}

impl PathLossModel {
    pub fn name(self) -> &'static str {
        match self {
            PathLossModel::MacroOutdoor => "macro_outdoor",
            PathLossModel::PicoOutdoor => "pico_outdoor",
            PathLossModel::FemtoIndoor => "femto_indoor",
        }
    }

    pub fn for_tier(tier: Tier) -> Self {
        match tier {
            Tier::Macro | Tier::Micro3Sector => PathLossModel::MacroOutdoor,
            Tier::Pico => PathLossModel::PicoOutdoor,
            Tier::Femto => PathLossModel::FemtoIndoor,
        }
    }
}

impl FromStr for PathLossModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro_outdoor" => Ok(PathLossModel::MacroOutdoor),
            "pico_outdoor" => Ok(PathLossModel::PicoOutdoor),
            "femto_indoor" => Ok(PathLossModel::FemtoIndoor),
            other => Err(Error::invalid(format!("unknown path-loss model `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLossParams {
    pub model: PathLossModel,
    pub alpha: f64,
    pub lambda_const: f64,
    pub wall_loss_db: f64,
    /// Coefficient of the multi-floor term `c * F^((F+2)/(F+1) - 0.46)`.
    pub floor_loss_db: f64,
}

impl PathLossParams {
    /// Builds the parameters from a `A + B log10(d_km)` formula.
    fn from_km_formula(model: PathLossModel, at_1km_db: f64, slope_db: f64) -> Self {
        // A + B log10(d_m / 1000) = (A - 3B) + B log10(d_m)
        let intercept = at_1km_db - 3.0 * slope_db;
        PathLossParams {
            model,
            alpha: slope_db / 10.0,
            lambda_const: 10f64.powf(-intercept / 10.0),
            wall_loss_db: 0.0,
            floor_loss_db: 0.0,
        }
    }

    pub fn defaults(model: PathLossModel) -> Self {
        match model {
            PathLossModel::MacroOutdoor => Self::from_km_formula(model, 128.1, 37.6),
            PathLossModel::PicoOutdoor => Self::from_km_formula(model, 140.7, 36.7),
            PathLossModel::FemtoIndoor => PathLossParams {
                wall_loss_db: 5.0,
                floor_loss_db: 18.3,
                ..Self::from_km_formula(model, 127.0, 30.0)
            },
        }
    }

    pub fn intercept_db(&self) -> f64 {
        -10.0 * self.lambda_const.log10()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.lambda_const > 0.0) {
            return Err(Error::invalid(format!(
                "{}: alpha and lambda must be > 0",
                self.model.name()
            )));
        }
        if self.wall_loss_db < 0.0 || self.floor_loss_db < 0.0 {
            return Err(Error::invalid(format!(
                "{}: losses must be >= 0",
                self.model.name()
            )));
        }
        Ok(())
    }
}

/// Path loss in dB at distance `d` metres through `walls` walls and `floors`
/// floors.
pub fn path_loss(params: &PathLossParams, d: f64, walls: u32, floors: u32) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!(
            "path-loss distance must be positive, got {d}"
        )));
    }
    let f = floors as f64;
    let floor_term = if floors == 0 {
        0.0
    } else {
        params.floor_loss_db * f.powf((f + 2.0) / (f + 1.0) - 0.46)
    };
    Ok(params.intercept_db()
        + 10.0 * params.alpha * d.log10()
        + params.wall_loss_db * walls as f64
        + floor_term)
}

/// Tri-sector horizontal pattern, `-min(12 (theta/theta_3dB)^2, A_max)` dB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AntennaPattern {
    pub theta_3db_deg: f64,
    pub max_attenuation_db: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        AntennaPattern {
            theta_3db_deg: 70.0,
            max_attenuation_db: 20.0,
        }
    }
}

impl AntennaPattern {
    /// Gain in dB for an off-boresight angle in radians.
    pub fn gain_db(&self, antenna: Antenna, off_boresight: f64) -> f64 {
        match antenna {
            Antenna::Omni => 0.0,
            Antenna::TriSector => {
                let theta = wrap_angle(off_boresight).to_degrees();
                -(12.0 * (theta / self.theta_3db_deg).powi(2)).min(self.max_attenuation_db)
            }
        }
    }
}

/// Maps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut x = a.rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub rb_bandwidth_hz: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            rb_bandwidth_hz: 180e3,
        }
    }
}

impl NoiseModel {
    pub fn noise_dbm_per_rb(&self) -> f64 {
        self.density_dbm_hz + self.noise_figure_db + 10.0 * self.rb_bandwidth_hz.log10()
    }

    pub fn noise_w_per_rb(&self) -> f64 {
        10f64.powf(self.noise_dbm_per_rb() / 10.0) / 1000.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    pub macro_pl: PathLossParams,
    pub pico_pl: PathLossParams,
    pub femto_pl: PathLossParams,
    pub shadow_sigma_outdoor_db: f64,
    pub shadow_sigma_indoor_db: f64,
    /// Outdoor-to-indoor loss for macro/pico links to indoor UEs.
    pub penetration_loss_db: f64,
    pub antenna: AntennaPattern,
    pub fast_fading: bool,
    pub noise: NoiseModel,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            macro_pl: PathLossParams::defaults(PathLossModel::MacroOutdoor),
            pico_pl: PathLossParams::defaults(PathLossModel::PicoOutdoor),
            femto_pl: PathLossParams::defaults(PathLossModel::FemtoIndoor),
            shadow_sigma_outdoor_db: 8.0,
            shadow_sigma_indoor_db: 4.0,
            penetration_loss_db: 20.0,
            antenna: AntennaPattern::default(),
            fast_fading: false,
            noise: NoiseModel::default(),
        }
    }
}

impl ChannelParams {
    pub fn path_loss_params(&self, tier: Tier) -> &PathLossParams {
        match PathLossModel::for_tier(tier) {
            PathLossModel::MacroOutdoor => &self.macro_pl,
            PathLossModel::PicoOutdoor => &self.pico_pl,
            PathLossModel::FemtoIndoor => &self.femto_pl,
        }
    }

    pub fn shadow_sigma(&self, tier: Tier) -> f64 {
        if tier == Tier::Femto {
            self.shadow_sigma_indoor_db
        } else {
            self.shadow_sigma_outdoor_db
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.macro_pl.validate()?;
        self.pico_pl.validate()?;
        self.femto_pl.validate()?;
        if self.shadow_sigma_indoor_db < 0.0 || self.shadow_sigma_outdoor_db < 0.0 {
            return Err(Error::invalid("shadowing sigma must be >= 0"));
        }
        if !(self.noise.rb_bandwidth_hz > 0.0) {
            return Err(Error::invalid("rb_bandwidth must be > 0"));
        }
        Ok(())
    }
}

/// Log-normal shadowing, one i.i.d. sample per (cell, UE) link, drawn once
/// per drop.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowingField {
    n_cells: usize,
    n_ues: usize,
    samples: Vec<f64>,
}

impl ShadowingField {
    pub fn draw(layout: &ScenarioLayout, params: &ChannelParams, rng: &mut SimRng) -> Self {
        let (n_cells, n_ues) = (layout.cells().len(), layout.ues().len());
        let mut samples = Vec::with_capacity(n_cells * n_ues);
        for cell in layout.cells() {
            let sigma = params.shadow_sigma(cell.tier);
            let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
            for _ in 0..n_ues {
                samples.push(if sigma > 0.0 { normal.sample(rng) } else { 0.0 });
            }
        }
        ShadowingField {
            n_cells,
            n_ues,
            samples,
        }
    }

    pub fn zeros(n_cells: usize, n_ues: usize) -> Self {
        ShadowingField {
            n_cells,
            n_ues,
            samples: vec![0.0; n_cells * n_ues],
        }
    }

    pub fn from_samples(n_cells: usize, n_ues: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != n_cells * n_ues {
            return Err(Error::invalid("shadowing sample count mismatch"));
        }
        Ok(ShadowingField {
            n_cells,
            n_ues,
            samples,
        })
    }

    pub fn get(&self, cell: usize, ue: usize) -> Option<f64> {
        (cell < self.n_cells && ue < self.n_ues).then(|| self.samples[cell * self.n_ues + ue])
    }
}

/// Linear power gain of a link: path loss, shadowing and antenna combined.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LinkGain(pub f64);

impl LinkGain {
    pub fn from_db(db: f64) -> Self {
        LinkGain(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// Gain from `cell` to `ue`. The antenna angle is taken from the wrapped
/// displacement, so sectors see wraparound images correctly.
pub fn link_gain(
    layout: &ScenarioLayout,
    cell: &CellSite,
    ue: &UserTerminal,
    params: &ChannelParams,
    shadowing: &ShadowingField,
) -> Result<LinkGain> {
    let shadow = shadowing.get(cell.id, ue.id).ok_or_else(|| {
        Error::Internal(format!(
            "no shadowing sample for cell {} ue {}",
            cell.id, ue.id
        ))
    })?;
    let d = layout.distance(&cell.position, &ue.position);
    let pl_params = params.path_loss_params(cell.tier);
    let (walls, floors) = if cell.tier == Tier::Femto {
        (
            layout.walls_between(&cell.position, &ue.position),
            layout.floors_between(&cell.position, &ue.position),
        )
    } else {
        (0, 0)
    };
    let mut loss = path_loss(pl_params, d, walls, floors)? + shadow;
    if cell.tier != Tier::Femto && layout.indoor_spot(&ue.position).is_some() {
        loss += params.penetration_loss_db;
    }
    let antenna_db = match cell.antenna {
        Antenna::Omni => 0.0,
        Antenna::TriSector => {
            let (dx, dy) = layout.displacement(&cell.position, &ue.position);
            params
                .antenna
                .gain_db(cell.antenna, dy.atan2(dx) - cell.boresight)
        }
    };
    Ok(LinkGain::from_db(antenna_db - loss))
}

/// Dense `cells x ues` table of linear link gains for one drop.
#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrix {
    n_cells: usize,
    n_ues: usize,
    gains: Vec<f64>,
}

impl GainMatrix {
    pub fn build(
        layout: &ScenarioLayout,
        params: &ChannelParams,
        shadowing: &ShadowingField,
    ) -> Result<Self> {
        let (n_cells, n_ues) = (layout.cells().len(), layout.ues().len());
        let mut gains = Vec::with_capacity(n_cells * n_ues);
        for cell in layout.cells() {
            for ue in layout.ues() {
                gains.push(link_gain(layout, cell, ue, params, shadowing)?.linear());
            }
        }
        Ok(GainMatrix {
            n_cells,
            n_ues,
            gains,
        })
    }

    /// Builds a matrix from explicit gains, rows indexed by cell.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_cells = rows.len();
        let n_ues = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_ues) {
            return Err(Error::invalid("ragged gain rows"));
        }
        if rows.iter().flatten().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::invalid("link gains must be finite and positive"));
        }
        Ok(GainMatrix {
            n_cells,
            n_ues,
            gains: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    #[inline]
    pub fn get(&self, cell: usize, ue: usize) -> f64 {
        self.gains[cell * self.n_ues + ue]
    }
}

/// Unit-mean exponential (Rayleigh power) fading per (link, RB, slot), drawn
/// from a counter hash so values never depend on evaluation order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FadingField {
    pub seed: u64,
    pub enabled: bool,
}

impl FadingField {
    pub fn disabled() -> Self {
        FadingField {
            seed: 0,
            enabled: false,
        }
    }

    #[inline]
    pub fn h(&self, cell: usize, ue: usize, rb: usize, slot: usize) -> f64 {
        if !self.enabled {
            return 1.0;
        }
        -hash_uniform(self.seed, &[cell as u64, ue as u64, rb as u64, slot as u64]).ln()
    }
}

/// `S / (sum I + n)` with the interference summed in iteration order.
pub fn sinr_from_powers(
    signal_w: f64,
    interference_w: impl IntoIterator<Item = f64>,
    noise_w: f64,
) -> f64 {
    let i: f64 = interference_w.into_iter().sum();
    signal_w / (i + noise_w)
}

/// SINR of `ue` served by `serving` on one RB. `tx_power[c]` is the power cell
/// `c` radiates on the RB; cells with zero power add nothing. Interferers are
/// summed in ascending index order; `serving` is skipped if listed.
#[allow(clippy::too_many_arguments)]
pub fn sinr(
    gains: &GainMatrix,
    ue: usize,
    serving: usize,
    interferers: &[usize],
    tx_power: &[f64],
    noise_w: f64,
    fading: &FadingField,
    rb: usize,
    slot: usize,
) -> f64 {
    let signal = tx_power[serving] * gains.get(serving, ue) * fading.h(serving, ue, rb, slot);
    let mut sorted: Vec<usize> = interferers
        .iter()
        .copied()
        .filter(|&j| j != serving)
        .collect();
    sorted.sort_unstable();
    sorted.dedup();
    let interference = sorted.into_iter().map(|j| {
        let p = tx_power[j];
        if p > 0.0 {
            p * gains.get(j, ue) * fading.h(j, ue, rb, slot)
        } else {
            0.0
        }
    });
    sinr_from_powers(signal, interference, noise_w)
}

/// SINR against every other cell in the table.
pub fn sinr_all(
    gains: &GainMatrix,
    ue: usize,
    serving: usize,
    tx_power: &[f64],
    noise_w: f64,
    fading: &FadingField,
    rb: usize,
    slot: usize,
) -> f64 {
    let signal = tx_power[serving] * gains.get(serving, ue) * fading.h(serving, ue, rb, slot);
    let mut interference = 0.0;
    for (j, &p) in tx_power.iter().enumerate() {
        if j != serving && p > 0.0 {
            interference += p * gains.get(j, ue) * fading.h(j, ue, rb, slot);
        }
    }
    signal / (interference + noise_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_apartment_grid_5x5, build_hex_macro_grid, Position};
    use rand::SeedableRng;

    #[test]
    fn macro_at_1km() {
        let p = PathLossParams::defaults(PathLossModel::MacroOutdoor);
        assert!((path_loss(&p, 1000.0, 0, 0).unwrap() - 128.1).abs() < 1e-9);
    }

    #[test]
    fn doubling_distance_adds_slope() {
        for (model, slope) in [
            (PathLossModel::MacroOutdoor, 3.76),
            (PathLossModel::PicoOutdoor, 3.67),
            (PathLossModel::FemtoIndoor, 3.0),
        ] {
            let p = PathLossParams::defaults(model);
            for d in [3.0, 40.0, 700.0] {
                let diff = path_loss(&p, 2.0 * d, 0, 0).unwrap() - path_loss(&p, d, 0, 0).unwrap();
                assert!(
                    (diff - 10.0 * slope * 2f64.log10()).abs() < 1e-9,
                    "{model:?}"
                );
            }
        }
    }

    #[test]
    fn walls_add_linearly() {
        let p = PathLossParams::defaults(PathLossModel::FemtoIndoor);
        let a = path_loss(&p, 20.0, 0, 0).unwrap();
        let b = path_loss(&p, 20.0, 2, 0).unwrap();
        assert!((b - a - 10.0).abs() < 1e-12);
        assert!(path_loss(&p, 20.0, 0, 2).unwrap() > path_loss(&p, 20.0, 0, 1).unwrap());
    }

    #[test]
    fn unknown_model_and_bad_distance() {
        assert!("urban_canyon".parse::<PathLossModel>().is_err());
        let p = PathLossParams::defaults(PathLossModel::PicoOutdoor);
        assert!(path_loss(&p, 0.0, 0, 0).is_err());
    }

    #[test]
    fn antenna_pattern_values() {
        let a = AntennaPattern::default();
        assert_eq!(a.gain_db(Antenna::TriSector, 0.0), 0.0);
        assert!((a.gain_db(Antenna::TriSector, 70f64.to_radians()) + 12.0).abs() < 1e-9);
        assert_eq!(a.gain_db(Antenna::TriSector, 3.0), -20.0);
        assert_eq!(a.gain_db(Antenna::Omni, 2.0), 0.0);
    }

    #[test]
    fn omni_gain_is_direct_conversion() {
        let mut layout = build_hex_macro_grid(1, 1, 500.0, 40.0, false).unwrap();
        // place a UE where macro PL is exactly 100 dB: 15.3 + 37.6 log10(d) = 100
        let d = 10f64.powf((100.0 - 15.3) / 37.6);
        let ue = crate::geometry::UserTerminal {
            id: 0,
            position: Position::new(d, 0.0),
            mobility: crate::geometry::Mobility::Mobile,
            csg_allowed: Default::default(),
            hotspot: None,
            apartment: None,
        };
        layout = layout.with_ues(vec![ue]).unwrap();
        let params = ChannelParams::default();
        let g = link_gain(
            &layout,
            &layout.cells()[0],
            &layout.ues()[0],
            &params,
            &ShadowingField::zeros(1, 1),
        )
        .unwrap();
        assert!((g.linear() / 1e-10 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn missing_shadowing_is_internal_error() {
        let layout = build_apartment_grid_5x5(10.0, 1.0, 1).unwrap();
        let r = link_gain(
            &layout,
            &layout.cells()[0],
            &layout.ues()[0],
            &ChannelParams::default(),
            &ShadowingField::zeros(0, 0),
        );
        assert!(matches!(r, Err(Error::Internal(_))));
    }

    #[test]
    fn sinr_examples() {
        let n = 1e-13;
        assert!((sinr_from_powers(n, [], n) - 1.0).abs() < 1e-12);
        assert!((sinr_from_powers(4.0 * n, [n], n) - 2.0).abs() < 1e-12);
        let g = GainMatrix::from_rows(vec![vec![1e-9], vec![1e-10], vec![1e-11]]).unwrap();
        let silent = [1.0, 0.0, 0.0];
        let f = FadingField::disabled();
        let with = sinr(&g, 0, 0, &[1, 2], &silent, n, &f, 0, 0);
        let without = sinr(&g, 0, 0, &[], &silent, n, &f, 0, 0);
        assert_eq!(with, without);
    }

    #[test]
    fn noise_per_rb() {
        let n = NoiseModel::default();
        // -174 + 9 + 10 log10(180e3)
        assert!((n.noise_dbm_per_rb() - (-165.0 + 52.552_725_051_033_06)).abs() < 1e-9);
    }

    #[test]
    fn shadowing_statistics() {
        let layout = build_hex_macro_grid(1, 1, 500.0, 40.0, false).unwrap();
        let ues: Vec<_> = (0..100_000)
            .map(|i| crate::geometry::UserTerminal {
                id: i,
                position: Position::new(10.0, 10.0),
                mobility: crate::geometry::Mobility::Mobile,
                csg_allowed: Default::default(),
                hotspot: None,
                apartment: None,
            })
            .collect();
        let layout = layout.with_ues(ues).unwrap();
        let mut rng = SimRng::seed_from_u64(42);
        let f = ShadowingField::draw(&layout, &ChannelParams::default(), &mut rng);
        let xs: Vec<f64> = (0..100_000).map(|u| f.get(0, u).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(mean.abs() < 0.1, "{mean}");
        assert!((var.sqrt() / 8.0 - 1.0).abs() < 0.02, "{}", var.sqrt());
    }

    #[test]
    fn fading_unit_mean() {
        let f = FadingField {
            seed: 3,
            enabled: true,
        };
        let m: f64 = (0..200_000).map(|rb| f.h(1, 2, rb, 0)).sum::<f64>() / 2e5;
        assert!((m - 1.0).abs() < 0.01);
    }
}
