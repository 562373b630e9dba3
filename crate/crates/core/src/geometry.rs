//! Network layouts and user drops.
//!
//! All builders are pure functions of their parameters and a seed. A
//! [`ScenarioLayout`] is immutable once built; later stages (channel, schemes)
//! only borrow it.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_3, PI};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

pub const DEFAULT_FLOOR_HEIGHT: f64 = 3.0;
pub const DEFAULT_D_MIN: f64 = 1.0;
/// Attempt budget for constrained rejection sampling.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub floor: u32,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y, floor: 0 }
    }

    pub fn on_floor(x: f64, y: f64, floor: u32) -> Self {
        Position { x, y, floor }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Macro,
    Micro3Sector,
    Pico,
    Femto,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::Macro, Tier::Micro3Sector, Tier::Pico, Tier::Femto];

    pub fn name(self) -> &'static str {
        match self {
            Tier::Macro => "macro",
            Tier::Micro3Sector => "micro3sector",
            Tier::Pico => "pico",
            Tier::Femto => "femto",
        }
    }

    pub fn is_small_cell(self) -> bool {
        matches!(self, Tier::Pico | Tier::Femto)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Antenna {
    Omni,
    TriSector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Open,
    Csg,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSite {
    pub id: usize,
    /// Physical site; sectors of one site share it.
    pub site: usize,
    pub tier: Tier,
    pub position: Position,
    pub max_tx_power: f64,
    pub n_sectors: u8,
    pub antenna: Antenna,
    /// Boresight azimuth in radians, meaningful for tri-sector antennas.
    pub boresight: f64,
    pub access: Access,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mobility {
    StaticHotspot,
    Mobile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserTerminal {
    pub id: usize,
    pub position: Position,
    pub mobility: Mobility,
    /// CSG cells this UE may attach to.
    pub csg_allowed: BTreeSet<usize>,
    /// Pico the UE was dropped around, for hotspot UEs.
    pub hotspot: Option<usize>,
    /// Global apartment index for indoor UEs.
    pub apartment: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: &Position) -> bool {
        const EPS: f64 = 1e-9;
        p.x >= self.min_x - EPS
            && p.x <= self.max_x + EPS
            && p.y >= self.min_y - EPS
            && p.y <= self.max_y + EPS
    }
}

/// How distances wrap around the simulated area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wrap {
    None,
    /// Rectangular torus over the layout bounds.
    Torus,
    /// Seven-site hexagonal cluster repeated with translation vectors of
    /// length `isd * sqrt(7)`.
    HexCluster {
        isd: f64,
    },
}

/// A rectangular block of square apartments, possibly with several floors.
#[derive(Clone, Debug, PartialEq)]
pub struct ApartmentBlock {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cols: usize,
    pub rows: usize,
    pub floors: u32,
    pub side: f64,
}

impl ApartmentBlock {
    pub fn apartments(&self) -> usize {
        self.cols * self.rows * self.floors as usize
    }

    fn locate(&self, p: &Position) -> Option<(usize, usize)> {
        let cx = (p.x - self.origin_x) / self.side;
        let cy = (p.y - self.origin_y) / self.side;
        if cx < 0.0 || cy < 0.0 || p.floor >= self.floors {
            return None;
        }
        let (c, r) = (cx.floor() as usize, cy.floor() as usize);
        // points exactly on the far wall belong to the last apartment
        let c = if cx == self.cols as f64 {
            self.cols - 1
        } else {
            c
        };
        let r = if cy == self.rows as f64 {
            self.rows - 1
        } else {
            r
        };
        (c < self.cols && r < self.rows).then_some((c, r))
    }

    /// Square of apartment `(col, row)` as a rectangle.
    pub fn apartment_rect(&self, col: usize, row: usize) -> Rect {
        let x0 = self.origin_x + col as f64 * self.side;
        let y0 = self.origin_y + row as f64 * self.side;
        Rect::new(x0, y0, x0 + self.side, y0 + self.side)
    }
}

/// Where a point sits relative to the indoor structures of a layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndoorSpot {
    pub block: usize,
    pub col: usize,
    pub row: usize,
    pub floor: u32,
    pub apartment: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioLayout {
    cells: Vec<CellSite>,
    ues: Vec<UserTerminal>,
    bounds: Rect,
    wrap: Wrap,
    seed: u64,
    floor_height: f64,
    d_min: f64,
    blocks: Vec<ApartmentBlock>,
}

impl ScenarioLayout {
    /// Validates ids, bounds and per-tier invariants.
    pub fn new(
        cells: Vec<CellSite>,
        ues: Vec<UserTerminal>,
        bounds: Rect,
        wrap: Wrap,
        seed: u64,
        blocks: Vec<ApartmentBlock>,
    ) -> Result<Self> {
        let layout = ScenarioLayout {
            cells,
            ues,
            bounds,
            wrap,
            seed,
            floor_height: DEFAULT_FLOOR_HEIGHT,
            d_min: DEFAULT_D_MIN,
            blocks,
        };
        layout.validate()?;
        Ok(layout)
    }

    fn validate(&self) -> Result<()> {
        for (i, c) in self.cells.iter().enumerate() {
            if c.id != i {
                return Err(Error::invalid(format!("cell ids not dense at {i}")));
            }
            if !(c.max_tx_power > 0.0) {
                return Err(Error::invalid(format!(
                    "cell {i}: max_tx_power must be > 0"
                )));
            }
            if !matches!(c.n_sectors, 1 | 3) {
                return Err(Error::invalid(format!(
                    "cell {i}: n_sectors must be 1 or 3"
                )));
            }
            if !c.position.is_finite() || !self.bounds.contains(&c.position) {
                return Err(Error::invalid(format!("cell {i} outside bounds")));
            }
            if c.tier == Tier::Femto {
                if c.antenna != Antenna::Omni {
                    return Err(Error::invalid(format!("femto {i} must be omni")));
                }
                if self.indoor_spot(&c.position).is_none() {
                    return Err(Error::invalid(format!("femto {i} is not indoors")));
                }
            }
        }
        for (i, u) in self.ues.iter().enumerate() {
            if u.id != i {
                return Err(Error::invalid(format!("ue ids not dense at {i}")));
            }
            if !u.position.is_finite() || !self.bounds.contains(&u.position) {
                return Err(Error::invalid(format!("ue {i} outside bounds")));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> &[CellSite] {
        &self.cells
    }

    pub fn ues(&self) -> &[UserTerminal] {
        &self.ues
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn wrap(&self) -> Wrap {
        self.wrap
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn floor_height(&self) -> f64 {
        self.floor_height
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn blocks(&self) -> &[ApartmentBlock] {
        &self.blocks
    }

    pub fn n_apartments(&self) -> usize {
        self.blocks.iter().map(ApartmentBlock::apartments).sum()
    }

    pub fn with_distance_floor(mut self, d_min: f64) -> Self {
        self.d_min = d_min;
        self
    }

    pub fn with_floor_height(mut self, h: f64) -> Self {
        self.floor_height = h;
        self
    }

    /// Replaces the UE population, keeping everything else.
    pub fn with_ues(mut self, ues: Vec<UserTerminal>) -> Result<Self> {
        self.ues = ues;
        self.validate()?;
        Ok(self)
    }

    pub fn indoor_spot(&self, p: &Position) -> Option<IndoorSpot> {
        let mut offset = 0;
        for (b, block) in self.blocks.iter().enumerate() {
            if let Some((col, row)) = block.locate(p) {
                let apartment =
                    offset + p.floor as usize * block.cols * block.rows + row * block.cols + col;
                return Some(IndoorSpot {
                    block: b,
                    col,
                    row,
                    floor: p.floor,
                    apartment,
                });
            }
            offset += block.apartments();
        }
        None
    }

    /// Interior walls crossed on the way from `a` to `b`. Points in different
    /// blocks, or outdoors, cross one external wall per indoor end.
    pub fn walls_between(&self, a: &Position, b: &Position) -> u32 {
        match (self.indoor_spot(a), self.indoor_spot(b)) {
            (Some(sa), Some(sb)) if sa.block == sb.block => {
                (sa.col.abs_diff(sb.col) + sa.row.abs_diff(sb.row)) as u32
            }
            (sa, sb) => sa.is_some() as u32 + sb.is_some() as u32,
        }
    }

    pub fn floors_between(&self, a: &Position, b: &Position) -> u32 {
        a.floor.abs_diff(b.floor)
    }

    /// Minimum-image displacement from `a` to `b` in the horizontal plane.
    pub fn displacement(&self, a: &Position, b: &Position) -> (f64, f64) {
        displacement(a, b, self.wrap, &self.bounds)
    }

    pub fn distance(&self, a: &Position, b: &Position) -> f64 {
        distance(a, b, self.wrap, &self.bounds, self.floor_height, self.d_min)
    }
}

/// Translation vectors of the seven-site hexagonal wraparound.
fn hex_cluster_shifts(isd: f64) -> [(f64, f64); 6] {
    let (tx, ty) = (2.5 * isd, 3f64.sqrt() / 2.0 * isd);
    let mut out = [(0.0, 0.0); 6];
    for (k, slot) in out.iter_mut().enumerate() {
        let a = k as f64 * FRAC_PI_3;
        let (s, c) = a.sin_cos();
        *slot = (tx * c - ty * s, tx * s + ty * c);
    }
    out
}

pub fn displacement(a: &Position, b: &Position, wrap: Wrap, bounds: &Rect) -> (f64, f64) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    match wrap {
        Wrap::None => (dx, dy),
        Wrap::Torus => {
            let (w, h) = (bounds.width(), bounds.height());
            let wrap1 = |d: f64, span: f64| d - span * (d / span).round();
            (wrap1(dx, w), wrap1(dy, h))
        }
        Wrap::HexCluster { isd } => {
            let mut best = (dx, dy);
            let mut best_d2 = dx * dx + dy * dy;
            for (sx, sy) in hex_cluster_shifts(isd) {
                let (ex, ey) = (dx + sx, dy + sy);
                let d2 = ex * ex + ey * ey;
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = (ex, ey);
                }
            }
            best
        }
    }
}

/// Distance between two positions: 3D across floors, minimum image under
/// wraparound, floored at `d_min`.
pub fn distance(
    a: &Position,
    b: &Position,
    wrap: Wrap,
    bounds: &Rect,
    floor_height: f64,
    d_min: f64,
) -> f64 {
    let (dx, dy) = displacement(a, b, wrap, bounds);
    let dz = a.floor.abs_diff(b.floor) as f64 * floor_height;
    (dx * dx + dy * dy + dz * dz).sqrt().max(d_min)
}

/// Axial hex-lattice positions in spiral order: centre, then ring by ring.
fn hex_spiral(n: usize, isd: f64) -> Vec<(f64, f64)> {
    let dirs: Vec<(f64, f64)> = (0..6)
        .map(|k| {
            let a = k as f64 * FRAC_PI_3;
            (isd * a.cos(), isd * a.sin())
        })
        .collect();
    let mut out = vec![(0.0, 0.0)];
    let mut ring = 1;
    while out.len() < n {
        // start at ring * dir[4] and walk each side
        let mut p = (dirs[4].0 * ring as f64, dirs[4].1 * ring as f64);
        for side in 0..6 {
            for _ in 0..ring {
                if out.len() >= n {
                    break;
                }
                out.push(p);
                p = (p.0 + dirs[side].0, p.1 + dirs[side].1);
            }
        }
        ring += 1;
    }
    out.truncate(n);
    out
}

/// Hexagonal macro grid. Seven sites with `wraparound` use the hex-cluster
/// torus so that every sector sees a full ring of interferers.
pub fn build_hex_macro_grid(
    sites: usize,
    sectors_per_site: u8,
    isd: f64,
    tx_power_w: f64,
    wraparound: bool,
) -> Result<ScenarioLayout> {
    build_hex_grid(
        sites,
        sectors_per_site,
        isd,
        tx_power_w,
        wraparound,
        Tier::Macro,
    )
}

/// [`build_hex_macro_grid`] for any outdoor tier.
pub fn build_hex_grid(
    sites: usize,
    sectors_per_site: u8,
    isd: f64,
    tx_power_w: f64,
    wraparound: bool,
    tier: Tier,
) -> Result<ScenarioLayout> {
    if sites == 0 {
        return Err(Error::invalid("sites must be >= 1"));
    }
    if !matches!(sectors_per_site, 1 | 3) {
        return Err(Error::invalid("sectors_per_site must be 1 or 3"));
    }
    if !(isd > 0.0) {
        return Err(Error::invalid("isd must be positive"));
    }
    let centres = hex_spiral(sites, isd);
    let mut cells = Vec::with_capacity(sites * sectors_per_site as usize);
    for (s, &(x, y)) in centres.iter().enumerate() {
        for k in 0..sectors_per_site {
            let (antenna, boresight) = if sectors_per_site == 3 {
                // boresights face the neighbouring sites (lattice rows run along x)
                (Antenna::TriSector, (120.0 * k as f64).to_radians())
            } else {
                (Antenna::Omni, 0.0)
            };
            cells.push(CellSite {
                id: cells.len(),
                site: s,
                tier,
                position: Position::new(x, y),
                max_tx_power: tx_power_w,
                n_sectors: sectors_per_site,
                antenna,
                boresight,
                access: Access::Open,
            });
        }
    }
    let reach = centres
        .iter()
        .map(|&(x, y)| x.abs().max(y.abs()))
        .fold(0.0, f64::max)
        + isd;
    let bounds = Rect::new(-reach, -reach, reach, reach);
    let wrap = if wraparound && sites == 7 {
        Wrap::HexCluster { isd }
    } else {
        Wrap::None
    };
    ScenarioLayout::new(cells, Vec::new(), bounds, wrap, 0, Vec::new())
}

/// Uniform UE drop over the hexagonal cells of a macro grid: `per_cell` UEs
/// per sector, each placed uniformly in its site's hexagon.
pub fn drop_ues_in_hex_cells(
    layout: ScenarioLayout,
    per_cell: usize,
    isd: f64,
    seed: u64,
) -> Result<ScenarioLayout> {
    let mut rng = rng::stream(seed, 0, "hex-ues");
    let mut sites: Vec<(usize, Position)> = layout
        .cells()
        .iter()
        .map(|c| (c.site, c.position))
        .collect();
    sites.dedup_by_key(|s| s.0);
    let radius = isd / 3f64.sqrt();
    let sectors_per_site = layout.cells().len() / sites.len().max(1);
    let mut ues = Vec::new();
    for &(_, centre) in &sites {
        for _ in 0..per_cell * sectors_per_site {
            // rejection inside the hexagon inscribed in the circumcircle
            let p = loop {
                let x = rng.random_range(-radius..radius);
                let y = rng.random_range(-radius..radius);
                if in_flat_hex(x, y, radius) {
                    break Position::new(centre.x + x, centre.y + y);
                }
            };
            ues.push(UserTerminal {
                id: ues.len(),
                position: p,
                mobility: Mobility::Mobile,
                csg_allowed: BTreeSet::new(),
                hotspot: None,
                apartment: None,
            });
        }
    }
    let mut out = layout.with_ues(ues)?;
    out.seed = seed;
    Ok(out)
}

/// Scatters `n` single-room femto apartments of side `side` over the sites
/// of a hex grid, each with a CSG femto and `ues_per_femto` subscribers.
/// Apartments never overlap; placement gives up after 1000 tries each.
pub fn scatter_femto_apartments(
    layout: ScenarioLayout,
    n: usize,
    side: f64,
    isd: f64,
    femto_power_w: f64,
    ues_per_femto: usize,
    seed: u64,
) -> Result<ScenarioLayout> {
    if !(side > 0.0 && side < isd) || !(femto_power_w > 0.0) {
        return Err(Error::invalid(
            "femto apartments need 0 < side < isd and positive power",
        ));
    }
    let mut rng = rng::stream(seed, 0, "femto-apartments");
    let mut sites: Vec<Position> = layout.cells().iter().map(|c| c.position).collect();
    sites.dedup();
    let radius = isd / 3f64.sqrt();
    let mut out = layout;
    let mut blocks = out.blocks.clone();
    for _ in 0..n {
        let mut placed = None;
        for _ in 0..1000 {
            let centre = sites[rng.random_range(0..sites.len())];
            let x = rng.random_range(-radius..radius);
            let y = rng.random_range(-radius..radius);
            if !in_flat_hex(x, y, radius - side) {
                continue;
            }
            let (ox, oy) = (centre.x + x - side / 2.0, centre.y + y - side / 2.0);
            let clear = blocks.iter().all(|b: &ApartmentBlock| {
                ox + side <= b.origin_x
                    || b.origin_x + b.side * b.cols as f64 <= ox
                    || oy + side <= b.origin_y
                    || b.origin_y + b.side * b.rows as f64 <= oy
            });
            if clear {
                placed = Some(ApartmentBlock {
                    origin_x: ox,
                    origin_y: oy,
                    cols: 1,
                    rows: 1,
                    floors: 1,
                    side,
                });
                break;
            }
        }
        let block = placed.ok_or_else(|| Error::PlacementInfeasible {
            what: "femto apartment".into(),
            attempts: 1000,
        })?;
        let rect = block.apartment_rect(0, 0);
        let id = out.cells.len();
        out.cells.push(CellSite {
            id,
            site: id,
            tier: Tier::Femto,
            position: uniform_in(&mut rng, &rect, 0),
            max_tx_power: femto_power_w,
            n_sectors: 1,
            antenna: Antenna::Omni,
            boresight: 0.0,
            access: Access::Csg,
        });
        let apartment = blocks.iter().map(ApartmentBlock::apartments).sum();
        for _ in 0..ues_per_femto {
            out.ues.push(UserTerminal {
                id: out.ues.len(),
                position: uniform_in(&mut rng, &rect, 0),
                mobility: Mobility::StaticHotspot,
                csg_allowed: BTreeSet::from([id]),
                hotspot: None,
                apartment: Some(apartment),
            });
        }
        blocks.push(block);
    }
    out.blocks = blocks;
    out.validate()?;
    Ok(out)
}

/// Hexagon with circumradius `r` and neighbours along the x axis (pointy top).
fn in_flat_hex(x: f64, y: f64, r: f64) -> bool {
    let (x, y) = (x.abs(), y.abs());
    let h = r * 3f64.sqrt() / 2.0;
    x <= h && y <= r && (h * y + 0.5 * r * x) <= h * r + 1e-12
}

/// Knobs for the apartment builders.
#[derive(Clone, Debug, PartialEq)]
pub struct ApartmentParams {
    pub side: f64,
    pub femto_prob: f64,
    pub ues_per_apartment: usize,
    /// Place UEs in every apartment instead of only in femto apartments.
    pub ues_everywhere: bool,
    pub femto_power_w: f64,
}

impl Default for ApartmentParams {
    fn default() -> Self {
        ApartmentParams {
            side: 10.0,
            femto_prob: 0.5,
            ues_per_apartment: 1,
            ues_everywhere: false,
            femto_power_w: dbm_to_watts(20.0),
        }
    }
}

fn uniform_in(rng: &mut SimRng, r: &Rect, floor: u32) -> Position {
    Position::on_floor(
        rng.random_range(r.min_x..r.max_x),
        rng.random_range(r.min_y..r.max_y),
        floor,
    )
}

fn populate_blocks(
    blocks: Vec<ApartmentBlock>,
    bounds: Rect,
    params: &ApartmentParams,
    seed: u64,
) -> Result<ScenarioLayout> {
    if !(0.0..=1.0).contains(&params.femto_prob) {
        return Err(Error::invalid("femto_prob must lie in [0, 1]"));
    }
    if !(params.side > 0.0) {
        return Err(Error::invalid("apartment side must be positive"));
    }
    let mut rng = rng::stream(seed, 0, "apartments");
    let mut cells = Vec::new();
    let mut ues = Vec::new();
    let mut apartment = 0;
    for block in &blocks {
        for floor in 0..block.floors {
            for row in 0..block.rows {
                for col in 0..block.cols {
                    let rect = block.apartment_rect(col, row);
                    let has_femto = rng.random_bool(params.femto_prob);
                    let mut allowed = BTreeSet::new();
                    if has_femto {
                        let id = cells.len();
                        cells.push(CellSite {
                            id,
                            site: id,
                            tier: Tier::Femto,
                            position: uniform_in(&mut rng, &rect, floor),
                            max_tx_power: params.femto_power_w,
                            n_sectors: 1,
                            antenna: Antenna::Omni,
                            boresight: 0.0,
                            access: Access::Csg,
                        });
                        allowed.insert(id);
                    }
                    if has_femto || params.ues_everywhere {
                        for _ in 0..params.ues_per_apartment {
                            ues.push(UserTerminal {
                                id: ues.len(),
                                position: uniform_in(&mut rng, &rect, floor),
                                mobility: Mobility::StaticHotspot,
                                csg_allowed: allowed.clone(),
                                hotspot: None,
                                apartment: Some(apartment),
                            });
                        }
                    }
                    apartment += 1;
                }
            }
        }
    }
    ScenarioLayout::new(cells, ues, bounds, Wrap::None, seed, blocks)
}

/// One-storey 5x5 apartment grid. Each apartment holds a CSG femto with
/// probability `femto_prob`; UEs are dropped in femto apartments and may only
/// attach to their own femto.
pub fn build_apartment_grid_5x5(
    apartment_side: f64,
    femto_prob: f64,
    seed: u64,
) -> Result<ScenarioLayout> {
    let params = ApartmentParams {
        side: apartment_side,
        femto_prob,
        ..ApartmentParams::default()
    };
    build_apartment_grid(&params, seed)
}

pub fn build_apartment_grid(params: &ApartmentParams, seed: u64) -> Result<ScenarioLayout> {
    let block = ApartmentBlock {
        origin_x: 0.0,
        origin_y: 0.0,
        cols: 5,
        rows: 5,
        floors: 1,
        side: params.side,
    };
    let bounds = Rect::new(0.0, 0.0, 5.0 * params.side, 5.0 * params.side);
    populate_blocks(vec![block], bounds, params, seed)
}

/// Dual-stripe cluster: two stripes of 2 x 20 apartments, 6 floors each,
/// separated by a street one apartment wide.
pub fn build_dual_stripe(femto_prob: f64, seed: u64) -> Result<ScenarioLayout> {
    let params = ApartmentParams {
        femto_prob,
        ..ApartmentParams::default()
    };
    build_dual_stripe_with(&params, seed)
}

pub fn build_dual_stripe_with(params: &ApartmentParams, seed: u64) -> Result<ScenarioLayout> {
    let side = params.side;
    let stripe = |origin_y: f64| ApartmentBlock {
        origin_x: 0.0,
        origin_y,
        cols: 20,
        rows: 2,
        floors: 6,
        side,
    };
    let blocks = vec![stripe(0.0), stripe(3.0 * side)];
    let bounds = Rect::new(0.0, 0.0, 20.0 * side, 5.0 * side);
    populate_blocks(blocks, bounds, params, seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HotspotParams {
    pub n_picos: usize,
    pub hotspot_radius: f64,
    pub min_macro_pico: f64,
    pub min_pico_pico: f64,
    pub ues_per_hotspot: usize,
    pub n_mobile_mues: usize,
    pub macro_radius: f64,
    pub pico_power_w: f64,
}

impl Default for HotspotParams {
    fn default() -> Self {
        HotspotParams {
            n_picos: 4,
            hotspot_radius: 40.0,
            min_macro_pico: 75.0,
            min_pico_pico: 40.0,
            ues_per_hotspot: 25,
            n_mobile_mues: 50,
            macro_radius: 500.0 / 3f64.sqrt(),
            pico_power_w: dbm_to_watts(30.0),
        }
    }
}

fn uniform_in_disc(rng: &mut SimRng, cx: f64, cy: f64, radius: f64) -> Position {
    let r = radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..2.0 * PI);
    Position::new(cx + r * a.cos(), cy + r * a.sin())
}

/// Drops picocells with hotspot PUEs and mobile MUEs around the first cell
/// of `layout`, which must be a single macro.
pub fn drop_picocell_hotspots(
    layout: ScenarioLayout,
    params: &HotspotParams,
    seed: u64,
) -> Result<ScenarioLayout> {
    let macro_cell = layout
        .cells()
        .first()
        .cloned()
        .ok_or_else(|| Error::invalid("hotspot drop needs a macro cell"))?;
    let centre = macro_cell.position;
    let r = params.macro_radius;
    if params.min_macro_pico >= r {
        return Err(Error::invalid(
            "min macro-pico distance exceeds macro radius",
        ));
    }
    let mut rng = rng::stream(seed, 0, "hotspots");
    let mut picos: Vec<Position> = Vec::with_capacity(params.n_picos);
    let mut attempts = 0;
    while picos.len() < params.n_picos {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::PlacementInfeasible {
                what: format!("{} picos", params.n_picos),
                attempts: MAX_PLACEMENT_ATTEMPTS,
            });
        }
        let p = uniform_in_disc(&mut rng, centre.x, centre.y, r);
        let to_macro = ((p.x - centre.x).powi(2) + (p.y - centre.y).powi(2)).sqrt();
        if to_macro < params.min_macro_pico {
            continue;
        }
        let clear = picos
            .iter()
            .all(|q| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt() >= params.min_pico_pico);
        if clear {
            picos.push(p);
        }
    }

    let mut cells = vec![CellSite {
        id: 0,
        ..macro_cell
    }];
    for p in &picos {
        let id = cells.len();
        cells.push(CellSite {
            id,
            site: id,
            tier: Tier::Pico,
            position: *p,
            max_tx_power: params.pico_power_w,
            n_sectors: 1,
            antenna: Antenna::Omni,
            boresight: 0.0,
            access: Access::Open,
        });
    }
    let mut ues = Vec::new();
    for (k, p) in picos.iter().enumerate() {
        for _ in 0..params.ues_per_hotspot {
            ues.push(UserTerminal {
                id: ues.len(),
                position: uniform_in_disc(&mut rng, p.x, p.y, params.hotspot_radius),
                mobility: Mobility::StaticHotspot,
                csg_allowed: BTreeSet::new(),
                hotspot: Some(k + 1),
                apartment: None,
            });
        }
    }
    for _ in 0..params.n_mobile_mues {
        ues.push(UserTerminal {
            id: ues.len(),
            position: uniform_in_disc(&mut rng, centre.x, centre.y, r),
            mobility: Mobility::Mobile,
            csg_allowed: BTreeSet::new(),
            hotspot: None,
            apartment: None,
        });
    }
    let reach = r + params.hotspot_radius;
    let bounds = Rect::new(
        centre.x - reach,
        centre.y - reach,
        centre.x + reach,
        centre.y + reach,
    );
    ScenarioLayout::new(cells, ues, bounds, Wrap::None, seed, Vec::new())
}
