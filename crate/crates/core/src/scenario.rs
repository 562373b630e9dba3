//! One Monte-Carlo drop: layout plus its channel realisation, and pilot-based
//! cell attachment.

use crate::channel::{ChannelParams, FadingField, GainMatrix, ShadowingField};
use crate::error::Result;
use crate::geometry::ScenarioLayout;
use crate::link::{select_cell, TierOffsets};
use crate::rng;

#[derive(Clone, Debug)]
pub struct Realization {
    pub layout: ScenarioLayout,
    pub gains: GainMatrix,
    pub noise_w: f64,
    pub fading: FadingField,
}

impl Realization {
    /// Draws shadowing from the `shadowing` stream and seeds fading from the
    /// `fading` stream of `(master, drop)`.
    pub fn draw(
        layout: ScenarioLayout,
        channel: &ChannelParams,
        master: u64,
        drop: u64,
    ) -> Result<Self> {
        channel.validate()?;
        let mut srng = rng::stream(master, drop, "shadowing");
        let shadowing = ShadowingField::draw(&layout, channel, &mut srng);
        let gains = GainMatrix::build(&layout, channel, &shadowing)?;
        let fading = FadingField {
            seed: rng::mix(master, drop, "fading"),
            enabled: channel.fast_fading,
        };
        Ok(Realization {
            layout,
            gains,
            noise_w: channel.noise.noise_w_per_rb(),
            fading,
        })
    }

    /// Pilot RSS in dBm per RB with pilot power `max_tx_power / n_rb`.
    pub fn pilot_rss_dbm(&self, ue: usize, n_rb: usize) -> Vec<f64> {
        self.layout
            .cells()
            .iter()
            .map(|c| 10.0 * (c.max_tx_power / n_rb as f64 * self.gains.get(c.id, ue) * 1e3).log10())
            .collect()
    }

    /// Biased strongest-pilot attachment for every UE.
    pub fn attach(&self, offsets: &TierOffsets, n_rb: usize) -> Vec<Option<usize>> {
        self.layout
            .ues()
            .iter()
            .map(|ue| {
                select_cell(
                    ue,
                    self.layout.cells(),
                    &self.pilot_rss_dbm(ue.id, n_rb),
                    offsets,
                )
            })
            .collect()
    }
}
