//! Wave packets adapted to tiles and a bank of their spectra keyed by tile.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SampledFunction};
use crate::numeric::{fit_decay_exponent, mollifier};
use crate::timefreq::tiles::{Tile, TileCollection, TileKey};
use crate::C64;

/// Fraction of `ω` holding the Fourier support of a packet.
pub const SUPPORT_FRACTION: f64 = 0.9;

/// Envelope floor, relative to the peak, below which decay is not fitted.
pub const DECAY_FLOOR: f64 = 1e-14;

/// Nonzero Fourier coefficients `(signed index, value)` of the packet of
/// `tile` on `grid`.
///
/// `Φ̂(ξ) = A·ρ((ξ - c(ω)) / (0.45|ω|))·e^{-iξc(I)}` with `ρ` the standard
/// mollifier and `A` fixed by Parseval so that `‖Φ‖₂ = 1` on the grid.
pub fn packet_spectrum(tile: &Tile, grid: &GridSpec<f64>) -> Result<Vec<(i64, C64)>> {
    let w = tile.freq;
    if w.lo() < -grid.nyquist() || w.hi() >= grid.nyquist() {
        return Err(Error::Band(format!(
            "ω = [{}, {}] outside the Nyquist band ±{}",
            w.lo(),
            w.hi(),
            grid.nyquist()
        )));
    }
    if tile.space.length() < 4.0 * grid.step() {
        return Err(Error::Parameter(format!(
            "|I| = {} below four grid steps ({})",
            tile.space.length(),
            4.0 * grid.step()
        )));
    }
    let half = SUPPORT_FRACTION * w.length() / 2.0;
    let c = w.center();
    // Split c(I) = j0·step + rem so that the large part of the phase
    // ξ_k c(I) is the exact integer fraction k·j0/N of a turn.
    let n = grid.len() as i64;
    let j0 = (tile.space.center() / grid.step()).round();
    let rem = tile.space.center() - j0 * grid.step();
    let j0 = j0 as i64;
    let mut modes: Vec<(i64, C64)> = grid
        .indices_in(c - half, c + half)
        .into_iter()
        .filter_map(|k| {
            let xi = grid.freq(k);
            let a = mollifier((xi - c) / half);
            let turns = (k * j0).rem_euclid(n) as f64 / n as f64;
            (a > 0.0).then(|| (k, C64::from_polar(a, -std::f64::consts::TAU * turns - xi * rem)))
        })
        .collect();
    let energy: f64 = modes.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>() / grid.period();
    if !(energy > 0.0) {
        return Err(Error::Parameter(format!(
            "0.9ω = [{}, {}] holds no frequency bin of the grid",
            c - half,
            c + half
        )));
    }
    let a = energy.sqrt().recip();
    modes.iter_mut().for_each(|(_, v)| *v *= a);
    Ok(modes)
}

/// Wave packet with its audited invariants.
#[derive(Debug, Clone)]
pub struct WavePacket {
    /// Tile the packet is adapted to.
    pub tile: Tile,
    /// Samples of `Φ`.
    pub values: SampledFunction<f64>,
    /// Fitted exponent `M` of `|Φ(x)| ≲ (1 + |x - c(I)|/|I|)^{-M}`.
    pub decay_exponent_measured: f64,
    /// Largest coefficient outside `0.9ω`, relative to the peak, from a
    /// fresh transform of the samples.
    pub leakage: f64,
    /// Discrete `L²` norm of the samples.
    pub norm: f64,
}

/// Builds the packet of `tile` on `grid` and audits its invariants.
pub fn make_wave_packet(tile: &Tile, grid: GridSpec<f64>) -> Result<WavePacket> {
    let modes = packet_spectrum(tile, &grid)?;
    let built = SampledFunction::from_modes(grid, &modes)?;
    let values = SampledFunction::new(grid, built.samples().to_vec())?;
    let norm = values.lp_norm(2.0);
    let half = SUPPORT_FRACTION * tile.freq.length() / 2.0;
    let c = tile.freq.center();
    let spec = values.spectrum();
    let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let outside = (0..grid.len())
        .filter(|&b| (grid.bin_freq(b) - c).abs() >= half)
        .map(|b| spec[b].norm())
        .fold(0.0, f64::max);
    let decay_exponent_measured = spatial_decay(&values, tile);
    Ok(WavePacket { tile: *tile, values, decay_exponent_measured, leakage: outside / peak, norm })
}

/// Fits the decay exponent of `|Φ|` in `u = |x - c(I)|/|I|`, using the
/// periodic distance on the torus, a running-maximum envelope and the
/// window `u ∈ [u_max/4, u_max]` with `u_max = 0.45 L/|I|`.
pub fn spatial_decay(values: &SampledFunction<f64>, tile: &Tile) -> f64 {
    let grid = values.grid();
    let l = grid.period();
    let len = tile.space.length();
    let c = tile.space.center().rem_euclid(l);
    let mut pts: Vec<(f64, f64)> = values
        .samples()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let d = (grid.x(j) - c).rem_euclid(l);
            (d.min(l - d) / len, v.norm())
        })
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let peak = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut env = vec![0.0; pts.len()];
    let mut run = 0.0f64;
    for i in (0..pts.len()).rev() {
        run = run.max(pts[i].1);
        env[i] = run;
    }
    let u_max = 0.45 * l / len;
    let (us, es): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .zip(&env)
        .filter(|(p, _)| p.0 >= u_max / 4.0 && p.0 <= u_max)
        .map(|(p, &e)| (p.0, e))
        .unzip();
    fit_decay_exponent(&us, &es, DECAY_FLOOR * peak)
}

/// Packet spectra for every component tile of a collection.
#[derive(Debug, Clone)]
pub struct PacketBank {
    grid: GridSpec<f64>,
    packets: BTreeMap<TileKey, Vec<(i64, C64)>>,
}

impl PacketBank {
    /// Empty bank on `grid`.
    pub fn new(grid: GridSpec<f64>) -> Self {
        Self { grid, packets: BTreeMap::new() }
    }

    /// Bank holding the packets of all component tiles of `tc`.
    pub fn build(grid: GridSpec<f64>, tc: &TileCollection) -> Result<Self> {
        let mut bank = Self::new(grid);
        bank.insert_collection(tc)?;
        Ok(bank)
    }

    /// Adds the packets of all component tiles of `tc`.
    pub fn insert_collection(&mut self, tc: &TileCollection) -> Result<()> {
        for s in tc.tritiles() {
            for i in 1..=3 {
                self.insert(&s.component(i))?;
            }
        }
        Ok(())
    }

    /// Adds the packet of one tile.
    pub fn insert(&mut self, tile: &Tile) -> Result<()> {
        let key = tile.key();
        if !self.packets.contains_key(&key) {
            self.packets.insert(key, packet_spectrum(tile, &self.grid)?);
        }
        Ok(())
    }

    /// Grid of the bank.
    pub fn grid(&self) -> &GridSpec<f64> {
        &self.grid
    }

    /// Number of stored packets.
    pub fn len(&self) -> usize {
        self.packets.len()
    }

    /// True when no packet is stored.
    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    /// Stored spectrum of the packet of `tile`.
    pub fn spectrum(&self, tile: &Tile) -> Result<&[(i64, C64)]> {
        self.packets
            .get(&tile.key())
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::State(format!("no packet built for tile {tile:?}")))
    }

    /// Packet of `tile` as a sampled function.
    pub fn packet(&self, tile: &Tile) -> Result<SampledFunction<f64>> {
        SampledFunction::from_modes(self.grid, self.spectrum(tile)?)
    }

    /// `⟨f, Φ⟩ = (1/L) Σ_k f̂_k conj(Φ̂_k)`.
    pub fn coefficient(&self, f: &SampledFunction<f64>, tile: &Tile) -> Result<C64> {
        self.grid.check_same(f.grid())?;
        let spec = f.spectrum();
        let sum: C64 = self
            .spectrum(tile)?
            .iter()
            .map(|&(k, p)| spec[self.grid.bin(k)] * p.conj())
            .sum();
        Ok(sum / self.grid.period())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::Interval;

    fn tile(ci: f64, li: f64, cw: f64, lw: f64) -> Tile {
        Tile::new(Interval::new(ci, li).unwrap(), Interval::new(cw, lw).unwrap()).unwrap()
    }

    #[test]
    fn unit_norm_and_support() {
        let g = GridSpec::new(64.0, 4096).unwrap();
        let p = make_wave_packet(&tile(10.5, 1.0, 3.0, 1.0), g).unwrap();
        assert!((p.norm - 1.0).abs() < 1e-12);
        assert!(p.leakage <= 1e-13, "{}", p.leakage);
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let g = GridSpec::new(64.0, 4096).unwrap();
        let a = make_wave_packet(&tile(10.5, 1.0, 3.0, 1.0), g).unwrap();
        let b = make_wave_packet(&tile(11.0, 1.0, 4.0, 1.0), g).unwrap();
        // Direct sample quadrature as an independent pairing.
        let ip: C64 = a.values.samples().iter().zip(b.values.samples()).map(|(x, y)| x * y.conj()).sum::<C64>() * g.step();
        assert!(ip.norm() < 1e-13, "{ip}");
    }

    #[test]
    fn coefficient_matches_sample_quadrature() {
        let g = GridSpec::new(64.0, 1024).unwrap();
        let t = tile(20.0, 2.0, -1.0, 0.5);
        let mut bank = PacketBank::new(g);
        bank.insert(&t).unwrap();
        let f = SampledFunction::from_fn(g, |x| C64::new((x * 0.7).cos(), (x * 1.3).sin() * (-x / 20.0).exp()));
        let phi = bank.packet(&t).unwrap();
        let direct: C64 = f.samples().iter().zip(phi.samples()).map(|(x, y)| x * y.conj()).sum::<C64>() * g.step();
        let c = bank.coefficient(&f, &t).unwrap();
        assert!((c - direct).norm() < 1e-13);
        let self_pair = bank.coefficient(&phi, &t).unwrap();
        assert!((self_pair - 1.0).norm() < 1e-12);
    }

    #[test]
    fn packet_is_centered_on_its_tile() {
        let g = GridSpec::new(64.0, 4096).unwrap();
        let p = make_wave_packet(&tile(40.25, 1.0, -2.0, 1.0), g).unwrap();
        let (jmax, _) = p
            .values
            .samples()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        assert!((g.x(jmax) - 40.25).abs() < 0.05);
    }

    #[test]
    fn errors() {
        let g = GridSpec::new(64.0, 256).unwrap();
        assert!(matches!(make_wave_packet(&tile(1.0, 1.0, 13.0, 1.0), g), Err(Error::Band(_))));
        let bank = PacketBank::new(g);
        let f = SampledFunction::zeros(g);
        assert!(matches!(bank.coefficient(&f, &tile(1.0, 1.0, 1.0, 1.0)), Err(Error::State(_))));
        let coarse = GridSpec::new(64.0, 64).unwrap();
        assert!(matches!(make_wave_packet(&tile(1.0, 2.0, 0.0, 0.5), coarse), Err(Error::Parameter(_))));
    }

    #[test]
    fn decay_on_audit_grid() {
        let t = tile(3.0, 1.0, 2.0, 1.0);
        let g = GridSpec::new(4096.0, 32768).unwrap();
        let p = make_wave_packet(&t, g).unwrap();
        assert!(p.decay_exponent_measured >= 8.0, "{}", p.decay_exponent_measured);
    }

    #[test]
    fn decay_far_from_origin() {
        // The phase ξ c(I) is large here; rounding in it would raise the
        // noise floor above the decay floor.
        let g = GridSpec::new(4096.0, 32768).unwrap();
        for (x0, c, w) in [(3000.0, 10.7, 1.49), (2047.0, -12.0, 2.0), (517.0, 1.4, 0.5)] {
            let p = make_wave_packet(&tile(x0 + 0.5, 1.0, c, w), g).unwrap();
            assert!(p.decay_exponent_measured >= 8.0, "x0={x0}: {}", p.decay_exponent_measured);
            assert!(p.leakage <= 1e-13 && (p.norm - 1.0).abs() < 1e-10);
        }
    }
}
