use super::C64;
use crate::error::{Error, Result};

/// Square Gray-labeled QAM constellation normalized to a chosen symbol energy.
///
/// Each symbol carries `log2(order)` bits; the first half of the bits selects the
/// in-phase level and the second half the quadrature level. Per dimension the
/// levels `-(L-1), ..., -1, 1, ..., L-1` are labeled with the binary-reflected Gray
/// code of their index, so the all-zero word maps to the `(-, -)` corner.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<C64>,
    symbol_energy: f64,
    fourth_moment: f64,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl QamConstellation {
    pub fn new(order: usize, symbol_energy: f64) -> Result<Self> {
        let bits = order.trailing_zeros() as usize;
        if order < 4 || !order.is_power_of_two() || bits % 2 != 0 {
            return Err(Error::InvalidArgument(format!("QAM order {order} is not a square power of two")));
        }
        if !(symbol_energy > 0.0) {
            return Err(Error::InvalidArgument("symbol energy must be positive".into()));
        }
        let half = bits / 2;
        let levels = 1usize << half;
        // level value for a Gray label
        let mut level_of_label = vec![0.0; levels];
        for idx in 0..levels {
            level_of_label[gray(idx)] = (2 * idx) as f64 - (levels - 1) as f64;
        }
        let mut points = Vec::with_capacity(order);
        for label in 0..order {
            let i_label = label >> half;
            let q_label = label & (levels - 1);
            points.push(C64::new(level_of_label[i_label], level_of_label[q_label]));
        }
        let raw_energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        let scale = (symbol_energy / raw_energy).sqrt();
        points.iter_mut().for_each(|p| *p *= scale);
        let fourth_moment = points.iter().map(|p| p.norm_sqr().powi(2)).sum::<f64>() / order as f64;
        Ok(Self { order, bits_per_symbol: bits, points, symbol_energy, fourth_moment })
    }

    /// Unit-energy 16QAM.
    pub fn qam16() -> Self {
        Self::new(16, 1.0).expect("16QAM is a valid constellation")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Mean symbol energy `E_s`.
    pub fn symbol_energy(&self) -> f64 {
        self.symbol_energy
    }

    /// Fourth moment `E|d|^4`.
    pub fn fourth_moment(&self) -> f64 {
        self.fourth_moment
    }

    /// Maps bits (one bit per byte, MSB first within each symbol) to symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<C64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::InvalidLength(format!(
                "{} bits is not a multiple of {}",
                bits.len(),
                self.bits_per_symbol
            )));
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                self.points[label]
            })
            .collect())
    }

    /// Label of the constellation point closest to `y`.
    pub fn nearest_label(&self, y: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    /// Hard-decision minimum-distance demapping.
    pub fn demap(&self, symbols: &[C64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &y in symbols {
            let label = self.nearest_label(y);
            for b in (0..self.bits_per_symbol).rev() {
                out.push(((label >> b) & 1) as u8);
            }
        }
        out
    }
}
