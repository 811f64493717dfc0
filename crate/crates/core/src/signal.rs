//! Constellations, the AWGN channel and the quadrature feature map.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const POWER_TOLERANCE: f64 = 1e-12;

/// A named set of unit average power complex symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    points: Vec<Complex64>,
}

impl Constellation {
    /// Validates unit average power, distinct points and `|points| >= 2`.
    pub fn new(name: impl Into<String>, points: Vec<Complex64>) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidConstellation {
            name: name.clone(),
            reason,
        };
        if points.len() < 2 {
            return Err(invalid(format!("{} points, need at least 2", points.len())));
        }
        if points
            .iter()
            .any(|p| !p.re.is_finite() || !p.im.is_finite())
        {
            return Err(invalid("non-finite point".into()));
        }
        for (i, a) in points.iter().enumerate() {
            if points[..i].contains(a) {
                return Err(invalid(format!("duplicate point {a}")));
            }
        }
        let power = average_power(&points);
        if (power - 1.0).abs() > POWER_TOLERANCE {
            return Err(invalid(format!("average power {power}, expected 1")));
        }
        Ok(Constellation { name, points })
    }

    /// Rescales arbitrary points to unit average power before validating.
    pub fn normalized(name: impl Into<String>, points: Vec<Complex64>) -> Result<Self> {
        let power = average_power(&points);
        let name = name.into();
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidConstellation {
                name,
                reason: format!("average power {power} cannot be normalized"),
            });
        }
        let scale = power.sqrt().recip();
        Constellation::new(name, points.into_iter().map(|p| p * scale).collect())
    }

    /// Square `order`-QAM on the odd-integer grid, scaled to unit power.
    /// `order` must be an even power of two (4, 16, 64, ...).
    pub fn square_qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        let name = format!("{order}QAM");
        if side < 2 || side * side != order || !side.is_power_of_two() {
            return Err(Error::InvalidConstellation {
                name,
                reason: "order must be 4, 16, 64, ...".into(),
            });
        }
        let levels: Vec<f64> = (0..side)
            .map(|i| (2 * i) as f64 - (side - 1) as f64)
            .collect();
        let points = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im)))
            .collect();
        Constellation::normalized(name, points)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }
}

fn average_power(points: &[Complex64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

#[derive(Serialize, Deserialize)]
struct ConstellationDoc {
    name: String,
    points: Vec<[f64; 2]>,
}

impl Serialize for Constellation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConstellationDoc {
            name: self.name.clone(),
            points: self.points.iter().map(|p| [p.re, p.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Constellation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ConstellationDoc::deserialize(d)?;
        let points = doc
            .points
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Constellation::new(doc.name, points).map_err(serde::de::Error::custom)
    }
}

/// Named constellations available to experiments. Starts with 4, 16 and
/// 64-QAM; user-defined classes can be added.
#[derive(Debug, Clone)]
pub struct Registry {
    entries: Vec<Constellation>,
}

impl Default for Registry {
    fn default() -> Self {
        let entries = [4, 16, 64]
            .into_iter()
            .map(|m| Constellation::square_qam(m).expect("square QAM"))
            .collect();
        Registry { entries }
    }
}

impl Registry {
    /// Adds or replaces a constellation by name.
    pub fn insert(&mut self, c: Constellation) {
        match self.entries.iter_mut().find(|e| e.name == c.name) {
            Some(slot) => *slot = c,
            None => self.entries.push(c),
        }
    }

    pub fn get(&self, name: &str) -> Result<Constellation> {
        self.entries
            .iter()
            .find(|c| c.name == name)
            .cloned()
            .ok_or_else(|| Error::UnknownConstellation {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Looks up one of the built-in constellations ("4QAM", "16QAM", "64QAM").
pub fn standard_constellation(name: &str) -> Result<Constellation> {
    Registry::default().get(name)
}

/// AWGN channel at a per-symbol SNR. For unit-power constellations the
/// complex noise variance is `10^(-snr_db/10)`, split evenly between I and Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    snr_db: f64,
    noise_variance: f64,
}

impl ChannelConfig {
    pub fn from_snr_db(snr_db: f64) -> Self {
        ChannelConfig {
            snr_db,
            noise_variance: 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// Total complex noise variance.
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

/// Received samples of one observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub received: Vec<Complex64>,
    pub true_class: Option<usize>,
}

impl SymbolBlock {
    pub fn new(received: Vec<Complex64>) -> Result<Self> {
        if received.is_empty() {
            return Err(Error::Config("symbol block must not be empty".into()));
        }
        Ok(SymbolBlock {
            received,
            true_class: None,
        })
    }

    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }
}

/// Draws `m` symbols uniformly from `c` and passes them through the channel.
///
/// # Panics
///
/// If `m == 0`.
pub fn transmit<R: Rng + ?Sized>(
    c: &Constellation,
    ch: &ChannelConfig,
    m: usize,
    rng: &mut R,
) -> SymbolBlock {
    assert!(m >= 1, "transmit needs at least one symbol");
    let sd = (ch.noise_variance / 2.0).sqrt();
    let received = (0..m)
        .map(|_| {
            let s = c.points[rng.random_range(0..c.points.len())];
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(sd * re, sd * im)
        })
        .collect();
    SymbolBlock {
        received,
        true_class: None,
    }
}

/// `[Re r_1 .. Re r_M, Im r_1 .. Im r_M]`.
pub fn quadrature_feature(block: &SymbolBlock) -> Vec<f64> {
    block
        .received
        .iter()
        .map(|r| r.re)
        .chain(block.received.iter().map(|r| r.im))
        .collect()
}
