//! Color palettes and lookup tables.
//!
//! Continuous maps are 256-entry RGBA tables bundled as binary assets
//! (`assets/<name>.v<version>.rgba`, 4 bytes per entry). Lookup picks the
//! nearest entry; there is no interpolation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const COLORMAP_ASSET_VERSION: u32 = 1;

static VIRIDIS: &[u8] = include_bytes!("../../assets/viridis.v1.rgba");
static MAGMA: &[u8] = include_bytes!("../../assets/magma.v1.rgba");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgba {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: u8,
}

impl Rgba {
    pub const BLACK: Rgba = Rgba::rgb(0, 0, 0);
    pub const WHITE: Rgba = Rgba::rgb(255, 255, 255);

    pub const fn new(r: u8, g: u8, b: u8, a: u8) -> Self {
        Rgba { r, g, b, a }
    }

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Rgba { r, g, b, a: 255 }
    }

    pub fn to_array(self) -> [u8; 4] {
        [self.r, self.g, self.b, self.a]
    }

    /// Relative luminance in `[0, 1]` (Rec. 709 weights on 8-bit values).
    pub fn luminance(self) -> f64 {
        (0.2126 * self.r as f64 + 0.7152 * self.g as f64 + 0.0722 * self.b as f64) / 255.0
    }

    pub fn to_hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}{:02x}", self.r, self.g, self.b, self.a)
    }
}

/// Accepts `#rrggbb`, `#rrggbbaa` or the names `black` and `white`.
impl FromStr for Rgba {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "black" => return Ok(Rgba::BLACK),
            "white" => return Ok(Rgba::WHITE),
            _ => {}
        }
        let bad = || Error::Config(format!("invalid color `{s}` (expected #rrggbb or #rrggbbaa)"));
        let hex = s.strip_prefix('#').ok_or_else(bad)?;
        if !(hex.len() == 6 || hex.len() == 8) || !hex.is_ascii() {
            return Err(bad());
        }
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        let a = if hex.len() == 8 { byte(6)? } else { 255 };
        Ok(Rgba::new(byte(0)?, byte(2)?, byte(4)?, a))
    }
}

impl fmt::Display for Rgba {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Rgba {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Rgba {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Okabe-Ito colorblind-safe palette in its published order.
pub const OKABE_ITO: [Rgba; 8] = [
    Rgba::rgb(0x00, 0x00, 0x00), // black
    Rgba::rgb(0xE6, 0x9F, 0x00), // orange
    Rgba::rgb(0x56, 0xB4, 0xE9), // sky blue
    Rgba::rgb(0x00, 0x9E, 0x73), // bluish green
    Rgba::rgb(0xF0, 0xE4, 0x42), // yellow
    Rgba::rgb(0x00, 0x72, 0xB2), // blue
    Rgba::rgb(0xD5, 0x5E, 0x00), // vermillion
    Rgba::rgb(0xCC, 0x79, 0xA7), // reddish purple
];

/// Named continuous lookup tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousMap {
    Viridis,
    Magma,
}

impl ContinuousMap {
    fn bytes(self) -> &'static [u8] {
        match self {
            ContinuousMap::Viridis => VIRIDIS,
            ContinuousMap::Magma => MAGMA,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContinuousMap::Viridis => "viridis",
            ContinuousMap::Magma => "magma",
        }
    }

    pub fn len(self) -> usize {
        self.bytes().len() / 4
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn entry(self, i: usize) -> Rgba {
        let b = &self.bytes()[4 * i..4 * i + 4];
        Rgba::new(b[0], b[1], b[2], b[3])
    }

    /// Table index for `t` in `[0, 1]`: `round(t * (len - 1))`, half up.
    pub fn index_of(self, t: f64) -> usize {
        let last = (self.len() - 1) as f64;
        (t.clamp(0.0, 1.0) * last + 0.5).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    #[default]
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ColorMapKind {
    Categorical { colors: Vec<Rgba> },
    Continuous { table: ContinuousMap },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorMap {
    pub kind: ColorMapKind,
    #[serde(default)]
    pub order: Order,
}

impl ColorMap {
    pub fn categorical(colors: Vec<Rgba>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::Config("categorical palette is empty".into()));
        }
        Ok(ColorMap {
            kind: ColorMapKind::Categorical { colors },
            order: Order::Forward,
        })
    }

    pub fn okabe_ito() -> Self {
        ColorMap {
            kind: ColorMapKind::Categorical {
                colors: OKABE_ITO.to_vec(),
            },
            order: Order::Forward,
        }
    }

    pub fn continuous(table: ContinuousMap) -> Self {
        ColorMap {
            kind: ColorMapKind::Continuous { table },
            order: Order::Forward,
        }
    }

    pub fn reversed(mut self) -> Self {
        self.order = match self.order {
            Order::Forward => Order::Reverse,
            Order::Reverse => Order::Forward,
        };
        self
    }

    /// Parses `viridis`, `magma` or `okabe-ito`, each optionally suffixed
    /// with `_r` for reverse order.
    pub fn by_name(name: &str) -> Result<Self> {
        let (base, reverse) = match name.strip_suffix("_r") {
            Some(base) => (base, true),
            None => (name, false),
        };
        let map = match base.to_ascii_lowercase().as_str() {
            "viridis" => ColorMap::continuous(ContinuousMap::Viridis),
            "magma" => ColorMap::continuous(ContinuousMap::Magma),
            "okabe-ito" | "okabe_ito" | "okabeito" => ColorMap::okabe_ito(),
            _ => {
                return Err(Error::Config(format!(
                    "unknown color map `{name}` (expected viridis, magma or okabe-ito, optionally with _r)"
                )))
            }
        };
        Ok(if reverse { map.reversed() } else { map })
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ColorMapKind::Categorical { .. })
    }

    /// Color for a category code; palettes cycle when there are more codes
    /// than colors.
    pub fn color_for_code(&self, code: u32) -> Rgba {
        match &self.kind {
            ColorMapKind::Categorical { colors } => {
                let i = code as usize % colors.len();
                match self.order {
                    Order::Forward => colors[i],
                    Order::Reverse => colors[colors.len() - 1 - i],
                }
            }
            ColorMapKind::Continuous { table } => table.entry(code as usize % table.len()),
        }
    }

    /// Color for a normalized value `t` in `[0, 1]`.
    pub fn color_at(&self, t: f64) -> Rgba {
        let t = match self.order {
            Order::Forward => t,
            Order::Reverse => 1.0 - t,
        };
        match &self.kind {
            ColorMapKind::Continuous { table } => table.entry(table.index_of(t)),
            ColorMapKind::Categorical { colors } => {
                let last = (colors.len() - 1) as f64;
                colors[(t.clamp(0.0, 1.0) * last + 0.5).floor() as usize]
            }
        }
    }

    /// Samples `n` evenly spaced colors, turning any map into a categorical
    /// palette.
    pub fn to_palette(&self, n: usize) -> ColorMap {
        match &self.kind {
            ColorMapKind::Categorical { .. } => self.clone(),
            ColorMapKind::Continuous { .. } => {
                let n = n.max(1);
                let colors = (0..n)
                    .map(|i| {
                        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                        self.color_at(t)
                    })
                    .collect();
                ColorMap {
                    kind: ColorMapKind::Categorical { colors },
                    order: Order::Forward,
                }
            }
        }
    }

    pub fn palette_len(&self) -> usize {
        match &self.kind {
            ColorMapKind::Categorical { colors } => colors.len(),
            ColorMapKind::Continuous { table } => table.len(),
        }
    }
}
