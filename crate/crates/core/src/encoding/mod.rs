//! Visual encodings: how column values become point colors and sizes.

mod colormap;
mod normalize;

pub use colormap::{
    ColorMap, ColorMapKind, ContinuousMap, Order, Rgba, COLORMAP_ASSET_VERSION, OKABE_ITO,
};
pub use normalize::{NormKind, Normalizer, DEFAULT_ASINH_WIDTH};

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ChannelKind, Column, PointTable};
use crate::error::{Error, Result};

pub const DEFAULT_POINT_SIZE_PX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Color,
    Size,
    Opacity,
}

/// `step_count` evenly spaced sizes from `min_px` to `max_px`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeMap {
    min_px: f64,
    max_px: f64,
    step_count: u32,
}

impl SizeMap {
    pub fn new(min_px: f64, max_px: f64, step_count: u32) -> Result<Self> {
        if !(min_px > 0.0 && min_px.is_finite() && max_px.is_finite()) {
            return Err(Error::Config(format!("size map min must be positive, got {min_px}")));
        }
        if max_px < min_px {
            return Err(Error::Config(format!(
                "size map max {max_px} is below min {min_px}"
            )));
        }
        if step_count == 0 {
            return Err(Error::Config("size map needs at least one step".into()));
        }
        Ok(SizeMap {
            min_px,
            max_px,
            step_count,
        })
    }

    pub fn min_px(&self) -> f64 {
        self.min_px
    }

    pub fn max_px(&self) -> f64 {
        self.max_px
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    pub fn step(&self, i: u32) -> f64 {
        let last = self.step_count - 1;
        if i == 0 || last == 0 {
            return self.min_px;
        }
        if i >= last {
            return self.max_px;
        }
        let v = self.min_px + (self.max_px - self.min_px) * i as f64 / last as f64;
        v.clamp(self.min_px, self.max_px)
    }

    /// Size for a normalized value: step `round(t * (steps - 1))`, half up.
    pub fn size_at(&self, t: f64) -> f64 {
        let last = (self.step_count - 1) as f64;
        let i = (t.clamp(0.0, 1.0) * last + 0.5).floor() as u32;
        self.step(i)
    }
}

/// Parses `min,max,steps`.
impl FromStr for SizeMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid size map `{s}` (expected min,max,steps)"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let min = parts[0].parse::<f64>().map_err(|_| bad())?;
        let max = parts[1].parse::<f64>().map_err(|_| bad())?;
        let steps = parts[2].parse::<u32>().map_err(|_| bad())?;
        SizeMap::new(min, max, steps)
    }
}

/// A value fed to a channel: either a real or a category code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelValue {
    Real(f64),
    Code(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum ColorEncoding {
    Constant {
        color: Rgba,
    },
    Categorical {
        column: String,
        map: ColorMap,
        label_count: usize,
        /// Set when there are more labels than palette colors.
        cycling: bool,
    },
    Continuous {
        column: String,
        normalizer: Normalizer,
        map: ColorMap,
    },
}

impl ColorEncoding {
    pub fn column(&self) -> Option<&str> {
        match self {
            ColorEncoding::Constant { .. } => None,
            ColorEncoding::Categorical { column, .. } | ColorEncoding::Continuous { column, .. } => {
                Some(column)
            }
        }
    }

    /// Builds a column-driven color encoding. Categorical columns always get
    /// a categorical palette; a continuous map requested for one is sampled
    /// into `label_count` colors.
    pub fn by_column(
        table: &PointTable,
        column: &str,
        map: Option<ColorMap>,
        norm: Option<NormKind>,
    ) -> Result<Self> {
        match table.column(column)? {
            Column::Categorical(cat) => {
                let label_count = cat.label_count();
                let map = match map {
                    None => ColorMap::okabe_ito(),
                    Some(m) if m.is_categorical() => m,
                    Some(m) => m.to_palette(label_count),
                };
                let cycling = label_count > map.palette_len();
                Ok(ColorEncoding::Categorical {
                    column: column.to_owned(),
                    map,
                    label_count,
                    cycling,
                })
            }
            Column::Real(_) => {
                let map = map.unwrap_or_else(|| ColorMap::continuous(ContinuousMap::Viridis));
                let stats = table.column_stats(column)?;
                let normalizer = Normalizer::from_stats(norm.unwrap_or(NormKind::Linear), &stats)?;
                Ok(ColorEncoding::Continuous {
                    column: column.to_owned(),
                    normalizer,
                    map,
                })
            }
        }
    }

    /// Legend entries for categorical encodings, in sorted label order.
    pub fn legend(&self, table: &PointTable) -> Result<Vec<(String, Rgba)>> {
        match self {
            ColorEncoding::Categorical { column, map, .. } => {
                let cat = table.column(column)?.as_categorical().ok_or_else(|| {
                    Error::Invariant(format!("column `{column}` is no longer categorical"))
                })?;
                Ok(cat
                    .labels()
                    .iter()
                    .enumerate()
                    .map(|(code, label)| (label.clone(), map.color_for_code(code as u32)))
                    .collect())
            }
            _ => Ok(Vec::new()),
        }
    }

    /// Color of one row.
    pub fn color_of_row(&self, table: &PointTable, row: usize) -> Result<Rgba> {
        match self {
            ColorEncoding::Constant { color } => Ok(*color),
            ColorEncoding::Categorical { column, .. } => {
                let cat = table.column(column)?.as_categorical().ok_or_else(|| {
                    Error::Invariant(format!("column `{column}` is not categorical"))
                })?;
                resolve_color(self, ChannelValue::Code(cat.codes()[row]))
            }
            ColorEncoding::Continuous { column, .. } => {
                let values = table.column(column)?.as_real().ok_or_else(|| {
                    Error::Invariant(format!("column `{column}` is not continuous"))
                })?;
                resolve_color(self, ChannelValue::Real(values[row]))
            }
        }
    }
}

/// Resolves one value to a color under `spec`.
pub fn resolve_color(spec: &ColorEncoding, value: ChannelValue) -> Result<Rgba> {
    match (spec, value) {
        (ColorEncoding::Constant { color }, _) => Ok(*color),
        (
            ColorEncoding::Categorical {
                map, label_count, ..
            },
            ChannelValue::Code(code),
        ) => {
            if code as usize >= *label_count {
                return Err(Error::Invariant(format!(
                    "category code {code} has no label ({label_count} labels)"
                )));
            }
            Ok(map.color_for_code(code))
        }
        (ColorEncoding::Continuous { normalizer, map, .. }, ChannelValue::Real(v)) => {
            Ok(map.color_at(normalizer.normalize(v)))
        }
        (ColorEncoding::Categorical { .. }, ChannelValue::Real(_)) => Err(Error::Invariant(
            "categorical color encoding fed a real value".into(),
        )),
        (ColorEncoding::Continuous { .. }, ChannelValue::Code(_)) => Err(Error::Invariant(
            "continuous color encoding fed a category code".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum SizeEncoding {
    Constant {
        size_px: f64,
    },
    Column {
        column: String,
        normalizer: Normalizer,
        map: SizeMap,
    },
}

impl SizeEncoding {
    pub fn constant(size_px: f64) -> Result<Self> {
        if !(size_px > 0.0 && size_px.is_finite()) {
            return Err(Error::Config(format!("point size must be positive, got {size_px}")));
        }
        Ok(SizeEncoding::Constant { size_px })
    }

    pub fn by_column(table: &PointTable, column: &str, map: SizeMap, norm: Option<NormKind>) -> Result<Self> {
        let stats = table.column_stats(column)?;
        let normalizer = Normalizer::from_stats(norm.unwrap_or(NormKind::Linear), &stats)?;
        Ok(SizeEncoding::Column {
            column: column.to_owned(),
            normalizer,
            map,
        })
    }

    pub fn column(&self) -> Option<&str> {
        match self {
            SizeEncoding::Constant { .. } => None,
            SizeEncoding::Column { column, .. } => Some(column),
        }
    }

    pub fn max_size_px(&self) -> f64 {
        match self {
            SizeEncoding::Constant { size_px } => *size_px,
            SizeEncoding::Column { map, .. } => map.max_px(),
        }
    }

    pub fn size_of_row(&self, table: &PointTable, row: usize) -> Result<f64> {
        match self {
            SizeEncoding::Constant { size_px } => Ok(*size_px),
            SizeEncoding::Column { column, .. } => {
                let v = match table.column(column)? {
                    Column::Real(values) => values[row],
                    Column::Categorical(cat) => cat.codes()[row] as f64,
                };
                Ok(resolve_size(self, v))
            }
        }
    }
}

/// Resolves one value to a point size in pixels.
pub fn resolve_size(spec: &SizeEncoding, value: f64) -> f64 {
    match spec {
        SizeEncoding::Constant { size_px } => *size_px,
        SizeEncoding::Column { normalizer, map, .. } => map.size_at(normalizer.normalize(value)),
    }
}

/// Default color encoding for a column: Okabe-Ito for categorical columns,
/// Viridis over a linear `(min, max)` domain for numeric ones.
pub fn default_encoding(table: &PointTable, column: &str) -> Result<ColorEncoding> {
    ColorEncoding::by_column(table, column, None, None)
}

/// The full set of encodings for one view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encodings {
    pub color: ColorEncoding,
    pub size: SizeEncoding,
    /// Constant opacity in `(0, 1]`, multiplied with the density-adaptive
    /// opacity at draw time.
    pub opacity: f64,
}

impl Encodings {
    pub fn constant(color: Rgba, size_px: f64, opacity: f64) -> Result<Self> {
        Ok(Encodings {
            color: ColorEncoding::Constant { color },
            size: SizeEncoding::constant(size_px)?,
            opacity: validate_opacity(opacity)?,
        })
    }

    /// Constant encodings with a point color that contrasts with
    /// `background`.
    pub fn default_for_background(background: Rgba) -> Self {
        let color = if background.luminance() < 0.5 {
            Rgba::WHITE
        } else {
            Rgba::BLACK
        };
        Encodings {
            color: ColorEncoding::Constant { color },
            size: SizeEncoding::Constant {
                size_px: DEFAULT_POINT_SIZE_PX,
            },
            opacity: 1.0,
        }
    }
}

pub fn validate_opacity(opacity: f64) -> Result<f64> {
    if opacity > 0.0 && opacity <= 1.0 {
        Ok(opacity)
    } else {
        Err(Error::Config(format!("opacity must be in (0, 1], got {opacity}")))
    }
}

/// A channel update as sent over the control plane.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EncodingRequest {
    pub channel: Option<Channel>,
    /// Source column; mutually exclusive with `constant`.
    #[serde(default)]
    pub column: Option<String>,
    /// Constant value: a color string for color, pixels for size, alpha for
    /// opacity.
    #[serde(default)]
    pub constant: Option<serde_json::Value>,
    #[serde(default)]
    pub map: Option<String>,
    #[serde(default)]
    pub norm: Option<NormKind>,
    #[serde(default)]
    pub order: Option<Order>,
    /// `[min_px, max_px, steps]`
    #[serde(default)]
    pub size_map: Option<(f64, f64, u32)>,
}

impl EncodingRequest {
    /// Validates the request against `table` and applies it to `encodings`.
    pub fn apply(&self, table: &PointTable, encodings: &mut Encodings) -> Result<Channel> {
        let channel = self
            .channel
            .ok_or_else(|| Error::Config("encoding request is missing `channel`".into()))?;
        match (&self.column, &self.constant) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either `column` or `constant`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config("encoding needs a `column` or a `constant`".into()))
            }
            _ => {}
        }
        match channel {
            Channel::Color => {
                encodings.color = match (&self.column, &self.constant) {
                    (Some(column), _) => {
                        let mut map = self.map.as_deref().map(ColorMap::by_name).transpose()?;
                        if let (Some(m), Some(order)) = (map.as_mut(), self.order) {
                            m.order = order;
                        } else if self.order == Some(Order::Reverse) {
                            map = Some(default_map_for(table, column)?.reversed());
                        }
                        ColorEncoding::by_column(table, column, map, self.norm)?
                    }
                    (None, Some(value)) => {
                        let s = value.as_str().ok_or_else(|| {
                            Error::Config("constant color must be a string".into())
                        })?;
                        ColorEncoding::Constant { color: s.parse()? }
                    }
                    (None, None) => unreachable!(),
                };
            }
            Channel::Size => {
                encodings.size = match (&self.column, &self.constant) {
                    (Some(column), _) => {
                        let map = match self.size_map {
                            Some((min, max, steps)) => SizeMap::new(min, max, steps)?,
                            None => SizeMap::new(1.0, 8.0, 10)?,
                        };
                        SizeEncoding::by_column(table, column, map, self.norm)?
                    }
                    (None, Some(value)) => SizeEncoding::constant(value.as_f64().ok_or_else(
                        || Error::Config("constant size must be a number".into()),
                    )?)?,
                    (None, None) => unreachable!(),
                };
            }
            Channel::Opacity => {
                if self.column.is_some() {
                    return Err(Error::Config(
                        "opacity can only be set to a constant".into(),
                    ));
                }
                let value = self.constant.as_ref().and_then(|v| v.as_f64()).ok_or_else(|| {
                    Error::Config("constant opacity must be a number".into())
                })?;
                encodings.opacity = validate_opacity(value)?;
            }
        }
        Ok(channel)
    }
}

fn default_map_for(table: &PointTable, column: &str) -> Result<ColorMap> {
    Ok(match table.infer_channel_kind(column)? {
        ChannelKind::Categorical => ColorMap::okabe_ito(),
        ChannelKind::Continuous => ColorMap::continuous(ContinuousMap::Viridis),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ingest_csv, Categorical};

    fn cities() -> PointTable {
        let csv = "lon,lat,Continent,Population\n\
                   0,0,Asia,100\n1,1,Africa,2000\n2,2,Europe,35\n3,3,Oceania,10\n\
                   4,4,North America,10000000\n5,5,South America,5\n6,6,Antarctica,1\n";
        ingest_csv(csv.as_bytes(), "lon", "lat").unwrap()
    }

    #[test]
    fn size_map_examples() {
        let m = SizeMap::new(1.0, 8.0, 10).unwrap();
        assert_eq!(m.size_at(0.0), 1.0);
        assert_eq!(m.size_at(1.0), 8.0);
        // round(0.5 * 9) = 5 -> 1 + 7 * 5 / 9
        assert!((m.size_at(0.5) - (1.0 + 7.0 * 5.0 / 9.0)).abs() < 1e-12);
        let one = SizeMap::new(2.0, 9.0, 1).unwrap();
        assert_eq!(one.size_at(0.0), 2.0);
        assert_eq!(one.size_at(1.0), 2.0);
    }

    #[test]
    fn size_map_parse_and_validate() {
        assert_eq!("1,8,10".parse::<SizeMap>().unwrap(), SizeMap::new(1.0, 8.0, 10).unwrap());
        assert!("1,8".parse::<SizeMap>().is_err());
        assert!(SizeMap::new(0.0, 8.0, 10).is_err());
        assert!(SizeMap::new(3.0, 2.0, 10).is_err());
        assert!(SizeMap::new(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn default_categorical_is_okabe_ito() {
        let t = cities();
        let enc = default_encoding(&t, "Continent").unwrap();
        match &enc {
            ColorEncoding::Categorical { label_count, cycling, map, .. } => {
                assert_eq!(*label_count, 7);
                assert!(!cycling);
                assert_eq!(*map, ColorMap::okabe_ito());
            }
            other => panic!("expected categorical, got {other:?}"),
        }
        // "Africa" sorts first.
        assert_eq!(resolve_color(&enc, ChannelValue::Code(0)).unwrap(), OKABE_ITO[0]);
        assert_eq!(enc.color_of_row(&t, 1).unwrap(), OKABE_ITO[0]);
        assert!(resolve_color(&enc, ChannelValue::Code(7)).is_err());
    }

    #[test]
    fn default_continuous_is_viridis_linear() {
        let t = cities();
        match default_encoding(&t, "Population").unwrap() {
            ColorEncoding::Continuous { normalizer, map, .. } => {
                assert_eq!(normalizer.kind(), NormKind::Linear);
                assert_eq!(normalizer.domain(), (1.0, 10_000_000.0));
                assert_eq!(map, ColorMap::continuous(ContinuousMap::Viridis));
            }
            other => panic!("expected continuous, got {other:?}"),
        }
    }

    #[test]
    fn nine_labels_cycle() {
        let labels: Vec<String> = (0..9).map(|i| format!("l{i}")).collect();
        let t = PointTable::new(
            "x",
            "y",
            vec![
                ("x".into(), Column::real(vec![0.0; 9])),
                ("y".into(), Column::real(vec![0.0; 9])),
                ("c".into(), Column::Categorical(Categorical::from_values(&labels))),
            ],
        )
        .unwrap();
        let enc = default_encoding(&t, "c").unwrap();
        assert!(matches!(enc, ColorEncoding::Categorical { cycling: true, .. }));
        assert_eq!(resolve_color(&enc, ChannelValue::Code(8)).unwrap(), OKABE_ITO[0]);
    }

    #[test]
    fn viridis_and_reversed_magma_endpoints() {
        let t = cities();
        let viridis = default_encoding(&t, "Population").unwrap();
        assert_eq!(
            resolve_color(&viridis, ChannelValue::Real(1.0)).unwrap(),
            ContinuousMap::Viridis.entry(0)
        );
        assert_eq!(
            resolve_color(&viridis, ChannelValue::Real(10_000_000.0)).unwrap(),
            ContinuousMap::Viridis.entry(255)
        );
        let magma_r = ColorEncoding::by_column(
            &t,
            "Population",
            Some(ColorMap::by_name("magma_r").unwrap()),
            Some(NormKind::Log),
        )
        .unwrap();
        assert_eq!(
            resolve_color(&magma_r, ChannelValue::Real(1.0)).unwrap(),
            ContinuousMap::Magma.entry(255)
        );
    }

    #[test]
    fn request_applies_and_validates() {
        let t = cities();
        let mut enc = Encodings::default_for_background(Rgba::BLACK);
        let req: EncodingRequest = serde_json::from_str(
            r#"{"channel":"size","column":"Population","norm":"asinh","size_map":[1,8,10]}"#,
        )
        .unwrap();
        assert_eq!(req.apply(&t, &mut enc).unwrap(), Channel::Size);
        assert_eq!(enc.size.max_size_px(), 8.0);

        let req: EncodingRequest = serde_json::from_str(
            r#"{"channel":"color","column":"Population","map":"magma","norm":"log","order":"reverse"}"#,
        )
        .unwrap();
        req.apply(&t, &mut enc).unwrap();
        assert!(matches!(&enc.color, ColorEncoding::Continuous { map, .. } if map.order == Order::Reverse));

        let req: EncodingRequest =
            serde_json::from_str(r#"{"channel":"opacity","constant":0.5}"#).unwrap();
        req.apply(&t, &mut enc).unwrap();
        assert_eq!(enc.opacity, 0.5);

        let before = enc.clone();
        for bad in [
            r#"{"channel":"opacity","constant":1.5}"#,
            r#"{"channel":"color","column":"nope"}"#,
            r#"{"channel":"color"}"#,
            r#"{"channel":"size","column":"Population","constant":3}"#,
            r#"{"channel":"color","column":"Population","norm":"log","map":"jet"}"#,
        ] {
            let req: EncodingRequest = serde_json::from_str(bad).unwrap();
            assert!(req.apply(&t, &mut enc).is_err(), "{bad}");
        }
        assert_eq!(enc, before);
    }

    #[test]
    fn legend_in_sorted_label_order() {
        let t = cities();
        let legend = default_encoding(&t, "Continent").unwrap().legend(&t).unwrap();
        assert_eq!(legend.len(), 7);
        assert_eq!(legend[0], ("Africa".to_string(), OKABE_ITO[0]));
        assert_eq!(legend[6], ("South America".to_string(), OKABE_ITO[6]));
    }
}
