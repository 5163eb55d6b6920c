//! Deterministic software rasterizer for static export and golden tests.
//!
//! Points are drawn as filled axis-aligned squares in ascending row order.
//! A pixel is covered when its center falls inside the half-open square
//! `[cx - s/2, cx + s/2)` on both axes. Compositing is straight-alpha
//! source-over in `f64`, quantized once (round half up) when the image is
//! read out.

use std::io::Write;
use std::path::Path;

use crate::data::{Column, PointTable};
use crate::encoding::{resolve_color, resolve_size, ChannelValue, ColorEncoding, Encodings, Rgba, SizeEncoding};
use crate::error::{Error, Result};
use crate::index::{Extent, SpatialIndex};
use crate::view::{dynamic_opacity, Camera, ViewportPx};

/// 8-bit RGBA image, row-major, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbaImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgba {
        let i = 4 * (y as usize * self.width as usize + x as usize);
        let p = &self.pixels[i..i + 4];
        Rgba::new(p[0], p[1], p[2], p[3])
    }

    /// PNG bytes from a fixed encoder configuration, so equal images always
    /// encode to equal files.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_compression(png::Compression::Balanced);
            enc.set_filter(png::Filter::Adaptive);
            let mut writer = enc.write_header().map_err(png_error)?;
            writer.write_image_data(&self.pixels).map_err(png_error)?;
            writer.finish().map_err(png_error)?;
        }
        Ok(out)
    }

    /// Writes the PNG to `path` via a temporary file in the same directory,
    /// so a failed render never leaves a partial file behind.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.to_png()?;
        let tmp = path.with_extension("png.partial");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = decoder.read_info().map_err(|e| Error::Io(e.to_string()))?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf).map_err(|e| Error::Io(e.to_string()))?;
        if info.color_type != png::ColorType::Rgba || info.bit_depth != png::BitDepth::Eight {
            return Err(Error::Io(format!(
                "expected 8-bit RGBA PNG, got {:?} {:?}",
                info.color_type, info.bit_depth
            )));
        }
        buf.truncate(info.buffer_size());
        Ok(RgbaImage {
            width: info.width,
            height: info.height,
            pixels: buf,
        })
    }
}

fn png_error(e: png::EncodingError) -> Error {
    Error::Io(e.to_string())
}

/// Straight-alpha source-over of `src` (alpha `sa`) onto `dst`. Channels are
/// in `[0, 1]`.
#[inline]
pub fn over(dst: [f64; 4], src: [f64; 3], sa: f64) -> [f64; 4] {
    let da = dst[3];
    let out_a = sa + da * (1.0 - sa);
    if out_a <= 0.0 {
        return [0.0; 4];
    }
    let mut out = [0.0, 0.0, 0.0, out_a];
    for c in 0..3 {
        out[c] = (src[c] * sa + dst[c] * da * (1.0 - sa)) / out_a;
    }
    out
}

/// `v` in `[0, 1]` to a byte, rounding half up.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn unit(c: Rgba) -> [f64; 4] {
    [
        c.r as f64 / 255.0,
        c.g as f64 / 255.0,
        c.b as f64 / 255.0,
        c.a as f64 / 255.0,
    ]
}

/// Per-row color lookup with column references resolved once.
enum ColorSource<'a> {
    Constant(Rgba),
    Codes(&'a ColorEncoding, &'a [u32]),
    Reals(&'a ColorEncoding, &'a [f64]),
}

impl<'a> ColorSource<'a> {
    fn new(enc: &'a ColorEncoding, table: &'a PointTable) -> Result<Self> {
        Ok(match enc {
            ColorEncoding::Constant { color } => ColorSource::Constant(*color),
            ColorEncoding::Categorical { column, .. } => match table.column(column)? {
                Column::Categorical(c) => ColorSource::Codes(enc, c.codes()),
                Column::Real(_) => {
                    return Err(Error::Invariant(format!("column `{column}` is not categorical")))
                }
            },
            ColorEncoding::Continuous { column, .. } => match table.column(column)? {
                Column::Real(v) => ColorSource::Reals(enc, v),
                Column::Categorical(_) => {
                    return Err(Error::Invariant(format!("column `{column}` is not continuous")))
                }
            },
        })
    }

    fn color(&self, row: usize) -> Result<Rgba> {
        match self {
            ColorSource::Constant(c) => Ok(*c),
            ColorSource::Codes(enc, codes) => resolve_color(enc, ChannelValue::Code(codes[row])),
            ColorSource::Reals(enc, values) => resolve_color(enc, ChannelValue::Real(values[row])),
        }
    }
}

enum SizeSource<'a> {
    Constant(f64),
    Reals(&'a SizeEncoding, &'a [f64]),
    Codes(&'a SizeEncoding, &'a [u32]),
}

impl<'a> SizeSource<'a> {
    fn new(enc: &'a SizeEncoding, table: &'a PointTable) -> Result<Self> {
        Ok(match enc {
            SizeEncoding::Constant { size_px } => SizeSource::Constant(*size_px),
            SizeEncoding::Column { column, .. } => match table.column(column)? {
                Column::Real(v) => SizeSource::Reals(enc, v),
                Column::Categorical(c) => SizeSource::Codes(enc, c.codes()),
            },
        })
    }

    fn size(&self, row: usize) -> f64 {
        match self {
            SizeSource::Constant(s) => *s,
            SizeSource::Reals(enc, v) => resolve_size(enc, v[row]),
            SizeSource::Codes(enc, c) => resolve_size(enc, c[row] as f64),
        }
    }
}

/// Half-open pixel range covered by a square of side `size` centered at
/// `center`, clipped to `0..limit`.
fn covered(center: f64, size: f64, limit: u32) -> (u32, u32) {
    let lo = (center - size / 2.0 - 0.5).ceil();
    let hi = (center + size / 2.0 - 0.5).ceil();
    let clip = |v: f64| v.clamp(0.0, limit as f64) as u32;
    (clip(lo), clip(hi))
}

/// Renders `table` as seen through `cam` into a `vp`-sized image.
pub fn render_image(
    table: &PointTable,
    index: &SpatialIndex,
    cam: &Camera,
    vp: ViewportPx,
    encodings: &Encodings,
    background: Rgba,
) -> Result<RgbaImage> {
    let (w, h) = (vp.width(), vp.height());
    let bg = unit(background);
    let mut buf = vec![bg; w as usize * h as usize];

    let e = cam.extent();
    let sx = w as f64 / e.width();
    let sy = h as f64 / e.height();

    // Points whose centers lie just outside the camera can still cover
    // edge pixels.
    let margin_px = encodings.size.max_size_px() / 2.0 + 1.0;
    let reach = Extent {
        x_min: e.x_min - margin_px / sx,
        x_max: e.x_max + margin_px / sx,
        y_min: e.y_min - margin_px / sy,
        y_max: e.y_max + margin_px / sy,
    };
    let visible = index.count_extent(e);
    let colors = ColorSource::new(&encodings.color, table)?;
    let sizes = SizeSource::new(&encodings.size, table)?;
    let (xs, ys) = (table.x(), table.y());

    for row in index.query_extent(&reach) {
        let r = row as usize;
        let size = sizes.size(r);
        let color = colors.color(r)?;
        let c = unit(color);
        let alpha = c[3] * encodings.opacity * dynamic_opacity(visible, size, vp);
        let px = (xs[r] - e.x_min) * sx;
        let py = (e.y_max - ys[r]) * sy;
        let (x0, x1) = covered(px, size, w);
        let (y0, y1) = covered(py, size, h);
        for y in y0..y1 {
            let line = y as usize * w as usize;
            for x in x0..x1 {
                let p = &mut buf[line + x as usize];
                *p = over(*p, [c[0], c[1], c[2]], alpha);
            }
        }
    }

    let pixels = buf.iter().flat_map(|p| p.map(quantize)).collect();
    Ok(RgbaImage {
        width: w,
        height: h,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(xs: Vec<f64>, ys: Vec<f64>) -> (PointTable, SpatialIndex) {
        let t = PointTable::from_xy(xs, ys).unwrap();
        let idx = SpatialIndex::build(&t);
        (t, idx)
    }

    fn cam(x0: f64, x1: f64, y0: f64, y1: f64) -> Camera {
        Camera::new(Extent::new(x0, x1, y0, y1).unwrap()).unwrap()
    }

    #[test]
    fn opaque_center_point() {
        let (t, idx) = setup(vec![0.0], vec![0.0]);
        let color = Rgba::rgb(0x12, 0x34, 0x56);
        let enc = Encodings::constant(color, 1.0, 1.0).unwrap();
        let vp = ViewportPx::new(11, 11).unwrap();
        let img = render_image(&t, &idx, &cam(-1.0, 1.0, -1.0, 1.0), vp, &enc, Rgba::BLACK).unwrap();
        assert_eq!(img.pixel(5, 5), color);
        let lit = img.pixels().chunks(4).filter(|p| p != &[0, 0, 0, 255]).count();
        assert_eq!(lit, 1);
    }

    #[test]
    fn pixel_coverage_of_squares() {
        assert_eq!(covered(5.5, 1.0, 11), (5, 6));
        assert_eq!(covered(5.5, 3.0, 11), (4, 7));
        assert_eq!(covered(5.0, 2.0, 11), (4, 6));
        assert_eq!(covered(-3.0, 2.0, 11), (0, 0));
        assert_eq!(covered(10.9, 4.0, 11), (9, 11));
    }

    #[test]
    fn y_axis_points_up() {
        let (t, idx) = setup(vec![0.0], vec![0.9]);
        let enc = Encodings::constant(Rgba::WHITE, 1.0, 1.0).unwrap();
        let vp = ViewportPx::new(10, 10).unwrap();
        let img = render_image(&t, &idx, &cam(-1.0, 1.0, -1.0, 1.0), vp, &enc, Rgba::BLACK).unwrap();
        // (0, 0.9) projects to (5.0, 0.5): the square [4.5, 5.5) x [0, 1)
        // covers the pixel centered at (4.5, 0.5).
        assert_eq!(img.pixel(4, 0), Rgba::WHITE);
    }

    #[test]
    fn disjoint_camera_is_background() {
        let (t, idx) = setup(vec![0.0, 1.0], vec![0.0, 1.0]);
        let enc = Encodings::constant(Rgba::WHITE, 4.0, 1.0).unwrap();
        let bg = Rgba::rgb(10, 20, 30);
        let vp = ViewportPx::new(8, 6).unwrap();
        let img = render_image(&t, &idx, &cam(50.0, 60.0, 50.0, 60.0), vp, &enc, bg).unwrap();
        assert!(img.pixels().chunks(4).all(|p| p == bg.to_array()));
    }

    #[test]
    fn png_roundtrip() {
        let (t, idx) = setup(vec![0.0], vec![0.0]);
        let enc = Encodings::constant(Rgba::WHITE, 3.0, 0.5).unwrap();
        let vp = ViewportPx::new(9, 7).unwrap();
        let img = render_image(&t, &idx, &cam(-1.0, 1.0, -1.0, 1.0), vp, &enc, Rgba::BLACK).unwrap();
        let png = img.to_png().unwrap();
        assert_eq!(&png[1..4], b"PNG");
        assert_eq!(RgbaImage::decode_png(&png).unwrap(), img);
    }

    #[test]
    fn quantize_rounds_half_up() {
        assert_eq!(quantize(0.5 / 255.0), 1);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(1.5), 255);
    }
}
