//! Flag definitions. Every flag is parsed into its typed form here, so a bad
//! value is a usage error before any data is read.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use msc_core::encoding::{ColorMap, NormKind, Rgba, SizeMap};
use msc_core::index::Extent;

#[derive(Debug, Parser)]
#[command(name = "msc", version, about = "Large-scale interactive scatterplots")]
pub struct Cli {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Column holding x coordinates.
    #[arg(long, global = true)]
    pub x: Option<String>,
    /// Column holding y coordinates.
    #[arg(long, global = true)]
    pub y: Option<String>,
    /// Treat these columns as categorical even if they are numeric.
    #[arg(long, global = true, value_delimiter = ',')]
    pub categorical: Vec<String>,
    #[arg(long, global = true)]
    pub color_by: Option<String>,
    #[arg(long, global = true)]
    pub size_by: Option<String>,
    /// Constant opacity in (0, 1].
    #[arg(long, global = true, value_parser = parse_opacity)]
    pub opacity: Option<f64>,
    /// viridis, magma or okabe-ito; append `_r` to reverse.
    #[arg(long, global = true, value_parser = parse_color_map)]
    pub color_map: Option<ColorMap>,
    /// `min,max,steps` in pixels.
    #[arg(long, global = true, value_parser = parse_size_map)]
    pub size_map: Option<SizeMap>,
    /// linear, log or asinh.
    #[arg(long, global = true, value_parser = parse_norm)]
    pub norm: Option<NormKind>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Host an interactive session over a websocket.
    Serve(ServeArgs),
    /// Write a PNG of the dataset.
    Render(RenderArgs),
    /// Print column statistics.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Listen port; falls back to MSC_PORT, then 8080.
    #[arg(long, env = "MSC_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "default")]
    pub session: String,
    /// Comma-separated view ids.
    #[arg(long, value_delimiter = ',', default_value = "main")]
    pub views: Vec<String>,
    /// Synced state: any of selection, hover, view.
    #[arg(long, value_delimiter = ',', value_parser = ["selection", "hover", "view"])]
    pub sync: Vec<String>,
    #[arg(long)]
    pub zoom_on_selection: bool,
    /// Directory with the browser bundle.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long, value_parser = parse_color, default_value = "black")]
    pub background: Rgba,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 800, value_parser = clap::value_parser!(u32).range(1..=16384))]
    pub width: u32,
    #[arg(long, default_value_t = 600, value_parser = clap::value_parser!(u32).range(1..=16384))]
    pub height: u32,
    /// `xmin,ymin,xmax,ymax`; defaults to the data bounding box.
    #[arg(long, value_parser = parse_extent, allow_hyphen_values = true)]
    pub extent: Option<Extent>,
    #[arg(long, value_parser = parse_color, default_value = "black")]
    pub background: Rgba,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Column to describe; all columns when omitted.
    #[arg(long)]
    pub column: Option<String>,
}

fn parse_opacity(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    msc_core::encoding::validate_opacity(v).map_err(|e| e.to_string())
}

fn parse_color_map(s: &str) -> Result<ColorMap, String> {
    ColorMap::by_name(s).map_err(|e| e.to_string())
}

fn parse_size_map(s: &str) -> Result<SizeMap, String> {
    s.parse().map_err(|e: msc_core::Error| e.to_string())
}

fn parse_norm(s: &str) -> Result<NormKind, String> {
    s.parse().map_err(|e: msc_core::Error| e.to_string())
}

fn parse_color(s: &str) -> Result<Rgba, String> {
    s.parse().map_err(|e: msc_core::Error| e.to_string())
}

fn parse_extent(s: &str) -> Result<Extent, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("`{s}` is not `xmin,ymin,xmax,ymax`"))?;
    let [x_min, y_min, x_max, y_max] = parts[..] else {
        return Err(format!("`{s}` is not `xmin,ymin,xmax,ymax`"));
    };
    let e = Extent::new(x_min, x_max, y_min, y_max).map_err(|e| e.to_string())?;
    if e.width() <= 0.0 || e.height() <= 0.0 {
        return Err(format!("extent `{s}` must have positive width and height"));
    }
    Ok(e)
}
