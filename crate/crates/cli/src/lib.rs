//! `msc` command-line front end.
//!
//! [`run`] returns the process exit code: 0 on success, 1 for usage errors
//! and 2 for data errors.

mod args;

use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::Parser;
use msc_core::data::{ingest_csv_with, read_csv_columns, IngestOptions};
use msc_core::encoding::{ColorEncoding, Encodings, SizeEncoding, SizeMap};
use msc_core::raster::render_image;
use msc_core::view::{full_data_camera, SyncFlags, ViewportPx};
use msc_core::{Camera, Column, PointTable, SpatialIndex};
use msc_server::{http, Hub, Session};

pub use args::{Cli, Command};
use args::DataArgs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Viewport assumed for served views until a client reports its own.
const SERVE_VIEWPORT: (u32, u32) = (800, 600);

enum Failure {
    Usage(String),
    Data(String),
}

impl From<msc_core::Error> for Failure {
    fn from(e: msc_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Serve(a) => serve(&cli.data, a, out),
        Command::Render(a) => render(&cli.data, a, out),
        Command::Stats(a) => stats(&cli.data, a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}

/// Flag combinations clap cannot express.
fn check_data_flags(d: &DataArgs, need_xy: bool) -> Result<(), Failure> {
    if d.data.is_none() {
        return Err(Failure::Usage("--data is required".into()));
    }
    if need_xy && (d.x.is_none() || d.y.is_none()) {
        return Err(Failure::Usage("--x and --y are required".into()));
    }
    if d.color_map.is_some() && d.color_by.is_none() {
        return Err(Failure::Usage("--color-map needs --color-by".into()));
    }
    if d.size_map.is_some() && d.size_by.is_none() {
        return Err(Failure::Usage("--size-map needs --size-by".into()));
    }
    if d.norm.is_some() && d.color_by.is_none() && d.size_by.is_none() {
        return Err(Failure::Usage("--norm needs --color-by or --size-by".into()));
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

fn load(d: &DataArgs) -> Result<PointTable, Failure> {
    let path = d.data.as_deref().expect("checked");
    let options = IngestOptions {
        categorical: d.categorical.clone(),
    };
    Ok(ingest_csv_with(open(path)?, d.x.as_deref().expect("checked"), d.y.as_deref().expect("checked"), &options)?)
}

/// Encodings implied by the flags, mirroring the programmatic defaults.
fn encodings(table: &PointTable, d: &DataArgs, background: msc_core::encoding::Rgba) -> Result<Encodings, Failure> {
    let mut enc = Encodings::default_for_background(background);
    if let Some(col) = &d.color_by {
        enc.color = ColorEncoding::by_column(table, col, d.color_map.clone(), d.norm)?;
    }
    if let Some(col) = &d.size_by {
        let map = match &d.size_map {
            Some(m) => *m,
            None => SizeMap::new(1.0, 8.0, 10)?,
        };
        enc.size = SizeEncoding::by_column(table, col, map, d.norm)?;
    }
    if let Some(o) = d.opacity {
        enc.opacity = o;
    }
    Ok(enc)
}

fn render(d: &DataArgs, a: &args::RenderArgs, out: &mut dyn Write) -> Result<(), Failure> {
    check_data_flags(d, true)?;
    let vp = ViewportPx::new(a.width, a.height)?;
    let table = load(d)?;
    let enc = encodings(&table, d, a.background)?;
    let cam = match a.extent {
        Some(e) => Camera::new(e)?,
        None => data_camera(&table, vp),
    };
    let index = SpatialIndex::build(&table);
    let img = render_image(&table, &index, &cam, vp, &enc, a.background)?;
    img.write_png(&a.out)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", a.out.display())))?;
    let _ = writeln!(out, "wrote {} ({}x{}, {} points)", a.out.display(), a.width, a.height, table.row_count());
    Ok(())
}

/// The data bounding box, or an aspect-fitted frame when it is flat.
fn data_camera(table: &PointTable, vp: ViewportPx) -> Camera {
    msc_core::Extent::bounding(table.x(), table.y())
        .and_then(|e| Camera::new(e).ok())
        .unwrap_or_else(|| full_data_camera(table, vp))
}

fn stats(d: &DataArgs, a: &args::StatsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    check_data_flags(d, false)?;
    let path = d.data.as_deref().expect("checked");
    let columns: Vec<(String, Column)> = match (&d.x, &d.y) {
        (Some(_), Some(_)) => {
            let t = load(d)?;
            t.columns().map(|(n, c)| (n.to_owned(), c.clone())).collect()
        }
        _ => read_csv_columns(open(path)?)?,
    };
    let picked: Vec<&(String, Column)> = match &a.column {
        Some(name) => vec![columns
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Failure::Data(msc_core::Error::UnknownColumn(name.clone()).to_string()))?],
        None => columns.iter().collect(),
    };
    let rows = columns.first().map_or(0, |(_, c)| c.len());
    let _ = writeln!(out, "rows: {rows}");
    for (name, col) in picked {
        let s = col.stats();
        let _ = writeln!(out, "column: {name}");
        let _ = writeln!(out, "  kind: {}", col.kind().as_str());
        let _ = writeln!(out, "  min: {}", s.min);
        let _ = writeln!(out, "  max: {}", s.max);
        let _ = writeln!(out, "  has_nonpositive: {}", s.has_nonpositive);
        if let Some(n) = s.unique_count {
            let _ = writeln!(out, "  unique_count: {n}");
        }
    }
    Ok(())
}

fn serve(d: &DataArgs, a: &args::ServeArgs, out: &mut dyn Write) -> Result<(), Failure> {
    check_data_flags(d, true)?;
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .or_else(|_| format!("[{}]:{}", a.host, a.port).parse())
        .map_err(|_| Failure::Usage(format!("invalid --host `{}`", a.host)))?;
    if a.views.iter().any(String::is_empty) {
        return Err(Failure::Usage("view ids must be nonempty".into()));
    }
    if let Some(dir) = &a.assets {
        if !dir.is_dir() {
            return Err(Failure::Usage(format!("--assets {} is not a directory", dir.display())));
        }
    }
    let flags = SyncFlags {
        sync_selection: a.sync.iter().any(|s| s == "selection"),
        sync_hover: a.sync.iter().any(|s| s == "hover"),
        sync_view: a.sync.iter().any(|s| s == "view"),
        zoom_on_selection: a.zoom_on_selection,
    };
    let vp = ViewportPx::new(SERVE_VIEWPORT.0, SERVE_VIEWPORT.1)?;

    let table = Arc::new(load(d)?);
    let enc = encodings(&table, d, a.background)?;
    let views = a.views.iter().map(|v| (v.clone(), vp)).collect();
    let session = Session::new(a.session.clone(), table.clone(), views, flags, enc)
        .map_err(|e| match e {
            msc_core::Error::Config(m) => Failure::Usage(m),
            e => Failure::from(e),
        })?;

    let hub = Arc::new(Hub::new());
    hub.add_session(session)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Data(format!("cannot start runtime: {e}")))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Data(format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Failure::Data(e.to_string()))?;
        let _ = writeln!(out, "listening on http://{local}");
        let _ = writeln!(
            out,
            "session `{}`: {} points, views {}",
            a.session,
            table.row_count(),
            a.views.join(",")
        );
        let _ = out.flush();
        http::serve(listener, http::router(hub, a.assets.clone()))
            .await
            .map_err(|e| Failure::Data(format!("server stopped: {e}")))
    })
}
