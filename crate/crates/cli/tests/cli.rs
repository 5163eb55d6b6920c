use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use msc_cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use tokio_tungstenite::tungstenite::Message as Ws;

fn demo() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/demo_10k.csv")
        .to_string_lossy()
        .into_owned()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("msc").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn stats_prints_kind_and_range() {
    let data = demo();
    let (code, out, _) = call(&["stats", "--data", &data, "--column", "Population"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("kind: continuous"));
    assert!(out.contains("min: 1000"));
    let (code, out, _) = call(&["stats", "--data", &data, "--column", "Continent"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("kind: categorical") && out.contains("unique_count: 7"));
    let (code, out, _) = call(&["stats", "--data", &data]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.matches("column: ").count(), 5);
    let (code, _, err) = call(&["stats", "--data", &data, "--column", "Nope"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("Nope"));
}

#[test]
fn exit_codes() {
    let data = demo();
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("x.png");
    let png = png.to_str().unwrap();
    assert_eq!(call(&["--help"]).0, EXIT_OK);
    assert_eq!(call(&["render", "--help"]).0, EXIT_OK);
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["render", "--data", &data, "--x", "Longitude", "--y", "Latitude", "--bogus", "--out", png]).0, EXIT_USAGE);
    assert_eq!(call(&["render", "--data", &data, "--x", "Longitude", "--out", png]).0, EXIT_USAGE);
    assert_eq!(call(&["render", "--data", "/does/not/exist.csv", "--x", "a", "--y", "b", "--out", png]).0, EXIT_DATA);
    assert_eq!(call(&["render", "--data", &data, "--x", "Lon", "--y", "Latitude", "--out", png]).0, EXIT_DATA);
    assert_eq!(call(&["render", "--data", &data, "--x", "Continent", "--y", "Latitude", "--out", png]).0, EXIT_DATA);
    assert!(!std::path::Path::new(png).exists());
}

#[test]
fn usage_errors_never_touch_output() {
    let data = demo();
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("out.png");
    let png = png.to_str().unwrap();
    let bad: &[&[&str]] = &[
        &["--opacity", "0"],
        &["--opacity", "1.5"],
        &["--color-by", "Continent", "--color-map", "rainbow"],
        &["--size-by", "Population", "--size-map", "8,1,10"],
        &["--size-by", "Population", "--size-map", "1,8"],
        &["--norm", "sqrt", "--color-by", "Population"],
        &["--color-map", "viridis"],
        &["--extent", "1,1,0,2"],
        &["--extent", "0,0,1"],
        &["--width", "0"],
        &["--background", "#12"],
    ];
    for extra in bad {
        let mut args = vec!["render", "--data", &data, "--x", "Longitude", "--y", "Latitude", "--out", png];
        args.extend_from_slice(extra);
        let (code, _, err) = call(&args);
        assert_eq!(code, EXIT_USAGE, "{extra:?}: {err}");
        assert!(!std::path::Path::new(png).exists(), "{extra:?}");
    }
}

#[test]
fn render_is_byte_identical_across_runs() {
    let data = demo();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.png", "b.png"] {
        let p = dir.path().join(name);
        let (code, _, err) = call(&[
            "render", "--data", &data, "--x", "Longitude", "--y", "Latitude", "--color-by", "Population",
            "--color-map", "magma_r", "--norm", "log", "--size-by", "Population", "--size-map", "1,8,10",
            "--opacity", "0.5", "--out", p.to_str().unwrap(), "--width", "320", "--height", "200",
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        bytes.push(std::fs::read(p).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let img = msc_core::raster::RgbaImage::decode_png(&bytes[0]).unwrap();
    assert_eq!((img.width(), img.height()), (320, 200));
}

fn spawn_serve(env_port: Option<&str>, extra: &[&str]) -> (std::process::Child, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msc"));
    cmd.args(["serve", "--data", &demo(), "--x", "Longitude", "--y", "Latitude", "--color-by", "Continent"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .env_remove("MSC_PORT");
    if let Some(p) = env_port {
        cmd.env("MSC_PORT", p);
    }
    let mut child = cmd.spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("{line}")).to_owned();
    (child, addr)
}

#[tokio::test]
async fn serve_hosts_a_session_over_websocket() {
    // MSC_PORT is the fallback when --port is absent; 0 picks a free port.
    let (mut child, addr) = spawn_serve(Some("0"), &["--views", "a,b", "--sync", "selection,hover"]);
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    ws.send(Ws::Text(r#"{"type":"hello","session":"default"}"#.into())).await.unwrap();
    let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
    let info: serde_json::Value = serde_json::from_str(msg.to_text().unwrap()).unwrap();
    assert_eq!(info["type"], "dataset_info");
    assert_eq!(info["body"]["row_count"], 10000);
    assert_eq!(info["body"]["flags"]["sync_selection"], true);
    assert_eq!(info["body"]["flags"]["sync_view"], false);
    let continent = info["body"]["columns"].as_array().unwrap().iter().find(|c| c["name"] == "Continent").unwrap().clone();
    assert_eq!(continent["labels"].as_array().unwrap().len(), 7);
    assert_eq!(info["body"]["encodings"]["a"]["color"]["source"], "categorical");
    child.kill().unwrap();
    child.wait().unwrap();
}

#[test]
fn port_flag_overrides_env_and_bad_env_is_usage_error() {
    let (mut child, addr) = spawn_serve(Some("1"), &["--port", "0"]);
    assert!(!addr.ends_with(":1"));
    child.kill().unwrap();
    child.wait().unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_msc"))
        .args(["serve", "--data", &demo(), "--x", "Longitude", "--y", "Latitude"])
        .env("MSC_PORT", "not-a-port")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}
