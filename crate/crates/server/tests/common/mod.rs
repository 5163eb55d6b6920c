#![allow(dead_code)]

use std::sync::Arc;

use msc_core::encoding::{Encodings, Rgba};
use msc_core::view::{SyncFlags, ViewportPx};
use msc_core::wire::{ControlMessage, ControlType};
use msc_core::{ingest_csv, PointTable};
use msc_server::{Message, Session};
use serde_json::{json, Value};

pub const CONTINENTS: [&str; 7] = [
    "Africa",
    "Antarctica",
    "Asia",
    "Europe",
    "North America",
    "Oceania",
    "South America",
];

/// Small table shaped like the GeoNames cities extract.
pub fn cities() -> PointTable {
    let mut csv = String::from("Name,Longitude,Latitude,Continent,Population\n");
    for i in 0..70 {
        let lon = -170.0 + (i as f64) * 4.9;
        let lat = -60.0 + ((i * 37) % 120) as f64;
        let pop = 1000 + i * i * 9973;
        csv.push_str(&format!("city{i},{lon},{lat},{},{pop}\n", CONTINENTS[i % 7]));
    }
    ingest_csv(csv.as_bytes(), "Longitude", "Latitude").unwrap()
}

pub fn session(flags: SyncFlags, views: &[&str]) -> Session {
    let views = views
        .iter()
        .map(|v| (v.to_string(), ViewportPx::new(400, 300).unwrap()))
        .collect();
    Session::new("s", Arc::new(cities()), views, flags, Encodings::default_for_background(Rgba::BLACK)).unwrap()
}

pub fn synced() -> SyncFlags {
    SyncFlags {
        sync_selection: true,
        sync_hover: true,
        sync_view: true,
        zoom_on_selection: false,
    }
}

pub fn text(kind: ControlType, view: Option<&str>, body: Value) -> Message {
    Message::Text(ControlMessage::new(kind, "s", view.map(str::to_owned), body).to_text())
}

pub fn hello(views: Option<&[&str]>) -> Message {
    match views {
        Some(v) => text(ControlType::Hello, None, json!({ "views": v })),
        None => text(ControlType::Hello, None, json!({})),
    }
}

pub fn controls(out: &[(u64, Message)], client: u64) -> Vec<ControlMessage> {
    out.iter().filter(|(c, _)| *c == client).filter_map(|(_, m)| m.control()).collect()
}

pub fn frames(out: &[(u64, Message)], client: u64) -> Vec<Vec<u8>> {
    out.iter()
        .filter(|(c, _)| *c == client)
        .filter_map(|(_, m)| match m {
            Message::Binary(b) => Some(b.clone()),
            _ => None,
        })
        .collect()
}
