//! Delimiter-separated telemetry and annotation files.

use std::collections::HashSet;
use std::io::Read;

use herdnav_core::geometry::PixelPoint;
use herdnav_core::telemetry::{AnnotationRecord, TelemetryRecord};
use serde::Deserialize;

use crate::error::ParseError;

type ParseResult<T> = std::result::Result<T, ParseError>;

/// Where each telemetry field lives in the input header, plus unit scale factors.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetryColumns {
    pub timestamp: String,
    /// Read when present in the header.
    pub frame: Option<String>,
    pub altitude: String,
    pub velocity: VelocityColumns,
    pub altitude_scale: f64,
    /// Per-axis multipliers (east, north, up), e.g. -1 for a down-positive z speed.
    pub velocity_scale: [f64; 3],
}

impl Default for TelemetryColumns {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            frame: Some("frame".into()),
            altitude: "altitude".into(),
            velocity: VelocityColumns::Axes {
                x: "vel_x".into(),
                y: "vel_y".into(),
                z: "vel_z".into(),
            },
            altitude_scale: 1.0,
            velocity_scale: [1.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum VelocityColumns {
    /// One column per axis.
    Axes { x: String, y: String, z: String },
    /// A single cell holding `x<sep>y<sep>z`.
    Packed { packed: String, separator: char },
}

/// Parses a number, accepting the typographic minus sign.
fn number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = if s.contains('\u{2212}') {
        s.replace('\u{2212}', "-").parse().ok()
    } else {
        s.parse().ok()
    };
    v.filter(|x: &f64| x.is_finite())
}

struct Header(csv::StringRecord);

impl Header {
    fn index(&self, name: &str) -> ParseResult<usize> {
        self.find(name)
            .ok_or_else(|| ParseError::MissingColumn(name.to_string()))
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|h| h.trim() == name)
    }
}

fn field(row: &csv::StringRecord, idx: usize) -> &str {
    row.get(idx).unwrap_or("")
}

fn line_of(row: &csv::StringRecord) -> u64 {
    row.position().map_or(0, |p| p.line())
}

fn bad(row: &csv::StringRecord, column: &str, value: &str) -> ParseError {
    ParseError::Field {
        line: line_of(row),
        column: column.to_string(),
        value: value.to_string(),
    }
}

fn reader<R: Read>(source: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn num_at(row: &csv::StringRecord, idx: usize, column: &str) -> ParseResult<f64> {
    let raw = field(row, idx);
    number(raw).ok_or_else(|| bad(row, column, raw))
}

/// Reads telemetry rows. Timestamps must be strictly increasing; every offending line is
/// reported.
pub fn parse_telemetry<R: Read>(
    source: R,
    columns: &TelemetryColumns,
    delimiter: u8,
) -> ParseResult<Vec<TelemetryRecord>> {
    let mut rdr = reader(source, delimiter);
    let header = Header(rdr.headers()?.clone());
    let t_idx = header.index(&columns.timestamp)?;
    let alt_idx = header.index(&columns.altitude)?;
    let frame_idx = columns.frame.as_deref().and_then(|f| header.find(f));
    enum Vel {
        Axes([usize; 3], [String; 3]),
        Packed(usize, String, char),
    }
    let vel = match &columns.velocity {
        VelocityColumns::Axes { x, y, z } => Vel::Axes(
            [header.index(x)?, header.index(y)?, header.index(z)?],
            [x.clone(), y.clone(), z.clone()],
        ),
        VelocityColumns::Packed { packed, separator } => {
            Vel::Packed(header.index(packed)?, packed.clone(), *separator)
        }
    };

    let mut out = Vec::new();
    let mut disordered = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let timestamp = num_at(&row, t_idx, &columns.timestamp)?;
        let altitude = num_at(&row, alt_idx, &columns.altitude)? * columns.altitude_scale;
        if altitude < 0.0 {
            return Err(bad(&row, &columns.altitude, field(&row, alt_idx)));
        }
        let v = match &vel {
            Vel::Axes(idx, names) => [
                num_at(&row, idx[0], &names[0])?,
                num_at(&row, idx[1], &names[1])?,
                num_at(&row, idx[2], &names[2])?,
            ],
            Vel::Packed(idx, name, sep) => {
                let raw = field(&row, *idx);
                let parts: Vec<f64> = raw.split(*sep).filter_map(number).collect();
                match parts[..] {
                    [x, y, z] if raw.split(*sep).count() == 3 => [x, y, z],
                    _ => return Err(bad(&row, name, raw)),
                }
            }
        };
        let frame = match frame_idx {
            Some(i) if !field(&row, i).is_empty() => {
                let raw = field(&row, i);
                Some(
                    raw.parse::<u64>()
                        .map_err(|_| bad(&row, columns.frame.as_deref().unwrap_or("frame"), raw))?,
                )
            }
            _ => None,
        };
        if let Some(prev) = out.last().map(|r: &TelemetryRecord| r.timestamp) {
            if timestamp <= prev {
                disordered.push(line_of(&row));
            }
        }
        let s = columns.velocity_scale;
        out.push(TelemetryRecord {
            timestamp,
            frame,
            vel_x: v[0] * s[0],
            vel_y: v[1] * s[1],
            vel_z: v[2] * s[2],
            altitude,
        });
    }
    if !disordered.is_empty() {
        return Err(ParseError::Ordering { lines: disordered });
    }
    Ok(out)
}

/// Reads per-box annotation rows with columns `frame`, `track_id`, `behavior`, `xmin`,
/// `ymin`, `xmax`, `ymax` and an optional `timestamp`. Without timestamps each frame is
/// placed at `video_start + frame / 30`. Output is ordered by time, then frame, then track.
pub fn parse_annotations<R: Read>(
    source: R,
    delimiter: u8,
    video_start: f64,
) -> ParseResult<Vec<AnnotationRecord>> {
    let mut rdr = reader(source, delimiter);
    let header = Header(rdr.headers()?.clone());
    let frame_idx = header.index("frame")?;
    let track_idx = header.index("track_id")?;
    let behavior_idx = header.index("behavior")?;
    let corners = [
        header.index("xmin")?,
        header.index("ymin")?,
        header.index("xmax")?,
        header.index("ymax")?,
    ];
    let ts_idx = header.find("timestamp");

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let raw = field(&row, frame_idx);
        let frame: u64 = raw.parse().map_err(|_| bad(&row, "frame", raw))?;
        let raw = field(&row, track_idx);
        let track_id: u32 = raw.parse().map_err(|_| bad(&row, "track_id", raw))?;
        let behavior = field(&row, behavior_idx).to_string();
        let mut c = [0.0; 4];
        for (slot, (&idx, name)) in c
            .iter_mut()
            .zip(corners.iter().zip(["xmin", "ymin", "xmax", "ymax"]))
        {
            *slot = num_at(&row, idx, name)?;
        }
        if !(c[0] < c[2] && c[1] < c[3]) {
            return Err(ParseError::InvalidBox { line });
        }
        let timestamp = match ts_idx {
            Some(i) if !field(&row, i).is_empty() => num_at(&row, i, "timestamp")?,
            _ => AnnotationRecord::frame_timestamp(video_start, frame),
        };
        if !seen.insert((frame, track_id)) {
            return Err(ParseError::Duplicate {
                line,
                frame,
                track_id,
            });
        }
        out.push(AnnotationRecord {
            frame,
            timestamp,
            track_id,
            behavior,
            bbox_min: PixelPoint::new(c[0], c[1]),
            bbox_max: PixelPoint::new(c[2], c[3]),
        });
    }
    out.sort_by(|a, b| {
        a.timestamp
            .total_cmp(&b.timestamp)
            .then(a.frame.cmp(&b.frame))
            .then(a.track_id.cmp(&b.track_id))
    });
    Ok(out)
}
