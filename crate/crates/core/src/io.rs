//! On-disk formats: CSV tables, event logs, image slices and label dumps.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::absorb::{Label, VoxelGrid, VoxelImage};
use crate::analyzer::{Event, ReceiveEvent, TransmitEvent};
use crate::error::IoError;
use crate::forward::{GroundTruth, LostRay};
use crate::geometry::Vec3;
use crate::shooting::{DataPoint, ReconstructedPoint};

pub const DATA_POINT_HEADER: [&str; 10] = [
    "xl", "yl", "zl", "xr", "yr", "zr", "phi", "theta", "t", "xi",
];

/// Number formatting for CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// Two decimals, as printed in tables.
    Table,
    /// Shortest representation that round-trips exactly.
    #[default]
    Raw,
}

impl Format {
    pub fn num(self, v: f64) -> String {
        match self {
            // avoid printing "-0.00"
            Format::Table => {
                let s = format!("{v:.2}");
                if s == "-0.00" {
                    "0.00".into()
                } else {
                    s
                }
            }
            Format::Raw => format!("{v}"),
        }
    }
}

fn data_point_fields(dp: &DataPoint, f: Format) -> Vec<String> {
    let mut v: Vec<String> = [
        dp.transmitter.x,
        dp.transmitter.y,
        dp.transmitter.z,
        dp.receiver.x,
        dp.receiver.y,
        dp.receiver.z,
        dp.phi,
        dp.theta,
        dp.t,
    ]
    .iter()
    .map(|&x| f.num(x))
    .collect();
    v.push(dp.xi.to_string());
    v
}

fn parse_f64(s: &str, line: usize, col: &str) -> Result<f64, IoError> {
    s.trim().parse().map_err(|_| {
        IoError::Format(format!(
            "line {line}: column {col}: cannot parse {s:?} as a number"
        ))
    })
}

fn parse_u32(s: &str, line: usize, col: &str) -> Result<u32, IoError> {
    s.trim().parse().map_err(|_| {
        IoError::Format(format!(
            "line {line}: column {col}: cannot parse {s:?} as a label"
        ))
    })
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, want: &[&str]) -> Result<(), IoError> {
    let got: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if got.len() < want.len() || got.iter().zip(want).any(|(a, b)| a != b) {
        return Err(IoError::Format(format!(
            "expected header {}, found {}",
            want.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

pub fn write_data_points<W: Write>(out: W, points: &[DataPoint], f: Format) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATA_POINT_HEADER)?;
    for dp in points {
        w.write_record(data_point_fields(dp, f))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_data_points<R: Read>(input: R) -> Result<Vec<DataPoint>, IoError> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &DATA_POINT_HEADER)?;
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let v = |k: usize| parse_f64(rec.get(k).unwrap_or(""), line, DATA_POINT_HEADER[k]);
        out.push(DataPoint::new(
            Vec3::new(v(0)?, v(1)?, v(2)?),
            Vec3::new(v(3)?, v(4)?, v(5)?),
            v(6)?,
            v(7)?,
            v(8)?,
            parse_u32(rec.get(9).unwrap_or(""), line, "xi")?,
        ));
    }
    Ok(out)
}

pub fn write_lost_rays<W: Write>(out: W, rays: &[LostRay]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["xl", "yl", "zl", "phi", "theta", "xi"])?;
    for r in rays {
        let f = Format::Raw;
        w.write_record([
            f.num(r.transmitter.x),
            f.num(r.transmitter.y),
            f.num(r.transmitter.z),
            f.num(r.phi),
            f.num(r.theta),
            r.xi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_lost_rays<R: Read>(input: R) -> Result<Vec<LostRay>, IoError> {
    let header = ["xl", "yl", "zl", "phi", "theta", "xi"];
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &header)?;
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v = |k: usize| parse_f64(rec.get(k).unwrap_or(""), n + 2, header[k]);
        out.push(LostRay {
            transmitter: Vec3::new(v(0)?, v(1)?, v(2)?),
            phi: v(3)?,
            theta: v(4)?,
            xi: parse_u32(rec.get(5).unwrap_or(""), n + 2, "xi")?,
        });
    }
    Ok(out)
}

/// Ground truth rows: label, kind, reflection point and normal (empty for
/// unbroken rays) and closest approach to the receiver.
pub fn write_ground_truth<W: Write>(out: W, truth: &[GroundTruth]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "xi", "kind", "px", "py", "pz", "nx", "ny", "nz", "ax", "ay", "az",
    ])?;
    let f = Format::Raw;
    for g in truth {
        let mut row = vec![g.xi.to_string()];
        match g.reflection {
            Some(r) => {
                row.push("broken".into());
                row.extend(
                    [
                        r.point.x, r.point.y, r.point.z, r.normal.x, r.normal.y, r.normal.z,
                    ]
                    .map(|x| f.num(x)),
                );
            }
            None => {
                row.push("unbroken".into());
                row.extend(std::iter::repeat_n(String::new(), 6));
            }
        }
        row.extend([g.arrival.x, g.arrival.y, g.arrival.z].map(|x| f.num(x)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reconstruction<W: Write>(
    out: W,
    points: &[ReconstructedPoint],
    f: Format,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = DATA_POINT_HEADER.to_vec();
    header.extend(["xp", "yp", "zp", "status"]);
    w.write_record(&header)?;
    for r in points {
        let mut row = data_point_fields(&r.source, f);
        match r.position {
            Some(p) => row.extend([p.x, p.y, p.z].map(|x| f.num(x))),
            None => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        row.push(r.status.as_str().into());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed reconstruction row: source data point, position and status text.
pub type ReconstructionRow = (DataPoint, Option<Vec3>, String);

pub fn read_reconstruction<R: Read>(input: R) -> Result<Vec<ReconstructionRow>, IoError> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &DATA_POINT_HEADER)?;
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let v = |k: usize| parse_f64(rec.get(k).unwrap_or(""), line, "value");
        let dp = DataPoint::new(
            Vec3::new(v(0)?, v(1)?, v(2)?),
            Vec3::new(v(3)?, v(4)?, v(5)?),
            v(6)?,
            v(7)?,
            v(8)?,
            parse_u32(rec.get(9).unwrap_or(""), line, "xi")?,
        );
        let pos = if rec.get(10).unwrap_or("").is_empty() {
            None
        } else {
            Some(Vec3::new(v(10)?, v(11)?, v(12)?))
        };
        out.push((dp, pos, rec.get(13).unwrap_or("").to_string()));
    }
    Ok(out)
}

pub fn write_events<W: Write>(out: W, events: &[Event]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind",
        "id",
        "x",
        "y",
        "z",
        "phi",
        "theta",
        "xi",
        "timestamp",
    ])?;
    let f = Format::Raw;
    for e in events {
        let row = match e {
            Event::Transmit(t) => [
                "transmit".to_string(),
                t.id.clone(),
                f.num(t.position.x),
                f.num(t.position.y),
                f.num(t.position.z),
                f.num(t.phi),
                f.num(t.theta),
                t.xi.to_string(),
                f.num(t.t_start),
            ],
            Event::Receive(r) => [
                "receive".to_string(),
                r.id.clone(),
                f.num(r.position.x),
                f.num(r.position.y),
                f.num(r.position.z),
                String::new(),
                String::new(),
                r.xi.to_string(),
                f.num(r.t_end),
            ],
        };
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events<R: Read>(input: R) -> Result<Vec<Event>, IoError> {
    let header = [
        "kind",
        "id",
        "x",
        "y",
        "z",
        "phi",
        "theta",
        "xi",
        "timestamp",
    ];
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &header)?;
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let get = |k: usize| rec.get(k).unwrap_or("");
        let v = |k: usize| parse_f64(get(k), line, header[k]);
        let position = Vec3::new(v(2)?, v(3)?, v(4)?);
        let xi = parse_u32(get(7), line, "xi")?;
        out.push(match get(0) {
            "transmit" => Event::Transmit(TransmitEvent {
                id: get(1).to_string(),
                position,
                phi: v(5)?,
                theta: v(6)?,
                xi,
                t_start: v(8)?,
            }),
            "receive" => Event::Receive(ReceiveEvent {
                id: get(1).to_string(),
                position,
                xi,
                t_end: v(8)?,
            }),
            other => {
                return Err(IoError::Format(format!(
                    "line {line}: unknown event kind {other:?}"
                )))
            }
        });
    }
    Ok(out)
}

const LABELS_MAGIC: &[u8; 8] = b"VOXLBL01";

/// Raw label dump: magic, `u32` dims, `f64` voxel size and origin (all
/// little endian), then one byte per voxel, x fastest.
pub fn write_labels<W: Write>(mut out: W, image: &VoxelImage) -> Result<(), IoError> {
    let g = &image.grid;
    out.write_all(LABELS_MAGIC)?;
    for d in g.dims {
        let d = u32::try_from(d).map_err(|_| IoError::Format("voxel grid too large".into()))?;
        out.write_all(&d.to_le_bytes())?;
    }
    for v in g.voxel.iter().chain(g.origin.iter()) {
        out.write_all(&v.to_le_bytes())?;
    }
    let bytes: Vec<u8> = image.labels.iter().map(|&l| l as u8).collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_labels<R: Read>(mut input: R) -> Result<VoxelImage, IoError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let header = 8 + 12 + 48;
    if buf.len() < header || &buf[..8] != LABELS_MAGIC {
        return Err(IoError::Format("not a label dump".into()));
    }
    let u = |k: usize| u32::from_le_bytes(buf[8 + 4 * k..12 + 4 * k].try_into().unwrap()) as usize;
    let f = |k: usize| f64::from_le_bytes(buf[20 + 8 * k..28 + 8 * k].try_into().unwrap());
    let grid = VoxelGrid {
        dims: [u(0), u(1), u(2)],
        voxel: Vec3::new(f(0), f(1), f(2)),
        origin: Vec3::new(f(3), f(4), f(5)),
    };
    let body = &buf[header..];
    if body.len() != grid.len() {
        return Err(IoError::Format(format!(
            "expected {} labels, found {}",
            grid.len(),
            body.len()
        )));
    }
    let labels = body
        .iter()
        .map(|&b| Label::from_u8(b).ok_or_else(|| IoError::Format(format!("bad label byte {b}"))))
        .collect::<Result<_, _>>()?;
    Ok(VoxelImage { grid, labels })
}

/// Writes `slice_%04d.pgm` (gray 128, white 255, black 0) and
/// `slice_%04d.ppm` (red voxels in red, others as in the gray image) for
/// every z-slice.
pub fn write_slices(dir: &Path, image: &VoxelImage) -> Result<(), IoError> {
    fs::create_dir_all(dir)?;
    let [nx, ny, nz] = image.grid.dims;
    for k in 0..nz {
        let mut pgm = format!("P5\n{nx} {ny}\n255\n").into_bytes();
        let mut ppm = format!("P6\n{nx} {ny}\n255\n").into_bytes();
        // image rows run top to bottom, so flip y
        for j in (0..ny).rev() {
            for i in 0..nx {
                let (g, rgb) = match image.labels[image.grid.index(i, j, k)] {
                    Label::Gray => (128, [128, 128, 128]),
                    Label::White => (255, [255, 255, 255]),
                    Label::Black => (0, [0, 0, 0]),
                    Label::Red => (128, [255, 0, 0]),
                };
                pgm.push(g);
                ppm.extend(rgb);
            }
        }
        fs::write(dir.join(format!("slice_{k:04}.pgm")), pgm)?;
        fs::write(dir.join(format!("slice_{k:04}.ppm")), ppm)?;
    }
    Ok(())
}
