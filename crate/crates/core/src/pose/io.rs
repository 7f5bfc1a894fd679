//! Canonical on-disk formats: a single JSON document, or a per-frame CSV plus
//! a `.meta.json` sidecar carrying the recording metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Frame, Keypoint2D, Keypoint3D, Label, PoseRecording, RecordingDoc, Side, Skeleton, TestKind};
use crate::error::{Error, Result};

/// Recording-level metadata; also the CSV sidecar document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingMeta {
    pub fps: f64,
    pub test_kind: TestKind,
    pub label: Label,
    pub subject_id: String,
    pub device: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Format {
    Json,
    /// CSV rows carry only keypoints; metadata comes from the sidecar.
    Csv(RecordingMeta),
}

pub fn load_recording(source: impl Read, format: Format) -> Result<PoseRecording> {
    match format {
        Format::Json => {
            let doc: RecordingDoc = serde_json::from_reader(source)?;
            PoseRecording::try_from(doc)
        }
        Format::Csv(meta) => {
            let frames = read_csv_frames(source)?;
            PoseRecording::new(meta, frames)
        }
    }
}

pub fn save_recording(rec: &PoseRecording, sink: impl Write, format: &Format) -> Result<()> {
    match format {
        Format::Json => Ok(serde_json::to_writer(sink, rec)?),
        Format::Csv(_) => write_csv_frames(rec.frames(), sink),
    }
}

/// Path of the metadata sidecar for a CSV recording (`walk.csv` → `walk.meta.json`).
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Loads by extension: `.csv` reads the sidecar, anything else is JSON.
pub fn load_recording_path(path: &Path) -> Result<PoseRecording> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let reader = BufReader::new(File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
    if is_csv {
        let meta_path = sidecar_path(path);
        let meta_file =
            File::open(&meta_path).map_err(|e| Error::Io(format!("{}: {e}", meta_path.display())))?;
        let meta: RecordingMeta = serde_json::from_reader(BufReader::new(meta_file))?;
        load_recording(reader, Format::Csv(meta))
    } else {
        load_recording(reader, Format::Json)
    }
}

pub fn save_recording_path(rec: &PoseRecording, path: &Path) -> Result<()> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut out = BufWriter::new(File::create(path)?);
    if is_csv {
        save_recording(rec, &mut out, &Format::Csv(rec.meta()))?;
        let meta = BufWriter::new(File::create(sidecar_path(path))?);
        serde_json::to_writer_pretty(meta, &rec.meta())?;
    } else {
        save_recording(rec, &mut out, &Format::Json)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Group {
    Body2D,
    HandLeft,
    HandRight,
    Body3D,
}

const GROUPS: [Group; 4] = [Group::Body2D, Group::HandLeft, Group::HandRight, Group::Body3D];

impl Group {
    fn skeleton(self) -> Skeleton {
        match self {
            Group::Body2D => Skeleton::Body2D,
            Group::HandLeft | Group::HandRight => Skeleton::Hand2D,
            Group::Body3D => Skeleton::Body3D,
        }
    }

    fn present(self, frame: &Frame) -> bool {
        match self {
            Group::Body2D => frame.body2d.is_some(),
            Group::HandLeft => frame.hand2d_left.is_some(),
            Group::HandRight => frame.hand2d_right.is_some(),
            Group::Body3D => frame.body3d.is_some(),
        }
    }

    /// Column names `<group>_<side>_<joint>_<axis>`.
    fn columns(self) -> Vec<String> {
        let (prefix, hand_side) = match self {
            Group::Body2D => ("body2d", None),
            Group::HandLeft => ("hand2d", Some(Side::Left)),
            Group::HandRight => ("hand2d", Some(Side::Right)),
            Group::Body3D => ("body3d", None),
        };
        let axes: &[&str] = if self == Group::Body3D { &["x", "y", "z"] } else { &["x", "y", "conf"] };
        let mut cols = Vec::new();
        for (side, name) in self.skeleton().slots() {
            let side = hand_side.unwrap_or(side);
            for axis in axes {
                cols.push(format!("{prefix}_{side}_{name}_{axis}"));
            }
        }
        cols
    }

    fn values(self, frame: &Frame) -> Option<Vec<f64>> {
        let flat2 = |ks: &Vec<Keypoint2D>| ks.iter().flat_map(|k| [k.x, k.y, k.confidence]).collect();
        match self {
            Group::Body2D => frame.body2d.as_ref().map(flat2),
            Group::HandLeft => frame.hand2d_left.as_ref().map(flat2),
            Group::HandRight => frame.hand2d_right.as_ref().map(flat2),
            Group::Body3D => frame.body3d.as_ref().map(|ks| ks.iter().flat_map(|k| [k.x, k.y, k.z]).collect()),
        }
    }

    fn assign(self, frame: &mut Frame, values: &[f64]) {
        let to2 = || values.chunks(3).map(|c| Keypoint2D::new(c[0], c[1], c[2])).collect();
        match self {
            Group::Body2D => frame.body2d = Some(to2()),
            Group::HandLeft => frame.hand2d_left = Some(to2()),
            Group::HandRight => frame.hand2d_right = Some(to2()),
            Group::Body3D => {
                frame.body3d = Some(values.chunks(3).map(|c| Keypoint3D::new(c[0], c[1], c[2])).collect())
            }
        }
    }
}

fn write_csv_frames(frames: &[Frame], sink: impl Write) -> Result<()> {
    let groups: Vec<Group> = GROUPS.into_iter().filter(|g| frames.iter().any(|f| g.present(f))).collect();
    let mut writer = csv::Writer::from_writer(sink);
    let header: Vec<String> = groups.iter().flat_map(|g| g.columns()).collect();
    writer.write_record(&header)?;
    for frame in frames {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for g in &groups {
            match g.values(frame) {
                Some(vals) => row.extend(vals.iter().map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), g.columns().len())),
            }
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn read_csv_frames(source: impl Read) -> Result<Vec<Frame>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Parse("CSV header row is missing".into()));
    }
    let mut claimed = vec![false; header.len()];
    let mut layout: Vec<(Group, Vec<usize>)> = Vec::new();
    for g in GROUPS {
        let cols = g.columns();
        let idx: Vec<Option<usize>> = cols.iter().map(|c| header.iter().position(|h| h == c)).collect();
        let found = idx.iter().filter(|i| i.is_some()).count();
        if found == 0 {
            continue;
        }
        if found != cols.len() {
            let missing = cols.iter().zip(&idx).find(|(_, i)| i.is_none()).map(|(c, _)| c.as_str());
            return Err(Error::Schema(format!("incomplete keypoint group, missing column {}", missing.unwrap_or("?"))));
        }
        let idx: Vec<usize> = idx.into_iter().flatten().collect();
        for &i in &idx {
            claimed[i] = true;
        }
        layout.push((g, idx));
    }
    if let Some(i) = claimed.iter().position(|c| !c) {
        return Err(Error::Schema(format!("unknown column '{}'", header[i])));
    }

    let mut frames = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let mut frame = Frame::default();
        for (g, idx) in &layout {
            let cells: Vec<&str> = idx.iter().map(|&i| record.get(i).unwrap_or("").trim()).collect();
            if cells.iter().all(|c| c.is_empty()) {
                continue;
            }
            let values = cells
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {}: cannot parse '{c}' as a number", row_no + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            g.assign(&mut frame, &values);
        }
        frames.push(frame);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_FT: &str = r#"{
        "fps": 60, "test_kind": "FT", "label": "normal", "subject_id": "s01", "device": "phone",
        "frames": [FRAME, FRAME]
    }"#;

    fn minimal_ft_doc() -> String {
        let k2 = |n: usize| format!("[{}]", vec!["[0.1, 0.2, 0.9]"; n].join(","));
        let frame = format!(
            r#"{{"body2d": {}, "hand2d_left": {}, "hand2d_right": {}}}"#,
            k2(25),
            k2(21),
            k2(21)
        );
        MINIMAL_FT.replace("FRAME", &frame)
    }

    #[test]
    fn minimal_json_document_loads() {
        let rec = load_recording(minimal_ft_doc().as_bytes(), Format::Json).unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(rec.test_kind(), TestKind::FingerTap);
        assert_eq!(rec.fps(), 60.0);
    }

    #[test]
    fn missing_hands_is_schema_error() {
        let body = format!("[{}]", vec!["[0.1, 0.2, 0.9]"; 25].join(","));
        let doc = format!(
            r#"{{"fps": 60, "test_kind": "FT", "label": "normal", "subject_id": "s", "device": "d",
                "frames": [{{"body2d": {body}}}]}}"#
        );
        let err = load_recording(doc.as_bytes(), Format::Json).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("requires hand2d_left")), "{err}");
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(load_recording(&b"{ not json"[..], Format::Json), Err(Error::Parse(_))));
    }

    #[test]
    fn csv_round_trip_with_gaps() {
        let rec = load_recording(minimal_ft_doc().as_bytes(), Format::Json).unwrap();
        let mut frames = rec.frames().to_vec();
        frames[1].body3d = None;
        frames[0].body3d = Some(vec![Keypoint3D::new(0.1, -0.25, 1e-17); 17]);
        let rec = rec.with_frames(frames).unwrap();
        let mut buf = Vec::new();
        save_recording(&rec, &mut buf, &Format::Csv(rec.meta())).unwrap();
        let back = load_recording(buf.as_slice(), Format::Csv(rec.meta())).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn csv_rejects_unknown_and_partial_columns() {
        let csv = "body2d_center_pelvis_x,bogus\n1,2\n";
        assert!(read_csv_frames(csv.as_bytes()).is_err());
        let csv = "unknown_col\n1\n";
        assert!(matches!(read_csv_frames(csv.as_bytes()), Err(Error::Schema(_))));
    }
}
