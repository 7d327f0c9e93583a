//! Reading corpora and reading/writing curves, fits, schedules and grids.

use std::fs;
use std::path::{Path, PathBuf};

use midecay_core::estimator::{CurveMeta, DroppedLag};
use midecay_core::schedule::{MaxDilation, GRID_FORMAT_VERSION};
use midecay_core::{
    ClassifiedFit, Corpus, CurvePoint, DecayClass, DecayCurve, DilationSchedule, EstimatorConfig,
    GridSearchSpec, LagGrid, TokenMode,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idx::IdxImages;

pub const CURVE_HEADER: [&str; 3] = ["lag", "mi_nats", "pair_count"];

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_idx(path: &Path) -> Result<IdxImages> {
    IdxImages::parse(&read_bytes(path)?).map_err(|source| Error::Idx {
        path: path.into(),
        source,
    })
}

pub fn write_idx(path: &Path, images: &IdxImages) -> Result<()> {
    write_bytes(path, &images.to_bytes())
}

pub fn corpus_from_idx(images: &IdxImages, source: impl Into<String>) -> Result<Corpus> {
    Ok(Corpus::from_images(
        &images.pixels,
        images.image_len(),
        source,
    )?)
}

/// Loads a corpus: IDX images for `Pixel`, otherwise a text file.
pub fn load_corpus(path: &Path, mode: TokenMode) -> Result<Corpus> {
    let source = path.display().to_string();
    match mode {
        TokenMode::Pixel => {
            let images = read_idx(path)?;
            let meta = format!(
                "{source} ({} images of {}x{})",
                images.count, images.rows, images.cols
            );
            corpus_from_idx(&images, meta)
        }
        _ => Ok(Corpus::from_text(&read_bytes(path)?, mode, source)?),
    }
}

/// Everything needed to rerun `analyze`, stored next to the curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSidecar {
    pub format_version: u32,
    pub meta: CurveMeta,
    pub max_lag: usize,
    pub lag_grid: LagGrid,
    pub dropped: Vec<DroppedLag>,
    pub total_symbols: usize,
    pub max_sequence_len: usize,
}

impl CurveSidecar {
    pub fn new(curve: &DecayCurve, corpus: &Corpus, grid: &LagGrid) -> Self {
        CurveSidecar {
            format_version: GRID_FORMAT_VERSION,
            meta: curve.meta().clone(),
            max_lag: grid.max_lag(),
            lag_grid: grid.clone(),
            dropped: curve.dropped().to_vec(),
            total_symbols: corpus.total_symbols(),
            max_sequence_len: corpus.max_sequence_len(),
        }
    }

    pub fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            bias_correction: self.meta.bias_correction,
            min_pair_count: self.meta.min_pair_count,
        }
    }
}

/// `curve.csv` -> `curve.csv.meta.json`.
pub fn sidecar_path(curve_path: &Path) -> PathBuf {
    let mut s = curve_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// CSV text of a curve. MI is written with 17 significant digits, which
/// round-trips every `f64` exactly.
pub fn curve_csv(curve: &DecayCurve) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER).expect("writing to memory");
    for p in curve.points() {
        w.write_record([
            p.lag.to_string(),
            format!("{:.16e}", p.mi),
            p.pair_count.to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii")
}

#[derive(Deserialize)]
struct CurveRow {
    lag: usize,
    mi_nats: f64,
    pair_count: u64,
}

pub fn parse_curve_csv(text: &str, path: &Path) -> Result<Vec<CurvePoint>> {
    let bad = |message: String| Error::Csv {
        path: path.into(),
        message,
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().map(str::trim).ne(CURVE_HEADER) {
        return Err(bad(format!(
            "expected header `{}`, found `{}`",
            CURVE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize::<CurveRow>()
        .map(|row| {
            let row = row.map_err(|e| bad(e.to_string()))?;
            Ok(CurvePoint {
                lag: row.lag,
                mi: row.mi_nats,
                pair_count: row.pair_count,
            })
        })
        .collect()
}

pub fn write_curve(path: &Path, curve: &DecayCurve, sidecar: &CurveSidecar) -> Result<()> {
    write_bytes(path, curve_csv(curve).as_bytes())?;
    write_json(&sidecar_path(path), sidecar)
}

/// Reads a curve CSV. Metadata comes from the sidecar when one exists.
pub fn read_curve(path: &Path) -> Result<DecayCurve> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let points = parse_curve_csv(&text, path)?;
    let side = sidecar_path(path);
    let (meta, dropped) = if side.exists() {
        let s: CurveSidecar = read_json(&side)?;
        (s.meta, s.dropped)
    } else {
        let mut meta = CurveMeta::unknown();
        meta.source = path.display().to_string();
        (meta, Vec::new())
    };
    Ok(DecayCurve::with_dropped(points, dropped, meta)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

/// Fit output: the classified fit plus its headline numbers at top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub format_version: u32,
    pub break_d: Option<usize>,
    pub period: Option<usize>,
    #[serde(flatten)]
    pub fit: ClassifiedFit,
}

impl FitDocument {
    pub fn new(fit: ClassifiedFit) -> Self {
        FitDocument {
            format_version: GRID_FORMAT_VERSION,
            break_d: fit.break_d(),
            period: fit.period(),
            fit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub format_version: u32,
    pub dataset_meta: String,
    pub decay_class: DecayClass,
    pub max_dilation: MaxDilation,
    pub n_layers: usize,
    pub schedule: DilationSchedule,
}

pub fn read_fit(path: &Path) -> Result<ClassifiedFit> {
    Ok(read_json::<FitDocument>(path)?.fit)
}

pub fn read_grid(path: &Path) -> Result<GridSearchSpec> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let curve = DecayCurve::from_samples([
            (1, 0.668_123_456_789_012_3),
            (2, 1e-300),
            (5, 0.0),
            (9, 0.1 + 0.2),
        ])
        .unwrap();
        let text = curve_csv(&curve);
        assert!(text.starts_with("lag,mi_nats,pair_count\n1,"));
        let back = parse_curve_csv(&text, Path::new("x.csv")).unwrap();
        assert_eq!(back, curve.points());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let err = parse_curve_csv("lag,mi,count\n1,0.5,3\n", Path::new("x.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("expected header"));
    }

    #[test]
    fn csv_rejects_garbage_values() {
        assert!(parse_curve_csv("lag,mi_nats,pair_count\n1,abc,3\n", Path::new("x")).is_err());
        assert!(parse_curve_csv("lag,mi_nats,pair_count\n-1,0.5,3\n", Path::new("x")).is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/ptb.csv")),
            PathBuf::from("out/ptb.csv.meta.json")
        );
    }
}
