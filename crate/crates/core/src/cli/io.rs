//! File formats: binary PPM images, raw float grids with JSON sidecars, network JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::netcore::{Complex, Network};
use crate::raster::{EscapeRaster, GridSpec, BOUNDED};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Palette {
    #[default]
    Grayscale,
    Banded,
}

const BANDS: [[u8; 3]; 6] = [[66, 30, 15], [25, 7, 26], [9, 1, 47], [4, 4, 73], [12, 44, 138], [134, 181, 229]];

fn color(palette: Palette, escape_iter: i32, max_iter: u32) -> [u8; 3] {
    if escape_iter == BOUNDED {
        return [0, 0, 0];
    }
    match palette {
        Palette::Grayscale => {
            let t = escape_iter as f64 / max_iter as f64;
            let v = (255.0 * (1.0 - t)).round().clamp(0.0, 255.0) as u8;
            [v, v, v]
        }
        Palette::Banded => BANDS[escape_iter as usize % BANDS.len()],
    }
}

/// PPM (P6) bytes of an escape raster.
pub fn ppm_bytes(r: &EscapeRaster, palette: Palette) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", r.grid.width, r.grid.height);
    let mut out = Vec::with_capacity(header.len() + 3 * r.data.len());
    out.extend_from_slice(header.as_bytes());
    for &v in &r.data {
        out.extend_from_slice(&color(palette, v, r.max_iter));
    }
    out
}

pub fn write_ppm(r: &EscapeRaster, palette: Palette, path: &Path) -> Result<()> {
    fs::write(path, ppm_bytes(r, palette))?;
    Ok(())
}

/// Metadata stored next to a raw float grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub format: String,
    pub grid: GridSpec,
    /// What each value means, e.g. `escape_iter` or `fraction`.
    pub quantity: String,
    pub job: Value,
}

pub const GRID_FORMAT: &str = "f64-le-row-major";

/// Writes `data` as little-endian f64, row 0 first, and its JSON sidecar.
pub fn write_float_grid(path: &Path, sidecar_path: &Path, grid: &GridSpec, data: &[f64], quantity: &str, job: &Value) -> Result<()> {
    if data.len() != grid.len() {
        return Err(Error::InvalidArgument(format!("grid has {} pixels, data {}", grid.len(), data.len())));
    }
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    for v in data {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    let sidecar = GridSidecar { format: GRID_FORMAT.into(), grid: *grid, quantity: quantity.into(), job: job.clone() };
    write_json(sidecar_path, &serde_json::to_value(&sidecar)?)
}

pub fn read_float_grid(path: &Path, sidecar_path: &Path) -> Result<(GridSidecar, Vec<f64>)> {
    let sidecar: GridSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path)?)?;
    if sidecar.format != GRID_FORMAT {
        return Err(Error::Schema { path: "format".into(), message: format!("unsupported grid format {:?}", sidecar.format) });
    }
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * sidecar.grid.len() {
        return Err(Error::Schema {
            path: "grid".into(),
            message: format!("{} bytes on disk, {} expected", bytes.len(), 8 * sidecar.grid.len()),
        });
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((sidecar, data))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { path: path.into(), message: message.into() }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| schema(path, "number out of range")),
        Value::Array(_) => Err(schema(path, "complex weights are not supported; expected a real number")),
        _ => Err(schema(path, "expected a number")),
    }
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn pair(v: &Value, path: &str) -> Result<Complex> {
    let a = array(v, path)?;
    if a.len() != 2 {
        return Err(schema(path, format!("expected [re, im], got {} entries", a.len())));
    }
    Ok(Complex::new(number(&a[0], &format!("{path}/0"))?, number(&a[1], &format!("{path}/1"))?))
}

fn matrix<T>(v: &Value, name: &str, n: usize, cell: impl Fn(&Value, &str) -> Result<T>) -> Result<Vec<Vec<T>>> {
    let rows = array(v, name)?;
    if rows.len() != n {
        return Err(schema(name, format!("expected {n} rows, got {}", rows.len())));
    }
    rows.iter()
        .enumerate()
        .map(|(j, row)| {
            let path = format!("{name}/{j}");
            let row = array(row, &path)?;
            if row.len() != n {
                return Err(schema(&path, format!("expected {n} entries, got {}", row.len())));
            }
            row.iter().enumerate().map(|(k, x)| cell(x, &format!("{path}/{k}"))).collect()
        })
        .collect()
}

/// Parses `{"n", "adjacency", "weights", "c"}`; `c` is either one `[re, im]` pair for
/// every node or a list of `n` pairs.
pub fn network_from_json(v: &Value) -> Result<Network> {
    let obj = v.as_object().ok_or_else(|| schema("", "expected a JSON object"))?;
    let field = |name: &str| obj.get(name).ok_or_else(|| schema(name, "missing field"));
    let n = field("n")?.as_u64().filter(|&n| n > 0).ok_or_else(|| schema("n", "expected a positive integer"))? as usize;
    let adjacency = matrix(field("adjacency")?, "adjacency", n, |x, path| match x.as_u64() {
        Some(b @ (0 | 1)) => Ok(b as u8),
        _ => Err(schema(path, "expected 0 or 1")),
    })?;
    let weights = matrix(field("weights")?, "weights", n, number)?;
    let c = field("c")?;
    let params = match array(c, "c")?.first() {
        Some(Value::Array(_)) => {
            let list = array(c, "c")?;
            if list.len() != n {
                return Err(schema("c", format!("expected {n} parameters, got {}", list.len())));
            }
            list.iter().enumerate().map(|(j, p)| pair(p, &format!("c/{j}"))).collect::<Result<Vec<_>>>()?
        }
        _ => vec![pair(c, "c")?; n],
    };
    Network::new(adjacency, weights, params).map_err(|e| match e {
        Error::InvalidArgument(m) => schema("", m),
        other => other,
    })
}

pub fn network_to_json(net: &Network) -> Value {
    json!({
        "n": net.n(),
        "adjacency": net.adjacency_rows(),
        "weights": net.weight_rows(),
        "c": net.params().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
    })
}

pub fn read_network_json(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path)?;
    network_from_json(&serde_json::from_str(&text)?)
}

pub fn write_network_json(net: &Network, path: &Path) -> Result<()> {
    write_json(path, &network_to_json(net))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;

    fn raster(data: Vec<i32>, k: u32) -> EscapeRaster {
        let n = data.len();
        EscapeRaster { grid: GridSpec::new(0.0, 1.0, 0.0, 1.0, n, 1).unwrap(), data, max_iter: k, escape_radius: 20.0 }
    }

    #[test]
    fn grayscale_channels() {
        let img = ppm_bytes(&raster(vec![-1, 50, 1, 25], 50), Palette::Grayscale);
        let header = b"P6\n4 1\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert_eq!(&img[header.len()..], &[0, 0, 0, 0, 0, 0, 250, 250, 250, 128, 128, 128]);
        let dark = ppm_bytes(&raster(vec![-1; 6], 50), Palette::Banded);
        assert!(dark[dark.len() - 18..].iter().all(|&b| b == 0));
    }

    #[test]
    fn network_round_trip() {
        let net = FamilySpec::SelfDrive { a: -1.0, b: -1.0 }.build_with_c(Complex::new(-1.0, 0.25)).unwrap();
        assert_eq!(network_from_json(&network_to_json(&net)).unwrap(), net);
    }

    #[test]
    fn equi_parameter_shorthand() {
        let v = json!({"n": 2, "adjacency": [[1, 0], [1, 1]], "weights": [[1, 0], [0.5, 1]], "c": [-1, 0.5]});
        let net = network_from_json(&v).unwrap();
        assert_eq!(net.params(), &[Complex::new(-1.0, 0.5); 2]);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad_row =
            json!({"n": 3, "adjacency": [[1, 0, 0], [1, 1, 0], [1, 1]], "weights": [[1, 0, 0], [1, 1, 0], [1, 1, 1]], "c": [0, 0]});
        let err = network_from_json(&bad_row).unwrap_err();
        assert!(matches!(&err, Error::Schema { path, .. } if path == "adjacency/2"), "{err}");

        let complex_weight = json!({"n": 1, "adjacency": [[1]], "weights": [[[1, 0]]], "c": [0, 0]});
        let err = network_from_json(&complex_weight).unwrap_err();
        assert!(matches!(&err, Error::Schema { path, .. } if path == "weights/0/0"), "{err}");

        let missing = json!({"n": 1, "adjacency": [[1]], "weights": [[1]]});
        assert!(matches!(network_from_json(&missing).unwrap_err(), Error::Schema { path, .. } if path == "c"));
        let short_c = json!({"n": 2, "adjacency": [[1, 0], [0, 1]], "weights": [[1, 0], [0, 1]], "c": [[0, 0]]});
        assert!(matches!(network_from_json(&short_c).unwrap_err(), Error::Schema { path, .. } if path == "c"));
    }

    #[test]
    fn float_grid_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(-1.0, 1.0, -0.5, 0.5, 3, 2).unwrap();
        let data = vec![0.1, -1.0, f64::MIN_POSITIVE, 1.0 / 3.0, 7.0, -0.0];
        let (p, s) = (dir.path().join("g.grid"), dir.path().join("g.json"));
        write_float_grid(&p, &s, &grid, &data, "fraction", &json!({"seed": 1})).unwrap();
        let (meta, back) = read_float_grid(&p, &s).unwrap();
        assert_eq!(meta.grid, grid);
        assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
