//! Serialization: complex numbers as `[re, im]` pairs, CSV export of grid
//! functions, and deterministic JSON artifacts (stable key order, floats
//! rendered with 17 significant digits).

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Result, SusyError};
use crate::grid::{Grid, GridFunction};

/// Serde adapter: a complex scalar as a two-element `[re, im]` array.
pub mod complex_array {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// Serde adapter: a vector of complex scalars as `[[re, im], ...]`.
pub mod complex_array_vec {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Parse a complex scalar from "re+imi" notation: `"1+0.5i"`, `"0.4i"`,
/// `"-2"`, `"1e-3-2.5i"`. Whitespace is ignored.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(SusyError::InvalidInput("empty complex literal".into()));
    }
    if let Ok(x) = t.parse::<f64>() {
        return Ok(C64::new(x, 0.0));
    }
    if !t.ends_with('i') {
        return Err(SusyError::InvalidInput(format!("cannot parse complex literal '{s}'")));
    }
    let body = &t[..t.len() - 1];
    // Split at the last +/- that is not an exponent sign and not leading.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            split = Some(i);
            break;
        }
    }
    match split {
        Some(i) => {
            let re: f64 = body[..i]
                .parse()
                .map_err(|_| SusyError::InvalidInput(format!("bad real part in '{s}'")))?;
            let im_str = &body[i..];
            let im: f64 = if im_str == "+" {
                1.0
            } else if im_str == "-" {
                -1.0
            } else {
                im_str
                    .parse()
                    .map_err(|_| SusyError::InvalidInput(format!("bad imaginary part in '{s}'")))?
            };
            Ok(C64::new(re, im))
        }
        None => {
            let im: f64 = if body.is_empty() {
                1.0
            } else if body == "-" {
                -1.0
            } else {
                body.parse()
                    .map_err(|_| SusyError::InvalidInput(format!("bad imaginary part in '{s}'")))?
            };
            Ok(C64::new(0.0, im))
        }
    }
}

/// Render a float with 17 significant digits (exact f64 round trip).
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        // Avoid the "-0" wrinkle in artifacts.
        return "0.0".to_string();
    }
    format!("{:.16e}", v)
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }
}

/// Serialize to JSON with fixed field order (struct order) and floats in
/// 17-significant-digit scientific notation. Identical inputs produce
/// byte-identical output.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let s = to_json_string(value)?;
    std::fs::write(path, s.as_bytes())?;
    Ok(())
}

/// CSV layout for grid functions: header then one row per node,
/// `x,re_f,im_f,re_df,im_df`, LF line endings.
pub fn write_grid_function_csv(f: &GridFunction, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(f.n() * 64);
    out.push_str("x,re_f,im_f,re_df,im_df\n");
    for (i, x) in f.grid.nodes().enumerate() {
        let v = f.values[i];
        let d = f.derivs[i];
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_f64(x),
            format_f64_or_nan(v.re),
            format_f64_or_nan(v.im),
            format_f64_or_nan(d.re),
            format_f64_or_nan(d.im),
        ));
    }
    std::fs::write(path, out.as_bytes())?;
    Ok(())
}

fn format_f64_or_nan(v: f64) -> String {
    if v.is_finite() {
        format_f64(v)
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Read a grid function back from the CSV layout written by
/// [`write_grid_function_csv`]. The abscissas must be uniform, ascending,
/// and odd in count.
pub fn read_grid_function_csv(path: &Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut values = Vec::new();
    let mut derivs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(SusyError::InvalidInput(format!(
                "{}: line {} has {} columns, expected 5",
                path.display(),
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            match s.trim() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                t => t.parse::<f64>().map_err(|_| {
                    SusyError::InvalidInput(format!("bad float '{t}' in {}", path.display()))
                }),
            }
        };
        xs.push(parse(cols[0])?);
        values.push(C64::new(parse(cols[1])?, parse(cols[2])?));
        derivs.push(C64::new(parse(cols[3])?, parse(cols[4])?));
    }
    if xs.len() < 3 {
        return Err(SusyError::InvalidInput("csv holds fewer than 3 samples".into()));
    }
    let n = xs.len();
    let grid = Grid::new(xs[0], xs[n - 1], n)?;
    let h = grid.spacing();
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.node(i)).abs() > 1e-9 * (1.0 + h) {
            return Err(SusyError::InvalidInput(format!(
                "csv abscissas are not uniform at row {i}: {x} vs {}",
                grid.node(i)
            )));
        }
    }
    GridFunction::new(grid, values, derivs)
}

/// Full JSON record of a grid function (`{grid, values, derivs}`).
#[derive(Serialize, serde::Deserialize)]
pub struct GridFunctionRecord {
    pub grid: Grid,
    #[serde(with = "complex_array_vec")]
    pub values: Vec<C64>,
    #[serde(with = "complex_array_vec")]
    pub derivs: Vec<C64>,
}

impl From<&GridFunction> for GridFunctionRecord {
    fn from(f: &GridFunction) -> Self {
        GridFunctionRecord { grid: f.grid, values: f.values.clone(), derivs: f.derivs.clone() }
    }
}

impl TryFrom<GridFunctionRecord> for GridFunction {
    type Error = SusyError;
    fn try_from(r: GridFunctionRecord) -> Result<GridFunction> {
        GridFunction::new(r.grid, r.values, r.derivs)
    }
}

/// Eigenvalue list as CSV (`re,im,residual`).
pub fn write_eigenvalues_csv(
    eigenvalues: &[C64],
    residuals: &[f64],
    path: &Path,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("re,im,residual\n");
    for (i, ev) in eigenvalues.iter().enumerate() {
        let r = residuals.get(i).copied().unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{},{},{}\n",
            format_f64(ev.re),
            format_f64(ev.im),
            format_f64_or_nan(r)
        ));
    }
    std::fs::write(path, out.as_bytes())?;
    Ok(())
}
