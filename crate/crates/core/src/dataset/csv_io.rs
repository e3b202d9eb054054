use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, DeviceProfile, FeatureKind, Instance, Label, Value};
use crate::error::{Error, Result};

const BOOLEAN_PAIRS: [(&str, &str); 3] = [("false", "true"), ("off", "on"), ("0", "1")];

/// Loads a ToN_IoT-style CSV (`<features...>,label,type`) against `profile`.
pub fn load_csv(path: impl AsRef<Path>, profile: &DeviceProfile) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, profile)
}

pub fn read_csv<R: Read>(reader: R, profile: &DeviceProfile) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        let want = header_key(name);
        headers
            .iter()
            .position(|h| {
                let h = header_key(h);
                h == want || aliases(name).contains(&h.as_str())
            })
            .ok_or_else(|| Error::schema(format!("missing column `{name}`")))
    };
    let feature_cols = profile
        .features
        .iter()
        .map(|f| column(&f.name))
        .collect::<Result<Vec<_>>>()?;
    let label_col = column("label")?;
    let type_col = column("type")?;

    let records = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    let mut profile = profile.clone();
    let classes = profile.classes();

    let mut columns: Vec<Vec<Value>> = Vec::with_capacity(profile.features.len());
    for (feature, &col) in profile.features.iter_mut().zip(&feature_cols) {
        let cells = records.iter().enumerate().map(|(i, r)| {
            let cell = r.get(col).unwrap_or("");
            if cell.is_empty() {
                Err(Error::Row {
                    row: i + 1,
                    column: feature.name.clone(),
                    message: "blank cell".into(),
                })
            } else {
                Ok(cell)
            }
        });
        let cells = cells.collect::<Result<Vec<_>>>()?;
        let values = match feature.kind {
            FeatureKind::Numeric => cells
                .iter()
                .enumerate()
                .map(|(i, c)| parse_number(c, i + 1, &feature.name).map(Value::Num))
                .collect::<Result<Vec<_>>>()?,
            FeatureKind::Timestamp => cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    parse_time(c).map(Value::Num).ok_or_else(|| Error::Row {
                        row: i + 1,
                        column: feature.name.clone(),
                        message: format!("unparseable time `{c}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            FeatureKind::Datestamp => cells.iter().map(|c| Value::Cat(feature.intern(c))).collect(),
            FeatureKind::Nominal => {
                let boolean = !cells.is_empty()
                    && cells.iter().all(|c| {
                        let c = c.to_ascii_lowercase();
                        BOOLEAN_PAIRS.iter().any(|(a, b)| c == *a || c == *b)
                    });
                if boolean {
                    let values: Vec<Value> = cells
                        .iter()
                        .map(|c| Value::Cat(feature.intern(&c.to_ascii_lowercase())))
                        .collect();
                    for (a, b) in BOOLEAN_PAIRS {
                        if feature.category_index(a).is_some() || feature.category_index(b).is_some() {
                            feature.intern(a);
                            feature.intern(b);
                        }
                    }
                    values
                } else {
                    cells.iter().map(|c| Value::Cat(feature.intern(c))).collect()
                }
            }
        };
        columns.push(values);
    }

    let mut instances = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let row = i + 1;
        let label = match record.get(label_col).unwrap_or("").to_ascii_lowercase().as_str() {
            "0" | "normal" => Label::Normal,
            "1" | "anomaly" => Label::Anomaly,
            other => {
                return Err(Error::Row {
                    row,
                    column: "label".into(),
                    message: format!("expected 0 or 1, found `{other}`"),
                })
            }
        };
        let attack_type = record.get(type_col).unwrap_or("").to_ascii_lowercase();
        if !classes.contains(&attack_type) {
            return Err(Error::UnknownAttackType {
                row,
                found: attack_type,
                allowed: classes.clone(),
            });
        }
        let values = columns.iter().map(|col| col[i]).collect();
        instances.push(Instance {
            values,
            label,
            attack_type,
        });
    }
    Dataset::new(profile, instances)
}

/// Writes `data` in the same dialect `load_csv` reads.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(file, data)
}

pub fn write_csv_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let profile = data.profile();
    let mut header: Vec<&str> = profile.features.iter().map(|f| f.name.as_str()).collect();
    header.extend(["label", "type"]);
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for inst in data.instances() {
        row.clear();
        for (v, f) in inst.values.iter().zip(&profile.features) {
            row.push(match (*v, f.kind) {
                (Value::Num(x), FeatureKind::Timestamp) => format_time(x),
                (Value::Num(x), _) => x.to_string(),
                (Value::Cat(c), _) => f.categories[c].clone(),
            });
        }
        row.push(if inst.label == Label::Normal { "0" } else { "1" }.into());
        row.push(inst.attack_type.clone());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

fn header_key(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '_' | ' ' | '-'))
        .flat_map(char::to_lowercase)
        .collect()
}

fn aliases(name: &str) -> &'static [&'static str] {
    match name {
        "current_temp" => &["currenttemperature"],
        _ => &[],
    }
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Row {
            row,
            column: column.to_string(),
            message: format!("unparseable number `{cell}`"),
        }),
    }
}

/// Seconds since midnight from `H:MM:SS[.fff]`, `H:MM` or a plain number.
pub(crate) fn parse_time(cell: &str) -> Option<f64> {
    if !cell.contains(':') {
        return cell.parse::<f64>().ok().filter(|x| x.is_finite() && *x >= 0.0);
    }
    let parts: Vec<&str> = cell.split(':').collect();
    if parts.len() > 3 {
        return None;
    }
    let h: u32 = parts[0].parse().ok()?;
    let m: u32 = parts[1].parse().ok()?;
    let s: f64 = match parts.get(2) {
        Some(s) => s.parse().ok()?,
        None => 0.0,
    };
    if h > 24 || m > 59 || !(0.0..60.0).contains(&s) {
        return None;
    }
    Some(f64::from(h * 3600 + m * 60) + s)
}

pub(crate) fn format_time(seconds: f64) -> String {
    if seconds.fract() == 0.0 && (0.0..86400.0).contains(&seconds) {
        let s = seconds as u32;
        format!("{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60)
    } else {
        seconds.to_string()
    }
}
