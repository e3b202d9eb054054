//! Device schemas and the per-device class-count tables of the ToN_IoT
//! Train_Test and Processed files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attack-type string used for benign rows.
pub const NORMAL: &str = "normal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Nominal,
    /// Calendar date; handled as a nominal category.
    Datestamp,
    /// Time of day; converted to numeric seconds since midnight.
    Timestamp,
}

impl FeatureKind {
    /// True for kinds that live in the numeric value space.
    pub fn is_numeric(self) -> bool {
        matches!(self, FeatureKind::Numeric | FeatureKind::Timestamp)
    }

    pub fn is_categorical(self) -> bool {
        !self.is_numeric()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    /// Ordered category set; only meaningful for categorical kinds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl FeatureSchema {
    pub fn new(name: &str, kind: FeatureKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
            categories: Vec::new(),
        }
    }

    pub fn nominal(name: &str, categories: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Nominal,
            categories: categories.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }

    /// Index of `value`, appending it to the category set when new.
    pub fn intern(&mut self, value: &str) -> usize {
        match self.category_index(value) {
            Some(i) => i,
            None => {
                self.categories.push(value.to_string());
                self.categories.len() - 1
            }
        }
    }
}

/// The seven ToN_IoT telemetry devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Device {
    Fridge,
    GarageDoor,
    GpsTracker,
    Modbus,
    MotionLight,
    Thermostat,
    Weather,
}

impl Device {
    pub const ALL: [Device; 7] = [
        Device::Fridge,
        Device::GarageDoor,
        Device::GpsTracker,
        Device::Modbus,
        Device::MotionLight,
        Device::Thermostat,
        Device::Weather,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Device::Fridge => "fridge",
            Device::GarageDoor => "garage_door",
            Device::GpsTracker => "gps_tracker",
            Device::Modbus => "modbus",
            Device::MotionLight => "motion_light",
            Device::Thermostat => "thermostat",
            Device::Weather => "weather",
        }
    }

    /// Human-readable name used in report titles.
    pub fn title(self) -> &'static str {
        match self {
            Device::Fridge => "Fridge",
            Device::GarageDoor => "Garage Door",
            Device::GpsTracker => "GPS Tracker",
            Device::Modbus => "Modbus",
            Device::MotionLight => "Motion Light",
            Device::Thermostat => "Thermostat",
            Device::Weather => "Weather",
        }
    }

    pub fn profile(self) -> DeviceProfile {
        use FeatureKind::*;
        let date = FeatureSchema::new("date", Datestamp);
        let time = FeatureSchema::new("time", Timestamp);
        let num = |n: &str| FeatureSchema::new(n, Numeric);
        let nominal = |n: &str| FeatureSchema::new(n, Nominal);
        let features = match self {
            Device::Fridge => vec![date, time, num("fridge_temperature"), nominal("temp_condition")],
            Device::GarageDoor => vec![date, time, nominal("door_state"), nominal("sphone_signal")],
            Device::GpsTracker => vec![date, time, num("latitude"), num("longitude")],
            Device::Modbus => vec![
                date,
                time,
                num("FC1_Read_Input_Register"),
                num("FC2_Read_Discrete_Value"),
                num("FC3_Read_Holding_Register"),
                num("FC4_Read_Coil"),
            ],
            Device::MotionLight => vec![date, time, num("motion_status"), nominal("light_status")],
            Device::Thermostat => vec![date, time, num("current_temp"), nominal("thermostat_status")],
            Device::Weather => vec![date, time, num("temperature"), num("pressure"), num("humidity")],
        };
        let attack_types = self
            .class_counts(Scale::TrainTest)
            .into_iter()
            .map(|(c, _)| c.to_string())
            .filter(|c| c != NORMAL)
            .collect();
        DeviceProfile {
            device: self.name().to_string(),
            features,
            attack_types,
        }
    }

    /// Per-class row counts of the ToN_IoT file at the given scale, normal first.
    pub fn class_counts(self, scale: Scale) -> Vec<(&'static str, usize)> {
        match (self, scale) {
            (Device::Fridge, Scale::TrainTest) => vec![
                ("normal", 35000),
                ("password", 5000),
                ("xss", 2042),
                ("ddos", 5000),
                ("ransomware", 2902),
                ("injection", 5000),
                ("backdoor", 5000),
            ],
            (Device::GarageDoor, Scale::TrainTest) => vec![
                ("normal", 35000),
                ("password", 5000),
                ("xss", 1156),
                ("ddos", 5000),
                ("ransomware", 2902),
                ("injection", 5000),
                ("backdoor", 5000),
                ("scanning", 529),
            ],
            (Device::GpsTracker, Scale::TrainTest) => vec![
                ("normal", 35000),
                ("password", 5000),
                ("xss", 577),
                ("ddos", 5000),
                ("ransomware", 2833),
                ("injection", 5000),
                ("backdoor", 5000),
                ("scanning", 550),
            ],
            (Device::Modbus, Scale::TrainTest) => vec![
                ("normal", 35000),
                ("password", 5000),
                ("xss", 577),
                ("injection", 5000),
                ("backdoor", 5000),
                ("scanning", 529),
            ],
            (Device::MotionLight, Scale::TrainTest) => vec![
                ("normal", 35000),
                ("password", 5000),
                ("xss", 449),
                ("ddos", 5000),
                ("ransomware", 2264),
                ("injection", 5000),
                ("backdoor", 5000),
                ("scanning", 1775),
            ],
            (Device::Thermostat, Scale::TrainTest) => vec![
                ("normal", 35000),
                ("password", 5000),
                ("xss", 449),
                ("ransomware", 2264),
                ("injection", 5000),
                ("backdoor", 5000),
                ("scanning", 61),
            ],
            (Device::Weather, Scale::TrainTest) => vec![
                ("normal", 35000),
                ("password", 5000),
                ("xss", 866),
                ("ddos", 5000),
                ("ransomware", 2865),
                ("injection", 5000),
                ("backdoor", 5000),
                ("scanning", 529),
            ],
            (Device::Fridge, Scale::Processed) => vec![
                ("normal", 206758),
                ("password", 28425),
                ("xss", 2042),
                ("ddos", 10233),
                ("ransomware", 2902),
                ("injection", 7079),
                ("backdoor", 35568),
            ],
            (Device::GarageDoor, Scale::Processed) => vec![
                ("normal", 25807),
                ("password", 16617),
                ("ddos", 10230),
                ("injection", 6331),
                ("backdoor", 30230),
                ("scanning", 529),
            ],
            (Device::GpsTracker, Scale::Processed) => vec![
                ("normal", 140488),
                ("password", 25176),
                ("xss", 577),
                ("ddos", 10226),
                ("ransomware", 2833),
                ("injection", 6904),
                ("backdoor", 35571),
                ("scanning", 550),
            ],
            (Device::Modbus, Scale::Processed) => vec![
                ("normal", 133839),
                ("password", 18815),
                ("xss", 498),
                ("injection", 5186),
                ("backdoor", 40005),
                ("scanning", 529),
            ],
            (Device::MotionLight, Scale::Processed) => vec![
                ("normal", 178591),
                ("password", 17521),
                ("xss", 449),
                ("ddos", 8121),
                ("ransomware", 2264),
                ("injection", 5595),
                ("backdoor", 28209),
                ("scanning", 1775),
            ],
            (Device::Thermostat, Scale::Processed) => vec![
                ("normal", 129563),
                ("password", 8435),
                ("xss", 449),
                ("ransomware", 2264),
                ("injection", 9498),
                ("backdoor", 35568),
                ("scanning", 61),
            ],
            (Device::Weather, Scale::Processed) => vec![
                ("normal", 160529),
                ("password", 25715),
                ("xss", 866),
                ("ddos", 15182),
                ("ransomware", 2865),
                ("injection", 9726),
                ("backdoor", 35641),
                ("scanning", 529),
            ],
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Device {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        Ok(match key.as_str() {
            "fridge" => Device::Fridge,
            "garagedoor" => Device::GarageDoor,
            "gpstracker" | "gps" => Device::GpsTracker,
            "modbus" => Device::Modbus,
            "motionlight" => Device::MotionLight,
            "thermostat" => Device::Thermostat,
            "weather" | "weathersensor" => Device::Weather,
            _ => return Err(Error::invalid(format!("unknown device `{s}`"))),
        })
    }
}

/// Which family of ToN_IoT files a class-count table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    TrainTest,
    Processed,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "train_test" | "traintest" => Ok(Scale::TrainTest),
            "processed" => Ok(Scale::Processed),
            _ => Err(Error::invalid(format!("unknown scale `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device: String,
    /// Feature columns, excluding `label` and `type`.
    pub features: Vec<FeatureSchema>,
    /// Anomaly classes; never contains `normal`.
    pub attack_types: Vec<String>,
}

impl DeviceProfile {
    pub fn new(device: &str, features: Vec<FeatureSchema>, attack_types: &[&str]) -> Result<Self> {
        let profile = Self {
            device: device.to_string(),
            features,
            attack_types: attack_types.iter().map(|s| s.to_string()).collect(),
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::schema(format!("duplicate feature `{}`", f.name)));
            }
            if is_reserved(&f.name) {
                return Err(Error::schema(format!("`{}` is a reserved label column", f.name)));
            }
            for (j, c) in f.categories.iter().enumerate() {
                if f.categories[..j].contains(c) {
                    return Err(Error::schema(format!(
                        "duplicate category `{c}` in feature `{}`",
                        f.name
                    )));
                }
            }
        }
        for (i, a) in self.attack_types.iter().enumerate() {
            if a == NORMAL {
                return Err(Error::schema("attack types must not contain `normal`"));
            }
            if self.attack_types[..i].contains(a) {
                return Err(Error::schema(format!("duplicate attack type `{a}`")));
            }
        }
        Ok(())
    }

    /// All target classes in canonical order: `normal` then the attack types.
    pub fn classes(&self) -> Vec<String> {
        std::iter::once(NORMAL.to_string())
            .chain(self.attack_types.iter().cloned())
            .collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Same device, feature names and kinds; category sets may differ.
    pub fn same_layout(&self, other: &DeviceProfile) -> bool {
        self.device == other.device
            && self.features.len() == other.features.len()
            && self
                .features
                .iter()
                .zip(&other.features)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }
}

pub(crate) fn is_reserved(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n == "label" || n == "type"
}
