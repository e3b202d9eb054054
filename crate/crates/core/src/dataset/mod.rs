//! Typed telemetry datasets: loading, preparation, splitting and synthesis.

mod csv_io;
mod normalize;
mod profile;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to};
pub use normalize::{normalize_apply, normalize_fit, NormalizationParams, NumericRange};
pub use profile::{Device, DeviceProfile, FeatureKind, FeatureSchema, Scale, NORMAL};
pub use split::stratified_split;
pub use synth::{synthesize, ClassCounts};

pub(crate) use profile::is_reserved;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomaly => "anomaly",
        }
    }
}

/// One cell. Categorical cells index into the feature's category list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(usize),
}

impl Value {
    pub fn num(self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(x),
            Value::Cat(_) => None,
        }
    }

    pub fn cat(self) -> Option<usize> {
        match self {
            Value::Cat(c) => Some(c),
            Value::Num(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<Value>,
    pub label: Label,
    pub attack_type: String,
}

impl Instance {
    pub fn new(values: Vec<Value>, attack_type: &str) -> Self {
        let label = if attack_type == NORMAL {
            Label::Normal
        } else {
            Label::Anomaly
        };
        Self {
            values,
            label,
            attack_type: attack_type.to_string(),
        }
    }

    pub fn target(&self, target: Target) -> &str {
        match target {
            Target::AttackType => &self.attack_type,
            Target::Label => self.label.as_str(),
        }
    }
}

/// Which column a classifier predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Target {
    #[default]
    #[serde(rename = "type", alias = "attack_type")]
    AttackType,
    #[serde(rename = "label")]
    Label,
}

impl Target {
    /// Canonical class order for this target over `profile`.
    pub fn classes(self, profile: &DeviceProfile) -> Vec<String> {
        match self {
            Target::AttackType => profile.classes(),
            Target::Label => vec![Label::Normal.as_str().into(), Label::Anomaly.as_str().into()],
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "type" | "attack_type" => Ok(Target::AttackType),
            "label" => Ok(Target::Label),
            _ => Err(Error::invalid(format!("unknown target `{s}`"))),
        }
    }
}

/// A validated, immutable set of instances over one device profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    profile: DeviceProfile,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(profile: DeviceProfile, instances: Vec<Instance>) -> Result<Self> {
        profile.validate()?;
        for (row, inst) in instances.iter().enumerate() {
            check_instance(&profile, inst, row + 1)?;
        }
        Ok(Self { profile, instances })
    }

    pub(crate) fn new_unchecked(profile: DeviceProfile, instances: Vec<Instance>) -> Self {
        debug_assert!(instances
            .iter()
            .enumerate()
            .all(|(row, inst)| check_instance(&profile, inst, row + 1).is_ok()));
        Self { profile, instances }
    }

    pub fn profile(&self) -> &DeviceProfile {
        &self.profile
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn into_parts(self) -> (DeviceProfile, Vec<Instance>) {
        (self.profile, self.instances)
    }

    /// Per-class instance counts in canonical class order, including zeros.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        let classes = self.profile.classes();
        let mut counts = vec![0usize; classes.len()];
        for inst in &self.instances {
            if let Some(i) = classes.iter().position(|c| *c == inst.attack_type) {
                counts[i] += 1;
            }
        }
        classes.into_iter().zip(counts).collect()
    }

    /// Removes feature `name` from the schema and every instance.
    pub fn drop_feature(&self, name: &str) -> Result<Dataset> {
        if is_reserved(name) {
            return Err(Error::invalid(format!("cannot drop label column `{name}`")));
        }
        let idx = self
            .profile
            .feature_index(name)
            .ok_or_else(|| Error::invalid(format!("unknown feature `{name}`")))?;
        let mut profile = self.profile.clone();
        profile.features.remove(idx);
        let instances = self
            .instances
            .iter()
            .map(|inst| {
                let mut inst = inst.clone();
                inst.values.remove(idx);
                inst
            })
            .collect();
        Ok(Dataset::new_unchecked(profile, instances))
    }

    /// Appends a categorical feature with the given per-instance values.
    pub fn with_feature(&self, feature: FeatureSchema, values: Vec<usize>) -> Result<Dataset> {
        if values.len() != self.len() {
            return Err(Error::invalid("feature value count differs from instance count"));
        }
        let mut profile = self.profile.clone();
        profile.features.push(feature);
        profile.validate()?;
        let instances = self
            .instances
            .iter()
            .zip(values)
            .map(|(inst, v)| {
                let mut inst = inst.clone();
                inst.values.push(Value::Cat(v));
                inst
            })
            .collect();
        Dataset::new(profile, instances)
    }

    /// Re-expresses this dataset's categorical cells against `reference`'s
    /// category lists. Categories unknown to `reference` are appended after
    /// its own, so `reference`'s indices keep their meaning.
    pub fn align_to(&self, reference: &DeviceProfile) -> Result<Dataset> {
        if !self.profile.same_layout(reference) {
            return Err(Error::schema(format!(
                "profile mismatch: `{}` does not share the reference layout",
                self.profile.device
            )));
        }
        let mut profile = reference.clone();
        for a in &self.profile.attack_types {
            if !profile.attack_types.contains(a) {
                profile.attack_types.push(a.clone());
            }
        }
        let remap: Vec<Option<Vec<usize>>> = self
            .profile
            .features
            .iter()
            .zip(profile.features.iter_mut())
            .map(|(own, target)| {
                own.kind.is_categorical().then(|| {
                    own.categories
                        .iter()
                        .map(|c| target.intern(c))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let instances = self
            .instances
            .iter()
            .map(|inst| {
                let mut inst = inst.clone();
                for (v, map) in inst.values.iter_mut().zip(&remap) {
                    if let (Value::Cat(c), Some(map)) = (v, map) {
                        *c = map[*c];
                    }
                }
                inst
            })
            .collect();
        Dataset::new(profile, instances)
    }

    /// Dataset over the same profile holding the instances at `indices`.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let instances = indices.iter().map(|&i| self.instances[i].clone()).collect();
        Dataset::new_unchecked(self.profile.clone(), instances)
    }

    /// Drops categories no instance uses, keeping the survivors' order.
    /// After a split this makes the category lists depend only on the rows
    /// actually present.
    pub fn compact_categories(&self) -> Dataset {
        let mut profile = self.profile.clone();
        let mut remap: Vec<Option<Vec<usize>>> = Vec::with_capacity(profile.features.len());
        for (j, f) in profile.features.iter_mut().enumerate() {
            if !f.kind.is_categorical() {
                remap.push(None);
                continue;
            }
            let mut used = vec![false; f.categories.len()];
            for inst in &self.instances {
                if let Value::Cat(c) = inst.values[j] {
                    used[c] = true;
                }
            }
            let mut map = vec![usize::MAX; used.len()];
            let mut kept = Vec::new();
            for (c, name) in f.categories.iter().enumerate() {
                if used[c] {
                    map[c] = kept.len();
                    kept.push(name.clone());
                }
            }
            f.categories = kept;
            remap.push(Some(map));
        }
        let instances = self
            .instances
            .iter()
            .map(|inst| {
                let mut inst = inst.clone();
                for (v, map) in inst.values.iter_mut().zip(&remap) {
                    if let (Value::Cat(c), Some(map)) = (v, map) {
                        *c = map[*c];
                    }
                }
                inst
            })
            .collect();
        Dataset::new_unchecked(profile, instances)
    }
}

fn check_instance(profile: &DeviceProfile, inst: &Instance, row: usize) -> Result<()> {
    if inst.values.len() != profile.features.len() {
        return Err(Error::schema(format!(
            "instance {row} has {} values for {} features",
            inst.values.len(),
            profile.features.len()
        )));
    }
    for (v, f) in inst.values.iter().zip(&profile.features) {
        match (v, f.kind.is_numeric()) {
            (Value::Num(x), true) if x.is_finite() => {}
            (Value::Cat(c), false) if *c < f.categories.len() => {}
            _ => {
                return Err(Error::Row {
                    row,
                    column: f.name.clone(),
                    message: format!("value {v:?} does not fit feature kind {:?}", f.kind),
                })
            }
        }
    }
    let known = inst.attack_type == NORMAL || profile.attack_types.contains(&inst.attack_type);
    if !known {
        return Err(Error::UnknownAttackType {
            row,
            found: inst.attack_type.clone(),
            allowed: profile.classes(),
        });
    }
    if (inst.label == Label::Normal) != (inst.attack_type == NORMAL) {
        return Err(Error::Row {
            row,
            column: "label".into(),
            message: format!(
                "label `{}` inconsistent with type `{}`",
                inst.label.as_str(),
                inst.attack_type
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let profile = DeviceProfile::new(
            "toy",
            vec![
                FeatureSchema::new("x", FeatureKind::Numeric),
                FeatureSchema::nominal("c", &["high", "low"]),
            ],
            &["ddos"],
        )
        .unwrap();
        let rows = vec![
            Instance::new(vec![Value::Num(1.0), Value::Cat(0)], "normal"),
            Instance::new(vec![Value::Num(2.0), Value::Cat(1)], "ddos"),
        ];
        Dataset::new(profile, rows).unwrap()
    }

    #[test]
    fn rejects_unknown_attack_type() {
        let d = tiny();
        let mut rows = d.instances().to_vec();
        rows[0] = Instance::new(vec![Value::Num(1.0), Value::Cat(0)], "worm");
        let err = Dataset::new(d.profile().clone(), rows).unwrap_err();
        match err {
            Error::UnknownAttackType { allowed, .. } => assert_eq!(allowed, ["normal", "ddos"]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn rejects_label_type_mismatch() {
        let d = tiny();
        let mut rows = d.instances().to_vec();
        rows[1].label = Label::Normal;
        assert!(Dataset::new(d.profile().clone(), rows).is_err());
    }

    #[test]
    fn rejects_out_of_range_category() {
        let d = tiny();
        let mut rows = d.instances().to_vec();
        rows[1].values[1] = Value::Cat(5);
        assert!(Dataset::new(d.profile().clone(), rows).is_err());
    }

    #[test]
    fn drop_feature_removes_column() {
        let d = tiny().drop_feature("x").unwrap();
        assert_eq!(d.profile().features.len(), 1);
        assert_eq!(d.len(), 2);
        assert!(d.instances().iter().all(|i| i.values.len() == 1));
        assert!(d.drop_feature("x").is_err());
        assert!(d.drop_feature("label").is_err());
        assert!(d.drop_feature("type").is_err());
    }

    #[test]
    fn align_appends_unseen_categories() {
        let d = tiny();
        let mut reference = d.profile().clone();
        reference.features[1].categories = vec!["low".into()];
        let aligned = d.align_to(&reference).unwrap();
        assert_eq!(aligned.profile().features[1].categories, ["low", "high"]);
        assert_eq!(aligned.instances()[0].values[1], Value::Cat(1));
        assert_eq!(aligned.instances()[1].values[1], Value::Cat(0));
    }

    #[test]
    fn compaction_drops_unused_categories() {
        let d = tiny().subset(&[1]);
        let c = d.compact_categories();
        assert_eq!(c.profile().features[1].categories, ["low"]);
        assert_eq!(c.instances()[0].values[1], Value::Cat(0));
        assert_eq!(tiny().compact_categories(), tiny());
    }
}
