//! Dollar accounting for label edits and machine time.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const CHEAP_LABEL_COST: f64 = 0.002;
pub const EXPENSIVE_LABEL_COST: f64 = 0.02;
pub const DEFAULT_MACHINE_COST_PER_HOUR: f64 = 0.9;

/// Price of one label: a named scenario or a custom dollar amount.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LabelPrice {
    #[default]
    Free,
    Cheap,
    Expensive,
    Custom(f64),
}

impl LabelPrice {
    pub fn dollars(self) -> f64 {
        match self {
            LabelPrice::Free => 0.0,
            LabelPrice::Cheap => CHEAP_LABEL_COST,
            LabelPrice::Expensive => EXPENSIVE_LABEL_COST,
            LabelPrice::Custom(v) => v,
        }
    }
}

impl Serialize for LabelPrice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LabelPrice::Free => s.serialize_str("free"),
            LabelPrice::Cheap => s.serialize_str("cheap"),
            LabelPrice::Expensive => s.serialize_str("expensive"),
            LabelPrice::Custom(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for LabelPrice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Amount(f64),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Amount(v) if v.is_finite() && v >= 0.0 => Ok(LabelPrice::Custom(v)),
            Repr::Amount(v) => Err(serde::de::Error::custom(format!("label cost must be >= 0, got {v}"))),
            Repr::Name(n) => match n.to_ascii_lowercase().as_str() {
                "free" => Ok(LabelPrice::Free),
                "cheap" => Ok(LabelPrice::Cheap),
                "expensive" => Ok(LabelPrice::Expensive),
                _ => Err(serde::de::Error::custom(format!(
                    "label cost must be free, cheap, expensive or a number, got {n:?}"
                ))),
            },
        }
    }
}

fn default_machine_cost() -> f64 {
    DEFAULT_MACHINE_COST_PER_HOUR
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    #[serde(default)]
    pub label_cost: LabelPrice,
    /// Dollars per hour of study runtime.
    #[serde(default = "default_machine_cost")]
    pub machine_cost_per_hour: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            label_cost: LabelPrice::Free,
            machine_cost_per_hour: DEFAULT_MACHINE_COST_PER_HOUR,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.machine_cost_per_hour.is_finite() && self.machine_cost_per_hour >= 0.0) {
            return Err(format!("machine cost must be >= 0, got {}", self.machine_cost_per_hour));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LedgerEntry {
    Run { seq: u64, seconds: f64, amount: f64 },
    Labels { seq: u64, count: usize, amount: f64 },
}

impl LedgerEntry {
    pub fn amount(&self) -> f64 {
        match self {
            LedgerEntry::Run { amount, .. } | LedgerEntry::Labels { amount, .. } => *amount,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostLedger {
    entries: Vec<LedgerEntry>,
}

impl CostLedger {
    pub fn charge_run(&mut self, model: &CostModel, seq: u64, seconds: f64) -> f64 {
        let amount = seconds / 3600.0 * model.machine_cost_per_hour;
        self.entries.push(LedgerEntry::Run { seq, seconds, amount });
        amount
    }

    pub fn charge_labels(&mut self, model: &CostModel, seq: u64, count: usize) -> f64 {
        let amount = count as f64 * model.label_cost.dollars();
        self.entries.push(LedgerEntry::Labels { seq, count, amount });
        amount
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn summary(&self, model: &CostModel) -> CostSummary {
        let mut s = CostSummary {
            model: *model,
            labels_edited: 0,
            machine_seconds: 0.0,
            label_total: 0.0,
            machine_total: 0.0,
            total: 0.0,
            total_cents: 0,
            entries: self.entries.clone(),
        };
        for e in &self.entries {
            match *e {
                LedgerEntry::Run { seconds, amount, .. } => {
                    s.machine_seconds += seconds;
                    s.machine_total += amount;
                }
                LedgerEntry::Labels { count, amount, .. } => {
                    s.labels_edited += count;
                    s.label_total += amount;
                }
            }
        }
        s.total = s.label_total + s.machine_total;
        s.total_cents = (s.total * 100.0).round() as u64;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub model: CostModel,
    pub labels_edited: usize,
    pub machine_seconds: f64,
    pub label_total: f64,
    pub machine_total: f64,
    pub total: f64,
    pub total_cents: u64,
    pub entries: Vec<LedgerEntry>,
}
