//! Per-attribute-group biometric error rates, read from CSV with the header
//! `attribute,group,fmr,fnmr,p_genuine`.

use std::io::Read;

use serde::Deserialize;

use crate::assessment::{ensemble_risk, risk_of_bias, BiasAttributeRates};
use crate::error::{Error, Result};

pub const RATES_HEADER: [&str; 5] = ["attribute", "group", "fmr", "fnmr", "p_genuine"];

#[derive(Debug, Deserialize)]
struct Row {
    attribute: String,
    group: String,
    fmr: f64,
    fnmr: f64,
    p_genuine: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatesTable {
    rows: Vec<BiasAttributeRates>,
}

/// Risk of each of a subject's attributes and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRisk {
    pub per_attribute: Vec<(String, f64)>,
    pub ensemble: f64,
}

impl RatesTable {
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = csv.headers().map_err(|e| Error::Parse(e.to_string()))?;
        if header.iter().ne(RATES_HEADER) {
            return Err(Error::Parse(format!(
                "rates header must be `{}`, got `{}`",
                RATES_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for record in csv.deserialize::<Row>() {
            let r = record.map_err(|e| Error::Parse(e.to_string()))?;
            rows.push(BiasAttributeRates::new(
                r.attribute,
                r.group,
                r.fmr,
                r.fnmr,
                r.p_genuine,
            )?);
        }
        Ok(RatesTable { rows })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn rows(&self) -> &[BiasAttributeRates] {
        &self.rows
    }

    pub fn lookup(&self, attribute: &str, group: &str) -> Result<&BiasAttributeRates> {
        self.rows
            .iter()
            .find(|r| r.attribute == attribute && r.group == group)
            .ok_or_else(|| Error::UnknownAttributeGroup {
                attribute: attribute.to_string(),
                group: group.to_string(),
            })
    }

    /// Attribute names in first-appearance order.
    pub fn attributes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.attribute.as_str()) {
                out.push(&r.attribute);
            }
        }
        out
    }

    /// Groups of one attribute in table order.
    pub fn groups(&self, attribute: &str) -> Vec<&BiasAttributeRates> {
        self.rows.iter().filter(|r| r.attribute == attribute).collect()
    }

    /// Per-attribute risk of bias for a subject described by
    /// `(attribute, group)` pairs, plus the ensemble sum.
    pub fn subject_risk<A: AsRef<str>, G: AsRef<str>>(
        &self,
        impact_fmr: f64,
        impact_fnmr: f64,
        subject: &[(A, G)],
    ) -> Result<SubjectRisk> {
        for (label, v) in [("impact_fmr", impact_fmr), ("impact_fnmr", impact_fnmr)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidValue(format!(
                    "{label} must be finite and nonnegative, got {v}"
                )));
            }
        }
        let per_attribute = subject
            .iter()
            .map(|(a, g)| {
                let rates = self.lookup(a.as_ref(), g.as_ref())?;
                Ok((a.as_ref().to_string(), risk_of_bias(impact_fmr, impact_fnmr, rates)))
            })
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = per_attribute.iter().map(|(_, r)| *r).collect();
        let ensemble = ensemble_risk(&values)?;
        Ok(SubjectRisk {
            per_attribute,
            ensemble,
        })
    }
}
