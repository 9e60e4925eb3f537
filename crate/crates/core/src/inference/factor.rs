use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative table over an ordered scope of discrete variables, stored
/// flat with the last scope variable varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    scope: Vec<String>,
    cardinalities: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<String>, cardinalities: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if scope.len() != cardinalities.len() {
            return Err(Error::ScopeMismatch(format!(
                "{} variables but {} cardinalities",
                scope.len(),
                cardinalities.len()
            )));
        }
        for (i, name) in scope.iter().enumerate() {
            if scope[..i].contains(name) {
                return Err(Error::ScopeMismatch(format!("`{name}` repeated in scope")));
            }
        }
        let cells: usize = cardinalities.iter().product();
        if values.len() != cells {
            return Err(Error::ScopeMismatch(format!(
                "{} values for {cells} cells",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidValue(format!(
                "factor entry {v} is not a finite nonnegative number"
            )));
        }
        Ok(Factor {
            scope,
            cardinalities,
            values,
        })
    }

    /// The empty-scope factor holding `value`.
    pub fn scalar(value: f64) -> Self {
        Factor {
            scope: Vec::new(),
            cardinalities: Vec::new(),
            values: vec![value],
        }
    }

    pub fn scope(&self) -> &[String] {
        &self.scope
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn position(&self, variable: &str) -> Option<usize> {
        self.scope.iter().position(|v| v == variable)
    }

    pub fn cardinality_of(&self, variable: &str) -> Option<usize> {
        self.position(variable).map(|i| self.cardinalities[i])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.scope.len()];
        for i in (0..self.scope.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cardinalities[i + 1];
        }
        strides
    }

    /// Pointwise product over the union of both scopes. The result scope is
    /// `self`'s scope followed by the new variables of `other`.
    pub fn product(&self, other: &Factor) -> Result<Factor> {
        let mut scope = self.scope.clone();
        let mut cards = self.cardinalities.clone();
        for (name, &card) in other.scope.iter().zip(&other.cardinalities) {
            match self.cardinality_of(name) {
                Some(c) if c != card => {
                    return Err(Error::ScopeMismatch(format!(
                        "`{name}` has cardinality {c} in one factor and {card} in another"
                    )))
                }
                Some(_) => {}
                None => {
                    scope.push(name.clone());
                    cards.push(card);
                }
            }
        }

        let other_strides = other.strides();
        // stride of each result position inside `other`, 0 if absent
        let map: Vec<usize> = scope
            .iter()
            .map(|name| other.position(name).map_or(0, |j| other_strides[j]))
            .collect();
        let left_cells = self.values.len();
        let extra_cells: usize = cards[self.scope.len()..].iter().product();

        let mut values = Vec::with_capacity(left_cells * extra_cells);
        let mut digits = vec![0usize; scope.len()];
        for _ in 0..left_cells * extra_cells {
            let left_idx = digits[..self.scope.len()]
                .iter()
                .zip(&self.cardinalities)
                .fold(0, |acc, (&d, &c)| acc * c + d);
            let right_idx: usize = digits.iter().zip(&map).map(|(d, s)| d * s).sum();
            values.push(self.values[left_idx] * other.values[right_idx]);
            increment(&mut digits, &cards);
        }
        Ok(Factor {
            scope,
            cardinalities: cards,
            values,
        })
    }

    /// Sums `variable` out of the factor.
    pub fn marginalize(&self, variable: &str) -> Result<Factor> {
        let pos = self
            .position(variable)
            .ok_or_else(|| Error::ScopeMismatch(format!("`{variable}` is not in the factor scope")))?;
        let strides = self.strides();
        let card = self.cardinalities[pos];
        let stride = strides[pos];
        let mut scope = self.scope.clone();
        let mut cards = self.cardinalities.clone();
        scope.remove(pos);
        cards.remove(pos);
        let cells: usize = cards.iter().product();
        let mut values = vec![0.0; cells];
        // block = contiguous run of cells sharing the outer digits
        let block = stride * card;
        for (out, v) in values.iter_mut().enumerate() {
            let outer = out / stride;
            let inner = out % stride;
            let base = outer * block + inner;
            *v = (0..card).map(|k| self.values[base + k * stride]).sum();
        }
        Ok(Factor {
            scope,
            cardinalities: cards,
            values,
        })
    }

    /// Fixes `variable` to `state`, dropping it from the scope.
    pub fn reduce(&self, variable: &str, state: usize) -> Result<Factor> {
        let Some(pos) = self.position(variable) else {
            return Ok(self.clone());
        };
        let card = self.cardinalities[pos];
        if state >= card {
            return Err(Error::ScopeMismatch(format!(
                "state {state} out of range for `{variable}`"
            )));
        }
        let stride = self.strides()[pos];
        let block = stride * card;
        let mut scope = self.scope.clone();
        let mut cards = self.cardinalities.clone();
        scope.remove(pos);
        cards.remove(pos);
        let cells: usize = cards.iter().product();
        let values = (0..cells)
            .map(|out| {
                let outer = out / stride;
                let inner = out % stride;
                self.values[outer * block + state * stride + inner]
            })
            .collect();
        Ok(Factor {
            scope,
            cardinalities: cards,
            values,
        })
    }

    /// Value at a full assignment given in scope order.
    pub fn value_at(&self, states: &[usize]) -> f64 {
        self.values[crate::model::row_index(states, &self.cardinalities)]
    }
}

/// Odometer increment, last digit fastest.
pub(crate) fn increment(digits: &mut [usize], cards: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < cards[i] {
            return;
        }
        digits[i] = 0;
    }
}
