//! Vector-valued Taylor maps with labelled perturbation variables, and
//! their JSON document form.

use serde::{Deserialize, Serialize};

use super::{MultiIndex, PolyError, TPoly};

/// Semantic name of a perturbation variable and the physical size of one
/// scaled unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarLabel {
    pub name: String,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl VarLabel {
    pub fn new(name: impl Into<String>, scale: f64) -> Self {
        VarLabel {
            name: name.into(),
            scale,
        }
    }
}

/// A list of polynomials over a shared, labelled set of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorMap {
    components: Vec<TPoly>,
    var_labels: Vec<VarLabel>,
    component_names: Vec<String>,
    component_scales: Vec<f64>,
}

impl TaylorMap {
    /// Component names default to `c0, c1, …` and unit scales.
    pub fn new(components: Vec<TPoly>, var_labels: Vec<VarLabel>) -> Result<Self, PolyError> {
        let names = (0..components.len()).map(|i| format!("c{i}")).collect();
        let scales = vec![1.0; components.len()];
        TaylorMap::with_components(components, var_labels, names, scales)
    }

    pub fn with_components(
        components: Vec<TPoly>,
        var_labels: Vec<VarLabel>,
        component_names: Vec<String>,
        component_scales: Vec<f64>,
    ) -> Result<Self, PolyError> {
        let first = components.first().ok_or(PolyError::ArityMismatch {
            expected: 1,
            found: 0,
        })?;
        for c in &components {
            if !c.same_shape(first) {
                return Err(PolyError::ShapeMismatch {
                    left: (first.nvars(), first.order()),
                    right: (c.nvars(), c.order()),
                });
            }
        }
        if var_labels.len() != first.nvars() {
            return Err(PolyError::ArityMismatch {
                expected: first.nvars(),
                found: var_labels.len(),
            });
        }
        for (i, l) in var_labels.iter().enumerate() {
            if var_labels[..i].iter().any(|m| m.name == l.name) {
                return Err(PolyError::Format(format!("duplicate variable label {}", l.name)));
            }
        }
        if component_names.len() != components.len() || component_scales.len() != components.len()
        {
            return Err(PolyError::ArityMismatch {
                expected: components.len(),
                found: component_names.len().min(component_scales.len()),
            });
        }
        Ok(TaylorMap {
            components,
            var_labels,
            component_names,
            component_scales,
        })
    }

    pub fn components(&self) -> &[TPoly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &TPoly {
        &self.components[i]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.components[0].nvars()
    }

    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    pub fn var_labels(&self) -> &[VarLabel] {
        &self.var_labels
    }

    pub fn component_names(&self) -> &[String] {
        &self.component_names
    }

    pub fn component_scales(&self) -> &[f64] {
        &self.component_scales
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_labels.iter().position(|l| l.name == name)
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.component_names.iter().position(|n| n == name)
    }

    /// Constant terms, i.e. the expansion point image.
    pub fn nominal(&self) -> Vec<f64> {
        self.components.iter().map(TPoly::constant_term).collect()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// Keeps the listed components, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<TaylorMap, PolyError> {
        for &i in indices {
            if i >= self.len() {
                return Err(PolyError::VariableOutOfRange {
                    index: i,
                    nvars: self.len(),
                });
            }
        }
        TaylorMap::with_components(
            indices.iter().map(|&i| self.components[i].clone()).collect(),
            self.var_labels.clone(),
            indices.iter().map(|&i| self.component_names[i].clone()).collect(),
            indices.iter().map(|&i| self.component_scales[i]).collect(),
        )
    }

    /// Appends a component with the same shape.
    pub fn push(&mut self, name: impl Into<String>, scale: f64, poly: TPoly) -> Result<(), PolyError> {
        if !poly.same_shape(&self.components[0]) {
            return Err(PolyError::ShapeMismatch {
                left: (self.nvars(), self.order()),
                right: (poly.nvars(), poly.order()),
            });
        }
        self.components.push(poly);
        self.component_names.push(name.into());
        self.component_scales.push(scale);
        Ok(())
    }

    /// Re-truncates every component at a lower order.
    pub fn truncate(&self, order: usize) -> Result<TaylorMap, PolyError> {
        let comps = self
            .components
            .iter()
            .map(|c| c.truncate(order))
            .collect::<Result<Vec<_>, _>>()?;
        TaylorMap::with_components(
            comps,
            self.var_labels.clone(),
            self.component_names.clone(),
            self.component_scales.clone(),
        )
    }

    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            nvars: self.nvars(),
            order: self.order(),
            labels: self.var_labels.clone(),
            components: self
                .components
                .iter()
                .zip(&self.component_names)
                .zip(&self.component_scales)
                .map(|((p, name), &scale)| ComponentDoc {
                    name: Some(name.clone()),
                    scale: Some(scale),
                    terms: p
                        .terms()
                        .map(|(alpha, coeff)| TermDoc {
                            alpha: alpha.exponents().to_vec(),
                            coeff,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &MapDocument) -> Result<TaylorMap, PolyError> {
        if doc.labels.len() != doc.nvars {
            return Err(PolyError::ArityMismatch {
                expected: doc.nvars,
                found: doc.labels.len(),
            });
        }
        let mut comps = Vec::with_capacity(doc.components.len());
        let mut names = Vec::new();
        let mut scales = Vec::new();
        for (i, c) in doc.components.iter().enumerate() {
            let terms = c
                .terms
                .iter()
                .map(|t| (MultiIndex::new(t.alpha.clone()), t.coeff));
            comps.push(TPoly::from_terms(doc.nvars, doc.order, terms)?);
            names.push(c.name.clone().unwrap_or_else(|| format!("c{i}")));
            scales.push(c.scale.unwrap_or(1.0));
        }
        TaylorMap::with_components(comps, doc.labels.clone(), names, scales)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("map document serializes")
    }

    pub fn from_json(text: &str) -> Result<TaylorMap, PolyError> {
        let doc: MapDocument =
            serde_json::from_str(text).map_err(|e| PolyError::Format(e.to_string()))?;
        TaylorMap::from_document(&doc)
    }
}

/// Serialized form: `{nvars, order, labels[], components[{name, scale, terms[{alpha[], coeff}]}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapDocument {
    pub nvars: usize,
    pub order: usize,
    pub labels: Vec<VarLabel>,
    pub components: Vec<ComponentDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    pub terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermDoc {
    pub alpha: Vec<u32>,
    pub coeff: f64,
}
