//! Dense feedforward networks evaluated over any [`Algebra`]: plain scalars
//! for simulation, truncated polynomials for jet transport.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyalg::{Algebra, PolyError};

/// Smallest nominal norm accepted by [`normalize_direction`].
pub const DEFAULT_DIRECTION_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("weight document: {0}")]
    Schema(String),
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer}: expected {expected} inputs, found {found}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {layer}: non-finite parameter at index {index}")]
    NonFinite { layer: usize, index: usize },
    #[error("inputs mix different algebras")]
    AlgebraMismatch,
    #[error("nominal direction norm {norm:e} is below {eps:e}")]
    NearZeroDirection { norm: f64, eps: f64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Elementwise activation of one neuron.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Sin { w0: f64 },
    Sigmoid,
    Linear,
    Tanh,
    Softplus,
}

impl Activation {
    pub fn apply<A: Algebra>(&self, z: &A) -> A {
        match *self {
            Activation::Sin { w0 } => {
                if w0 == 1.0 {
                    z.sin()
                } else {
                    z.scale(w0).sin()
                }
            }
            Activation::Sigmoid => z.sigmoid(),
            Activation::Linear => z.clone(),
            Activation::Tanh => z.tanh(),
            Activation::Softplus => z.softplus(),
        }
    }

    /// Value and derivative at a scalar pre-activation.
    pub fn value_and_slope(&self, z: f64) -> (f64, f64) {
        match *self {
            Activation::Sin { w0 } => ((w0 * z).sin(), w0 * (w0 * z).cos()),
            Activation::Sigmoid => {
                let s = crate::polyalg::scalar::sigmoid(z);
                (s, s * (1.0 - s))
            }
            Activation::Linear => (z, 1.0),
            Activation::Tanh => {
                let t = z.tanh();
                (t, 1.0 - t * t)
            }
            Activation::Softplus => (
                crate::polyalg::scalar::softplus(z),
                crate::polyalg::scalar::sigmoid(z),
            ),
        }
    }
}

/// Either one activation for the whole layer or one per output neuron
/// (e.g. a sigmoid throttle next to linear direction outputs).
#[derive(Clone, Debug, PartialEq)]
pub enum LayerActivation {
    Uniform(Activation),
    PerNeuron(Vec<Activation>),
}

impl LayerActivation {
    pub fn get(&self, i: usize) -> Activation {
        match self {
            LayerActivation::Uniform(a) => *a,
            LayerActivation::PerNeuron(v) => v[i],
        }
    }
}

/// How network outputs are routed to a model's controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputWiring {
    /// Three outputs, normalized to a thrust direction.
    Transfer,
    /// Throttle in (0,1) followed by three direction outputs.
    Lander,
    /// Four rotor commands in (0,1).
    Drone,
    /// A single scalar event value.
    Event,
    #[default]
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: LayerActivation,
}

impl Layer {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: LayerActivation,
    ) -> Result<Layer, NetError> {
        if weights.len() != rows * cols {
            return Err(NetError::Schema(format!(
                "{rows}x{cols} layer has {} weights",
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(NetError::Schema(format!(
                "{rows}-row layer has {} biases",
                bias.len()
            )));
        }
        if let LayerActivation::PerNeuron(v) = &activation {
            if v.len() != rows {
                return Err(NetError::Schema(format!(
                    "{rows}-row layer has {} activations",
                    v.len()
                )));
            }
        }
        Ok(Layer {
            rows,
            cols,
            weights,
            bias,
            activation,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major weight matrix.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> &LayerActivation {
        &self.activation
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn param_count(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    pub fn forward<A: Algebra>(&self, x: &[A]) -> Vec<A> {
        (0..self.rows)
            .map(|i| {
                let mut z = x[0].lift(self.bias[i]);
                let row = &self.weights[i * self.cols..(i + 1) * self.cols];
                for (w, xj) in row.iter().zip(x) {
                    z.axpy(*w, xj);
                }
                self.activation.get(i).apply(&z)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    input_shift: Vec<f64>,
    input_scale: Vec<f64>,
    layers: Vec<Layer>,
    output_wiring: OutputWiring,
}

impl PolicyNet {
    pub fn new(
        input_shift: Vec<f64>,
        input_scale: Vec<f64>,
        layers: Vec<Layer>,
        output_wiring: OutputWiring,
    ) -> Result<PolicyNet, NetError> {
        let first = layers.first().ok_or(NetError::Empty)?;
        let input_dim = first.cols;
        if input_shift.len() != input_dim || input_scale.len() != input_dim {
            return Err(NetError::Schema(format!(
                "input scaling has {}/{} entries for {input_dim} inputs",
                input_shift.len(),
                input_scale.len()
            )));
        }
        for w in layers.windows(2) {
            if w[1].cols != w[0].rows {
                let layer = layers.iter().position(|l| std::ptr::eq(l, &w[1])).unwrap();
                return Err(NetError::DimensionMismatch {
                    layer,
                    expected: w[0].rows,
                    found: w[1].cols,
                });
            }
        }
        for (li, l) in layers.iter().enumerate() {
            if let Some(index) = l
                .weights
                .iter()
                .chain(&l.bias)
                .position(|v| !v.is_finite())
            {
                return Err(NetError::NonFinite { layer: li, index });
            }
        }
        if let Some(index) = input_shift
            .iter()
            .chain(&input_scale)
            .position(|v| !v.is_finite())
        {
            return Err(NetError::NonFinite { layer: 0, index });
        }
        let net = PolicyNet {
            input_shift,
            input_scale,
            layers,
            output_wiring,
        };
        let needed = match output_wiring {
            OutputWiring::Transfer => Some(3),
            OutputWiring::Lander | OutputWiring::Drone => Some(4),
            OutputWiring::Event => Some(1),
            OutputWiring::None => None,
        };
        if let Some(n) = needed {
            if net.output_dim() != n {
                return Err(NetError::Schema(format!(
                    "{output_wiring:?} wiring needs {n} outputs, network has {}",
                    net.output_dim()
                )));
            }
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().rows
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_shift(&self) -> &[f64] {
        &self.input_shift
    }

    pub fn input_scale(&self) -> &[f64] {
        &self.input_scale
    }

    pub fn output_wiring(&self) -> OutputWiring {
        self.output_wiring
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Applies the input affine scaling and every layer.
    pub fn eval<A: Algebra>(&self, input: &[A]) -> Result<Vec<A>, NetError> {
        if input.len() != self.input_dim() {
            return Err(NetError::DimensionMismatch {
                layer: 0,
                expected: self.input_dim(),
                found: input.len(),
            });
        }
        if input.iter().any(|x| !x.same_algebra(&input[0])) {
            return Err(NetError::AlgebraMismatch);
        }
        let mut h: Vec<A> = input
            .iter()
            .zip(self.input_shift.iter().zip(&self.input_scale))
            .map(|(x, (&s, &k))| x.add_scalar(-s).scale(k))
            .collect();
        for layer in &self.layers {
            h = layer.forward(&h);
        }
        Ok(h)
    }

    /// A SIREN with sine hidden layers and the given head activation.
    ///
    /// Weights follow the usual SIREN initialisation: the first layer is
    /// uniform in `±1/fan_in`, later layers in `±sqrt(6/fan_in)/w0`.
    pub fn random_siren(
        dims: &[usize],
        w0: f64,
        head: LayerActivation,
        wiring: OutputWiring,
        seed: u64,
    ) -> Result<PolicyNet, NetError> {
        if dims.len() < 2 {
            return Err(NetError::Empty);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nl = dims.len() - 1;
        let mut layers = Vec::with_capacity(nl);
        for l in 0..nl {
            let (cols, rows) = (dims[l], dims[l + 1]);
            let bound = if l == 0 {
                1.0 / cols as f64
            } else {
                (6.0 / cols as f64).sqrt() / w0
            };
            let weights = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            let bias = (0..rows)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            let act = if l + 1 == nl {
                head.clone()
            } else {
                LayerActivation::Uniform(Activation::Sin { w0 })
            };
            layers.push(Layer::new(rows, cols, weights, bias, act)?);
        }
        PolicyNet::new(vec![0.0; dims[0]], vec![1.0; dims[0]], layers, wiring)
    }

    /// A network whose outputs are the constant `values` (zero weights).
    pub fn constant_stub(
        input_dim: usize,
        values: &[f64],
        wiring: OutputWiring,
    ) -> Result<PolicyNet, NetError> {
        let layer = Layer::new(
            values.len(),
            input_dim,
            vec![0.0; values.len() * input_dim],
            values.to_vec(),
            LayerActivation::Uniform(Activation::Linear),
        )?;
        PolicyNet::new(vec![0.0; input_dim], vec![1.0; input_dim], vec![layer], wiring)
    }

    /// Replaces the input affine scaling.
    pub fn with_input_scaling(mut self, shift: Vec<f64>, scale: Vec<f64>) -> Result<Self, NetError> {
        self.input_shift = shift;
        self.input_scale = scale;
        PolicyNet::new(
            self.input_shift,
            self.input_scale,
            self.layers,
            self.output_wiring,
        )
    }

    pub fn to_document(&self) -> NetDocument {
        NetDocument {
            input_dim: self.input_dim(),
            input_shift: Some(self.input_shift.clone()),
            input_scale: Some(self.input_scale.clone()),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDoc {
                    rows: l.rows,
                    cols: l.cols,
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                    activation: match &l.activation {
                        LayerActivation::Uniform(a) => ActivationDoc::One(a.into()),
                        LayerActivation::PerNeuron(v) => {
                            ActivationDoc::Each(v.iter().map(Into::into).collect())
                        }
                    },
                })
                .collect(),
            output_wiring: self.output_wiring,
        }
    }

    pub fn from_document(doc: NetDocument) -> Result<PolicyNet, NetError> {
        if doc.layers.is_empty() {
            return Err(NetError::Empty);
        }
        if doc.layers[0].cols != doc.input_dim {
            return Err(NetError::DimensionMismatch {
                layer: 0,
                expected: doc.input_dim,
                found: doc.layers[0].cols,
            });
        }
        let n = doc.input_dim;
        let layers = doc
            .layers
            .into_iter()
            .map(|l| {
                let act = match l.activation {
                    ActivationDoc::One(a) => LayerActivation::Uniform(a.try_into()?),
                    ActivationDoc::Each(v) => LayerActivation::PerNeuron(
                        v.into_iter()
                            .map(Activation::try_from)
                            .collect::<Result<_, _>>()?,
                    ),
                };
                Layer::new(l.rows, l.cols, l.weights, l.bias, act)
            })
            .collect::<Result<Vec<_>, _>>()?;
        PolicyNet::new(
            doc.input_shift.unwrap_or_else(|| vec![0.0; n]),
            doc.input_scale.unwrap_or_else(|| vec![1.0; n]),
            layers,
            doc.output_wiring,
        )
    }

    pub fn from_json(text: &str) -> Result<PolicyNet, NetError> {
        let doc: NetDocument =
            serde_json::from_str(text).map_err(|e| NetError::Schema(e.to_string()))?;
        PolicyNet::from_document(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("network serializes")
    }

    pub fn load(path: &Path) -> Result<PolicyNet, NetError> {
        let text = std::fs::read_to_string(path).map_err(|source| NetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PolicyNet::from_json(&text)
    }
}

/// `v / |v|` computed in the algebra.
pub fn normalize_direction<A: Algebra>(v: &[A; 3], eps: f64) -> Result<[A; 3], NetError> {
    let n2 = v[0].square().add_ref(&v[1].square()).add_ref(&v[2].square());
    let norm = n2.constant_part().sqrt();
    if !(norm >= eps) {
        return Err(NetError::NearZeroDirection { norm, eps });
    }
    let inv = n2.powf(-0.5)?;
    Ok([v[0].mul_ref(&inv), v[1].mul_ref(&inv), v[2].mul_ref(&inv)])
}

/// Weight file layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetDocument {
    pub input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_scale: Option<Vec<f64>>,
    pub layers: Vec<LayerDoc>,
    #[serde(default)]
    pub output_wiring: OutputWiring,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerDoc {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: ActivationDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActivationDoc {
    One(ActivationTag),
    Each(Vec<ActivationTag>),
}

/// `"sin"` (w0 = 1), `{"sin": w0}`, `"sigmoid"`, `"linear"`, `"tanh"`, `"softplus"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActivationTag {
    Name(String),
    Sin { sin: f64 },
}

impl From<&Activation> for ActivationTag {
    fn from(a: &Activation) -> Self {
        match *a {
            Activation::Sin { w0 } => ActivationTag::Sin { sin: w0 },
            Activation::Sigmoid => ActivationTag::Name("sigmoid".into()),
            Activation::Linear => ActivationTag::Name("linear".into()),
            Activation::Tanh => ActivationTag::Name("tanh".into()),
            Activation::Softplus => ActivationTag::Name("softplus".into()),
        }
    }
}

impl TryFrom<ActivationTag> for Activation {
    type Error = NetError;

    fn try_from(t: ActivationTag) -> Result<Self, NetError> {
        match t {
            ActivationTag::Sin { sin } if sin.is_finite() => Ok(Activation::Sin { w0: sin }),
            ActivationTag::Sin { sin } => Err(NetError::Schema(format!("sin frequency {sin}"))),
            ActivationTag::Name(n) => match n.as_str() {
                "sin" => Ok(Activation::Sin { w0: 1.0 }),
                "sigmoid" => Ok(Activation::Sigmoid),
                "linear" => Ok(Activation::Linear),
                "tanh" => Ok(Activation::Tanh),
                "softplus" => Ok(Activation::Softplus),
                other => Err(NetError::Schema(format!("unknown activation {other:?}"))),
            },
        }
    }
}
