use crate::numerics::{ParamSet, RngState, Scalar};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut RngState) -> Self {
        let data = (0..rows * cols).map(|_| rng.uniform(-scale, scale)).collect();
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `W x`
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
            })
            .collect()
    }

    /// `Wᵀ g`
    pub fn matvec_t(&self, g: &[T]) -> Vec<T> {
        debug_assert_eq!(g.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (r, &gr) in g.iter().enumerate() {
            if gr == T::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o = *o + w * gr;
            }
        }
        out
    }

    /// `W += g xᵀ`
    pub fn add_outer(&mut self, g: &[T], x: &[T]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &gr) in g.iter().enumerate() {
            if gr == T::zero() {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, &v) in row.iter_mut().zip(x) {
                *w = *w + gr * v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(T::zero()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    pub fn derivative<T: Scalar>(self, z: T, a: T) -> T {
        match self {
            Activation::Tanh => T::one() - a * a,
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weight: Matrix::zeros(out_dim, in_dim),
            bias: vec![T::zero(); out_dim],
        }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut z = self.weight.matvec(x);
        for (zi, &b) in z.iter_mut().zip(&self.bias) {
            *zi = *zi + b;
        }
        z
    }
}

/// Feed-forward embedding network: hidden layers with the activation, then a
/// linear projection to the embedding width. Output is unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone<T> {
    pub activation: Activation,
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Backbone<T> {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.rows).unwrap_or(0)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            activation: self.activation,
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.weight.rows, l.weight.cols))
                .collect(),
        }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h);
            h = if i == last {
                z
            } else {
                z.into_iter().map(|v| self.activation.apply(v)).collect()
            };
        }
        h
    }
}

impl<T> ParamSet<T> for Backbone<T> {
    fn buffers(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.data.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn buffers_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.data.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// Residual bottleneck `e + Up(act(Down e))` applied to the raw embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterModule<T> {
    pub activation: Activation,
    /// rank × embed_dim
    pub down: Matrix<T>,
    /// embed_dim × rank
    pub up: Matrix<T>,
}

impl<T: Scalar> AdapterModule<T> {
    pub fn rank(&self) -> usize {
        self.down.rows
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            activation: self.activation,
            down: Matrix::zeros(self.down.rows, self.down.cols),
            up: Matrix::zeros(self.up.rows, self.up.cols),
        }
    }

    pub fn forward(&self, e: &[T]) -> Vec<T> {
        let hidden: Vec<T> = self
            .down
            .matvec(e)
            .into_iter()
            .map(|z| self.activation.apply(z))
            .collect();
        let delta = self.up.matvec(&hidden);
        e.iter().zip(delta).map(|(&a, b)| a + b).collect()
    }
}

impl<T> ParamSet<T> for AdapterModule<T> {
    fn buffers(&self) -> Vec<&[T]> {
        vec![self.down.data.as_slice(), self.up.data.as_slice()]
    }

    fn buffers_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.down.data.as_mut_slice(), self.up.data.as_mut_slice()]
    }
}

/// Backbone plus optional adapter. Also used as the gradient container for
/// the same pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub backbone: Backbone<T>,
    pub adapter: Option<AdapterModule<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros_like(&self) -> Self {
        Self {
            backbone: self.backbone.zeros_like(),
            adapter: self.adapter.as_ref().map(AdapterModule::zeros_like),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for buf in self.buffers_mut() {
            for v in buf.iter_mut() {
                *v = *v * factor;
            }
        }
    }
}

impl<T> ParamSet<T> for ModelParams<T> {
    fn buffers(&self) -> Vec<&[T]> {
        let mut out = self.backbone.buffers();
        if let Some(a) = &self.adapter {
            out.extend(a.buffers());
        }
        out
    }

    fn buffers_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = self.backbone.buffers_mut();
        if let Some(a) = &mut self.adapter {
            out.extend(a.buffers_mut());
        }
        out
    }
}

/// FNV-1a over the bit patterns of every parameter.
pub fn fingerprint<T: Scalar, P: ParamSet<T> + ?Sized>(params: &P) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for buf in params.buffers() {
        for &v in buf {
            for byte in v.as_f64().to_bits().to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(PRIME);
            }
        }
        h ^= 0xff;
        h = h.wrapping_mul(PRIME);
    }
    h
}
