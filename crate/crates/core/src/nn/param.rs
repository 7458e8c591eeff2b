use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Dense weight matrix (out × in). Rows are per-unit incoming weights and
    /// are subject to the max-norm constraint.
    Weight,
    Bias,
    Scale,
    Shift,
}

/// A trainable tensor with its accumulated gradient. Vectors are stored as
/// `1 × n` matrices so that they broadcast over batch rows.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
    pub kind: ParamKind,
}

impl Param {
    pub fn new(value: Array2<f64>, kind: ParamKind) -> Self {
        let grad = Array2::zeros(value.raw_dim());
        Param { value, grad, kind }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}
