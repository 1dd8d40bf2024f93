use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("order size {0} is not in the size ladder")]
    UnknownSize(u32),

    #[error("node (level {level}, q {q}, l {l}) is outside the grid")]
    OffGrid { level: usize, q: i64, l: u32 },

    #[error("intervention is undefined without internal liquidity (l = 0)")]
    NoLiquidity,

    #[error("explicit scheme unstable: dt * rate bound = {product:.4} (must be < 1)")]
    Unstable { product: f64 },

    #[error("non-finite value at level {level}, q {q}, l {l}")]
    NumericalFailure { level: usize, q: i64, l: u32 },
}

pub type Result<T> = std::result::Result<T, ModelError>;
