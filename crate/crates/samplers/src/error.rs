use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("gradient check failed at {point:?}: analytic {analytic:?}, finite difference {numeric:?}")]
    Gradient {
        point: Vec<f64>,
        analytic: Vec<f64>,
        numeric: Vec<f64>,
    },
    #[error("target has no gradient; MALA needs one")]
    MissingGradient,
    #[error("minorization fails at state {state} from {x}: P density {density} < eps*nu {bound}")]
    Minorization {
        x: String,
        state: String,
        density: f64,
        bound: f64,
    },
    #[error("rejection loop exceeded {max_loop} iterations ({detail})")]
    LoopLimit { max_loop: usize, detail: String },
    #[error(transparent)]
    Core(#[from] mhcoupling::CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SamplerError>;
