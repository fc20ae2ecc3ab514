use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("overlapping domain ({a}, {b}) leaves the unit interval on slab {slab}")]
    InterfaceOutsideDomain { slab: usize, a: f64, b: f64 },

    #[error("overlapping mesh spans ({mesh_a}, {mesh_b}) but the domain is ({a}, {b})")]
    MeshMismatch { mesh_a: f64, mesh_b: f64, a: f64, b: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("slab {slab}: {source}")]
    Slab {
        slab: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing previous-slab solution for slab {slab}")]
    MissingPrevious { slab: usize },

    #[error("relative solve residual {residual:e} exceeds {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_slab(self, slab: usize) -> Self {
        match self {
            e @ Error::Slab { .. } | e @ Error::InterfaceOutsideDomain { .. } => e,
            other => Error::Slab {
                slab,
                source: Box::new(other),
            },
        }
    }
}
