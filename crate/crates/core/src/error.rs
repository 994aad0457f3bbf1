use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("image columns are not contained in the kernel lattice")]
    ImageNotContained,
    #[error("map does not preserve the module: {0}")]
    NotStable(String),
    #[error("vector is not in the module")]
    NotInModule,
    #[error("matrix has non-positive determinant")]
    NonPositiveDeterminant,
    #[error("quadratic form undefined for elliptic or trivial element {0}")]
    NotDefinedForElliptic(String),
    #[error("coset enumeration exceeded the budget of {0} cosets")]
    BudgetExceeded(usize),
    #[error("chain is not a cycle: {0}")]
    NotACycle(String),
    #[error("chain has nonzero boundary residue")]
    NonCycle,
    #[error("conjugate {0} leaves the target group")]
    ConjugateLeavesGroup(String),
    #[error("wrong divisibility: {0}")]
    WrongDivisibility(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ImageNotContained => "ImageNotContained",
            Error::NotStable(_) => "NotStable",
            Error::NotInModule => "NotInModule",
            Error::NonPositiveDeterminant => "NonPositiveDeterminant",
            Error::NotDefinedForElliptic(_) => "NotDefinedForElliptic",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::NotACycle(_) => "NotACycle",
            Error::NonCycle => "NonCycle",
            Error::ConjugateLeavesGroup(_) => "ConjugateLeavesGroup",
            Error::WrongDivisibility(_) => "WrongDivisibility",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}
