//! Crate-wide error type.
//!
//! Every fallible operation in the library reports one of these variants.
//! The variants are deliberately fine-grained so that callers (and the CLI)
//! can distinguish "your input is not a well-formed object" from "the
//! computation hit a configured limit" without string matching.

use thiserror::Error;

/// Flag identifier, used in error payloads.
pub type Flag = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    // ---- graph validation -------------------------------------------------
    /// The involution is not its own inverse.
    #[error("involution is not an involution: iota(iota({0})) != {0}")]
    InvolutionNotIdempotent(Flag),
    /// The root map and involution are inconsistent: the root map must be a
    /// retraction onto its image and the involution must fix that image.
    #[error("root map and involution are incompatible at flag {0}")]
    RootInvolutionIncompatible(Flag),
    /// Leg markings must be a bijection from 1..=n onto the legs; leg weights
    /// must assign positive integers to legs only.
    #[error("leg marking/weight data is not valid: {0}")]
    MarkingNotBijective(String),

    // ---- contraction ------------------------------------------------------
    /// The subgraph requested for contraction contains a cycle.
    #[error("contraction subgraph contains a cycle")]
    SubgraphHasCycle,
    /// The subgraph requested for contraction contains a leg.
    #[error("contraction subgraph contains leg flag {0}")]
    SubgraphHasLegs(Flag),

    // ---- divisor / rank ---------------------------------------------------
    /// The ambient graph must have genus at least two for this operation.
    #[error("genus {0} is too small for this operation (need >= 2)")]
    GenusTooSmall(u64),
    /// A point or length was supplied that is not a rational number.
    #[error("point or length is not rational: {0}")]
    IrrationalSupport(String),
    /// The common-denominator subdivision would exceed the configured budget.
    #[error("unit subdivision needs {needed} vertices, budget is {budget}")]
    SubdivisionTooLarge { needed: u64, budget: u64 },
    /// An edge length (or point offset) must be positive and within range.
    #[error("length or offset out of range: {0}")]
    NonpositiveLength(String),

    // ---- covers -----------------------------------------------------------
    /// The local harmonicity equation fails at the given source vertex.
    #[error("cover is not harmonic at source vertex {0}")]
    NotHarmonic(Flag),
    /// The local Riemann-Hurwitz vanishing condition fails at a source vertex.
    #[error("local Riemann-Hurwitz condition is nonzero at source vertex {0}")]
    RHNonzero(Flag),
    /// The fiber degrees over two target vertices disagree.
    #[error("fiber degree over target vertex {0} disagrees with global degree")]
    FiberDegreeMismatch(Flag),
    /// The flag map sends an edge into a vertex.
    #[error("map contracts the edge containing source flag {0}")]
    MapContractsEdge(Flag),

    // ---- Hurwitz numbers --------------------------------------------------
    /// A partition in a profile does not sum to the sheet number.
    #[error("profile partition does not sum to d={0}")]
    ProfileSumMismatch(u64),
    /// A cover's fiber profile disagrees with the requested one.
    #[error("cover has the wrong ramification profile: {0}")]
    WrongProfile(String),
    /// A multiplicity that must be a non-negative integer is not.
    #[error("computed multiplicity {0} is not a non-negative integer")]
    NonIntegralMultiplicity(String),

    // ---- enumeration ------------------------------------------------------
    /// The target tree is not trivalent.
    #[error("target tree is not trivalent at vertex {0}")]
    NotTrivalent(Flag),
    /// The requested genus exceeds the configured enumeration cap.
    #[error("genus {genus} exceeds the enumeration cap {cap}")]
    GenusCapExceeded { genus: u64, cap: u64 },

    // ---- Weierstrass reports ----------------------------------------------
    /// The metric graph's model is not trivalent, so the count is undefined.
    #[error("model graph is not trivalent at vertex {0}")]
    NonTrivalentModel(Flag),
    /// The length system for a witness is singular.
    #[error("length system is singular for a witness over tree #{0}")]
    SingularSystem(usize),
    /// The supplied edge lengths are not generic: a witness degenerates or
    /// two inequivalent classes collide at the same point.
    #[error("edge lengths are not generic: {0}")]
    GenericityViolation(String),
    /// Two members of one marked equivalence class disagree on multiplicity.
    #[error("marked class has inconsistent multiplicities: {0}")]
    InconsistentClassMultiplicity(String),

    // ---- general ----------------------------------------------------------
    /// Malformed input that is not attributable to a specific check above.
    #[error("usage error: {0}")]
    UsageError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
