//! Construction and certification of virtual retracts and virtual free
//! factors in free and virtually free groups.
//!
//! The crate is organized around the witness pipeline
//! homomorphism search → preimage coset table → Reidemeister–Schreier →
//! Tietze simplification → free-product splitting → order certification,
//! with supporting exact integer linear algebra, Stallings subgroup graphs
//! and graph-of-groups machinery.

pub mod bassserre;
pub mod cosets;
pub mod fpgroup;
pub mod homsearch;
pub mod intlin;
pub mod permgrp;
pub mod pipeline;
pub mod rs;
pub mod stallings;
pub mod words;

pub use bassserre::{
    CriterionVerdict, FiniteGroupTable, FixedTreeVerdict, FpAtom, FpWord, GogEdge, GraphOfGroups,
    OrderResult, VertexSpec,
};
pub use cosets::CosetTable;
pub use fpgroup::{AbelianInvariants, FreeSplit, Presentation, TietzeTrail};
pub use homsearch::{FindOutcome, SearchBudget};
pub use intlin::{IntMatrix, Lattice, LatticeIndex, SnfResult};
pub use permgrp::{GroupHom, PermGroup, Permutation};
pub use pipeline::{AppendixReport, Budgets, FreeFactorCertificate, WitnessOutcome};
pub use rs::SubgroupPresentation;
pub use stallings::{HallCompletion, Retraction, StallingsGraph};
pub use words::{Alphabet, Word, WordError};
