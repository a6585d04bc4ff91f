//! Exact symbolic engine for the category of paths Λ(k).
//!
//! The modules follow the objects of the theory: paths and their common
//! extensions ([`cat_paths`]), boundary points and cylinder partitions
//! ([`boundary`]), the groupoid G and its subgroupoids G_i ([`groupoid`]),
//! continued fractions and ordered K₀ ([`cf_order`]), the invariant measure
//! ([`measure`]), AF chains ([`bratteli`]) and explicit finite categories
//! ([`finite_cat`]).

pub mod boundary;
pub mod bratteli;
pub mod cat_paths;
pub mod cf_order;
pub mod finite_cat;
pub mod groupoid;
pub mod measure;

pub use cat_paths::{Block, Edge, KSequence, Path, PathError};
