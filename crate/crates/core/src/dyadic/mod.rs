//! Dyadic intervals of `[0, 1)`, sparse families, atom partitions and the
//! principal-cubes construction.

mod family;
mod interval;
mod principal;

pub use family::{
    atoms_of, carleson_constant, chain_family, packing_ratio, AtomPartition, SparseFamily,
};
pub use interval::{relate, DyadicInterval, Relation, MAX_LEVEL};
pub use principal::{
    build_principal_cubes, principal_domination, DominationReport, Integrand, StoppingFamily,
    STOPPING_TOL,
};
