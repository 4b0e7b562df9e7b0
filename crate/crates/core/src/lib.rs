//! Executable quantum domain theory at desk scale.
//!
//! Finite posets and dcpos, effect algebras and effect modules, the
//! subdistribution monad, finite-dimensional W*-algebras under the Löwner
//! order, Kraus-form sub-unital maps, a weakest-precondition calculus for a
//! small quantum command language, and runnable failure witnesses for the
//! non-W* cases.

pub mod matrix;
pub mod random;
pub mod wstar;
pub mod cpmaps;
pub mod order;
pub mod report;
pub mod effect;
pub mod subdist;
pub mod counterexamples;
pub mod wp;
