//! Executable model of two toy WHILE languages, their secure compilers and
//! exhaustive checkers for the hyperproperty-preservation criteria that
//! relate them.

pub mod compilers;
pub mod enumerate;
pub mod error;
pub mod gsos;
pub mod hyperprops;
pub mod machine;
pub mod opsem;
pub mod parse;
pub mod registry;
pub mod syntax;
pub mod tau_tilde;
pub mod traces;
pub mod universe;
pub mod verdict;

pub use error::{Error, Result};
pub use opsem::{Event, Next, Rule};
pub use syntax::{BinOp, Ctx, Expr, Free, Layer, Term, UnOp};
pub use universe::{Lang, Level, Store, Universe, Value, VarId};
pub use verdict::{Verdict, Witness};
