//! The list DSL: values, token registry, total evaluation with traces,
//! dead-code elimination and equivalence under a spec.

mod dce;
mod eval;
mod program;
mod random;
mod registry;
mod spec;
mod value;

use thiserror::Error;

pub use dce::{effective_length, eliminate_dead_code, live_statements};
pub use eval::{bindings, evaluate, run_output, Binding, Trace};
pub(crate) use eval::run;
pub use program::{Program, ProgramDisplay};
pub use random::{
    input_type_for, random_program, random_token, random_value, InputBounds, GENERATION_ATTEMPTS,
    MAX_PROGRAM_LENGTH,
};
pub use registry::{fnv1a64, BinOp, IndexArg, MapFn, Predicate, Registry, Semantic, TokenId, TokenSpec};
pub use spec::{equivalent, satisfies, traces, Example, Spec};
pub use value::{Value, ValueType, LIST_CAP};

#[derive(Debug, Error)]
pub enum DslError {
    #[error("registry error: {0}")]
    Registry(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("token id {id} is outside the registry (size {size})")]
    InvalidToken { id: u16, size: usize },
    #[error("empty program")]
    EmptyProgram,
    #[error("spec has no examples")]
    EmptySpec,
    #[error("spec mixes value types across examples")]
    MixedSpec,
    #[error("list of length {0} exceeds the cap of {LIST_CAP}")]
    ListTooLong(usize),
    #[error("program length {length} outside 1..={max}")]
    BadLength { length: usize, max: usize },
    #[error("no program of effective length {length} after {attempts} attempts")]
    GenerationExhausted { attempts: usize, length: usize },
}
