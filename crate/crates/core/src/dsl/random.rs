//! Seeded generation of programs and inputs.

use rand::Rng;

use super::dce::effective_length;
use super::eval::{bindings, Binding};
use super::program::Program;
use super::registry::{Registry, TokenId};
use super::value::{Value, ValueType};
use super::DslError;

/// Longest program the generators accept.
pub const MAX_PROGRAM_LENGTH: usize = 16;
/// Attempts before [`random_program`] gives up.
pub const GENERATION_ATTEMPTS: usize = 1000;

/// Bounds for generated inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputBounds {
    pub min_len: usize,
    pub max_len: usize,
    pub min_value: i32,
    pub max_value: i32,
}

impl Default for InputBounds {
    fn default() -> Self {
        InputBounds { min_len: 1, max_len: 20, min_value: -255, max_value: 255 }
    }
}

pub fn random_token<R: Rng + ?Sized>(rng: &mut R, registry: &Registry) -> TokenId {
    TokenId::from(rng.random_range(0..registry.len()))
}

/// Uniform token sequence of the given length with no dead code.
pub fn random_program<R: Rng + ?Sized>(length: usize, rng: &mut R, registry: &Registry) -> Result<Program, DslError> {
    if length == 0 || length > MAX_PROGRAM_LENGTH {
        return Err(DslError::BadLength { length, max: MAX_PROGRAM_LENGTH });
    }
    for _ in 0..GENERATION_ATTEMPTS {
        let p = Program::new((0..length).map(|_| random_token(rng, registry)).collect());
        if effective_length(&p, registry) == length {
            return Ok(p);
        }
    }
    Err(DslError::GenerationExhausted { attempts: GENERATION_ATTEMPTS, length })
}

pub fn random_value<R: Rng + ?Sized>(ty: ValueType, rng: &mut R, bounds: &InputBounds) -> Value {
    match ty {
        ValueType::Int => Value::Int(rng.random_range(bounds.min_value..=bounds.max_value)),
        ValueType::List => {
            let len = rng.random_range(bounds.min_len..=bounds.max_len);
            Value::List(
                (0..len)
                    .map(|_| rng.random_range(bounds.min_value..=bounds.max_value))
                    .collect(),
            )
        }
    }
}

/// Input type a program actually reads: LIST when any statement binds a list
/// input, otherwise INT when one binds an integer input, otherwise LIST.
pub fn input_type_for(program: &Program, registry: &Registry) -> ValueType {
    let reads = |ty| {
        bindings(program, registry, ty)
            .iter()
            .flatten()
            .any(|b| *b == Binding::Input)
    };
    if reads(ValueType::List) || !reads(ValueType::Int) {
        ValueType::List
    } else {
        ValueType::Int
    }
}
