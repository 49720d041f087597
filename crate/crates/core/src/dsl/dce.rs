//! Dead-code elimination over the implicit dataflow.
//!
//! A statement is live when the final statement depends on it through a chain
//! of argument bindings. Binding resolution only looks at types, so liveness
//! is static. Dropping dead statements never changes what a live statement
//! binds: each live binding points at the most recent producer(s) of a type,
//! and those producers are live themselves.

use super::eval::{bindings, Binding};
use super::program::Program;
use super::registry::Registry;
use super::value::ValueType;

/// Liveness flag per statement.
pub fn live_statements(program: &Program, registry: &Registry) -> Vec<bool> {
    let n = program.len();
    let mut live = vec![false; n];
    if n == 0 {
        return live;
    }
    // Statement bindings do not depend on the input type (see module docs),
    // so any input type works here.
    let plan = bindings(program, registry, ValueType::List);
    live[n - 1] = true;
    for k in (0..n).rev() {
        if !live[k] {
            continue;
        }
        for b in &plan[k] {
            if let Binding::Statement(j) = *b {
                live[j] = true;
            }
        }
    }
    live
}

/// Removes every statement whose output never reaches the final statement.
pub fn eliminate_dead_code(program: &Program, registry: &Registry) -> Program {
    let live = live_statements(program, registry);
    Program::new(
        program
            .tokens()
            .iter()
            .zip(&live)
            .filter(|(_, &l)| l)
            .map(|(&t, _)| t)
            .collect(),
    )
}

/// Length after dead-code elimination.
pub fn effective_length(program: &Program, registry: &Registry) -> usize {
    live_statements(program, registry).iter().filter(|&&l| l).count()
}
