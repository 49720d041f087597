//! Total evaluation of straight-line programs.
//!
//! Statements have no named operands. Each argument slot of type `t` binds
//! the most recent earlier value of type `t`, falling back to the program
//! input and finally to the type's default (`0` or `[]`). A second slot of
//! the same type binds the next most recent producer, or repeats the first
//! binding when there is none. Every function is total, so evaluation never
//! fails once the token ids are known to be valid.

use super::program::Program;
use super::registry::{IndexArg, Registry, Semantic};
use super::value::{Value, ValueType};
use super::DslError;

/// What an argument slot is bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Input,
    Statement(usize),
    Default(ValueType),
}

/// Per-statement output values, in execution order.
pub type Trace = Vec<Value>;

/// Resolves every argument slot of every statement.
///
/// Resolution only depends on token types and the input type, never on
/// runtime values.
pub fn bindings(program: &Program, registry: &Registry, input: ValueType) -> Vec<Vec<Binding>> {
    let mut out = Vec::with_capacity(program.len());
    let mut producers: Vec<ValueType> = Vec::with_capacity(program.len());
    for &tok in program.tokens() {
        let spec = registry.token(tok);
        let mut slots = Vec::with_capacity(spec.arg_types.len());
        for (slot, &ty) in spec.arg_types.iter().enumerate() {
            // which occurrence of this type among the slots so far
            let nth = spec.arg_types[..slot].iter().filter(|&&t| t == ty).count();
            let candidates = producers
                .iter()
                .enumerate()
                .rev()
                .filter(|(_, &t)| t == ty)
                .map(|(j, _)| Binding::Statement(j))
                .chain((input == ty).then_some(Binding::Input));
            let mut first = None;
            let mut chosen = None;
            for (k, b) in candidates.enumerate() {
                if k == 0 {
                    first = Some(b);
                }
                if k == nth {
                    chosen = Some(b);
                    break;
                }
            }
            slots.push(chosen.or(first).unwrap_or(Binding::Default(ty)));
        }
        producers.push(spec.ret_type);
        out.push(slots);
    }
    out
}

/// Runs `program` on `input`, returning the final output and the trace.
pub fn evaluate(program: &Program, input: &Value, registry: &Registry) -> Result<(Value, Trace), DslError> {
    program.validate(registry)?;
    let trace = run(program, input, registry);
    let output = trace.last().cloned().expect("validated programs are non-empty");
    Ok((output, trace))
}

/// Like [`evaluate`] but only the final output.
pub fn run_output(program: &Program, input: &Value, registry: &Registry) -> Result<Value, DslError> {
    evaluate(program, input, registry).map(|(out, _)| out)
}

/// Evaluation without id validation. Callers guarantee every id is in range.
pub(crate) fn run(program: &Program, input: &Value, registry: &Registry) -> Trace {
    let plan = bindings(program, registry, input.value_type());
    let mut trace: Trace = Vec::with_capacity(program.len());
    for (k, &tok) in program.tokens().iter().enumerate() {
        let semantic = registry.token(tok).semantic;
        let args: Vec<&Value> = plan[k]
            .iter()
            .map(|b| match *b {
                Binding::Input => input,
                Binding::Statement(j) => &trace[j],
                Binding::Default(ValueType::Int) => &DEFAULT_INT,
                Binding::Default(ValueType::List) => &DEFAULT_LIST,
            })
            .collect();
        let value = apply(semantic, &args);
        trace.push(value);
    }
    trace
}

static DEFAULT_INT: Value = Value::Int(0);
static DEFAULT_LIST: Value = Value::List(Vec::new());

fn int_arg(v: &Value) -> i32 {
    v.as_int().expect("binding resolution respects types")
}

fn list_arg(v: &Value) -> &[i32] {
    v.as_list().expect("binding resolution respects types")
}

fn clamp_count(n: i32, len: usize) -> usize {
    (n.max(0) as usize).min(len)
}

/// Applies one function to already-resolved arguments.
fn apply(semantic: Semantic, args: &[&Value]) -> Value {
    // Literal-indexed tokens take only the list; dataflow ones take (INT, LIST).
    let index_and_list = |arg: IndexArg| -> (i32, &[i32]) {
        match arg {
            IndexArg::Literal(n) => (n, list_arg(args[0])),
            IndexArg::Dataflow => (int_arg(args[0]), list_arg(args[1])),
        }
    };
    match semantic {
        Semantic::Head => Value::Int(list_arg(args[0]).first().copied().unwrap_or(0)),
        Semantic::Last => Value::Int(list_arg(args[0]).last().copied().unwrap_or(0)),
        Semantic::Take(arg) => {
            let (n, xs) = index_and_list(arg);
            Value::List(xs[..clamp_count(n, xs.len())].to_vec())
        }
        Semantic::Drop(arg) => {
            let (n, xs) = index_and_list(arg);
            Value::List(xs[clamp_count(n, xs.len())..].to_vec())
        }
        Semantic::Access(arg) => {
            let (n, xs) = index_and_list(arg);
            let v = usize::try_from(n).ok().and_then(|i| xs.get(i).copied());
            Value::Int(v.unwrap_or(0))
        }
        Semantic::Minimum => Value::Int(list_arg(args[0]).iter().copied().min().unwrap_or(0)),
        Semantic::Maximum => Value::Int(list_arg(args[0]).iter().copied().max().unwrap_or(0)),
        Semantic::Reverse => Value::List(list_arg(args[0]).iter().rev().copied().collect()),
        Semantic::Sort => {
            let mut xs = list_arg(args[0]).to_vec();
            xs.sort_unstable();
            Value::List(xs)
        }
        Semantic::Sum => Value::Int(list_arg(args[0]).iter().fold(0i32, |acc, &x| acc.saturating_add(x))),
        Semantic::Map(f) => Value::List(list_arg(args[0]).iter().map(|&x| f.apply(x)).collect()),
        Semantic::Filter(p) => Value::List(list_arg(args[0]).iter().copied().filter(|&x| p.test(x)).collect()),
        Semantic::Count(p) => Value::Int(list_arg(args[0]).iter().filter(|&&x| p.test(x)).count() as i32),
        Semantic::ZipWith(op) => {
            let (a, b) = (list_arg(args[0]), list_arg(args[1]));
            Value::List(a.iter().zip(b).map(|(&x, &y)| op.apply(x, y)).collect())
        }
        Semantic::Scanl1(op) => {
            let mut acc: Option<i32> = None;
            Value::List(
                list_arg(args[0])
                    .iter()
                    .map(|&x| {
                        let next = acc.map_or(x, |a| op.apply(a, x));
                        acc = Some(next);
                        next
                    })
                    .collect(),
            )
        }
    }
}
