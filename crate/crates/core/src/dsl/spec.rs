use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::eval::{run, Trace};
use super::program::Program;
use super::registry::Registry;
use super::value::Value;
use super::DslError;

/// One input-output pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    #[serde(rename = "in")]
    pub input: Value,
    #[serde(rename = "out")]
    pub output: Value,
}

impl Example {
    pub fn new(input: impl Into<Value>, output: impl Into<Value>) -> Self {
        Example { input: input.into(), output: output.into() }
    }
}

/// The behaviour a synthesized program must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Example>", into = "Vec<Example>")]
pub struct Spec {
    examples: Vec<Example>,
}

impl Spec {
    /// Requires at least one example, and a single type for inputs and for outputs.
    pub fn new(examples: Vec<Example>) -> Result<Self, DslError> {
        let first = examples.first().ok_or(DslError::EmptySpec)?;
        let (it, ot) = (first.input.value_type(), first.output.value_type());
        if examples
            .iter()
            .any(|e| e.input.value_type() != it || e.output.value_type() != ot)
        {
            return Err(DslError::MixedSpec);
        }
        Ok(Spec { examples })
    }

    /// Builds a spec by running `program` on every input.
    pub fn from_program(program: &Program, inputs: Vec<Value>, registry: &Registry) -> Result<Self, DslError> {
        program.validate(registry)?;
        let examples = inputs
            .into_iter()
            .map(|input| {
                let output = run(program, &input, registry).pop().expect("non-empty");
                Example { input, output }
            })
            .collect();
        Spec::new(examples)
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Value> {
        self.examples.iter().map(|e| &e.input)
    }

    /// Reads JSON lines of `{"in": ..., "out": ...}`; blank lines are skipped.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, DslError> {
        let mut examples = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| DslError::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: Example = serde_json::from_str(&line)
                .map_err(|e| DslError::Parse(format!("spec line {}: {e}", i + 1)))?;
            examples.push(ex);
        }
        Spec::new(examples)
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for ex in &self.examples {
            serde_json::to_writer(&mut writer, ex)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<Example>> for Spec {
    type Error = DslError;

    fn try_from(examples: Vec<Example>) -> Result<Self, Self::Error> {
        Spec::new(examples)
    }
}

impl From<Spec> for Vec<Example> {
    fn from(spec: Spec) -> Self {
        spec.examples
    }
}

/// Execution traces of `program` on every input of `spec`.
pub fn traces(program: &Program, spec: &Spec, registry: &Registry) -> Result<Vec<Trace>, DslError> {
    program.validate(registry)?;
    Ok(spec.inputs().map(|i| run(program, i, registry)).collect())
}

/// True iff `program` maps every input of `spec` to its output.
pub fn satisfies(program: &Program, spec: &Spec, registry: &Registry) -> Result<bool, DslError> {
    program.validate(registry)?;
    Ok(satisfies_unchecked(program, spec, registry))
}

pub(crate) fn satisfies_unchecked(program: &Program, spec: &Spec, registry: &Registry) -> bool {
    spec.examples()
        .iter()
        .all(|e| run(program, &e.input, registry).last() == Some(&e.output))
}

/// Equivalence under a spec: both programs reproduce every example's output.
pub fn equivalent(pa: &Program, pb: &Program, spec: &Spec, registry: &Registry) -> Result<bool, DslError> {
    Ok(satisfies(pa, spec, registry)? && satisfies(pb, spec, registry)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(xs: &[i32]) -> Value {
        Value::List(xs.to_vec())
    }

    #[test]
    fn table_program_equivalent_to_itself() {
        let reg = Registry::deepcoder();
        let p = Program::parse("FILTER(>0),MAP(*2),SORT,REVERSE", &reg).unwrap();
        let spec = Spec::new(vec![Example::new(list(&[-2, 10, 3, -4, 5, 2]), list(&[20, 10, 6, 4]))]).unwrap();
        assert!(equivalent(&p, &p, &spec, &reg).unwrap());
    }

    #[test]
    fn order_matters() {
        let reg = Registry::deepcoder();
        let pa = Program::parse("SORT,REVERSE", &reg).unwrap();
        let pb = Program::parse("REVERSE,SORT", &reg).unwrap();
        let spec = Spec::new(vec![Example::new(list(&[2, 1]), list(&[1, 2]))]).unwrap();
        assert!(!equivalent(&pa, &pb, &spec, &reg).unwrap());
    }

    #[test]
    fn identical_programs_must_still_match_outputs() {
        let reg = Registry::deepcoder();
        let p = Program::parse("SORT", &reg).unwrap();
        let spec = Spec::new(vec![Example::new(list(&[2, 1]), list(&[2, 1]))]).unwrap();
        assert!(!equivalent(&p, &p, &spec, &reg).unwrap());
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(Spec::new(vec![]), Err(DslError::EmptySpec)));
        let mixed = vec![Example::new(1, 2), Example::new(list(&[1]), 2)];
        assert!(matches!(Spec::new(mixed), Err(DslError::MixedSpec)));
    }

    #[test]
    fn jsonl_io() {
        let text = "{\"in\":[1,2],\"out\":3}\n\n{\"in\":[],\"out\":0}\n";
        let spec = Spec::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(spec.len(), 2);
        let mut buf = Vec::new();
        spec.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"in\":[1,2],\"out\":3}\n{\"in\":[],\"out\":0}\n");
        assert!(Spec::read_jsonl("{\"in\":[1]}".as_bytes()).is_err());
    }
}
