use crate::dsl::{run, Program, Registry, Spec, Value};

/// Cap on the distance between two integer outputs.
pub const INT_DISTANCE_CAP: i64 = 64;
/// Distance between an integer and a list.
pub const TYPE_MISMATCH_PENALTY: f64 = 128.0;

/// Edit distance with unit insert, delete and substitute costs.
pub fn levenshtein(a: &[i32], b: &[i32]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let next = (diag + usize::from(x != y)).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Distance between a produced and an expected output.
pub fn output_distance(got: &Value, want: &Value) -> f64 {
    match (got, want) {
        (Value::List(a), Value::List(b)) => levenshtein(a, b) as f64,
        (Value::Int(a), Value::Int(b)) => (*a as i64 - *b as i64).abs().min(INT_DISTANCE_CAP) as f64,
        _ => TYPE_MISMATCH_PENALTY,
    }
}

/// Summed output distance over the examples; zero exactly when `program`
/// satisfies `spec`.
pub fn program_error(program: &Program, spec: &Spec, registry: &Registry) -> f64 {
    spec.examples()
        .iter()
        .map(|e| {
            let trace = run(program, &e.input, registry);
            let got = trace.last().cloned().unwrap_or_else(|| e.input.clone());
            output_distance(&got, &e.output)
        })
        .sum()
}
