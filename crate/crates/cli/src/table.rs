//! Plain-text rendering of a JSON value.

use serde_json::Value;

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => format!("{x:.6e}"),
            _ => n.to_string(),
        },
        Value::Array(items) if items.len() == 2 && items.iter().all(Value::is_number) => {
            let re = items[0].as_f64().unwrap_or(0.0);
            let im = items[1].as_f64().unwrap_or(0.0);
            format!("{re:+.6}{im:+.6}i")
        }
        Value::Array(items) => format!(
            "[{}]",
            items.iter().map(cell).collect::<Vec<_>>().join(", ")
        ),
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| format!("{k}={}", cell(v)))
            .collect::<Vec<_>>()
            .join(" "),
        other => other.to_string(),
    }
}

fn grid(rows: &[&serde_json::Map<String, Value>]) -> String {
    let mut columns: Vec<&String> = Vec::new();
    for r in rows {
        for k in r.keys() {
            if !columns.contains(&k) {
                columns.push(k);
            }
        }
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            columns
                .iter()
                .map(|c| r.get(*c).map(cell).unwrap_or_default())
                .collect()
        })
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            body.iter()
                .map(|row| row[i].len())
                .chain([c.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = vec![line(columns.iter().map(|c| c.to_string()).collect())];
    out.extend(body.into_iter().map(line));
    out.join("\n")
}

fn object_rows(items: &[Value]) -> Option<Vec<&serde_json::Map<String, Value>>> {
    if items.is_empty() {
        return None;
    }
    items.iter().map(Value::as_object).collect()
}

/// Arrays of objects become column tables; objects list their scalar fields
/// and then render nested tables under their key.
pub fn render(v: &Value) -> String {
    match v {
        Value::Array(items) => match object_rows(items) {
            Some(rows) => grid(&rows),
            None => cell(v),
        },
        Value::Object(map) => {
            let mut scalars = Vec::new();
            let mut nested = Vec::new();
            for (k, val) in map {
                match val {
                    Value::Array(items) if object_rows(items).is_some() => nested.push((k, val)),
                    Value::Object(_) => nested.push((k, val)),
                    _ => scalars.push(format!("{k}: {}", cell(val))),
                }
            }
            let mut parts = Vec::new();
            if !scalars.is_empty() {
                parts.push(scalars.join("\n"));
            }
            for (k, val) in nested {
                parts.push(format!("[{k}]\n{}", render(val)));
            }
            parts.join("\n\n")
        }
        other => cell(other),
    }
}
