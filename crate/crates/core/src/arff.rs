//! ARFF reading/writing (dense and sparse rows) and the MULAN XML label
//! list. Attributes must be numeric or {0,1}-nominal; missing values are
//! rejected.

use crate::dataset::{DataError, MultiLabelDataset};

#[derive(Debug, Clone, PartialEq)]
enum AttrKind {
    Numeric,
    Binary,
}

#[derive(Debug)]
struct Attribute {
    name: String,
    kind: AttrKind,
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

/// Attribute names may be bare or quoted with ' or ".
fn split_attribute_decl(rest: &str, line: usize) -> Result<(String, String), DataError> {
    let rest = rest.trim();
    if rest.is_empty() {
        return Err(parse_err(line, "@attribute without a name"));
    }
    let (name, tail) = if let Some(quote) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let closing = rest[1..]
            .find(quote)
            .ok_or_else(|| parse_err(line, "unterminated quoted attribute name"))?;
        (
            rest[1..1 + closing].to_string(),
            rest[2 + closing..].trim().to_string(),
        )
    } else {
        let mut parts = rest.splitn(2, char::is_whitespace);
        let name = parts.next().unwrap().to_string();
        let tail = parts.next().unwrap_or("").trim().to_string();
        (name, tail)
    };
    if tail.is_empty() {
        return Err(parse_err(line, format!("attribute '{name}' has no type")));
    }
    Ok((name, tail))
}

fn parse_attribute_type(name: &str, spec: &str, line: usize) -> Result<AttrKind, DataError> {
    let lower = spec.to_ascii_lowercase();
    if lower == "numeric" || lower == "real" || lower == "integer" {
        return Ok(AttrKind::Numeric);
    }
    if spec.starts_with('{') && spec.ends_with('}') {
        let mut values: Vec<&str> = spec[1..spec.len() - 1]
            .split(',')
            .map(str::trim)
            .collect();
        values.sort_unstable();
        if values == ["0", "1"] || values == ["0"] || values == ["1"] {
            return Ok(AttrKind::Binary);
        }
        return Err(parse_err(
            line,
            format!("attribute '{name}' has nominal values {spec}, only {{0,1}} is supported"),
        ));
    }
    Err(parse_err(
        line,
        format!("attribute '{name}' has unsupported type '{spec}'"),
    ))
}

fn parse_cell(token: &str, line: usize, attr: &Attribute, is_label: bool) -> Result<f64, DataError> {
    let token = token.trim();
    if token == "?" {
        return Err(parse_err(
            line,
            format!("missing value for attribute '{}'", attr.name),
        ));
    }
    let value: f64 = token.parse().map_err(|_| {
        parse_err(
            line,
            format!("cell '{token}' for attribute '{}' is not numeric", attr.name),
        )
    })?;
    if !value.is_finite() {
        return Err(parse_err(
            line,
            format!("non-finite value for attribute '{}'", attr.name),
        ));
    }
    if (is_label || attr.kind == AttrKind::Binary) && value != 0.0 && value != 1.0 {
        return Err(DataError::Validation {
            line,
            message: format!(
                "attribute '{}' expects 0/1 but row has {token}",
                attr.name
            ),
        });
    }
    Ok(value)
}

/// Parse an ARFF document. Attributes named in `label_names` become the Y
/// columns, in `label_names` order; everything else becomes X in declaration
/// order. Sparse rows `{idx val, ...}` expand with unlisted entries = 0.
pub fn parse_arff(text: &str, label_names: &[String]) -> Result<MultiLabelDataset, DataError> {
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut data_started = false;
    let mut feature_cols: Vec<usize> = Vec::new();
    let mut label_cols: Vec<usize> = Vec::new();
    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Vec<u8>> = Vec::new();
    let mut is_label_col: Vec<Option<usize>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !data_started {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                continue;
            } else if lower.starts_with("@attribute") {
                let rest = &line["@attribute".len()..];
                let (name, type_spec) = split_attribute_decl(rest, line_no)?;
                let kind = parse_attribute_type(&name, &type_spec, line_no)?;
                attributes.push(Attribute { name, kind });
            } else if lower.starts_with("@data") {
                if attributes.is_empty() {
                    return Err(parse_err(line_no, "@data before any @attribute"));
                }
                // resolve the label -> column mapping once
                is_label_col = vec![None; attributes.len()];
                for (li, wanted) in label_names.iter().enumerate() {
                    let col = attributes
                        .iter()
                        .position(|a| &a.name == wanted)
                        .ok_or_else(|| {
                            DataError::Schema(format!(
                                "label '{wanted}' is not a declared attribute"
                            ))
                        })?;
                    if is_label_col[col].is_some() {
                        return Err(DataError::Schema(format!(
                            "label '{wanted}' listed twice"
                        )));
                    }
                    is_label_col[col] = Some(li);
                }
                label_cols = label_names
                    .iter()
                    .map(|wanted| attributes.iter().position(|a| &a.name == wanted).unwrap())
                    .collect();
                feature_cols = (0..attributes.len())
                    .filter(|c| is_label_col[*c].is_none())
                    .collect();
                data_started = true;
            } else {
                return Err(parse_err(line_no, format!("unexpected header line '{line}'")));
            }
            continue;
        }

        // data section
        let mut row = vec![0.0f64; attributes.len()];
        if line.starts_with('{') {
            if !line.ends_with('}') {
                return Err(parse_err(line_no, "sparse row is not closed with '}'"));
            }
            let inner = line[1..line.len() - 1].trim();
            if !inner.is_empty() {
                for pair in inner.split(',') {
                    let mut it = pair.trim().splitn(2, char::is_whitespace);
                    let idx_tok = it.next().unwrap_or("");
                    let val_tok = it
                        .next()
                        .ok_or_else(|| parse_err(line_no, format!("sparse entry '{pair}' has no value")))?;
                    let col: usize = idx_tok.trim().parse().map_err(|_| {
                        parse_err(line_no, format!("sparse index '{idx_tok}' is not an integer"))
                    })?;
                    if col >= attributes.len() {
                        return Err(parse_err(
                            line_no,
                            format!("sparse index {col} exceeds attribute count {}", attributes.len()),
                        ));
                    }
                    row[col] = parse_cell(val_tok, line_no, &attributes[col], is_label_col[col].is_some())?;
                }
            }
        } else {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != attributes.len() {
                return Err(parse_err(
                    line_no,
                    format!(
                        "row has {} values, expected {} attributes",
                        cells.len(),
                        attributes.len()
                    ),
                ));
            }
            for (col, cell) in cells.iter().enumerate() {
                row[col] = parse_cell(cell, line_no, &attributes[col], is_label_col[col].is_some())?;
            }
        }
        features.push(feature_cols.iter().map(|&c| row[c]).collect());
        labels.push(label_cols.iter().map(|&c| row[c] as u8).collect());
    }

    if !data_started {
        return Err(DataError::Schema("document has no @data section".into()));
    }
    let feature_names = feature_cols
        .iter()
        .map(|&c| attributes[c].name.clone())
        .collect();
    MultiLabelDataset::new(features, labels, feature_names, label_names.to_vec())
}

fn quote_if_needed(name: &str) -> String {
    if name
        .chars()
        .any(|c| c.is_whitespace() || c == ',' || c == '{' || c == '}' || c == '%')
    {
        format!("'{name}'")
    } else {
        name.to_string()
    }
}

/// Serialize as dense ARFF: features first (numeric), then labels ({0,1}).
/// Feature values use the shortest representation that round-trips in f64.
pub fn write_arff(dataset: &MultiLabelDataset) -> String {
    let mut out = String::from("@relation dataset\n\n");
    for name in dataset.feature_names() {
        out.push_str(&format!("@attribute {} numeric\n", quote_if_needed(name)));
    }
    for name in dataset.label_names() {
        out.push_str(&format!("@attribute {} {{0,1}}\n", quote_if_needed(name)));
    }
    out.push_str("\n@data\n");
    for i in 0..dataset.num_instances() {
        let mut cells: Vec<String> = dataset.feature_row(i).iter().map(|v| format!("{v}")).collect();
        cells.extend(dataset.label_row(i).iter().map(|y| y.to_string()));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Extract top-level `<label name="...">` names from a MULAN labels XML file.
/// Nested label elements (hierarchies) are ignored.
pub fn parse_label_xml(text: &str) -> Result<Vec<String>, DataError> {
    let mut names = Vec::new();
    let mut depth = 0usize;
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let Some(end_rel) = rest[start..].find('>') else {
            return Err(DataError::Schema("unterminated XML tag".into()));
        };
        let tag = &rest[start + 1..start + end_rel];
        rest = &rest[start + end_rel + 1..];
        let trimmed = tag.trim();
        if trimmed.starts_with('?') || trimmed.starts_with('!') {
            continue;
        }
        let self_closing = trimmed.ends_with('/');
        let body = trimmed.trim_end_matches('/').trim();
        if let Some(name_part) = body.strip_prefix("label") {
            if body.starts_with("labels") {
                // the <labels> root element
                if !self_closing {
                    depth += 1;
                }
                continue;
            }
            if depth == 1 {
                let attr = name_part
                    .split("name=")
                    .nth(1)
                    .ok_or_else(|| DataError::Schema("label element without name attribute".into()))?;
                let attr = attr.trim();
                let quote = attr
                    .chars()
                    .next()
                    .filter(|c| *c == '"' || *c == '\'')
                    .ok_or_else(|| DataError::Schema("label name attribute is not quoted".into()))?;
                let close = attr[1..]
                    .find(quote)
                    .ok_or_else(|| DataError::Schema("unterminated label name attribute".into()))?;
                names.push(attr[1..1 + close].to_string());
            }
            if !self_closing {
                depth += 1;
            }
        } else if body.starts_with("/label") {
            depth = depth.saturating_sub(1);
        }
    }
    if names.is_empty() {
        return Err(DataError::Schema("no label elements found in XML".into()));
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_INSTANCE: &str = "@relation demo\n@attribute a1 numeric\n@attribute L1 {0,1}\n@data\n0.5,1\n1.0,0\n";

    fn l1() -> Vec<String> {
        vec!["L1".to_string()]
    }

    #[test]
    fn parses_dense_document() {
        let ds = parse_arff(TWO_INSTANCE, &l1()).unwrap();
        assert_eq!(ds.num_instances(), 2);
        assert_eq!(ds.num_features(), 1);
        assert_eq!(ds.num_labels(), 1);
        assert_eq!(ds.feature_row(0), &[0.5]);
        assert_eq!(ds.feature_row(1), &[1.0]);
        assert_eq!(ds.label_row(0), &[1]);
        assert_eq!(ds.label_row(1), &[0]);
    }

    #[test]
    fn sparse_row_matches_dense() {
        let sparse = "@relation demo\n@attribute a1 numeric\n@attribute L1 {0,1}\n@data\n{0 0.5, 1 1}\n1.0,0\n";
        let a = parse_arff(TWO_INSTANCE, &l1()).unwrap();
        let b = parse_arff(sparse, &l1()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_row_defaults_to_zero() {
        let text = "@relation demo\n@attribute a1 numeric\n@attribute L1 {0,1}\n@data\n{}\n{1 1}\n";
        let ds = parse_arff(text, &l1()).unwrap();
        assert_eq!(ds.feature_row(0), &[0.0]);
        assert_eq!(ds.label_row(0), &[0]);
        assert_eq!(ds.label_row(1), &[1]);
    }

    #[test]
    fn label_value_outside_binary_fails() {
        let text = "@relation demo\n@attribute a1 numeric\n@attribute L1 {0,1}\n@data\n0.5,2\n";
        match parse_arff(text, &l1()) {
            Err(DataError::Validation { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_name_fails() {
        match parse_arff(TWO_INSTANCE, &[String::from("nope")]) {
            Err(DataError::Schema(msg)) => assert!(msg.contains("nope")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "@relation demo\n@attribute a1 numeric\n@attribute L1 {0,1}\n@data\n0.5\n";
        match parse_arff(text, &l1()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn keywords_are_case_insensitive_and_comments_skipped() {
        let text = "% comment\n@RELATION demo\n@ATTRIBUTE a1 NUMERIC\n@Attribute L1 {0,1}\n@DATA\n% another\n0.5,1\n";
        let ds = parse_arff(text, &l1()).unwrap();
        assert_eq!(ds.num_instances(), 1);
    }

    #[test]
    fn roundtrip_preserves_dataset() {
        let ds = parse_arff(TWO_INSTANCE, &l1()).unwrap();
        let text = write_arff(&ds);
        let back = parse_arff(&text, &l1()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn labels_before_features_are_reordered() {
        let text = "@relation demo\n@attribute L1 {0,1}\n@attribute a1 numeric\n@data\n1,0.5\n";
        let ds = parse_arff(text, &l1()).unwrap();
        assert_eq!(ds.feature_names(), &["a1".to_string()]);
        assert_eq!(ds.feature_row(0), &[0.5]);
        assert_eq!(ds.label_row(0), &[1]);
    }

    #[test]
    fn xml_labels_top_level_only() {
        let xml = r#"<?xml version="1.0"?>
<labels xmlns="http://mulan.sourceforge.net/labels">
  <label name="A"></label>
  <label name="B">
    <label name="nested"/>
  </label>
  <label name="C"/>
</labels>"#;
        let names = parse_label_xml(xml).unwrap();
        assert_eq!(names, vec!["A", "B", "C"]);
    }
}
