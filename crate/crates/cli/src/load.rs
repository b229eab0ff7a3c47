//! Dataset and label-list loading for the CLI.

use crate::config::ResolvedConfig;
use crate::CliError;
use mlbalance::arff;
use mlbalance::csvio;
use mlbalance::{DatasetFormat, MultiLabelDataset};
use std::path::Path;

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Label names from a MULAN XML file or a plain list (one name per line).
pub fn load_label_names(spec: &str) -> Result<Vec<String>, CliError> {
    let path = Path::new(spec);
    let text = read_file(path)?;
    if path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("xml"))
        || text.trim_start().starts_with('<')
    {
        return Ok(arff::parse_label_xml(&text)?);
    }
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if names.is_empty() {
        return Err(CliError::Input(format!("label file {spec} lists no names")));
    }
    Ok(names)
}

pub fn load_dataset(config: &ResolvedConfig) -> Result<MultiLabelDataset, CliError> {
    let text = read_file(&config.input)?;
    match config.format()? {
        DatasetFormat::Arff => {
            let labels_spec = config.labels.as_ref().ok_or_else(|| {
                CliError::Input("--labels is required for ARFF input".into())
            })?;
            let names = load_label_names(labels_spec)?;
            Ok(arff::parse_arff(&text, &names)?)
        }
        DatasetFormat::Csv => {
            let labels_spec = config.labels.as_ref().ok_or_else(|| {
                CliError::Input(
                    "--labels is required for CSV input (a count or a label file)".into(),
                )
            })?;
            if let Ok(count) = labels_spec.parse::<usize>() {
                return Ok(csvio::parse_dense_csv(&text, count)?);
            }
            let names = load_label_names(labels_spec)?;
            let dataset = csvio::parse_dense_csv(&text, names.len())?;
            if dataset.label_names() != names.as_slice() {
                return Err(CliError::Input(format!(
                    "label file names {:?} do not match the trailing CSV columns {:?}",
                    names,
                    dataset.label_names()
                )));
            }
            Ok(dataset)
        }
    }
}
