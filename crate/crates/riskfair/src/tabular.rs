//! CSV layout for [`TabularDataset`]: `id`, the feature columns, `label`,
//! `weight`, then one `protected.<name>` column per protected attribute.

use std::collections::BTreeMap;

use riskfair_core::{Matrix, TabularDataset};

use crate::error::{AppError, AppResult};
use crate::report::csv_table;

pub const PROTECTED_PREFIX: &str = "protected.";

pub fn write_tabular(ds: &TabularDataset) -> String {
    let mut header: Vec<String> = vec!["id".into()];
    header.extend(ds.feature_names().iter().cloned());
    header.push("label".into());
    header.push("weight".into());
    let prot: Vec<(&String, &Vec<u8>)> = ds.protected_columns().iter().collect();
    header.extend(prot.iter().map(|(n, _)| format!("{PROTECTED_PREFIX}{n}")));
    let rows: Vec<Vec<String>> = (0..ds.len())
        .map(|i| {
            let mut r = vec![ds.ids()[i].clone()];
            r.extend(ds.x().row(i).iter().map(|v| format!("{v}")));
            r.push(ds.y()[i].to_string());
            r.push(format!("{}", ds.weights()[i]));
            r.extend(prot.iter().map(|(_, v)| v[i].to_string()));
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_table(&header, &rows)
}

pub fn read_tabular(text: &str) -> AppResult<TabularDataset> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| AppError::Schema(format!("tabular file has no `{name}` column")))
    };
    let id_col = find("id")?;
    let label_col = find("label")?;
    let weight_col = headers.iter().position(|h| h == "weight");
    let mut features = Vec::new();
    let mut protected = Vec::new();
    for (j, h) in headers.iter().enumerate() {
        if j == id_col || j == label_col || Some(j) == weight_col {
            continue;
        }
        match h.strip_prefix(PROTECTED_PREFIX) {
            Some(name) => protected.push((j, name.to_string())),
            None => features.push((j, h.clone())),
        }
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut prot: Vec<Vec<u8>> = vec![Vec::new(); protected.len()];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row_no = i + 1;
        let cell = |j: usize| rec.get(j).unwrap_or("").trim();
        let num = |j: usize| -> AppResult<f64> {
            cell(j).parse::<f64>().map_err(|_| AppError::Parse {
                row: row_no,
                column: headers[j].clone(),
                detail: format!("`{}` is not a number", cell(j)),
            })
        };
        let bit = |j: usize| -> AppResult<u8> {
            match cell(j) {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(AppError::Parse {
                    row: row_no,
                    column: headers[j].clone(),
                    detail: format!("`{other}` is not 0 or 1"),
                }),
            }
        };
        ids.push(cell(id_col).to_string());
        rows.push(features.iter().map(|&(j, _)| num(j)).collect::<AppResult<Vec<f64>>>()?);
        y.push(bit(label_col)?);
        if let Some(j) = weight_col {
            w.push(num(j)?);
        }
        for (k, &(j, _)) in protected.iter().enumerate() {
            prot[k].push(bit(j)?);
        }
    }
    let x = if rows.is_empty() { Matrix::zeros(0, features.len()) } else { Matrix::from_rows(&rows)? };
    let protected: BTreeMap<String, Vec<u8>> = protected.into_iter().map(|(_, n)| n).zip(prot).collect();
    Ok(TabularDataset::new(
        features.into_iter().map(|(_, n)| n).collect(),
        x,
        y,
        protected,
        weight_col.map(|_| w),
        ids,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use riskfair_core::synth::{generate_biased, SynthSpec};

    #[test]
    fn round_trip_is_exact() {
        let ds = generate_biased(&SynthSpec { n: 50, delta: 0.1, ..Default::default() }).unwrap();
        let text = write_tabular(&ds);
        let back = read_tabular(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(write_tabular(&back), text);
    }

    #[test]
    fn non_binary_label_is_a_parse_error() {
        let e = read_tabular("id,f,label\na,1.0,2\n").unwrap_err();
        assert!(matches!(e, AppError::Parse { row: 1, .. }), "{e}");
    }
}
