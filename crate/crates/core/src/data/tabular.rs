// Copyright 2026 The lupi-meta Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Precomputed-feature CSV files.
//!
//! Header row required. Columns: `group` (opaque string), `y` (real target),
//! one or more `x_<k>` input features and one or more `p_<k>` privileged
//! features. Feature columns are ordered by `k`, not by file position.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::{LupiDataset, Task};
use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

/// Rows of a tabular file: the dataset plus one group id per row.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularData {
    pub dataset: LupiDataset,
    pub groups: Vec<String>,
}

#[derive(Debug)]
struct Layout {
    group: usize,
    target: usize,
    inputs: Vec<(usize, String)>,
    privileged: Vec<(usize, String)>,
}

fn feature_index(name: &str, prefix: &str) -> Option<u64> {
    name.strip_prefix(prefix)?.parse().ok()
}

fn layout(headers: &csv::StringRecord) -> Result<Layout> {
    let mut group = None;
    let mut target = None;
    let mut inputs = Vec::new();
    let mut privileged = Vec::new();
    for (pos, raw) in headers.iter().enumerate() {
        let name = raw.trim();
        if name == "group" {
            group = Some(pos);
        } else if name == "y" {
            target = Some(pos);
        } else if let Some(k) = feature_index(name, "x_") {
            inputs.push((k, pos, name.to_string()));
        } else if let Some(k) = feature_index(name, "p_") {
            privileged.push((k, pos, name.to_string()));
        } else {
            return Err(Error::Schema(format!("unrecognised column `{name}`")));
        }
    }
    let group = group.ok_or_else(|| Error::Schema("missing required column `group`".into()))?;
    let target = target.ok_or_else(|| Error::Schema("missing required column `y`".into()))?;
    if inputs.is_empty() {
        return Err(Error::Schema("no input feature columns (`x_<k>`)".into()));
    }
    if privileged.is_empty() {
        return Err(Error::Schema(
            "no privileged feature columns (`p_<k>`)".into(),
        ));
    }
    let order = |mut v: Vec<(u64, usize, String)>| -> Result<Vec<(usize, String)>> {
        v.sort_by_key(|(k, _, _)| *k);
        if let Some(w) = v.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Schema(format!("duplicate column `{}`", w[1].2)));
        }
        Ok(v.into_iter().map(|(_, pos, name)| (pos, name)).collect())
    };
    Ok(Layout {
        group,
        target,
        inputs: order(inputs)?,
        privileged: order(privileged)?,
    })
}

fn parse_cell(record: &csv::StringRecord, pos: usize, name: &str, row: usize) -> Result<f64> {
    let cell = record.get(pos).unwrap_or("").trim();
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        column: name.to_string(),
        message: format!("`{cell}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column: name.to_string(),
            message: format!("`{cell}` is not finite"),
        });
    }
    Ok(v)
}

/// Parses a tabular file. Data rows are numbered from 1 in errors.
pub fn parse_tabular<R: Read>(reader: R, task: Task) -> Result<TabularData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let layout = layout(rdr.headers()?)?;
    let (d_in, d_priv) = (layout.inputs.len(), layout.privileged.len());
    let mut x = Vec::new();
    let mut x_star = Vec::new();
    let mut y = Vec::new();
    let mut groups = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        for (pos, name) in &layout.inputs {
            x.push(parse_cell(&record, *pos, name, row)?);
        }
        for (pos, name) in &layout.privileged {
            x_star.push(parse_cell(&record, *pos, name, row)?);
        }
        let target = parse_cell(&record, layout.target, "y", row)?;
        if task == Task::Classification && target != 0.0 && target != 1.0 {
            return Err(Error::Parse {
                row,
                column: "y".into(),
                message: format!("classification targets must be 0 or 1, got {target}"),
            });
        }
        y.push(target);
        groups.push(record.get(layout.group).unwrap_or("").to_string());
    }
    let n = y.len();
    Ok(TabularData {
        dataset: LupiDataset::new(
            Tensor2D::from_vec(n, d_in, x)?,
            Tensor2D::from_vec(n, d_priv, x_star)?,
            Tensor2D::from_vec(n, 1, y)?,
            task,
        )?,
        groups,
    })
}

pub fn load_tabular(path: impl AsRef<Path>, task: Task) -> Result<TabularData> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tabular(file, task)
}

/// Writes a dataset in the tabular layout. Only single-column targets fit.
pub fn write_tabular<W: Write>(writer: W, dataset: &LupiDataset, groups: &[String]) -> Result<()> {
    if groups.len() != dataset.len() {
        return Err(Error::shape(
            "write_tabular groups",
            dataset.len(),
            groups.len(),
        ));
    }
    if dataset.target_dim() != 1 {
        return Err(Error::shape(
            "write_tabular targets",
            1,
            dataset.target_dim(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["group".to_string(), "y".to_string()];
    header.extend((0..dataset.input_dim()).map(|k| format!("x_{k}")));
    header.extend((0..dataset.privileged_dim()).map(|k| format!("p_{k}")));
    w.write_record(&header)?;
    for (r, group) in groups.iter().enumerate() {
        let mut rec = vec![group.clone(), dataset.y.get(r, 0).to_string()];
        rec.extend(dataset.x.row(r).iter().map(f64::to_string));
        rec.extend(dataset.x_star.row(r).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<tabular output>", e))?;
    Ok(())
}

pub fn save_tabular(
    path: impl AsRef<Path>,
    dataset: &LupiDataset,
    groups: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_tabular(file, dataset, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_bookkeeping() {
        let csv = "group,y,x_0,x_1,p_0,p_1,p_2\na,1.5,1,2,3,4,5\nb,-2,0,0,1,1,1\n";
        let t = parse_tabular(csv.as_bytes(), Task::Regression).unwrap();
        assert_eq!(t.dataset.input_dim(), 2);
        assert_eq!(t.dataset.privileged_dim(), 3);
        assert_eq!(t.dataset.y.data(), &[1.5, -2.0]);
        assert_eq!(t.groups, vec!["a", "b"]);
    }

    #[test]
    fn columns_are_ordered_by_index() {
        let csv = "p_0,x_10,group,x_2,y\n9,1,g,2,0\n";
        let t = parse_tabular(csv.as_bytes(), Task::Regression).unwrap();
        assert_eq!(t.dataset.x.row(0), &[2.0, 1.0]);
    }

    #[test]
    fn empty_data_section() {
        let t = parse_tabular("group,y,x_0,p_0\n".as_bytes(), Task::Regression).unwrap();
        assert_eq!(t.dataset.len(), 0);
        assert_eq!(t.dataset.input_dim(), 1);
    }

    #[test]
    fn missing_columns_are_schema_errors() {
        for csv in [
            "y,x_0,p_0\n",
            "group,x_0,p_0\n",
            "group,y,p_0\n",
            "group,y,x_0\n",
            "group,y,x_0,p_0,extra\n",
            "group,y,x_0,x_00,p_0\n",
        ] {
            assert!(
                matches!(
                    parse_tabular(csv.as_bytes(), Task::Regression),
                    Err(Error::Schema(_))
                ),
                "{csv}"
            );
        }
    }

    #[test]
    fn bad_cells_report_location() {
        let csv = "group,y,x_0,p_0\na,1,2,3\nb,1,oops,3\n";
        match parse_tabular(csv.as_bytes(), Task::Regression) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "x_0");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        for bad_y in ["NaN", "inf", "-inf"] {
            let csv = format!("group,y,x_0,p_0\na,{bad_y},2,3\n");
            assert!(matches!(
                parse_tabular(csv.as_bytes(), Task::Regression),
                Err(Error::Parse { .. })
            ));
        }
        let csv = "group,y,x_0,p_0\na,0.5,2,3\n";
        assert!(parse_tabular(csv.as_bytes(), Task::Classification).is_err());
    }

    #[test]
    fn write_then_read() {
        let ds = LupiDataset::new(
            Tensor2D::from_rows(&[[0.1, -2.5], [3.0, 1e-9]]).unwrap(),
            Tensor2D::from_rows(&[[7.0], [0.333]]).unwrap(),
            Tensor2D::column(&[1.25, -0.5]),
            Task::Regression,
        )
        .unwrap();
        let groups = vec!["c1".to_string(), "c2".to_string()];
        let mut buf = Vec::new();
        write_tabular(&mut buf, &ds, &groups).unwrap();
        let back = parse_tabular(buf.as_slice(), Task::Regression).unwrap();
        assert_eq!(back.dataset, ds);
        assert_eq!(back.groups, groups);
    }
}
