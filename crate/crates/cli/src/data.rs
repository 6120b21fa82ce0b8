//! Headered CSV datasets: first column `y`, then `x_1..x_p` in model order.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use msavg::regression::Dataset;
use ndarray::{Array1, Array2};

use crate::output::{csv_bytes, num, write_atomic};

pub fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let width = rdr.headers()?.len();
    if width < 2 {
        bail!("{}: need a y column and at least one x column", path.display());
    }
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), i + 1))?;
        if rec.len() != width {
            bail!("{}: record {} has {} fields, header has {width}", path.display(), i + 1, rec.len());
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| anyhow!("{}: record {}, column {}: not a number: {field:?}", path.display(), i + 1, j + 1))?;
            values.push(v);
        }
        rows += 1;
    }
    let all = Array2::from_shape_vec((rows, width), values)?;
    let y: Array1<f64> = all.column(0).to_owned();
    let x = all.slice(ndarray::s![.., 1..]).to_owned();
    Ok(Dataset::new(y, x)?)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> anyhow::Result<()> {
    let header: Vec<String> = std::iter::once("y".to_string()).chain((1..=data.p()).map(|j| format!("x{j}"))).collect();
    let (y, x) = (data.y(), data.x());
    let rows: Vec<Vec<String>> = (0..data.n())
        .map(|i| std::iter::once(num(y[i])).chain(x.row(i).iter().map(|v| num(*v))).collect())
        .collect();
    write_atomic(path, &csv_bytes(&header, &rows)?)
}
