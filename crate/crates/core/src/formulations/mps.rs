//! A small linear-program model with MPS writing and reading.
//!
//! Output keeps the fixed-format section layout and name lengths (at most
//! 8 characters) but prints numbers with 17 significant digits, which can
//! overflow the classic 12-character value fields. The reader therefore
//! splits on whitespace, as free-format MPS readers do.

use std::io::{BufRead, Write};

use crate::error::{GinvError, Result};
use crate::matcore::SvdFactors;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    /// `aᵀx ≥ b`
    Ge,
    /// `aᵀx ≤ b`
    Le,
    /// `aᵀx = b`
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsRow {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsColumn {
    pub name: String,
    pub cost: f64,
    /// `(row index, coefficient)` pairs, nonzero coefficients only.
    pub entries: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// `min Σ cost·x` subject to the rows and the column bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsModel {
    pub name: String,
    pub rows: Vec<MpsRow>,
    pub columns: Vec<MpsColumn>,
}

impl MpsModel {
    /// The epigraph LP of `min ‖G + V₂ Z U₁ᵀ‖₁`.
    ///
    /// Rows `P{k}`: `F_k − (V₂ Z U₁ᵀ)_k ≥ G_k`; rows `M{k}`:
    /// `F_k + (V₂ Z U₁ᵀ)_k ≥ −G_k`, with `k` the 1-based row-major index of
    /// entry `(i, j)` of the `n x m` matrices.
    pub fn reduced_l1(f: &SvdFactors) -> Self {
        let (m, n, r) = (f.m(), f.n(), f.rank());
        let nm = n * m;
        let g = f.g();
        let (v2, u1) = (f.v2(), f.u1());

        let mut rows = Vec::with_capacity(2 * nm);
        for i in 0..n {
            for j in 0..m {
                let k = i * m + j + 1;
                rows.push(MpsRow {
                    name: format!("P{k}"),
                    sense: RowSense::Ge,
                    rhs: g[(i, j)],
                });
                rows.push(MpsRow {
                    name: format!("M{k}"),
                    sense: RowSense::Ge,
                    rhs: -g[(i, j)],
                });
            }
        }

        let mut columns = Vec::with_capacity(nm + (n - r) * r);
        for k in 0..nm {
            columns.push(MpsColumn {
                name: format!("F{}", k + 1),
                cost: 1.0,
                entries: vec![(2 * k, 1.0), (2 * k + 1, 1.0)],
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        for a in 0..n - r {
            for b in 0..r {
                let mut entries = Vec::new();
                for i in 0..n {
                    for j in 0..m {
                        let coef = v2[(i, a)] * u1[(j, b)];
                        if coef != 0.0 {
                            let k = i * m + j;
                            entries.push((2 * k, -coef));
                            entries.push((2 * k + 1, coef));
                        }
                    }
                }
                columns.push(MpsColumn {
                    name: format!("Z{}", a * r + b + 1),
                    cost: 0.0,
                    entries,
                    lower: f64::NEG_INFINITY,
                    upper: f64::INFINITY,
                });
            }
        }
        MpsModel {
            name: "GINVL1".into(),
            rows,
            columns,
        }
    }
}

fn num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_mps<W: Write>(w: &mut W, model: &MpsModel) -> Result<()> {
    for name in model
        .rows
        .iter()
        .map(|r| &r.name)
        .chain(model.columns.iter().map(|c| &c.name))
    {
        if name.len() > 8 || name.contains(char::is_whitespace) || name.is_empty() {
            return Err(GinvError::Config(format!("invalid MPS name '{name}'")));
        }
    }
    writeln!(w, "NAME          {}", model.name)?;
    writeln!(w, "ROWS")?;
    writeln!(w, " N  OBJ")?;
    for row in &model.rows {
        let s = match row.sense {
            RowSense::Ge => 'G',
            RowSense::Le => 'L',
            RowSense::Eq => 'E',
        };
        writeln!(w, " {s}  {}", row.name)?;
    }
    writeln!(w, "COLUMNS")?;
    for col in &model.columns {
        if col.cost != 0.0 {
            writeln!(w, "    {:<8}  {:<8}  {}", col.name, "OBJ", num(col.cost))?;
        }
        for &(i, v) in &col.entries {
            writeln!(w, "    {:<8}  {:<8}  {}", col.name, model.rows[i].name, num(v))?;
        }
    }
    writeln!(w, "RHS")?;
    for row in &model.rows {
        if row.rhs != 0.0 {
            writeln!(w, "    {:<8}  {:<8}  {}", "RHS", row.name, num(row.rhs))?;
        }
    }
    writeln!(w, "BOUNDS")?;
    for col in &model.columns {
        match (col.lower, col.upper) {
            (l, u) if l == 0.0 && u == f64::INFINITY => {}
            (l, u) if l == f64::NEG_INFINITY && u == f64::INFINITY => {
                writeln!(w, " FR BND       {}", col.name)?
            }
            (l, u) if l == u => writeln!(w, " FX BND       {:<8}  {}", col.name, num(l))?,
            (l, u) => {
                if l == f64::NEG_INFINITY {
                    writeln!(w, " MI BND       {}", col.name)?;
                } else if l != 0.0 {
                    writeln!(w, " LO BND       {:<8}  {}", col.name, num(l))?;
                }
                if u != f64::INFINITY {
                    writeln!(w, " UP BND       {:<8}  {}", col.name, num(u))?;
                }
            }
        }
    }
    writeln!(w, "ENDATA")?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

pub fn read_mps<R: BufRead>(reader: R) -> Result<MpsModel> {
    use std::collections::HashMap;

    let err = |line: usize, msg: String| GinvError::Parse { line, msg };
    let mut model = MpsModel {
        name: String::new(),
        rows: Vec::new(),
        columns: Vec::new(),
    };
    let mut objective: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut section = Section::Start;

    let parse_num = |tok: &str, line: usize| -> Result<f64> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(line, format!("invalid number '{tok}'")))
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let ln = idx + 1;
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => {
                    model.name = tokens.get(1).unwrap_or(&"").to_string();
                    Section::Start
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(ln, format!("unsupported section '{other}'"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [sense, name] = tokens[..] else {
                    return Err(err(ln, "expected '<sense> <name>'".into()));
                };
                let sense = match sense {
                    "N" => {
                        if objective.is_some() {
                            return Err(err(ln, "more than one objective row".into()));
                        }
                        objective = Some(name.to_string());
                        continue;
                    }
                    "G" => RowSense::Ge,
                    "L" => RowSense::Le,
                    "E" => RowSense::Eq,
                    other => return Err(err(ln, format!("unknown row type '{other}'"))),
                };
                row_index.insert(name.to_string(), model.rows.len());
                model.rows.push(MpsRow {
                    name: name.to_string(),
                    sense,
                    rhs: 0.0,
                });
            }
            Section::Columns => {
                if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
                    return Err(err(ln, "expected '<column> <row> <value> [<row> <value>]'".into()));
                }
                if tokens[1] == "'MARKER'" {
                    return Err(err(ln, "integer markers are not supported".into()));
                }
                let name = tokens[0];
                let c = *col_index.entry(name.to_string()).or_insert_with(|| {
                    model.columns.push(MpsColumn {
                        name: name.to_string(),
                        cost: 0.0,
                        entries: Vec::new(),
                        lower: 0.0,
                        upper: f64::INFINITY,
                    });
                    model.columns.len() - 1
                });
                for pair in tokens[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if objective.as_deref() == Some(pair[0]) {
                        model.columns[c].cost = v;
                    } else {
                        let &i = row_index
                            .get(pair[0])
                            .ok_or_else(|| err(ln, format!("unknown row '{}'", pair[0])))?;
                        model.columns[c].entries.push((i, v));
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
                    return Err(err(ln, "expected '<set> <row> <value> [<row> <value>]'".into()));
                }
                for pair in tokens[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if objective.as_deref() == Some(pair[0]) {
                        continue;
                    }
                    let &i = row_index
                        .get(pair[0])
                        .ok_or_else(|| err(ln, format!("unknown row '{}'", pair[0])))?;
                    model.rows[i].rhs = v;
                }
            }
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(err(ln, "expected '<type> <set> <column> [value]'".into()));
                }
                let &c = col_index
                    .get(tokens[2])
                    .ok_or_else(|| err(ln, format!("unknown column '{}'", tokens[2])))?;
                let value = || -> Result<f64> {
                    let tok = tokens
                        .get(3)
                        .ok_or_else(|| err(ln, "bound value missing".into()))?;
                    parse_num(tok, ln)
                };
                let col = &mut model.columns[c];
                match tokens[0] {
                    "UP" => col.upper = value()?,
                    "LO" => col.lower = value()?,
                    "FX" => {
                        let v = value()?;
                        col.lower = v;
                        col.upper = v;
                    }
                    "FR" => {
                        col.lower = f64::NEG_INFINITY;
                        col.upper = f64::INFINITY;
                    }
                    "MI" => col.lower = f64::NEG_INFINITY,
                    "PL" => col.upper = f64::INFINITY,
                    other => return Err(err(ln, format!("unsupported bound type '{other}'"))),
                }
            }
            Section::Start | Section::End => {
                return Err(err(ln, "data line outside a section".into()));
            }
        }
    }
    if section != Section::End {
        return Err(err(0, "missing ENDATA".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{svd, DenseMatrix, ToleranceConfig};

    fn factors(rows: &[Vec<f64>]) -> SvdFactors {
        svd(&DenseMatrix::from_rows(rows).unwrap(), &ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn counts_for_ones() {
        let model = MpsModel::reduced_l1(&factors(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
        assert_eq!(model.columns.len(), 4 + 1);
        assert_eq!(model.rows.len(), 8);
    }

    #[test]
    fn write_read_round_trip() {
        let f = factors(&[
            vec![1.0, 2.0, 0.5],
            vec![2.0, 4.0, 1.0],
            vec![0.0, 1.0, 3.0],
            vec![1.0, 3.0, 3.5],
        ]);
        let model = MpsModel::reduced_l1(&f);
        let mut buf = Vec::new();
        write_mps(&mut buf, &model).unwrap();
        let back = read_mps(buf.as_slice()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn reader_rejects_garbage() {
        let bad = [
            "NAME x\nROWS\n N OBJ\nCOLUMNS\n    X1 R9 1\nENDATA\n",
            "NAME x\nROWS\n Q R1\nENDATA\n",
            "NAME x\nROWS\n N OBJ\n G R1\nCOLUMNS\n    X1 R1 abc\nENDATA\n",
            "NAME x\nROWS\n N OBJ\n",
        ];
        for text in bad {
            assert!(read_mps(text.as_bytes()).is_err(), "accepted {text:?}");
        }
    }
}
