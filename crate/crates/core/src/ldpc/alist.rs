//! MacKay alist format.
//!
//! ```text
//! n m
//! max_col_weight max_row_weight
//! col weights (n)
//! row weights (m)
//! n lines of 1-based row indices, zero padded to max_col_weight
//! m lines of 1-based column indices, zero padded to max_row_weight
//! ```

use std::fmt::Write;

use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as integers, with its 1-based line number.
    fn next_ints(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        loop {
            let Some((i, line)) = self.inner.next() else {
                return Err(Error::Alist {
                    line: 0,
                    msg: format!("unexpected end of file while reading {what}"),
                });
            };
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Alist {
                        line: i + 1,
                        msg: format!("bad integer {t:?} in {what}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((i + 1, vals));
        }
    }
}

fn expect_len(line: usize, vals: &[usize], len: usize, what: &str) -> Result<()> {
    if vals.len() != len {
        return Err(Error::Alist {
            line,
            msg: format!("{what}: expected {len} values, found {}", vals.len()),
        });
    }
    Ok(())
}

/// Returns `(n, check_vars)` with 0-based column indices per check.
pub(super) fn parse(text: &str) -> Result<(usize, Vec<Vec<usize>>)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, dims) = lines.next_ints("dimensions")?;
    expect_len(ln, &dims, 2, "dimensions")?;
    let (n, m) = (dims[0], dims[1]);
    let (ln, maxw) = lines.next_ints("maximum weights")?;
    expect_len(ln, &maxw, 2, "maximum weights")?;
    let (ln, col_w) = lines.next_ints("column weights")?;
    expect_len(ln, &col_w, n, "column weights")?;
    let (ln, row_w) = lines.next_ints("row weights")?;
    expect_len(ln, &row_w, m, "row weights")?;
    if col_w.iter().any(|&w| w > maxw[0]) || row_w.iter().any(|&w| w > maxw[1]) {
        return Err(Error::Alist {
            line: 2,
            msg: "a weight exceeds the stated maximum".into(),
        });
    }

    let mut col_lists = Vec::with_capacity(n);
    for (c, &w) in col_w.iter().enumerate() {
        let (ln, vals) = lines.next_ints("column list")?;
        col_lists.push(entries(ln, &vals, w, m, &format!("column {}", c + 1))?);
    }
    let mut check_vars = Vec::with_capacity(m);
    for (r, &w) in row_w.iter().enumerate() {
        let (ln, vals) = lines.next_ints("row list")?;
        check_vars.push(entries(ln, &vals, w, n, &format!("row {}", r + 1))?);
    }

    // the two halves must describe the same matrix
    let mut from_cols = vec![Vec::new(); m];
    for (c, rows) in col_lists.iter().enumerate() {
        for &r in rows {
            from_cols[r].push(c);
        }
    }
    for (r, (a, b)) in from_cols.iter_mut().zip(check_vars.iter()).enumerate() {
        a.sort_unstable();
        let mut b = b.clone();
        b.sort_unstable();
        if *a != b {
            return Err(Error::Alist {
                line: 0,
                msg: format!("row {} disagrees with the column lists", r + 1),
            });
        }
    }
    Ok((n, check_vars))
}

fn entries(line: usize, vals: &[usize], weight: usize, bound: usize, what: &str) -> Result<Vec<usize>> {
    let nonzero: Vec<usize> = vals.iter().copied().filter(|&v| v != 0).collect();
    if nonzero.len() != weight || vals[weight..].iter().any(|&v| v != 0) {
        return Err(Error::Alist {
            line,
            msg: format!("{what}: expected {weight} indices"),
        });
    }
    if let Some(&bad) = nonzero.iter().find(|&&v| v > bound) {
        return Err(Error::Alist {
            line,
            msg: format!("{what}: index {bad} out of range 1..={bound}"),
        });
    }
    Ok(nonzero.into_iter().map(|v| v - 1).collect())
}

pub(super) fn write(n: usize, check_vars: &[Vec<usize>], var_checks: &[Vec<usize>]) -> String {
    let m = check_vars.len();
    let max_c = var_checks.iter().map(Vec::len).max().unwrap_or(0);
    let max_r = check_vars.iter().map(Vec::len).max().unwrap_or(0);
    let mut s = String::new();
    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "{n} {m}");
    let _ = writeln!(s, "{max_c} {max_r}");
    let _ = writeln!(s, "{}", join(&mut var_checks.iter().map(Vec::len)));
    let _ = writeln!(s, "{}", join(&mut check_vars.iter().map(Vec::len)));
    for list in var_checks {
        let mut it = list.iter().map(|&r| r + 1).chain(std::iter::repeat(0)).take(max_c);
        let _ = writeln!(s, "{}", join(&mut it));
    }
    for list in check_vars {
        let mut it = list.iter().map(|&c| c + 1).chain(std::iter::repeat(0)).take(max_r);
        let _ = writeln!(s, "{}", join(&mut it));
    }
    s
}
