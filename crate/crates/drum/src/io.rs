//! Flat-file formats: panels, choice functions, budgets, lotteries and matrices.

use std::fmt::Write as _;
use std::io::Read;
use std::sync::Arc;

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DrumError, Result};
use crate::geometry::{Arrangement, Budget, DemandGeometry};
use crate::model::{
    ChoiceUniverse, PanelDataset, PanelRecord, PathSpace, StochasticChoiceFunction,
};
use crate::repr::{InequalityMatrix, LotteryTable, TypeMatrix};

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn require_headers(found: &csv::StringRecord, want: &[&str], what: &str) -> Result<()> {
    let got: Vec<&str> = found.iter().collect();
    if got.len() < want.len() || got[..want.len()] != *want {
        return Err(DrumError::Schema(format!(
            "{} header must start with {}",
            what,
            want.join(",")
        )));
    }
    Ok(())
}

pub fn read_panel<R: Read>(input: R) -> Result<PanelDataset> {
    let mut rdr = reader(input);
    require_headers(
        rdr.headers()?,
        &["agent_id", "period", "menu_id", "choice_id"],
        "panel",
    )?;
    let records = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<PanelRecord>, _>>()?;
    Ok(PanelDataset::new(records))
}

pub fn write_panel(panel: &PanelDataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &panel.records {
        w.serialize(r)?;
    }
    if panel.records.is_empty() {
        w.write_record(["agent_id", "period", "menu_id", "choice_id"])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| DrumError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn parse_path(field: &str, what: &str) -> Result<Vec<usize>> {
    field
        .split('|')
        .map(|s| match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(DrumError::Record(format!("bad {} entry {:?}", what, s))),
        })
        .collect()
}

fn join_path(path: &[usize]) -> String {
    path.iter()
        .map(|k| (k + 1).to_string())
        .collect::<Vec<_>>()
        .join("|")
}

/// `menu_path,choice_path,prob,count` with `|`-joined 1-based positions. When
/// every row carries a count, probabilities are recomputed from counts and
/// must agree with the given ones.
pub fn read_rho<R: Read>(
    input: R,
    menu_sizes: Vec<Vec<usize>>,
) -> Result<StochasticChoiceFunction> {
    let mut rdr = reader(input);
    require_headers(
        rdr.headers()?,
        &["menu_path", "choice_path", "prob"],
        "choice function",
    )?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mp = parse_path(rec.get(0).unwrap_or(""), "menu path")?;
        let cp = parse_path(rec.get(1).unwrap_or(""), "choice path")?;
        let prob: f64 = rec
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| DrumError::Record(format!("bad probability {:?}", rec.get(2))))?;
        let count = match rec.get(3).map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<u64>()
                    .map_err(|_| DrumError::Record(format!("bad count {:?}", s)))?,
            ),
        };
        rows.push((mp, cp, prob, count));
    }
    if rows.is_empty() {
        return Err(DrumError::Record("choice function file has no rows".into()));
    }
    let paths = rows.iter().map(|r| r.0.clone()).collect();
    let space = Arc::new(PathSpace::new(menu_sizes, paths)?);
    let mut probs = vec![0.0; space.len()];
    let mut counts = vec![0u64; space.len()];
    let mut seen = vec![false; space.len()];
    for (mp, cp, p, c) in &rows {
        let r = space.index_of(mp, cp).ok_or_else(|| {
            DrumError::Record(format!(
                "choice path {} not in menu path {}",
                join_path(cp),
                join_path(mp)
            ))
        })?;
        if seen[r] {
            return Err(DrumError::Record(format!(
                "duplicate row {} / {}",
                join_path(mp),
                join_path(cp)
            )));
        }
        seen[r] = true;
        probs[r] = *p;
        counts[r] = c.unwrap_or(0);
    }
    if rows.iter().all(|r| r.3.is_some()) {
        let rho = StochasticChoiceFunction::from_counts(space, counts)?;
        if let Some(r) =
            (0..probs.len()).find(|&r| seen[r] && (rho.probs()[r] - probs[r]).abs() > 1e-6)
        {
            return Err(DrumError::Record(format!(
                "probability at row {} disagrees with the counts",
                r + 1
            )));
        }
        Ok(rho)
    } else {
        StochasticChoiceFunction::new(space, probs)
    }
}

pub fn write_rho(rho: &StochasticChoiceFunction) -> String {
    let mut out = String::from("menu_path,choice_path,prob,count\n");
    let space = rho.space();
    for r in 0..space.len() {
        let (mp, cp) = space.row(r);
        let count = rho.counts().map(|c| c[r].to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            join_path(mp),
            join_path(cp),
            rho.probs()[r],
            count
        );
    }
    out
}

/// `period,budget_id,price_1..price_K,expenditure`, 1-based ids.
pub fn read_budgets<R: Read>(input: R) -> Result<Vec<Budget>> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    require_headers(&headers, &["period", "budget_id"], "budgets")?;
    let goods = headers.len().saturating_sub(3);
    if goods < 2 || headers.get(headers.len() - 1) != Some("expenditure") {
        return Err(DrumError::Schema(
            "budgets header needs price_1..price_K (K >= 2) and expenditure".into(),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| DrumError::Record(format!("bad number in budgets column {}", k + 1)))
        };
        let id = |k: usize| -> Result<usize> {
            rec.get(k)
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&v| v >= 1)
                .ok_or_else(|| DrumError::Record(format!("bad id in budgets column {}", k + 1)))
        };
        let prices = (0..goods).map(|k| num(2 + k)).collect::<Result<Vec<_>>>()?;
        out.push(Budget::new(
            id(0)? - 1,
            id(1)? - 1,
            prices,
            num(2 + goods)?,
        )?);
    }
    Ok(out)
}

pub fn write_budgets(budgets: &[Budget]) -> String {
    let goods = budgets.first().map_or(2, Budget::goods);
    let mut out = String::from("period,budget_id");
    for k in 1..=goods {
        let _ = write!(out, ",price_{}", k);
    }
    out.push_str(",expenditure\n");
    for b in budgets {
        let prices: Vec<String> = b.prices.iter().map(f64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            b.period + 1,
            b.index + 1,
            prices.join(","),
            b.expenditure
        );
    }
    out
}

/// `alternative_id,prize_1..prize_M` prize probabilities.
pub fn read_lotteries<R: Read>(input: R) -> Result<LotteryTable> {
    let mut rdr = reader(input);
    require_headers(rdr.headers()?, &["alternative_id"], "lotteries")?;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or("").to_string();
        let probs = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    DrumError::Record(format!("bad prize probability {:?} for {}", s, id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.push((id, probs));
    }
    LotteryTable::new(entries)
}

/// Per-patch functional values: `patch,lower,upper` with 1-based patches.
pub fn read_functional<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    #[derive(Deserialize)]
    struct Row {
        patch: usize,
        lower: f64,
        upper: f64,
    }
    let mut rdr = reader(input);
    require_headers(rdr.headers()?, &["patch", "lower", "upper"], "functional")?;
    let mut rows: Vec<Row> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|r| r.patch);
    if rows.iter().enumerate().any(|(k, r)| r.patch != k + 1) {
        return Err(DrumError::Schema(
            "functional patches must be 1..P, each once".into(),
        ));
    }
    Ok((
        rows.iter().map(|r| r.lower).collect(),
        rows.iter().map(|r| r.upper).collect(),
    ))
}

#[derive(Serialize)]
struct PatchFile<'a> {
    period: usize,
    arrangement: &'a Arrangement,
}

pub fn patches_json(geometry: &DemandGeometry) -> Result<String> {
    let periods: Vec<PatchFile> = geometry
        .periods
        .iter()
        .enumerate()
        .map(|(t, a)| PatchFile {
            period: t + 1,
            arrangement: a,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&periods)?)
}

pub fn read_universe(text: &str) -> Result<ChoiceUniverse> {
    ChoiceUniverse::from_json(text)
}

pub fn type_matrix_market(a: &TypeMatrix) -> String {
    let nnz: usize = a.columns().iter().map(Vec::len).sum();
    let mut out = format!(
        "%%MatrixMarket matrix coordinate integer general\n{} {} {}\n",
        a.nrows(),
        a.ncols(),
        nnz
    );
    let mut entries: Vec<(usize, usize)> = a
        .columns()
        .iter()
        .enumerate()
        .flat_map(|(c, col)| col.iter().map(move |&r| (r, c)))
        .collect();
    entries.sort_unstable();
    for (r, c) in entries {
        let _ = writeln!(out, "{} {} 1", r + 1, c + 1);
    }
    out
}

pub fn type_matrix_csv(a: &TypeMatrix) -> String {
    let dense = a.to_dense();
    let mut out = String::new();
    for r in 0..dense.nrows() {
        let row: Vec<String> = (0..dense.ncols())
            .map(|c| (dense[(r, c)] as i64).to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn q_text(v: &crate::rational::Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        v.to_f64().unwrap_or(f64::NAN).to_string()
    }
}

pub fn inequality_matrix_market(h: &InequalityMatrix) -> String {
    let integral = h.rows().iter().flatten().all(|(_, v)| v.denom().is_one());
    let field = if integral { "integer" } else { "real" };
    let nnz: usize = h
        .rows()
        .iter()
        .map(|r| r.iter().filter(|(_, v)| !v.is_zero()).count())
        .sum();
    let mut out = format!(
        "%%MatrixMarket matrix coordinate {} general\n{} {} {}\n",
        field,
        h.nrows(),
        h.ncols(),
        nnz
    );
    for (r, row) in h.rows().iter().enumerate() {
        for (c, v) in row.iter().filter(|(_, v)| !v.is_zero()) {
            let _ = writeln!(out, "{} {} {}", r + 1, c + 1, q_text(v));
        }
    }
    out
}

pub fn inequality_matrix_csv(h: &InequalityMatrix) -> String {
    let mut out = String::new();
    for r in 0..h.nrows() {
        let row: Vec<String> = h.dense_row(r).iter().map(q_text).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
