//! Design formulas: `+`-separated terms over predictor column names.
//!
//! A term is a column (`age`), a product of two columns (`age*income`), a
//! square (`age^2`) or the intercept `1`. The intercept is added unless
//! suppressed.

use linhsic::linreg::{BasisFn, DesignSpec};

use crate::error::{CliError, Result};

pub fn parse_design(formula: Option<&str>, names: &[String], intercept: bool) -> Result<DesignSpec> {
    let mut basis = Vec::new();
    if intercept {
        basis.push(BasisFn::Intercept);
    }
    match formula {
        None => basis.extend((0..names.len()).map(BasisFn::Coordinate)),
        Some(f) => {
            for term in f.split('+').map(str::trim) {
                let parsed = parse_term(term, names)?;
                if parsed == BasisFn::Intercept && intercept {
                    continue;
                }
                if basis.contains(&parsed) {
                    return Err(CliError::Config(format!("design term '{term}' appears twice")));
                }
                basis.push(parsed);
            }
        }
    }
    Ok(DesignSpec::new(basis)?)
}

fn parse_term(term: &str, names: &[String]) -> Result<BasisFn> {
    let column = |name: &str| {
        let name = name.trim();
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::Config(format!("design refers to unknown predictor '{name}'")))
    };
    if term.is_empty() {
        return Err(CliError::Config("empty design term".into()));
    }
    if term == "1" {
        return Ok(BasisFn::Intercept);
    }
    if let Some((a, b)) = term.split_once('*') {
        return Ok(BasisFn::Product(column(a)?, column(b)?));
    }
    if let Some((a, p)) = term.split_once('^') {
        if p.trim() != "2" {
            return Err(CliError::Config(format!("only squares are supported, got '{term}'")));
        }
        return Ok(BasisFn::Square(column(a)?));
    }
    Ok(BasisFn::Coordinate(column(term)?))
}

/// Term labels using the caller's column names.
pub fn design_labels(spec: &DesignSpec, names: &[String]) -> Vec<String> {
    spec.basis
        .iter()
        .map(|f| match *f {
            BasisFn::Intercept => "1".to_string(),
            BasisFn::Coordinate(j) => names[j].clone(),
            BasisFn::Product(i, j) => format!("{}*{}", names[i], names[j]),
            BasisFn::Square(j) => format!("{}^2", names[j]),
        })
        .collect()
}
