//! Text formats: tabulated potentials in, CSV tables out.
//!
//! Every table has a header row. Floats are written with Rust's shortest
//! round-trip representation, so parsing a column recovers the exact `f64`.

use std::fmt::Write;

use crate::rpe::StageRecord;
use crate::spectral::Spectrum;
use crate::verify::SuiteReport;
use crate::{Error, Result, State};

/// One finite value per line, row-major grid order. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_tabulated_csv(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.strip_suffix(',').unwrap_or(line).trim();
        if field.contains(',') {
            return Err(Error::parse(i + 1, format!("expected one value, found '{line}'")));
        }
        let v: f64 = field
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("'{field}' is not a number")))?;
        if !v.is_finite() {
            return Err(Error::parse(i + 1, format!("'{field}' is not finite")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::parse(0, "no values"));
    }
    Ok(values)
}

/// Row `j`: eigenvalue `λ_j`, then the components of eigenvector `j`.
pub fn spectrum_csv(spec: &Spectrum) -> String {
    let dim = spec.dim();
    let mut out = String::from("index,eigenvalue");
    for i in 0..dim {
        let _ = write!(out, ",v{i}");
    }
    out.push('\n');
    for (j, lambda) in spec.eigenvalues.iter().enumerate() {
        let _ = write!(out, "{j},{lambda:?}");
        for x in spec.eigenvectors.column(j).iter() {
            let _ = write!(out, ",{x:?}");
        }
        out.push('\n');
    }
    out
}

/// Outcome distribution with good-set membership.
pub fn distribution_csv(probabilities: &[f64], in_good_set: impl Fn(u64) -> bool) -> String {
    let mut out = String::from("m,probability,in_good_set\n");
    for (m, p) in probabilities.iter().enumerate() {
        let _ = writeln!(out, "{m},{p:?},{}", in_good_set(m as u64));
    }
    out
}

pub fn state_csv(psi: &State) -> String {
    let mut out = String::from("index,re,im\n");
    for (i, z) in psi.iter().enumerate() {
        let _ = writeln!(out, "{i},{:?},{:?}", z.re, z.im);
    }
    out
}

pub fn stage_table_csv(records: &[StageRecord]) -> String {
    let mut out = String::from(
        "stage,s,m,in_good_set,qualifying,overlap_in,overlap_out,outcome_probability,\
         good_set_probability,eps_h_measured,N,lambda0,phi0,energy_estimate\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{:?},{},{},{},{:?},{:?},{:?},{:?},{:?},{},{:?},{:?},{:?}",
            r.stage,
            r.s,
            r.m,
            r.in_good_set,
            r.qualifying,
            r.overlap_in,
            r.overlap_out,
            r.outcome_probability,
            r.good_set_probability,
            r.eps_h_measured,
            r.exponentials,
            r.lambda0,
            r.phi0,
            r.energy_estimate
        );
    }
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

pub fn suite_summary_csv(reports: &[SuiteReport]) -> String {
    let mut out = String::from(
        "suite,verdict,trials,passes,failure_count,regenerated,min_margin,mean_margin,seed,frequency_checks_passed\n",
    );
    for r in reports {
        let freq_ok = r.frequency_checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}/{}",
            r.suite_name,
            serde_json::to_value(r.verdict)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            r.trials,
            r.passes,
            r.failure_count,
            r.regenerated,
            opt(r.min_margin),
            opt(r.mean_margin),
            r.seed,
            freq_ok,
            r.frequency_checks.len()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_hamiltonian, GridSpec, PotentialSpec};
    use crate::spectral::eigendecompose;

    #[test]
    fn tabulated_values_parse() {
        let v = parse_tabulated_csv("# header\n1.5\n 2e-3 \n\n-0,\n").unwrap();
        assert_eq!(v, vec![1.5, 2e-3, -0.0]);
    }

    #[test]
    fn tabulated_errors_carry_line_numbers() {
        let msg = |t: &str| parse_tabulated_csv(t).unwrap_err().to_string();
        assert!(msg("1\nx\n").contains("line 2"));
        assert!(msg("1\n2,3\n").contains("line 2"));
        assert!(msg("inf\n").contains("line 1"));
        assert!(msg("NaN\n").contains("not finite"));
        assert!(parse_tabulated_csv("\n# only comments\n").is_err());
    }

    #[test]
    fn spectrum_rows_round_trip() {
        let g = GridSpec::new(1, 3).unwrap();
        let spec = eigendecompose(&assemble_hamiltonian(&g, &PotentialSpec::quadratic(1, 8.0, 0.5), 1.0).unwrap()).unwrap();
        let csv = spectrum_csv(&spec);
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "index,eigenvalue,v0,v1,v2");
        assert_eq!(rows.len(), 4);
        let cells: Vec<f64> = rows[2].split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0], spec.eigenvalues[1]);
        assert_eq!(cells[3], spec.eigenvectors[(2, 1)]);
    }

    #[test]
    fn distribution_header_and_flags() {
        let csv = distribution_csv(&[0.25, 0.75], |m| m == 1);
        assert_eq!(csv, "m,probability,in_good_set\n0,0.25,false\n1,0.75,true\n");
    }
}
