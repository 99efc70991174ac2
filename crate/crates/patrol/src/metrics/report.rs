//! Coverage report serialization and the comparison-table format.

use super::MetricsError;

/// Normalized coverage per ψ plus route entropy for one evaluated batch.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// (ψ, coverage) pairs in the order requested.
    pub coverage: Vec<(u32, f64)>,
    pub entropy: f64,
    pub num_runs: usize,
    pub config_hash: u64,
    /// True if coverage pools the union of all runs instead of averaging
    /// per-run indices.
    pub pooled: bool,
}

impl CoverageReport {
    pub fn psi_values(&self) -> Vec<u32> {
        self.coverage.iter().map(|&(psi, _)| psi).collect()
    }

    pub fn coverage_at(&self, psi: u32) -> Option<f64> {
        self.coverage.iter().find(|&&(p, _)| p == psi).map(|&(_, v)| v)
    }

    /// Text form:
    ///
    /// ```text
    /// num_runs 100
    /// config_hash 00000000deadbeef
    /// mode mean
    /// entropy 0.000000
    /// coverage 3 0.760000
    /// coverage 5 0.620000
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("num_runs {}\n", self.num_runs));
        out.push_str(&format!("config_hash {:016x}\n", self.config_hash));
        out.push_str(&format!("mode {}\n", if self.pooled { "pooled" } else { "mean" }));
        out.push_str(&format!("entropy {:.6}\n", self.entropy));
        for &(psi, value) in &self.coverage {
            out.push_str(&format!("coverage {} {:.6}\n", psi, value));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MetricsError> {
        let mut num_runs = None;
        let mut config_hash = None;
        let mut pooled = None;
        let mut entropy = None;
        let mut coverage = Vec::new();
        for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let line_no = idx + 1;
            let err = |message: String| MetricsError::ParseError { line: line_no, message };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["num_runs", v] => {
                    num_runs =
                        Some(v.parse().map_err(|_| err(format!("bad num_runs `{v}`")))?);
                }
                ["config_hash", v] => {
                    config_hash = Some(
                        u64::from_str_radix(v, 16)
                            .map_err(|_| err(format!("bad config_hash `{v}`")))?,
                    );
                }
                ["mode", v] => {
                    pooled = Some(match *v {
                        "pooled" => true,
                        "mean" => false,
                        other => return Err(err(format!("bad mode `{other}`"))),
                    });
                }
                ["entropy", v] => {
                    entropy = Some(v.parse().map_err(|_| err(format!("bad entropy `{v}`")))?);
                }
                ["coverage", psi, v] => {
                    let psi: u32 =
                        psi.parse().map_err(|_| err(format!("bad psi `{psi}`")))?;
                    let value: f64 =
                        v.parse().map_err(|_| err(format!("bad coverage `{v}`")))?;
                    coverage.push((psi, value));
                }
                _ => return Err(err(format!("unrecognized line `{line}`"))),
            }
        }
        let missing = |field: &str| MetricsError::ParseError {
            line: 0,
            message: format!("missing `{field}`"),
        };
        Ok(Self {
            coverage,
            entropy: entropy.ok_or_else(|| missing("entropy"))?,
            num_runs: num_runs.ok_or_else(|| missing("num_runs"))?,
            config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
            pooled: pooled.ok_or_else(|| missing("mode"))?,
        })
    }
}

/// One row of the comparison table printed by the CLI: the familiar
/// results-table layout of line of sight, start mode, patrol count, one
/// coverage column per ψ, and entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    /// Which policy produced the row ("greedy", "random", "trained", ...).
    pub policy: String,
    pub line_of_sight: usize,
    /// "random" or "best".
    pub start: String,
    pub patrols: usize,
    pub coverage: Vec<(u32, f64)>,
    pub entropy: f64,
}

impl TableRow {
    pub fn from_report(
        policy: &str,
        line_of_sight: usize,
        start: &str,
        patrols: usize,
        report: &CoverageReport,
    ) -> Self {
        Self {
            policy: policy.to_string(),
            line_of_sight,
            start: start.to_string(),
            patrols,
            coverage: report.coverage.clone(),
            entropy: report.entropy,
        }
    }
}

/// Renders rows as a whitespace table with a header line. All rows must
/// share the header's ψ columns.
pub fn format_table(rows: &[TableRow]) -> String {
    let psis: Vec<u32> =
        rows.first().map(|r| r.coverage.iter().map(|&(p, _)| p).collect()).unwrap_or_default();
    let mut out = String::from("policy line_of_sight start patrols");
    for psi in &psis {
        out.push_str(&format!(" w{}", psi));
    }
    out.push_str(" entropy\n");
    for row in rows {
        debug_assert_eq!(row.coverage.iter().map(|&(p, _)| p).collect::<Vec<_>>(), psis);
        out.push_str(&format!(
            "{} {} {} {}",
            row.policy, row.line_of_sight, row.start, row.patrols
        ));
        for &(_, value) in &row.coverage {
            out.push_str(&format!(" {:.3}", value));
        }
        out.push_str(&format!(" {:.2}\n", row.entropy));
    }
    out
}

/// Parses the output of [`format_table`].
pub fn parse_table(text: &str) -> Result<Vec<TableRow>, MetricsError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(MetricsError::ParseError {
        line: 0,
        message: "empty table".into(),
    })?;
    let columns: Vec<&str> = header.split_whitespace().collect();
    let fixed = ["policy", "line_of_sight", "start", "patrols"];
    if columns.len() < fixed.len() + 1 || columns[..fixed.len()] != fixed {
        return Err(MetricsError::ParseError {
            line: 1,
            message: format!("unexpected header `{header}`"),
        });
    }
    let psi_columns = &columns[fixed.len()..columns.len() - 1];
    let mut psis = Vec::new();
    for col in psi_columns {
        let Some(psi) = col.strip_prefix('w').and_then(|p| p.parse::<u32>().ok()) else {
            return Err(MetricsError::ParseError {
                line: 1,
                message: format!("bad coverage column `{col}`"),
            });
        };
        psis.push(psi);
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let err = |message: String| MetricsError::ParseError { line: line_no, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 + psis.len() {
            return Err(err(format!(
                "expected {} columns, found {}",
                5 + psis.len(),
                tokens.len()
            )));
        }
        let mut coverage = Vec::with_capacity(psis.len());
        for (i, &psi) in psis.iter().enumerate() {
            let v: f64 = tokens[4 + i]
                .parse()
                .map_err(|_| err(format!("bad coverage value `{}`", tokens[4 + i])))?;
            coverage.push((psi, v));
        }
        rows.push(TableRow {
            policy: tokens[0].to_string(),
            line_of_sight: tokens[1]
                .parse()
                .map_err(|_| err(format!("bad line_of_sight `{}`", tokens[1])))?,
            start: tokens[2].to_string(),
            patrols: tokens[3]
                .parse()
                .map_err(|_| err(format!("bad patrols `{}`", tokens[3])))?,
            coverage,
            entropy: tokens
                .last()
                .unwrap()
                .parse()
                .map_err(|_| err(format!("bad entropy `{}`", tokens.last().unwrap())))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> CoverageReport {
        CoverageReport {
            coverage: vec![(3, 0.76), (5, 0.62), (10, 0.49), (20, 0.31)],
            entropy: 0.0,
            num_runs: 100,
            config_hash: 0xabc,
            pooled: false,
        }
    }

    #[test]
    fn report_round_trip() {
        let report = sample_report();
        assert_eq!(CoverageReport::from_text(&report.to_text()).unwrap(), report);
    }

    #[test]
    fn report_rejects_garbage() {
        assert!(CoverageReport::from_text("nonsense line\n").is_err());
        assert!(CoverageReport::from_text("num_runs 5\n").is_err());
    }

    #[test]
    fn table_round_trip() {
        let rows = vec![
            TableRow::from_report("greedy", 3, "best", 5, &sample_report()),
            TableRow::from_report("random", 3, "best", 5, &sample_report()),
        ];
        let parsed = parse_table(&format_table(&rows)).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].policy, "greedy");
        assert_eq!(parsed[0].coverage, rows[0].coverage);
        assert_eq!(parsed[1].entropy, 0.0);
    }
}
