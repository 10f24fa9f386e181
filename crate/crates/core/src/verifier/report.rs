//! Structured results of the verification suites.

/// One evaluated inequality: `ratio = lhs / rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseRecord {
    /// Named inputs identifying the case, in column order.
    pub params: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl CaseRecord {
    pub fn new(params: &[(&str, f64)], lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        Self {
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            lhs,
            rhs,
            ratio,
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

/// Empirical stand-in for an unnamed constant.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub name: String,
    pub cases: Vec<CaseRecord>,
    /// Cases with a vanishing right-hand side (excluded from ratios).
    pub degenerate: Vec<CaseRecord>,
    /// Human-readable notes on cases excluded for other reasons.
    pub flagged: Vec<String>,
    pub constants: Vec<FittedConstant>,
}

impl VerifyReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Files a record under `cases` or `degenerate` depending on its RHS.
    pub fn push(&mut self, record: CaseRecord) {
        if record.rhs > 0.0 {
            self.cases.push(record);
        } else {
            self.degenerate.push(record);
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.max_ratio_where(|_| true)
    }

    pub fn max_ratio_where(&self, keep: impl Fn(&CaseRecord) -> bool) -> f64 {
        self.cases
            .iter()
            .filter(|c| keep(c))
            .fold(0.0, |m, c| m.max(c.ratio))
    }

    pub fn min_ratio_where(&self, keep: impl Fn(&CaseRecord) -> bool) -> f64 {
        self.cases
            .iter()
            .filter(|c| keep(c))
            .fold(f64::INFINITY, |m, c| m.min(c.ratio))
    }

    pub fn median_ratio(&self) -> f64 {
        let mut r: Vec<f64> = self.cases.iter().map(|c| c.ratio).collect();
        if r.is_empty() {
            return 0.0;
        }
        r.sort_by(f64::total_cmp);
        let m = r.len() / 2;
        if r.len() % 2 == 1 {
            r[m]
        } else {
            0.5 * (r[m - 1] + r[m])
        }
    }

    pub fn constant(&self, name: &str) -> Option<&FittedConstant> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn add_constant(&mut self, name: impl Into<String>, value: f64, residual: f64) {
        self.constants.push(FittedConstant {
            name: name.into(),
            value,
            residual,
        });
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{}: {} cases, {} degenerate, {} flagged\nmax ratio    {:.6e}\nmedian ratio {:.6e}\n",
            self.name,
            self.cases.len(),
            self.degenerate.len(),
            self.flagged.len(),
            self.max_ratio(),
            self.median_ratio()
        );
        for c in &self.constants {
            out.push_str(&format!(
                "{:<28} {:.6e} (residual {:.3e})\n",
                c.name, c.value, c.residual
            ));
        }
        for f in &self.flagged {
            out.push_str(&format!("flagged: {f}\n"));
        }
        out
    }
}
