use anyhow::Result;
use c3sim::fuzz::{exposure_total_deviation, merit_sweep, potential_exactness};
use c3sim::mechanisms::{check_merit_based, check_monotone};
use c3sim::oracle::{verify_corollary1, verify_theorem1, OracleOptions, DEFAULT_BUDGET};
use c3sim::{AttentionWeights, Mechanism, PiecewiseConstant};

#[derive(Debug, Clone)]
pub struct VerifyParams {
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub budget: u128,
    /// Samples per randomized property check.
    pub samples: usize,
    pub seed: u64,
    /// Extra mechanism to check, accepted without validation.
    pub mechanism: Option<Mechanism>,
    /// Creator count used for the extra mechanism when it does not fix one.
    pub mechanism_n: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            ns: vec![3, 4, 5],
            ks: vec![1, 2],
            budget: DEFAULT_BUDGET,
            samples: 1000,
            seed: 0,
            mechanism: None,
            mechanism_n: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn line(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckLine {
    CheckLine { name: name.into(), passed, detail: detail.into() }
}

fn is_m3(m: &Mechanism) -> bool {
    matches!(m, Mechanism::M3Zero | Mechanism::M3Exposure { .. } | Mechanism::M3Engagement { .. })
}

fn tvn_sweep(p: &VerifyParams, out: &mut Vec<CheckLine>) -> Result<()> {
    for &n in &p.ns {
        for &k in &p.ks {
            if k < 1 || k > n {
                continue;
            }
            let att = AttentionWeights::dcg(k, n)?;
            let mut mechs =
                vec![Mechanism::M3Zero, Mechanism::exposure(k, 0.05), Mechanism::engagement(k, 0.05)];
            if let Some(m) = p.mechanism.as_ref().filter(|m| is_m3(m) && m.validate(n).is_ok()) {
                mechs.push(m.clone());
            }
            for m in mechs {
                let opts = OracleOptions { budget: p.budget, ..OracleOptions::for_mechanism(&m) };
                let r = verify_theorem1(n, &att, &m, &opts)?;
                out.push(line(
                    format!("unique-trend n={n} K={k} {}", m.name()),
                    r.passed(),
                    format!(
                        "{} equilibria, welfare ratio {:.6}, closed-form ratio {:.6}",
                        r.report.pnes.len(),
                        r.report.ratio.unwrap_or(f64::NAN),
                        r.closed.ratio
                    ),
                ));
            }
            let opts = OracleOptions { budget: p.budget, ..OracleOptions::default() };
            let c = verify_corollary1(n, &att, &opts)?;
            out.push(line(
                format!("brcm-optimal n={n} K={k}"),
                c.passed(),
                format!("{} equilibria, max welfare {:.6}", c.report.pnes.len(), c.report.max_welfare),
            ));
        }
    }
    Ok(())
}

/// Runs the oracle sweep and the randomized property checks; every line must
/// pass for the verification to succeed.
pub fn verify(p: &VerifyParams) -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    if p.ns.is_empty() || p.ks.is_empty() {
        out.push(line("tvn-sweep", true, "warning: empty sweep, nothing enumerated"));
    } else {
        tvn_sweep(p, &mut out)?;
    }

    let failures = merit_sweep(p.seed, 50, p.samples)?;
    out.push(line("brm-merit-based", failures == 0, format!("{failures}/50 random BRMs failed")));
    let n = 4;
    let mut f = vec![PiecewiseConstant::constant(1.0)?];
    f.extend((1..n).map(|_| PiecewiseConstant::constant(0.0)).collect::<Result<Vec<_>, _>>()?);
    let indicator = Mechanism::brm(f)?;
    let before = indicator.total_reward(&[1.0, 0.0, 0.0, 0.0])?;
    let after = indicator.total_reward(&[1.0, 1.0, 0.0, 0.0])?;
    out.push(line(
        "brm-not-monotone",
        before == 1.0 && after == 0.0,
        format!("indicator densities: total reward {before} -> {after}"),
    ));

    let dev = exposure_total_deviation(p.seed, p.samples, 0.05)?;
    out.push(line("exposure-total", dev <= 1e-12, format!("max |total - 1| = {dev:.3e}")));
    let mono = check_monotone(&Mechanism::engagement(5, 0.05), 6, p.samples, p.seed)?;
    out.push(line("engagement-monotone", mono.passed, format!("{} samples", p.samples)));

    let worst = potential_exactness(p.seed, 50, 20)?;
    out.push(line("potential-exactness", worst <= 1e-10, format!("max |du - dP| = {worst:.3e}")));

    if let Some(m) = &p.mechanism {
        let n = match m {
            Mechanism::Brcm { f } => f.len(),
            Mechanism::Brm { f } => f.len(),
            _ => p.mechanism_n,
        };
        let report = check_merit_based(m, n, p.samples, p.seed)?;
        let detail = [&report.normality, &report.fairness, &report.negative_externality]
            .iter()
            .zip(["normality", "fairness", "negative externality"])
            .filter_map(|(o, name)| {
                o.counterexample.as_ref().map(|c| format!("{name}: {}", c.detail))
            })
            .collect::<Vec<_>>()
            .join("; ");
        out.push(line(
            format!("supplied-{}-merit-based", m.name()),
            report.passed(),
            if detail.is_empty() { "all axioms hold".to_string() } else { detail },
        ));
        if is_m3(m) {
            let mono = check_monotone(m, n, p.samples, p.seed)?;
            out.push(line(format!("supplied-{}-monotone", m.name()), mono.passed, format!("n={n}")));
        }
    }
    Ok(out)
}
