//! Pattern matching over verified index conditions: assembles certificates
//! with solution counts and localization shells.

use crate::eigen::{self, EigCriteria, LimitsSource};
use crate::error::Result;
use crate::index::{self, ConditionKind, ConditionResult};
use crate::problem::ProblemSpec;

/// One verified index condition at a radius.
#[derive(Debug, Clone)]
pub struct LedgerEntry {
    pub rho: f64,
    /// Normalized to `I1` or `I0` (strong forms certify the same index).
    pub kind: ConditionKind,
    pub result: ConditionResult,
}

/// Verified conditions sorted by radius, together with the cone constant.
#[derive(Debug, Clone)]
pub struct ConditionLedger {
    pub entries: Vec<LedgerEntry>,
    pub c: f64,
}

impl ConditionLedger {
    pub fn new(c: f64) -> ConditionLedger {
        assert!(c > 0.0 && c <= 1.0, "cone constant must lie in (0, 1]");
        ConditionLedger {
            entries: Vec::new(),
            c,
        }
    }

    /// Adds a condition result if it holds and certifies an index value.
    /// Returns whether the entry was accepted.
    pub fn push(&mut self, result: ConditionResult) -> bool {
        if !result.holds {
            return false;
        }
        let kind = match result.kind {
            ConditionKind::I1 | ConditionKind::I1Strong => ConditionKind::I1,
            ConditionKind::I0 | ConditionKind::I0Strong => ConditionKind::I0,
            _ => return false,
        };
        let rho = match result.rho {
            Some(r) if r > 0.0 => r,
            _ => return false,
        };
        self.entries.push(LedgerEntry { rho, kind, result });
        self.entries
            .sort_by(|a, b| a.rho.partial_cmp(&b.rho).unwrap());
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    Eig13,
    Eig12,
    None,
}

impl Pattern {
    pub fn label(&self) -> &'static str {
        match self {
            Pattern::S1 => "S1",
            Pattern::S2 => "S2",
            Pattern::S3 => "S3",
            Pattern::S4 => "S4",
            Pattern::S5 => "S5",
            Pattern::S6 => "S6",
            Pattern::Eig13 => "EIG_13",
            Pattern::Eig12 => "EIG_1_2",
            Pattern::None => "NONE",
        }
    }

    pub fn solution_count(&self) -> usize {
        match self {
            Pattern::S1 | Pattern::S2 | Pattern::Eig13 => 1,
            Pattern::S3 | Pattern::S4 => 2,
            Pattern::S5 | Pattern::S6 => 3,
            Pattern::Eig12 | Pattern::None => 0,
        }
    }
}

/// Localization annulus between two certified boundaries. The inner
/// boundary excludes the solution from a small set, the outer confines it;
/// `sup_lower`/`sup_upper` translate both into sup-norm bounds.
#[derive(Debug, Clone)]
pub struct Shell {
    pub inner_rho: f64,
    pub inner_kind: ConditionKind,
    pub outer_rho: f64,
    pub outer_kind: ConditionKind,
    pub sup_lower: f64,
    pub sup_upper: f64,
}

impl Shell {
    fn from_pair(inner: &LedgerEntry, outer: &LedgerEntry, c: f64) -> Shell {
        // An index-zero boundary is cut by the window minimum; crossing it
        // outward still forces the sup-norm above rho, and staying inside
        // bounds the sup-norm by rho / c.
        let sup_upper = match outer.kind {
            ConditionKind::I0 => outer.rho / c,
            _ => outer.rho,
        };
        Shell {
            inner_rho: inner.rho,
            inner_kind: inner.kind,
            outer_rho: outer.rho,
            outer_kind: outer.kind,
            sup_lower: inner.rho,
            sup_upper,
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "{} < characteristic size < {} (inner boundary {} at rho={}, outer boundary {} at rho={})",
            self.sup_lower,
            self.sup_upper,
            self.inner_kind.label(),
            self.inner_rho,
            self.outer_kind.label(),
            self.outer_rho,
        )
    }
}

/// The top-level verdict: which theorem pattern matched, how many
/// solutions it guarantees, and where they live.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub pattern: Pattern,
    pub solution_count: usize,
    pub shells: Vec<Shell>,
    /// All matched patterns and the constants backing the verdict.
    pub provenance: Vec<String>,
    /// True when a sampled (non-analytic) bound entered any used condition.
    pub advisory: bool,
}

impl Certificate {
    pub fn none() -> Certificate {
        Certificate {
            pattern: Pattern::None,
            solution_count: 0,
            shells: Vec::new(),
            provenance: vec!["no pattern matched".to_string()],
            advisory: false,
        }
    }
}

const PATTERNS: &[(Pattern, &[ConditionKind])] = &[
    (
        Pattern::S5,
        &[
            ConditionKind::I0,
            ConditionKind::I1,
            ConditionKind::I0,
            ConditionKind::I1,
        ],
    ),
    (
        Pattern::S6,
        &[
            ConditionKind::I1,
            ConditionKind::I0,
            ConditionKind::I1,
            ConditionKind::I0,
        ],
    ),
    (Pattern::S3, &[ConditionKind::I0, ConditionKind::I1, ConditionKind::I0]),
    (Pattern::S4, &[ConditionKind::I1, ConditionKind::I0, ConditionKind::I1]),
    (Pattern::S1, &[ConditionKind::I0, ConditionKind::I1]),
    (Pattern::S2, &[ConditionKind::I1, ConditionKind::I0]),
];

/// Gap constraints between consecutive radii of a matched subsequence.
/// After an index-zero condition at rho the next radius must clear rho / c
/// (the containing sup-norm ball); after an index-one condition strict
/// growth suffices.
fn ordering_ok(kinds: &[ConditionKind], rhos: &[f64], c: f64) -> bool {
    for i in 0..kinds.len() - 1 {
        let gap_ok = match kinds[i] {
            ConditionKind::I0 => rhos[i] / c < rhos[i + 1],
            _ => rhos[i] < rhos[i + 1],
        };
        if !gap_ok {
            return false;
        }
    }
    true
}

fn find_witness(ledger: &ConditionLedger, kinds: &[ConditionKind]) -> Option<Vec<usize>> {
    fn rec(
        ledger: &ConditionLedger,
        kinds: &[ConditionKind],
        start: usize,
        chosen: &mut Vec<usize>,
    ) -> bool {
        if chosen.len() == kinds.len() {
            let rhos: Vec<f64> = chosen.iter().map(|&i| ledger.entries[i].rho).collect();
            return ordering_ok(kinds, &rhos, ledger.c);
        }
        let want = kinds[chosen.len()];
        for i in start..ledger.entries.len() {
            if ledger.entries[i].kind == want {
                chosen.push(i);
                if rec(ledger, kinds, i + 1, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let mut chosen = Vec::new();
    if rec(ledger, kinds, 0, &mut chosen) {
        Some(chosen)
    } else {
        None
    }
}

/// Scans the ledger for the theorem patterns and returns the certificate
/// with the highest guaranteed solution count. All matched patterns are
/// listed in the provenance.
pub fn match_patterns(ledger: &ConditionLedger) -> Certificate {
    let mut matches: Vec<(Pattern, Vec<usize>)> = Vec::new();
    for (pattern, kinds) in PATTERNS {
        if let Some(witness) = find_witness(ledger, kinds) {
            matches.push((*pattern, witness));
        }
    }
    let Some((pattern, witness)) = matches.first().cloned() else {
        return Certificate::none();
    };

    // Re-validate the ordering constraints of the winner before emission.
    let entries: Vec<&LedgerEntry> = witness.iter().map(|&i| &ledger.entries[i]).collect();
    let kinds: Vec<ConditionKind> = entries.iter().map(|e| e.kind).collect();
    let rhos: Vec<f64> = entries.iter().map(|e| e.rho).collect();
    assert!(
        ordering_ok(&kinds, &rhos, ledger.c),
        "matched pattern failed ordering re-validation"
    );

    let shells: Vec<Shell> = entries
        .windows(2)
        .map(|pair| Shell::from_pair(pair[0], pair[1], ledger.c))
        .collect();
    let advisory = entries.iter().any(|e| e.result.advisory);

    let mut provenance = Vec::new();
    for (p, w) in &matches {
        let rhos: Vec<String> = w
            .iter()
            .map(|&i| {
                format!(
                    "{}@{}",
                    ledger.entries[i].kind.label(),
                    ledger.entries[i].rho
                )
            })
            .collect();
        provenance.push(format!("pattern {} matched: [{}]", p.label(), rhos.join(", ")));
    }
    provenance.push(format!("cone constant c = {}", ledger.c));
    for e in &entries {
        provenance.push(format!(
            "{} at rho={}: lhs={:.15e} vs threshold={:.15e}{}",
            e.result.kind.label(),
            e.rho,
            e.result.lhs,
            e.result.threshold,
            if e.result.advisory { " (advisory)" } else { "" },
        ));
    }

    Certificate {
        pattern,
        solution_count: pattern.solution_count(),
        shells,
        provenance,
        advisory,
    }
}

/// Combines the three asymptotic criteria into a certificate. Criteria
/// (1) and (3) together force a nontrivial solution between a small
/// index-one radius and a large index-zero radius; criteria (1) and (2)
/// only pin the index near zero and claim no solution count.
pub fn certify_eig(_problem: &ProblemSpec, criteria: &EigCriteria) -> Certificate {
    let get = |kind: ConditionKind| criteria.results.iter().find(|r| r.kind == kind);
    let c1 = get(ConditionKind::Eig1);
    let c2 = get(ConditionKind::Eig2);
    let c3 = get(ConditionKind::Eig3);
    let holds = |r: Option<&ConditionResult>| r.map(|r| r.holds).unwrap_or(false);

    let advisory = criteria.limits.source == LimitsSource::Sampled
        || criteria.results.iter().any(|r| r.advisory);
    let mut provenance: Vec<String> = criteria
        .results
        .iter()
        .map(|r| {
            format!(
                "{}: lhs={:.15e} vs threshold={:.15e} ({})",
                r.kind.label(),
                r.lhs,
                r.threshold,
                if r.holds { "holds" } else { "fails" },
            )
        })
        .collect();
    provenance.push(format!(
        "limits source: {}",
        match criteria.limits.source {
            LimitsSource::Analytic => "declared",
            LimitsSource::Sampled => "sampled (advisory)",
        }
    ));

    if holds(c1) && holds(c3) {
        provenance.push(
            "index one on a small ball, index zero outside a large one; \
             a nontrivial solution sits between"
                .to_string(),
        );
        return Certificate {
            pattern: Pattern::Eig13,
            solution_count: 1,
            shells: vec![Shell {
                inner_rho: 0.0,
                inner_kind: ConditionKind::Eig1,
                outer_rho: f64::INFINITY,
                outer_kind: ConditionKind::Eig3,
                sup_lower: 0.0,
                sup_upper: f64::INFINITY,
            }],
            provenance,
            advisory,
        };
    }
    if holds(c1) && holds(c2) {
        provenance.push(
            "both criteria act at small radii; the indices clash there but \
             no solution count follows"
                .to_string(),
        );
        return Certificate {
            pattern: Pattern::Eig12,
            solution_count: 0,
            shells: Vec::new(),
            provenance,
            advisory,
        };
    }
    let mut cert = Certificate::none();
    cert.provenance = provenance;
    cert.advisory = advisory;
    cert
}

/// Everything the certify workflow produced, for reporting.
pub struct CertifyOutcome {
    pub conditions: Vec<ConditionResult>,
    pub ledger: ConditionLedger,
    pub certificate: Certificate,
}

/// Runs both index checks at every declared radius, matches the patterns,
/// and falls back to the asymptotic criteria; the certificate with the
/// higher solution count wins.
pub fn certify_problem(problem: &ProblemSpec) -> Result<CertifyOutcome> {
    let mut conditions = Vec::new();
    let mut ledger = ConditionLedger::new(problem.kernel.c());
    for &rho in &problem.rho_list {
        for check in [index::check_i1, index::check_i0] {
            let result = check(problem, rho)?;
            conditions.push(result.clone());
            ledger.push(result);
        }
    }
    let mut certificate = match_patterns(&ledger);

    match eigen::check_eig_criteria(problem) {
        Ok(criteria) => {
            conditions.extend(criteria.results.iter().cloned());
            let eig_cert = certify_eig(problem, &criteria);
            let better = eig_cert.solution_count > certificate.solution_count
                || (eig_cert.solution_count == certificate.solution_count
                    && certificate.pattern == Pattern::None
                    && eig_cert.pattern != Pattern::None);
            if better {
                certificate = eig_cert;
            }
        }
        Err(crate::Error::MissingLimits(_)) | Err(crate::Error::NonFinite { .. }) => {}
        Err(e) => return Err(e),
    }

    Ok(CertifyOutcome {
        conditions,
        ledger,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::example1_problem;

    fn entry(rho: f64, kind: ConditionKind) -> ConditionResult {
        ConditionResult {
            kind,
            rho: Some(rho),
            lhs: 0.0,
            threshold: 1.0,
            holds: true,
            constants: Vec::new(),
            advisory: false,
        }
    }

    fn ledger_of(c: f64, items: &[(f64, ConditionKind)]) -> ConditionLedger {
        let mut ledger = ConditionLedger::new(c);
        for &(rho, kind) in items {
            assert!(ledger.push(entry(rho, kind)));
        }
        ledger
    }

    #[test]
    fn two_condition_patterns() {
        let cert = match_patterns(&ledger_of(
            0.25,
            &[(1.0, ConditionKind::I1), (28.0, ConditionKind::I0)],
        ));
        assert_eq!(cert.pattern, Pattern::S2);
        assert_eq!(cert.solution_count, 1);
        assert_eq!(cert.shells.len(), 1);
        assert_eq!(cert.shells[0].sup_lower, 1.0);
        assert_eq!(cert.shells[0].sup_upper, 112.0);

        // Index-zero first needs the rho/c gap: 1/0.25 = 4 is not < 2.
        let cert = match_patterns(&ledger_of(
            0.25,
            &[(1.0, ConditionKind::I0), (2.0, ConditionKind::I1)],
        ));
        assert_eq!(cert.pattern, Pattern::None);
        assert_eq!(cert.solution_count, 0);

        let cert = match_patterns(&ledger_of(
            0.25,
            &[(1.0, ConditionKind::I0), (5.0, ConditionKind::I1)],
        ));
        assert_eq!(cert.pattern, Pattern::S1);
        assert_eq!(cert.shells[0].sup_upper, 5.0);
    }

    #[test]
    fn three_condition_pattern() {
        let cert = match_patterns(&ledger_of(
            0.25,
            &[
                (1.0, ConditionKind::I1),
                (2.0, ConditionKind::I0),
                (9.0, ConditionKind::I1),
            ],
        ));
        assert_eq!(cert.pattern, Pattern::S4);
        assert_eq!(cert.solution_count, 2);
        assert_eq!(cert.shells.len(), 2);
        // Consecutive shells share the middle boundary.
        assert_eq!(cert.shells[0].outer_rho, cert.shells[1].inner_rho);
    }

    #[test]
    fn four_condition_patterns_give_three_solutions() {
        let cert = match_patterns(&ledger_of(
            0.5,
            &[
                (1.0, ConditionKind::I0),
                (3.0, ConditionKind::I1),
                (4.0, ConditionKind::I0),
                (9.0, ConditionKind::I1),
            ],
        ));
        assert_eq!(cert.pattern, Pattern::S5);
        assert_eq!(cert.solution_count, 3);
        assert_eq!(cert.shells.len(), 3);

        let cert = match_patterns(&ledger_of(
            0.5,
            &[
                (1.0, ConditionKind::I1),
                (2.0, ConditionKind::I0),
                (5.0, ConditionKind::I1),
                (6.0, ConditionKind::I0),
            ],
        ));
        assert_eq!(cert.pattern, Pattern::S6);
        assert_eq!(cert.solution_count, 3);
    }

    #[test]
    fn augmenting_a_ledger_never_loses_solutions() {
        let base = ledger_of(
            0.25,
            &[(1.0, ConditionKind::I1), (28.0, ConditionKind::I0)],
        );
        let before = match_patterns(&base).solution_count;
        let mut grown = base.clone();
        assert!(grown.push(entry(200.0, ConditionKind::I1)));
        let after = match_patterns(&grown).solution_count;
        assert!(after >= before);
        assert_eq!(after, 2);
    }

    #[test]
    fn strong_forms_feed_the_ledger() {
        let mut ledger = ConditionLedger::new(0.25);
        assert!(ledger.push(entry(1.0, ConditionKind::I1Strong)));
        assert_eq!(ledger.entries[0].kind, ConditionKind::I1);
        assert!(!ledger.push(entry(1.0, ConditionKind::Eig1)));
        let mut failing = entry(2.0, ConditionKind::I0);
        failing.holds = false;
        assert!(!ledger.push(failing));
    }

    #[test]
    fn advisory_flag_propagates() {
        let mut ledger = ConditionLedger::new(0.25);
        let mut r = entry(1.0, ConditionKind::I1);
        r.advisory = true;
        ledger.push(r);
        ledger.push(entry(28.0, ConditionKind::I0));
        assert!(match_patterns(&ledger).advisory);
    }

    #[test]
    fn quadratic_example_certifies_one_solution() {
        let problem = example1_problem();
        let outcome = certify_problem(&problem).unwrap();
        assert_eq!(outcome.certificate.pattern, Pattern::S2);
        assert_eq!(outcome.certificate.solution_count, 1);
        let shell = &outcome.certificate.shells[0];
        assert!((shell.sup_lower - 1.0).abs() < 1e-12);
        assert!((shell.sup_upper - 112.0).abs() < 1e-9);
        assert!(!outcome.certificate.advisory);
    }
}
