//! Page-load quality proxies derived from delivery times, and relative
//! comparisons between schedulers.
//!
//! These are byte-delivery stand-ins for browser paint metrics, not
//! measurements of rendering:
//!
//! * FCP proxy: the latest completion among the main document and every
//!   render-blocking resource.
//! * LCP proxy: the latest completion among flagged LCP candidates; failing
//!   that the largest media resource, failing that the main document. Never
//!   earlier than the FCP proxy, since nothing is painted before first paint.
//! * SI proxy: mean completion time weighted by resource size.
//! * PLT: the last completion.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use thiserror::Error;

use crate::priority::ResourceType;
use crate::scenario::Scenario;
use crate::sched::SchedulerKind;
use crate::sim::DeliveryTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Fcp,
    Lcp,
    Si,
    Plt,
}

impl Metric {
    /// Column order used by every table and CSV.
    pub const ALL: [Metric; 4] = [Metric::Fcp, Metric::Lcp, Metric::Si, Metric::Plt];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Fcp => "fcp",
            Metric::Lcp => "lcp",
            Metric::Si => "si",
            Metric::Plt => "plt",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Fcp => "FCP",
            Metric::Lcp => "LCP",
            Metric::Si => "SI",
            Metric::Plt => "PLT",
        }
    }
}

/// All times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub fcp_proxy: f64,
    pub lcp_proxy: f64,
    pub si_proxy: f64,
    pub plt: f64,
    pub per_resource: BTreeMap<String, f64>,
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Fcp => self.fcp_proxy,
            Metric::Lcp => self.lcp_proxy,
            Metric::Si => self.si_proxy,
            Metric::Plt => self.plt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("trace has no completion for: {}", .0.join(", "))]
    IncompleteTrace(Vec<String>),
    #[error("scenario has no main document")]
    NoDocument,
    #[error("nothing to compare")]
    EmptyComparison,
}

pub fn compute_report(
    trace: &DeliveryTrace,
    scenario: &Scenario,
) -> Result<MetricsReport, MetricsError> {
    let mut per_resource = BTreeMap::new();
    let mut missing = Vec::new();
    let mut completions = Vec::with_capacity(scenario.resources.len());
    for spec in &scenario.resources {
        match trace.timing(&spec.id) {
            Some(t) => {
                let secs = t.completion.as_secs_f64();
                per_resource.insert(spec.id.clone(), secs);
                completions.push((spec, secs));
            }
            None => missing.push(spec.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(MetricsError::IncompleteTrace(missing));
    }

    let main_doc = scenario.main_document().ok_or(MetricsError::NoDocument)?;
    let doc_done = per_resource[&main_doc.id];

    let latest = |pred: &dyn Fn(&crate::scenario::ResourceSpec) -> bool| {
        completions
            .iter()
            .filter(|(spec, _)| pred(spec))
            .map(|&(_, t)| t)
            .fold(None, |acc: Option<f64>, t| {
                Some(acc.map_or(t, |a| a.max(t)))
            })
    };

    let fcp_proxy = latest(&|s| s.render_blocking).map_or(doc_done, |t| t.max(doc_done));

    let lcp_proxy = latest(&|s| s.lcp_candidate)
        .or_else(|| {
            // Largest media resource; the earliest listed wins ties.
            completions
                .iter()
                .filter(|(s, _)| s.rtype == ResourceType::Media)
                .fold(None, |best: Option<(u64, f64)>, &(s, t)| match best {
                    Some((size, _)) if size >= s.size_bytes => best,
                    _ => Some((s.size_bytes, t)),
                })
                .map(|(_, t)| t)
        })
        .unwrap_or(doc_done)
        .max(fcp_proxy);

    let plt = completions.iter().map(|&(_, t)| t).fold(0.0, f64::max);

    let total_bytes: u64 = completions.iter().map(|(s, _)| s.size_bytes).sum();
    let si_proxy = if total_bytes == 0 {
        completions.iter().map(|&(_, t)| t).sum::<f64>() / completions.len() as f64
    } else {
        completions
            .iter()
            .map(|&(s, t)| s.size_bytes as f64 * t)
            .sum::<f64>()
            / total_bytes as f64
    };

    Ok(MetricsReport {
        fcp_proxy,
        lcp_proxy,
        si_proxy: si_proxy.min(plt),
        plt,
        per_resource,
    })
}

/// Relative improvement of a candidate over a baseline on one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Improvement {
    /// `(baseline - candidate) / baseline * 100`; positive means faster.
    Percent(f64),
    /// Baseline was zero, so no ratio exists.
    NotApplicable,
}

impl Improvement {
    pub fn between(baseline: f64, candidate: f64) -> Improvement {
        if baseline == 0.0 {
            Improvement::NotApplicable
        } else {
            Improvement::Percent((baseline - candidate) / baseline * 100.0)
        }
    }

    pub fn percent(self) -> Option<f64> {
        match self {
            Improvement::Percent(p) => Some(p),
            Improvement::NotApplicable => None,
        }
    }
}

impl fmt::Display for Improvement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Improvement::Percent(p) => write!(f, "{p:.1}"),
            Improvement::NotApplicable => f.write_str("n/a"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub fcp: Improvement,
    pub lcp: Improvement,
    pub si: Improvement,
    pub plt: Improvement,
}

impl Comparison {
    pub fn get(&self, metric: Metric) -> Improvement {
        match metric {
            Metric::Fcp => self.fcp,
            Metric::Lcp => self.lcp,
            Metric::Si => self.si,
            Metric::Plt => self.plt,
        }
    }
}

pub fn compare(baseline: &MetricsReport, candidate: &MetricsReport) -> Comparison {
    let imp = |m| Improvement::between(baseline.get(m), candidate.get(m));
    Comparison {
        fcp: imp(Metric::Fcp),
        lcp: imp(Metric::Lcp),
        si: imp(Metric::Si),
        plt: imp(Metric::Plt),
    }
}

pub const METRICS_CSV_HEADER: &str = "scenario,scheduler,fcp_s,lcp_s,si_s,plt_s";
pub const COMPARISON_CSV_HEADER: &str = "scenario,metric,improvement_pct";

pub fn metrics_csv(rows: &[(String, SchedulerKind, MetricsReport)]) -> String {
    let mut out = String::new();
    out.push_str(METRICS_CSV_HEADER);
    out.push('\n');
    for (scenario, kind, r) in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            crate::sim::csv_field(scenario),
            kind,
            r.fcp_proxy,
            r.lcp_proxy,
            r.si_proxy,
            r.plt
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedComparison {
    pub table: String,
    pub csv: String,
}

/// Text table (one decimal, `n/a` for undefined cells) and long-format CSV,
/// columns FCP, LCP, SI, PLT, rows in input order.
pub fn render_comparison_table(
    rows: &[(String, Comparison)],
) -> Result<RenderedComparison, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyComparison);
    }
    let name_width = rows
        .iter()
        .map(|(name, _)| name.chars().count())
        .chain(["scenario".len()])
        .max()
        .unwrap_or(0);

    let mut table = String::new();
    write!(table, "{:<name_width$}", "scenario").unwrap();
    for m in Metric::ALL {
        write!(table, "  {:>8}", m.label()).unwrap();
    }
    table.push('\n');
    for (name, cmp) in rows {
        write!(table, "{name:<name_width$}").unwrap();
        for m in Metric::ALL {
            write!(table, "  {:>8}", cmp.get(m).to_string()).unwrap();
        }
        table.push('\n');
    }

    let mut csv = String::new();
    csv.push_str(COMPARISON_CSV_HEADER);
    csv.push('\n');
    for (name, cmp) in rows {
        for m in Metric::ALL {
            let value = cmp
                .get(m)
                .percent()
                .map_or_else(|| "NA".to_string(), |p| format!("{p:.3}"));
            writeln!(
                csv,
                "{},{},{}",
                crate::sim::csv_field(name),
                m.name(),
                value
            )
            .unwrap();
        }
    }
    Ok(RenderedComparison { table, csv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priority::ChromiumPriority;
    use crate::scenario::{DiscoveryTrigger, ResourceSpec};
    use crate::sched::{Quantum, ResourceId};
    use crate::sim::{run, LinkConfig, ResourceTiming};
    use crate::time::SimTime;

    fn report(fcp: f64, lcp: f64, si: f64, plt: f64) -> MetricsReport {
        MetricsReport {
            fcp_proxy: fcp,
            lcp_proxy: lcp,
            si_proxy: si,
            plt,
            per_resource: BTreeMap::new(),
        }
    }

    fn spec(id: &str, rtype: ResourceType, size: u64) -> ResourceSpec {
        let trigger = if rtype == ResourceType::Document {
            DiscoveryTrigger::AtTime(SimTime::ZERO)
        } else {
            DiscoveryTrigger::AfterComplete {
                parent: "doc".into(),
                delta: SimTime::ZERO,
            }
        };
        ResourceSpec::new(id, rtype, size, ChromiumPriority::High, trigger)
    }

    /// A trace with hand-set completion times.
    fn fake_trace(scenario: &Scenario, done: &[f64]) -> DeliveryTrace {
        DeliveryTrace {
            scheduler: SchedulerKind::Mixed,
            quantum: Quantum::DEFAULT,
            events: Vec::new(),
            resources: scenario
                .resources
                .iter()
                .zip(done)
                .map(|(s, &t)| ResourceTiming {
                    id: ResourceId::from(s.id.as_str()),
                    priority: s.eps_priority().unwrap(),
                    size_bytes: s.size_bytes,
                    activation: SimTime::ZERO,
                    first_byte: None,
                    completion: SimTime::from_secs_f64(t).unwrap(),
                })
                .collect(),
        }
    }

    #[test]
    fn single_document_all_metrics_equal() {
        let s = Scenario::new("one", vec![spec("doc", ResourceType::Document, 3000)]);
        let trace = run(
            &s,
            SchedulerKind::Sequential,
            LinkConfig::with_rate(1000.0),
            Quantum::DEFAULT,
        )
        .unwrap();
        let r = compute_report(&trace, &s).unwrap();
        for m in Metric::ALL {
            assert!((r.get(m) - 3.01).abs() < 1e-9, "{m:?} = {}", r.get(m));
        }
    }

    #[test]
    fn fcp_and_lcp_from_flags() {
        let s = Scenario::new(
            "flags",
            vec![
                spec("doc", ResourceType::Document, 2000),
                spec("css", ResourceType::Stylesheet, 1000).render_blocking(),
                spec("hero", ResourceType::Media, 2000).lcp_candidate(),
            ],
        );
        let r = compute_report(&fake_trace(&s, &[2.0, 3.0, 5.0]), &s).unwrap();
        assert_eq!((r.fcp_proxy, r.lcp_proxy, r.plt), (3.0, 5.0, 5.0));
    }

    #[test]
    fn lcp_fallbacks() {
        let s = Scenario::new(
            "media",
            vec![
                spec("doc", ResourceType::Document, 100),
                spec("small", ResourceType::Media, 10),
                spec("big", ResourceType::Media, 500),
            ],
        );
        let r = compute_report(&fake_trace(&s, &[1.0, 4.0, 3.0]), &s).unwrap();
        assert_eq!(r.lcp_proxy, 3.0);

        let s = Scenario::new(
            "nomedia",
            vec![
                spec("doc", ResourceType::Document, 100),
                spec("js", ResourceType::Script, 10),
            ],
        );
        let r = compute_report(&fake_trace(&s, &[1.5, 4.0]), &s).unwrap();
        assert_eq!(r.lcp_proxy, 1.5);
        assert_eq!(r.fcp_proxy, 1.5);
    }

    #[test]
    fn lcp_is_bounded_below_by_first_paint() {
        let s = Scenario::new(
            "early-hero",
            vec![
                spec("doc", ResourceType::Document, 2000),
                spec("css", ResourceType::Stylesheet, 1000).render_blocking(),
                spec("hero", ResourceType::Media, 2000).lcp_candidate(),
            ],
        );
        let r = compute_report(&fake_trace(&s, &[1.0, 4.0, 2.5]), &s).unwrap();
        assert_eq!((r.fcp_proxy, r.lcp_proxy), (4.0, 4.0));
    }

    #[test]
    fn si_is_size_weighted_mean() {
        let s = Scenario::new(
            "si",
            vec![
                spec("doc", ResourceType::Document, 100),
                spec("x", ResourceType::Other, 100),
            ],
        );
        let r = compute_report(&fake_trace(&s, &[2.0, 4.0]), &s).unwrap();
        assert_eq!(r.si_proxy, 3.0);
    }

    #[test]
    fn missing_and_documentless_inputs() {
        let s = Scenario::new(
            "s",
            vec![
                spec("doc", ResourceType::Document, 100),
                spec("x", ResourceType::Other, 100),
            ],
        );
        let partial = fake_trace(&s, &[1.0]);
        assert_eq!(
            compute_report(&partial, &s),
            Err(MetricsError::IncompleteTrace(vec!["x".into()]))
        );
        let no_doc = Scenario::new("nd", vec![spec("x", ResourceType::Other, 100)]);
        assert_eq!(
            compute_report(&fake_trace(&no_doc, &[1.0]), &no_doc),
            Err(MetricsError::NoDocument)
        );
    }

    #[test]
    fn improvement_arithmetic() {
        assert_eq!(Improvement::between(4.0, 3.0), Improvement::Percent(25.0));
        assert_eq!(Improvement::between(2.0, 2.0), Improvement::Percent(0.0));
        assert_eq!(Improvement::between(0.0, 1.0), Improvement::NotApplicable);
        assert!(Improvement::between(2.0, 3.0).percent().unwrap() < 0.0);
    }

    #[test]
    fn self_comparison_is_zero() {
        let r = report(1.0, 2.0, 1.5, 3.0);
        let c = compare(&r, &r);
        for m in Metric::ALL {
            assert_eq!(c.get(m), Improvement::Percent(0.0));
        }
    }

    #[test]
    fn table_rendering() {
        let row = compare(&report(4.0, 4.0, 4.0, 4.0), &report(3.0, 4.0, 5.0, 4.0));
        let out = render_comparison_table(&[("site".into(), row.clone())]).unwrap();
        let lines: Vec<&str> = out.table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0]
            .split_whitespace()
            .eq(["scenario", "FCP", "LCP", "SI", "PLT"]));
        assert!(lines[1]
            .split_whitespace()
            .eq(["site", "25.0", "0.0", "-25.0", "0.0"]));
        assert_eq!(
            out.csv,
            "scenario,metric,improvement_pct\nsite,fcp,25.000\nsite,lcp,0.000\nsite,si,-25.000\nsite,plt,0.000\n"
        );

        let two = render_comparison_table(&[("b".into(), row.clone()), ("a".into(), row)]).unwrap();
        let names: Vec<&str> = two
            .table
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().next().unwrap())
            .collect();
        assert_eq!(names, ["b", "a"]);

        assert_eq!(
            render_comparison_table(&[]),
            Err(MetricsError::EmptyComparison)
        );
    }

    #[test]
    fn not_applicable_cells() {
        let c = compare(&report(0.0, 1.0, 1.0, 1.0), &report(0.0, 1.0, 1.0, 1.0));
        let out = render_comparison_table(&[("z".into(), c)]).unwrap();
        assert!(out.table.lines().nth(1).unwrap().contains("n/a"));
        assert!(out.csv.contains("z,fcp,NA"));
    }

    #[test]
    fn metrics_csv_format() {
        let csv = metrics_csv(&[("s".into(), SchedulerKind::Mixed, report(1.0, 2.0, 1.5, 3.0))]);
        assert_eq!(
            csv,
            "scenario,scheduler,fcp_s,lcp_s,si_s,plt_s\ns,mixed,1.000000,2.000000,1.500000,3.000000\n"
        );
    }
}
