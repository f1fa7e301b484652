//! Runs properties over generated cases and collects a report.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gen::GenConfig;
use crate::props::{
    check, generate, shrink, Input, InputRepr, Mutation, Property, Settings, Verdict,
};

/// Box biases cycled through when `mixed_bias` is set.
pub const MIXED_BIASES: [f64; 4] = [0.0, 0.3, 0.6, 0.9];

/// Retries per case when the generated input misses a property's premise.
const RETRIES: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gen: GenConfig,
    /// Cases per property.
    pub count: usize,
    /// Pick each case's box bias from [`MIXED_BIASES`] by its seed instead
    /// of using `gen.box_bias`.
    pub mixed_bias: bool,
    pub settings: Settings,
    pub shrink: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gen: GenConfig::default(),
            count: 100,
            mixed_bias: true,
            settings: Settings::default(),
            shrink: true,
        }
    }
}

impl RunConfig {
    /// The generator configuration of the case with this seed.
    pub fn case_config(&self, seed: u64) -> GenConfig {
        let mut cfg = self.gen.with_seed(seed);
        if self.mixed_bias {
            cfg.box_bias = MIXED_BIASES[((seed >> 1) % MIXED_BIASES.len() as u64) as usize];
        }
        cfg
    }

    pub fn with_mutation(mut self, m: Mutation) -> Self {
        self.settings.mutation = Some(m);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub property: String,
    pub seed: u64,
    pub config: GenConfig,
    /// The failing input after shrinking.
    pub input: InputRepr,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub property: String,
    pub seed: u64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub cases: usize,
    pub discarded: usize,
    pub failures: usize,
    pub findings: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub cases_run: usize,
    pub discarded: usize,
    pub failures: Vec<Failure>,
    pub findings: Vec<Finding>,
    pub properties: BTreeMap<String, Stats>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn stats(&self, p: Property) -> Stats {
        self.properties.get(p.name()).copied().unwrap_or_default()
    }

    /// One JSON object per failure and finding, then a summary object.
    pub fn json_lines(&self) -> String {
        let mut out = String::new();
        for f in &self.failures {
            out += &serde_json::json!({ "failure": f }).to_string();
            out.push('\n');
        }
        for f in &self.findings {
            out += &serde_json::json!({ "finding": f }).to_string();
            out.push('\n');
        }
        let summary = serde_json::json!({
            "summary": {
                "cases_run": self.cases_run,
                "discarded": self.discarded,
                "failures": self.failures.len(),
                "findings": self.findings.len(),
                "properties": self.properties,
            }
        });
        out += &summary.to_string();
        out.push('\n');
        out
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, s) in &self.properties {
            let status = if s.failures == 0 { "ok" } else { "FAILED" };
            writeln!(
                f,
                "{name:<24} {status:<6} cases={} discarded={} failures={} findings={}",
                s.cases, s.discarded, s.failures, s.findings
            )?;
        }
        for fail in &self.failures {
            writeln!(f, "\n{} failed at seed {}", fail.property, fail.seed)?;
            for line in fail.input.env.lines() {
                writeln!(f, "  env   {line}")?;
            }
            if let Some(t) = &fail.input.term {
                writeln!(f, "  term  {t}")?;
            }
            for t in &fail.input.types {
                writeln!(f, "  type  {t}")?;
            }
            for o in &fail.outputs {
                writeln!(f, "  {o}")?;
            }
        }
        write!(
            f,
            "{} cases, {} failures, {} findings",
            self.cases_run,
            self.failures.len(),
            self.findings.len()
        )
    }
}

/// Outcome of one case: the seed that produced a usable input, and what
/// the property said about it.
#[derive(Clone, Debug)]
pub struct CaseResult {
    pub seed: u64,
    pub input: Option<Input>,
    pub verdict: Verdict,
}

/// Generates and checks the case with exactly this seed.
pub fn replay(prop: Property, rc: &RunConfig, seed: u64) -> CaseResult {
    match generate(prop, &rc.case_config(seed)) {
        Ok(input) => {
            let verdict = check(prop, &input, &rc.settings);
            CaseResult {
                seed,
                input: Some(input),
                verdict,
            }
        }
        Err(e) => CaseResult {
            seed,
            input: None,
            verdict: Verdict::Discard(e.to_string()),
        },
    }
}

/// Tries seeds derived from `seed` until one meets the property's premise.
fn run_case(prop: Property, rc: &RunConfig, seed: u64) -> CaseResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = seed;
    let mut last = None;
    for _ in 0..RETRIES {
        let r = replay(prop, rc, next);
        if !matches!(r.verdict, Verdict::Discard(_)) {
            return r;
        }
        last = Some(r);
        next = rng.gen();
    }
    last.expect("at least one attempt")
}

fn case_seeds(rc: &RunConfig, prop: Property) -> Vec<u64> {
    let index = Property::ALL.iter().position(|p| *p == prop).unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(rc.gen.seed);
    rng.set_stream(index);
    (0..rc.count).map(|_| rng.gen()).collect()
}

/// Runs every property in `props` over `rc.count` cases each.
pub fn run_differential(rc: &RunConfig, props: &[Property]) -> Report {
    let work: Vec<(Property, u64)> = props
        .iter()
        .flat_map(|&p| case_seeds(rc, p).into_iter().map(move |s| (p, s)))
        .collect();
    let results: Vec<(Property, CaseResult)> = work
        .par_iter()
        .map(|&(p, seed)| (p, run_case(p, rc, seed)))
        .collect();

    let mut report = Report::default();
    for &p in props {
        report.properties.entry(p.name().to_string()).or_default();
    }
    for (p, r) in results {
        let stats = report.properties.entry(p.name().to_string()).or_default();
        match r.verdict {
            Verdict::Discard(_) => {
                stats.discarded += 1;
                report.discarded += 1;
                continue;
            }
            Verdict::Pass => {}
            Verdict::Finding(detail) => {
                stats.findings += 1;
                report.findings.push(Finding {
                    property: p.name().into(),
                    seed: r.seed,
                    detail,
                });
            }
            Verdict::Fail(outputs) => {
                stats.failures += 1;
                let input = r.input.expect("a failing case has an input");
                let (input, outputs) = if rc.shrink {
                    match shrink(p, &input, &rc.settings) {
                        (small, Verdict::Fail(o)) => (small, o),
                        _ => (input, outputs),
                    }
                } else {
                    (input, outputs)
                };
                report.failures.push(Failure {
                    property: p.name().into(),
                    seed: r.seed,
                    config: rc.case_config(r.seed),
                    input: input.render(),
                    outputs,
                });
            }
        }
        stats.cases += 1;
        report.cases_run += 1;
    }
    report
        .failures
        .sort_by(|a, b| (a.seed, &a.property).cmp(&(b.seed, &b.property)));
    report
        .findings
        .sort_by(|a, b| (a.seed, &a.property).cmp(&(b.seed, &b.property)));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(count: usize) -> RunConfig {
        RunConfig {
            count,
            ..RunConfig::default()
        }
    }

    #[test]
    fn deterministic_reports() {
        let rc = small(10);
        let a = run_differential(&rc, &Property::ALL);
        let b = run_differential(&rc, &Property::ALL);
        assert_eq!(a, b);
        assert!(a.passed(), "{a}");
    }

    #[test]
    fn broken_cv_is_caught_and_replays() {
        let rc = small(200).with_mutation(Mutation::BrokenCv);
        let report = run_differential(&rc, &[Property::AdpAdptEquivalence]);
        assert!(!report.passed());
        let fail = &report.failures[0];
        assert!(replay(Property::AdpAdptEquivalence, &rc, fail.seed)
            .verdict
            .is_fail());
    }

    #[test]
    fn json_lines_parse() {
        let report = run_differential(&small(3), &[Property::SubReflexivity]);
        for line in report.json_lines().lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }
}
