//! Precision/recall of the approximate algorithm against the baseline, and a
//! small benchmark harness over generated corpora.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use serde::Deserialize;

use crate::engine::{baseline_query, pi_query, ApproxParams, Mode, QueryOutcome};
use crate::error::{Error, Result};
use crate::pi_index::build_indexes;
use crate::prxml::{generate_prxml, random_det_tree, DeweyCode, KindRatio, TreeShape};

pub const CSV_HEADER: &str = "corpus,query,sigma,mode,results,precision,recall,fmeasure,convolutions,micros";

#[derive(Debug, Clone, PartialEq)]
pub struct PRReport {
    pub corpus: String,
    pub query: String,
    pub sigma: f64,
    pub mode: String,
    pub results: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    pub convolutions: u64,
    pub micros: u64,
}

/// Precision and recall of `r_piaa` taking `r_ba` as the truth. A ratio
/// with an empty denominator is 1, so two empty sets are a perfect match.
pub fn precision_recall(r_ba: &[DeweyCode], r_piaa: &[DeweyCode]) -> (f64, f64) {
    let ba: BTreeSet<&DeweyCode> = r_ba.iter().collect();
    let piaa: BTreeSet<&DeweyCode> = r_piaa.iter().collect();
    let both = ba.intersection(&piaa).count() as f64;
    let ratio = |den: usize| if den == 0 { 1.0 } else { both / den as f64 };
    (ratio(piaa.len()), ratio(ba.len()))
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Harmonic mean of the mean precision and the mean recall.
pub fn f_measure(reports: &[PRReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    let n = reports.len() as f64;
    let p = reports.iter().map(|r| r.precision).sum::<f64>() / n;
    let r = reports.iter().map(|r| r.recall).sum::<f64>() / n;
    Ok(harmonic(p, r))
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub name: String,
    pub seeds: Vec<u64>,
    pub det_nodes: usize,
    pub vocabulary: Vec<String>,
    #[serde(default = "default_ratio")]
    pub ratio: String,
    /// Largest generated document accepted.
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
}

fn default_ratio() -> String {
    "3:3:4".into()
}

fn default_max_nodes() -> usize {
    500_000
}

fn default_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub corpus: CorpusSpec,
    pub queries: Vec<Vec<String>>,
    pub sigmas: Vec<f64>,
    pub modes: Vec<String>,
    #[serde(default = "default_fraction")]
    pub select_fraction: f64,
    /// When false, `micros` is written as 0 so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: BenchSpec = toml::from_str(text).map_err(|e| Error::BenchSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BenchSpec(m.into()));
        if self.corpus.seeds.is_empty() || self.queries.is_empty() || self.sigmas.is_empty() {
            return bad("seeds, queries and sigmas must be non-empty");
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return bad("sigmas must lie in (0,1]");
        }
        if let Some(m) = self.modes.iter().find(|m| parse_mode(m).is_none()) {
            return Err(Error::BenchSpec(format!("unknown mode {m:?}")));
        }
        if !(self.select_fraction > 0.0 && self.select_fraction <= 1.0) {
            return bad("select_fraction must lie in (0,1]");
        }
        self.corpus
            .ratio
            .parse::<KindRatio>()
            .map_err(Error::BenchSpec)?;
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum BenchMode {
    Ba,
    Piea,
    Piaa,
}

fn parse_mode(m: &str) -> Option<BenchMode> {
    match m {
        "ba" => Some(BenchMode::Ba),
        "piea" => Some(BenchMode::Piea),
        "piaa" => Some(BenchMode::Piaa),
        _ => None,
    }
}

/// Runs every query, threshold and mode on every corpus document, one report
/// row each. Precision and recall compare against the baseline's answer.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<PRReport>> {
    spec.validate()?;
    let ratio: KindRatio = spec.corpus.ratio.parse().map_err(Error::BenchSpec)?;
    let vocab: Vec<&str> = spec.corpus.vocabulary.iter().map(String::as_str).collect();
    let params = ApproxParams {
        select_fraction: spec.select_fraction,
        ..ApproxParams::default()
    };
    let mut reports = Vec::new();
    for &seed in &spec.corpus.seeds {
        let det = random_det_tree(seed, &TreeShape::new(spec.corpus.det_nodes, &vocab));
        let doc = generate_prxml(&det, seed, ratio);
        if doc.len() > spec.corpus.max_nodes {
            return Err(Error::CorpusTooLarge {
                nodes: doc.len(),
                budget: spec.corpus.max_nodes,
            });
        }
        let (pi, ki) = build_indexes(&doc);
        let corpus = format!("{}-{seed}", spec.corpus.name);
        for q in &spec.queries {
            for &sigma in &spec.sigmas {
                let truth = baseline_query(&ki, &doc, q, sigma)?.nodes();
                for m in &spec.modes {
                    let start = Instant::now();
                    let out: QueryOutcome = match parse_mode(m).expect("validated") {
                        BenchMode::Ba => baseline_query(&ki, &doc, q, sigma)?,
                        BenchMode::Piea => pi_query(&ki, &pi, &doc, q, sigma, Mode::Exact, &params)?,
                        BenchMode::Piaa => pi_query(&ki, &pi, &doc, q, sigma, Mode::Approx, &params)?,
                    };
                    let micros = if spec.timing {
                        start.elapsed().as_micros() as u64
                    } else {
                        0
                    };
                    let (precision, recall) = precision_recall(&truth, &out.nodes());
                    reports.push(PRReport {
                        corpus: corpus.clone(),
                        query: q.join(" "),
                        sigma,
                        mode: m.clone(),
                        results: out.results.len(),
                        precision,
                        recall,
                        fmeasure: harmonic(precision, recall),
                        convolutions: out.counters.convolutions,
                        micros,
                    });
                }
            }
        }
    }
    Ok(reports)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv(reports: &[PRReport], w: &mut impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{},{}",
            csv_field(&r.corpus),
            csv_field(&r.query),
            r.sigma,
            r.mode,
            r.results,
            r.precision,
            r.recall,
            r.fmeasure,
            r.convolutions,
            r.micros
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DeweyCode {
        s.parse().unwrap()
    }

    fn report(p: f64, r: f64) -> PRReport {
        PRReport {
            corpus: "c".into(),
            query: "k1 k2".into(),
            sigma: 0.3,
            mode: "piaa".into(),
            results: 0,
            precision: p,
            recall: r,
            fmeasure: harmonic(p, r),
            convolutions: 0,
            micros: 0,
        }
    }

    #[test]
    fn precision_recall_cases() {
        let a = [d("0.1"), d("0.2")];
        assert_eq!(precision_recall(&a, &a), (1.0, 1.0));
        let ba = [d("0.1"), d("0.2"), d("0.3"), d("0.4")];
        assert_eq!(precision_recall(&ba, &a), (1.0, 0.5));
        assert_eq!(precision_recall(&[], &[]), (1.0, 1.0));
        assert_eq!(precision_recall(&[], &a), (0.0, 1.0));
        assert_eq!(precision_recall(&a, &[]), (1.0, 0.0));
    }

    #[test]
    fn f_measure_cases() {
        assert_eq!(f_measure(&[report(1.0, 1.0)]).unwrap(), 1.0);
        let f = f_measure(&[report(0.8, 0.6)]).unwrap();
        assert!((f - 0.685_714_285_7).abs() < 1e-9);
        assert!(f_measure(&[]).is_err());
        assert!((f_measure(&[report(0.4, 0.4), report(0.4, 0.4)]).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(f_measure(&[report(0.0, 0.0)]).unwrap(), 0.0);
    }

    const SPEC: &str = r#"
sigmas = [0.3, 0.7]
modes = ["ba", "piea", "piaa"]
queries = [["k1", "k2"]]

[corpus]
name = "tiny"
seeds = [1, 2]
det_nodes = 30
vocabulary = ["k1", "k2", "k3"]
"#;

    #[test]
    fn bench_is_deterministic_and_consistent() {
        let spec = BenchSpec::from_toml(SPEC).unwrap();
        let reports = run_bench(&spec).unwrap();
        assert_eq!(reports.len(), 2 * 2 * 3);
        for r in reports.iter().filter(|r| r.mode != "piaa") {
            assert_eq!((r.precision, r.recall), (1.0, 1.0));
        }
        for pair in reports.chunks(3) {
            assert!(pair[1].convolutions <= pair[0].convolutions);
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&reports, &mut a).unwrap();
        write_csv(&run_bench(&spec).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.ends_with(b"\n"));
        assert!(String::from_utf8(a).unwrap().starts_with(CSV_HEADER));
    }

    #[test]
    fn bad_specs() {
        assert!(BenchSpec::from_toml("x = 1").is_err());
        let bad_mode = SPEC.replace("\"piaa\"", "\"fast\"");
        assert!(BenchSpec::from_toml(&bad_mode).is_err());
        let bad_sigma = SPEC.replace("0.7", "1.5");
        assert!(BenchSpec::from_toml(&bad_sigma).is_err());
        let huge = SPEC.replace("det_nodes = 30", "det_nodes = 30\nmax_nodes = 5");
        let spec = BenchSpec::from_toml(&huge).unwrap();
        assert!(matches!(run_bench(&spec), Err(Error::CorpusTooLarge { .. })));
    }
}
