//! Synthetic contexts, runtime comparison and the error-injection experiment.

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::canonical_base::canonical_base_within;
use crate::context::{AttributeSet, FormalContext, ObjectId};
use crate::crucial::inspect_closure;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_objects: usize,
    pub num_attributes: usize,
    pub density: f64,
    pub seed: u64,
}

/// Every cell is set independently with probability `density`.
pub fn gen_synthetic(spec: &SynthSpec) -> FormalContext {
    let density = spec.density.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = (0..spec.num_objects)
        .map(|_| {
            let mut row = BitSet::empty(spec.num_attributes);
            for m in 0..spec.num_attributes {
                if rng.gen_bool(density) {
                    row.insert(m);
                }
            }
            row
        })
        .collect();
    FormalContext::new(
        (0..spec.num_objects).map(|g| format!("g{g}")).collect(),
        (0..spec.num_attributes).map(|m| format!("m{m}")).collect(),
        rows,
    )
    .expect("generated names are unique")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closure,
    Base,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closure" => Ok(Method::Closure),
            "base" => Ok(Method::Base),
            other => Err(Error::Shape(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub num_objects: usize,
    pub num_attributes: usize,
    pub density: f64,
    pub seed: u64,
    pub method: Method,
    /// Median over the repetitions, or the budget when censored.
    pub seconds: f64,
    pub censored: bool,
}

/// Inspects every object of `ctx` against the rest of the context, once.
/// Returns `None` when the base method runs past `budget`.
pub fn hold_out_all(ctx: &FormalContext, method: Method, budget: Option<Duration>) -> Option<Duration> {
    let started = Instant::now();
    for g in 0..ctx.num_objects() {
        let rest = ctx.without_object(ObjectId(g));
        let intent = ctx.row(ObjectId(g));
        match method {
            Method::Closure => {
                std::hint::black_box(inspect_closure(&rest, intent));
            }
            Method::Base => {
                let remaining = budget.map(|b| b.saturating_sub(started.elapsed()));
                let base = canonical_base_within(&rest, remaining).ok()?;
                std::hint::black_box(base.inspect(intent));
            }
        }
        if budget.is_some_and(|b| started.elapsed() > b) {
            return None;
        }
    }
    Some(started.elapsed())
}

/// Median-of-`repetitions` timing per spec and method. A censored run stops
/// the remaining repetitions for that cell.
pub fn runtime_compare(
    specs: &[SynthSpec],
    methods: &[Method],
    budget: Option<Duration>,
    repetitions: usize,
) -> Vec<RuntimeRow> {
    let mut rows = Vec::new();
    for spec in specs {
        let ctx = gen_synthetic(spec);
        for &method in methods {
            let mut times = Vec::new();
            let mut censored = false;
            for _ in 0..repetitions.max(1) {
                match hold_out_all(&ctx, method, budget) {
                    Some(t) => times.push(t),
                    None => {
                        censored = true;
                        break;
                    }
                }
            }
            let seconds = if censored {
                budget.map_or(f64::INFINITY, |b| b.as_secs_f64())
            } else {
                times.sort();
                times[times.len() / 2].as_secs_f64()
            };
            rows.push(RuntimeRow {
                num_objects: spec.num_objects,
                num_attributes: spec.num_attributes,
                density: spec.density,
                seed: spec.seed,
                method,
                seconds,
                censored,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub errors_per_object: usize,
    pub trials: usize,
    pub errors_found: usize,
    pub found_ratio: f64,
    pub total_implications: usize,
    pub implications_per_object: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TrialOutcome {
    found: bool,
    implications: usize,
}

/// Whether some premise's conclusions name every flipped attribute.
fn frame_finds(ctx: &FormalContext, intent: &AttributeSet, flipped: &[usize]) -> (bool, usize) {
    let merged = inspect_closure(ctx, intent).merged();
    let found = merged.iter().any(|imp| {
        flipped.iter().all(|&m| {
            if intent.contains(m) {
                imp.negative().contains(m)
            } else {
                imp.positive().contains(m)
            }
        })
    });
    (found, merged.len())
}

fn run_trial(ctx: &FormalContext, complement: &FormalContext, n_errors: usize, seed: u64, trial: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let g = rng.gen_range(0..ctx.num_objects());
    let flipped = sample(&mut rng, ctx.num_attributes(), n_errors).into_vec();
    let mut intent = ctx.row(ObjectId(g)).clone();
    for &m in &flipped {
        intent.toggle(m);
    }
    let (found_here, here) = frame_finds(&ctx.without_object(ObjectId(g)), &intent, &flipped);
    let (found_there, there) = frame_finds(&complement.without_object(ObjectId(g)), &intent.complement(), &flipped);
    TrialOutcome {
        found: found_here || found_there,
        implications: here + there,
    }
}

/// Removes a random object, flips `n_errors` random distinct bits of its
/// intent, inspects it in both the context and its complement, and counts
/// how often one premise names every flipped attribute.
pub fn error_injection_experiment(
    ctx: &FormalContext,
    n_errors: usize,
    trials: usize,
    seed: u64,
) -> Result<InjectionReport> {
    if ctx.num_objects() == 0 {
        return Err(Error::Shape("error injection needs at least one object".into()));
    }
    if n_errors == 0 || n_errors > ctx.num_attributes() {
        return Err(Error::Shape(format!(
            "cannot flip {n_errors} of {} attributes",
            ctx.num_attributes()
        )));
    }
    let complement = ctx.complement();
    let (errors_found, total_implications) = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(ctx, &complement, n_errors, seed, t))
        .map(|o| (usize::from(o.found), o.implications))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let ratio = |x: usize| if trials == 0 { 0.0 } else { x as f64 / trials as f64 };
    Ok(InjectionReport {
        errors_per_object: n_errors,
        trials,
        errors_found,
        found_ratio: ratio(errors_found),
        total_implications,
        implications_per_object: ratio(total_implications),
    })
}

pub fn reports_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Shape(format!("csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Shape(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn synthetic_extremes() {
        let empty = gen_synthetic(&SynthSpec { num_objects: 5, num_attributes: 4, density: 0.0, seed: 1 });
        assert_eq!(empty.crosses(), 0);
        let full = gen_synthetic(&SynthSpec { num_objects: 5, num_attributes: 4, density: 1.0, seed: 1 });
        assert_eq!(full.crosses(), 20);
        assert_eq!(empty.complement(), full);
    }

    #[test]
    fn synthetic_density_within_three_sigma() {
        let spec = SynthSpec { num_objects: 50, num_attributes: 20, density: 0.1, seed: 7 };
        let ctx = gen_synthetic(&spec);
        let (n, p) = (1000.0, 0.1);
        let sigma = f64::sqrt(n * p * (1.0 - p));
        assert!((ctx.crosses() as f64 - n * p).abs() <= 3.0 * sigma);
        assert_eq!(gen_synthetic(&spec), ctx);
    }

    #[test]
    fn tiny_runtime_compare() {
        let spec = SynthSpec { num_objects: 1, num_attributes: 1, density: 0.5, seed: 3 };
        let rows = runtime_compare(&[spec], &[Method::Closure, Method::Base], None, 3);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| !r.censored && r.seconds < 1.0));
    }

    #[test]
    fn censoring_is_recorded() {
        let spec = SynthSpec { num_objects: 20, num_attributes: 12, density: 0.5, seed: 3 };
        let rows = runtime_compare(&[spec], &[Method::Base], Some(Duration::ZERO), 3);
        assert!(rows[0].censored);
        assert_eq!(rows[0].seconds, 0.0);
    }

    #[test]
    fn constant_context_finds_every_flip() {
        let ctx = FormalContext::from_cross_rows(
            &["a", "b", "c", "d"],
            &["w", "x", "y", "z"],
            &["X.X.", "X.X.", "X.X.", "X.X."],
        )
        .unwrap();
        let report = error_injection_experiment(&ctx, 1, 200, 5).unwrap();
        assert_eq!(report.errors_found, 200);
        assert_eq!(report.found_ratio, 1.0);
    }

    #[test]
    fn report_is_deterministic() {
        let ctx = fixtures::quadrangles();
        let a = error_injection_experiment(&ctx, 2, 100, 42).unwrap();
        let b = error_injection_experiment(&ctx, 2, 100, 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.found_ratio, a.errors_found as f64 / 100.0);
        let csv = reports_to_csv(&[a]).unwrap();
        assert!(csv.starts_with(
            "errors_per_object,trials,errors_found,found_ratio,total_implications,implications_per_object\n"
        ));
    }

    #[test]
    fn rejects_bad_parameters() {
        let ctx = fixtures::quadrangles();
        assert!(error_injection_experiment(&ctx, 0, 10, 1).is_err());
        assert!(error_injection_experiment(&ctx, 8, 10, 1).is_err());
    }
}
