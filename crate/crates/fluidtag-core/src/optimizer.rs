//! Two-step hierarchical grid search.
//!
//! Round one scans the full `{a1, a2, c2}` box on a coarse grid. Round two
//! shrinks the `{a1, a2}` box around the incumbent (clipped to the search
//! space), freezes `c2` at the incumbent value, and rescans on a finer grid.
//! Normalizers are refreshed each round from the maxima found on that
//! round's grid, unless pinned by configuration.
//!
//! Every evaluated point is recorded with its full breakdown; provider
//! failures at single points are annotated and scored zero instead of
//! aborting the round, so sparse datasets stay usable. Point evaluations run
//! in parallel, but normalization, scoring, and incumbent selection are
//! sequential reductions over the collected results, so identical inputs
//! produce identical output regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::EmProvider;
use crate::error::{Error, Result};
use crate::fitness::{
    evaluate_raw, score, FitnessBreakdown, Gates, Normalization, RawEvaluation, Weights,
};
use crate::geometry::{
    make_grid, AxisBounds, FixedGeometry, FluidProperties, ParameterSpace, ParameterVector,
};
use crate::ic::ICProfile;

/// Grid layout of the two search rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Search space for round one.
    pub space: ParameterSpace,
    /// Samples per `(a1, a2, c2)` axis in round one.
    pub round1_counts: [usize; 3],
    /// Samples per refined `(a1, a2)` axis in round two.
    pub round2_counts: [usize; 2],
    /// Fraction of each axis span kept around the incumbent in round two;
    /// 0.5 with five round-one samples gives a box of plus/minus one
    /// round-one cell.
    pub shrink: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            space: ParameterSpace::default(),
            round1_counts: [5, 5, 4],
            round2_counts: [5, 5],
            shrink: 0.5,
        }
    }
}

impl GridSpec {
    /// Check counts and shrink factor.
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.round1_counts.contains(&0) {
            return Err(Error::invalid("grid spec", "round-one counts must be >= 1"));
        }
        if self.round2_counts.iter().any(|&c| c < 2) {
            return Err(Error::invalid(
                "grid spec",
                "round-two counts must be >= 2 on the refined axes",
            ));
        }
        if !self.shrink.is_finite() || self.shrink <= 0.0 || self.shrink >= 1.0 {
            return Err(Error::invalid(
                "grid spec",
                format!("shrink factor must lie in (0, 1), got {}", self.shrink),
            ));
        }
        Ok(())
    }

    /// Round-one grid points.
    pub fn round1_points(&self) -> Result<Vec<ParameterVector>> {
        make_grid(&self.space, self.round1_counts)
    }

    /// Refined box around an incumbent: `{a1, a2}` shrunk and clipped to the
    /// search space, `c2` frozen at the incumbent value.
    pub fn round2_space(&self, incumbent: &ParameterVector) -> ParameterSpace {
        let refine = |bounds: &AxisBounds, center: f64| {
            let half = 0.5 * self.shrink * bounds.span();
            AxisBounds::new(
                (center - half).max(bounds.min),
                (center + half).min(bounds.max),
            )
        };
        ParameterSpace {
            a1: refine(&self.space.a1, incumbent.a1),
            a2: refine(&self.space.a2, incumbent.a2),
            c2: AxisBounds::new(incumbent.c2, incumbent.c2),
        }
    }

    /// Round-two grid points centered on an incumbent.
    pub fn round2_points(&self, incumbent: &ParameterVector) -> Result<Vec<ParameterVector>> {
        make_grid(
            &self.round2_space(incumbent),
            [self.round2_counts[0], self.round2_counts[1], 1],
        )
    }
}

/// How a round fixes its normalizers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormPolicy {
    /// Maxima found on this round's grid (the default).
    #[default]
    RoundLocal,
    /// Running maxima across all rounds so far.
    Cumulative,
    /// Fixed values, for reproducing externally normalized scores.
    Pinned(Normalization),
}

/// Everything the design search needs besides the grid itself.
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    /// Electromagnetic response source.
    pub provider: &'a dyn EmProvider,
    /// Fixed geometry shared by all candidates.
    pub fixed: FixedGeometry,
    /// Liquid being quantified.
    pub fluid: FluidProperties,
    /// Self-tuning chip model.
    pub profile: ICProfile,
    /// Working frequency (Hz).
    pub frequency_hz: f64,
}

/// One grid point with its outcome: a breakdown, or an error annotation when
/// the provider could not answer.
#[derive(Debug, Clone, Serialize)]
pub struct PointOutcome {
    /// The evaluated candidate.
    pub point: ParameterVector,
    /// Scored breakdown; `None` when evaluation failed.
    pub breakdown: Option<FitnessBreakdown>,
    /// Error annotation for failed points.
    pub error: Option<String>,
}

/// Best point of a round.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Incumbent {
    /// Winning candidate.
    pub point: ParameterVector,
    /// Its breakdown under the round's normalization.
    pub breakdown: FitnessBreakdown,
}

/// Audit record of one search round.
#[derive(Debug, Clone, Serialize)]
pub struct RoundResult {
    /// 1-based round number.
    pub round: usize,
    /// Normalizers used to score this round.
    pub normalization: Normalization,
    /// Every evaluated point, in grid order.
    pub outcomes: Vec<PointOutcome>,
    /// Highest-fitness point, if any scored above zero.
    pub incumbent: Option<Incumbent>,
}

/// Final incumbent of a search, re-scored under the last round's
/// normalization.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FinalIncumbent {
    /// Winning candidate over all rounds.
    pub point: ParameterVector,
    /// Breakdown under the final round's normalization.
    pub breakdown: FitnessBreakdown,
    /// Round the point was first evaluated in.
    pub from_round: usize,
}

/// Full audit trail of a hierarchical search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// Per-round records, in execution order.
    pub rounds: Vec<RoundResult>,
    /// Best point across all rounds under the final normalization; `None`
    /// when every point was gated or failed.
    pub incumbent: Option<FinalIncumbent>,
}

/// Evaluate one grid exhaustively and score it under the resolved
/// normalization.
///
/// Pass one runs the provider over every point (in parallel) and collects
/// raw, normalization-independent records; the normalizers are then fixed
/// per `policy` and pass two scores every record. The incumbent is the
/// highest fitness above zero, ties broken toward the lexicographically
/// smallest `(a1, a2, c2)`.
pub fn run_round(
    ctx: &EvalContext,
    round: usize,
    points: Vec<ParameterVector>,
    weights: &Weights,
    gates: &Gates,
    policy: &NormPolicy,
    prior: Option<&Normalization>,
) -> Result<RoundResult> {
    if points.is_empty() {
        return Err(Error::invalid("grid", "round has no points to evaluate"));
    }

    let raws: Vec<std::result::Result<RawEvaluation, Error>> = points
        .par_iter()
        .map(|v| {
            evaluate_raw(
                ctx.provider,
                v,
                &ctx.fixed,
                &ctx.fluid,
                &ctx.profile,
                ctx.frequency_hz,
            )
        })
        .collect();

    let normalization = match policy {
        NormPolicy::Pinned(n) => *n,
        NormPolicy::RoundLocal => local_normalization(&raws),
        NormPolicy::Cumulative => {
            let local = local_normalization(&raws);
            match prior {
                Some(p) => Normalization::new(
                    local.gain_norm.max(p.gain_norm),
                    local.sensitivity_norm.max(p.sensitivity_norm),
                ),
                None => local,
            }
        }
    };
    normalization.validate()?;

    let outcomes: Vec<PointOutcome> = points
        .iter()
        .zip(&raws)
        .map(|(point, raw)| match raw {
            Ok(raw) => PointOutcome {
                point: *point,
                breakdown: Some(score(raw, &ctx.profile, weights, gates, &normalization)),
                error: None,
            },
            Err(e) => PointOutcome {
                point: *point,
                breakdown: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let incumbent = pick_incumbent(&outcomes);

    Ok(RoundResult {
        round,
        normalization,
        outcomes,
        incumbent,
    })
}

/// Two-step hierarchical search over the grid spec.
pub fn optimize(
    ctx: &EvalContext,
    spec: &GridSpec,
    weights: &Weights,
    gates: &Gates,
    policy: &NormPolicy,
) -> Result<SearchResult> {
    spec.validate()?;
    weights.validate()?;
    gates.validate()?;
    ctx.profile.validate()?;
    ctx.fixed.validate()?;
    ctx.fluid.validate()?;

    let round1 = run_round(ctx, 1, spec.round1_points()?, weights, gates, policy, None)?;

    let Some(seed) = round1.incumbent else {
        // Nothing scored above zero: refining has no center, report as-is.
        return Ok(SearchResult {
            rounds: vec![round1],
            incumbent: None,
        });
    };

    let round2 = run_round(
        ctx,
        2,
        spec.round2_points(&seed.point)?,
        weights,
        gates,
        policy,
        Some(&round1.normalization),
    )?;

    let incumbent = pick_final(&[&round2, &round1], ctx, weights, gates);
    Ok(SearchResult {
        rounds: vec![round1, round2],
        incumbent,
    })
}

/// Round-local normalizers: grid maxima of the mean linear gain and the
/// sensitivity, falling back to 1 when a maximum is unusable so scoring
/// stays well defined (such rounds gate to zero fitness anyway).
fn local_normalization(raws: &[std::result::Result<RawEvaluation, Error>]) -> Normalization {
    let mut gain = 0.0f64;
    let mut sens = 0.0f64;
    for raw in raws.iter().flatten() {
        gain = gain.max(raw.mean_linear_gain());
        sens = sens.max(raw.sensitivity);
    }
    Normalization::new(
        if gain.is_finite() && gain > 0.0 {
            gain
        } else {
            1.0
        },
        if sens.is_finite() && sens > 0.0 {
            sens
        } else {
            1.0
        },
    )
}

fn better(
    candidate: (&ParameterVector, &FitnessBreakdown),
    best: (&ParameterVector, &FitnessBreakdown),
) -> bool {
    candidate.1.fitness > best.1.fitness
        || (candidate.1.fitness == best.1.fitness && candidate.0.lex_cmp(best.0).is_lt())
}

fn pick_incumbent(outcomes: &[PointOutcome]) -> Option<Incumbent> {
    let mut best: Option<(&ParameterVector, &FitnessBreakdown)> = None;
    for outcome in outcomes {
        let Some(breakdown) = &outcome.breakdown else {
            continue;
        };
        if breakdown.fitness <= 0.0 {
            continue;
        }
        let candidate = (&outcome.point, breakdown);
        if best.is_none_or(|b| better(candidate, b)) {
            best = Some(candidate);
        }
    }
    best.map(|(point, breakdown)| Incumbent {
        point: *point,
        breakdown: *breakdown,
    })
}

/// Re-score every recorded point under the final round's normalization and
/// pick the overall winner, so no evaluated point anywhere in the search
/// beats the reported incumbent. Rounds are visited newest first, which
/// keeps the refined record when a point appears in both rounds.
fn pick_final(
    rounds_newest_first: &[&RoundResult],
    ctx: &EvalContext,
    weights: &Weights,
    gates: &Gates,
) -> Option<FinalIncumbent> {
    let final_norm = rounds_newest_first.first()?.normalization;
    let mut best: Option<FinalIncumbent> = None;
    for round in rounds_newest_first {
        for outcome in &round.outcomes {
            let Some(recorded) = &outcome.breakdown else {
                continue;
            };
            let rescored = score(
                &RawEvaluation::from(recorded),
                &ctx.profile,
                weights,
                gates,
                &final_norm,
            );
            if rescored.fitness <= 0.0 {
                continue;
            }
            let replace = match &best {
                None => true,
                Some(b) => better((&outcome.point, &rescored), (&b.point, &b.breakdown)),
            };
            if replace {
                best = Some(FinalIncumbent {
                    point: outcome.point,
                    breakdown: rescored,
                    from_round: round.round,
                });
            }
        }
    }
    best
}
