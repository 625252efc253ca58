//! Classifier fusion and the identification decision.
//!
//! Each speaker model yields up to N+1 distances for a test utterance: the
//! VQ distortion d0 and one sphericity distance per cluster. A fusion
//! scheme collapses them into a single score; the decision is the argmin
//! over speakers. Missing classifier outputs (starved clusters) are
//! excluded, never imputed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The N+1 classifier outputs of one speaker for one test utterance.
/// Entries are `None` when that classifier could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub speaker_id: String,
    /// VQ distortion; absent for models without a codebook.
    pub d0: Option<f64>,
    /// Per-cluster sphericity distances, one slot per centroid.
    pub di: Vec<Option<f64>>,
}

impl ScoreVector {
    /// All available classifier values, d0 first.
    fn available(&self) -> impl Iterator<Item = f64> + '_ {
        self.d0.into_iter().chain(self.di.iter().copied().flatten())
    }

    fn available_di(&self) -> impl Iterator<Item = f64> + '_ {
        self.di.iter().copied().flatten()
    }
}

/// How the per-classifier distances combine into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FusionScheme {
    /// d0 alone: the pure VQ system.
    #[serde(rename = "vq")]
    VqOnly,
    /// The covariance distances alone, for models that carry no codebook.
    #[serde(rename = "cm")]
    CmOnly,
    /// d0 + sum of available di.
    #[serde(rename = "sum-all")]
    SumAll,
    /// Sum of available di, ignoring d0.
    #[serde(rename = "sum-cm")]
    SumCm,
    /// Median over d0 and the available di.
    #[serde(rename = "median")]
    MedianAll,
    /// Per-classifier majority vote; has no scalar score.
    #[serde(rename = "vote")]
    Vote,
}

impl FusionScheme {
    pub const ALL: [FusionScheme; 6] = [
        FusionScheme::VqOnly,
        FusionScheme::CmOnly,
        FusionScheme::SumAll,
        FusionScheme::SumCm,
        FusionScheme::MedianAll,
        FusionScheme::Vote,
    ];

    pub fn cli_name(&self) -> &'static str {
        match self {
            FusionScheme::VqOnly => "vq",
            FusionScheme::CmOnly => "cm",
            FusionScheme::SumAll => "sum-all",
            FusionScheme::SumCm => "sum-cm",
            FusionScheme::MedianAll => "median",
            FusionScheme::Vote => "vote",
        }
    }
}

impl std::fmt::Display for FusionScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl std::str::FromStr for FusionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FusionScheme::ALL
            .iter()
            .copied()
            .find(|scheme| scheme.cli_name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown fusion scheme '{s}'")))
    }
}

/// One row of a ranked identification result; lower score = better match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSpeaker {
    pub speaker_id: String,
    pub score: f64,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Collapses one score vector into a scalar under the given scheme.
///
/// Fails with [`Error::UndecidableScore`] when every classifier the scheme
/// needs is missing, and for [`FusionScheme::Vote`], which has no
/// per-speaker scalar (use [`identify`] instead).
pub fn fuse(scores: &ScoreVector, scheme: FusionScheme) -> Result<f64> {
    let undecidable = |what: &str| {
        Err(Error::UndecidableScore(format!(
            "speaker '{}': {what}",
            scores.speaker_id
        )))
    };
    match scheme {
        FusionScheme::VqOnly => match scores.d0 {
            Some(d0) => Ok(d0),
            None => undecidable("d0 unavailable for scheme vq"),
        },
        FusionScheme::CmOnly | FusionScheme::SumCm => {
            let mut any = false;
            let sum = scores.available_di().inspect(|_| any = true).sum();
            if any {
                Ok(sum)
            } else {
                undecidable("every covariance distance is missing")
            }
        }
        FusionScheme::SumAll => {
            let values: Vec<f64> = scores.available().collect();
            if values.is_empty() {
                undecidable("every classifier output is missing")
            } else {
                Ok(values.iter().sum())
            }
        }
        FusionScheme::MedianAll => {
            let values: Vec<f64> = scores.available().collect();
            if values.is_empty() {
                undecidable("every classifier output is missing")
            } else {
                Ok(median(values))
            }
        }
        FusionScheme::Vote => Err(Error::UndecidableScore(
            "vote produces no scalar score; rank by votes instead".into(),
        )),
    }
}

/// Ranks all speakers ascending by fused score; ties break toward the
/// lexicographically smaller speaker id. Scalar schemes only.
pub fn rank_by_score(all_scores: &[ScoreVector], scheme: FusionScheme) -> Result<Vec<RankedSpeaker>> {
    if all_scores.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    let mut ranked = all_scores
        .iter()
        .map(|s| {
            Ok(RankedSpeaker {
                speaker_id: s.speaker_id.clone(),
                score: fuse(s, scheme)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.speaker_id.cmp(&b.speaker_id))
    });
    Ok(ranked)
}

/// Identification decision: the rank-1 speaker under the scheme. The vote
/// scheme is dispatched to [`identify_by_vote`].
pub fn identify(all_scores: &[ScoreVector], scheme: FusionScheme) -> Result<String> {
    match scheme {
        FusionScheme::Vote => identify_by_vote(all_scores),
        _ => Ok(rank_by_score(all_scores, scheme)?
            .into_iter()
            .next()
            .expect("rank_by_score rejects empty input")
            .speaker_id),
    }
}

/// Votes per speaker: classifier j votes for the speaker with the lowest
/// value of classifier j, abstaining where the value is missing. Ties
/// within one classifier go to the lexicographically smaller speaker.
pub fn vote_counts(all_scores: &[ScoreVector]) -> Result<BTreeMap<String, usize>> {
    if all_scores.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    let mut counts: BTreeMap<String, usize> =
        all_scores.iter().map(|s| (s.speaker_id.clone(), 0)).collect();
    let max_di = all_scores.iter().map(|s| s.di.len()).max().unwrap_or(0);

    // Classifier 0 is d0; classifier j >= 1 is di[j - 1].
    for j in 0..=max_di {
        let best = all_scores
            .iter()
            .filter_map(|s| {
                let value = if j == 0 { s.d0 } else { s.di.get(j - 1).copied().flatten() };
                value.map(|v| (v, &s.speaker_id))
            })
            .min_by(|(va, ia), (vb, ib)| va.total_cmp(vb).then_with(|| ia.cmp(ib)));
        if let Some((_, id)) = best {
            *counts.get_mut(id).expect("voted speaker is enrolled") += 1;
        }
    }
    Ok(counts)
}

/// Majority vote across the N+1 classifiers; a tie in votes is broken by
/// the `sum-all` fused score, then lexicographically.
pub fn identify_by_vote(all_scores: &[ScoreVector]) -> Result<String> {
    let counts = vote_counts(all_scores)?;
    let top = counts.values().copied().max().unwrap_or(0);
    if top == 0 {
        return Err(Error::UndecidableScore(
            "no classifier could cast a vote".into(),
        ));
    }
    let mut tied: Vec<&ScoreVector> = all_scores
        .iter()
        .filter(|s| counts[&s.speaker_id] == top)
        .collect();
    if tied.len() == 1 {
        return Ok(tied[0].speaker_id.clone());
    }
    tied.sort_by(|a, b| {
        let fa = fuse(a, FusionScheme::SumAll).unwrap_or(f64::INFINITY);
        let fb = fuse(b, FusionScheme::SumAll).unwrap_or(f64::INFINITY);
        fa.total_cmp(&fb).then_with(|| a.speaker_id.cmp(&b.speaker_id))
    });
    Ok(tied[0].speaker_id.clone())
}

/// Optional per-classifier z-normalization across speakers: each classifier's
/// available values are shifted to zero mean and unit variance before fusion.
/// Off by default; the raw sums mirror the reference behaviour.
pub fn z_normalize(all_scores: &[ScoreVector]) -> Vec<ScoreVector> {
    let max_di = all_scores.iter().map(|s| s.di.len()).max().unwrap_or(0);
    let mut normalized = all_scores.to_vec();

    for j in 0..=max_di {
        let values: Vec<f64> = all_scores
            .iter()
            .filter_map(|s| if j == 0 { s.d0 } else { s.di.get(j - 1).copied().flatten() })
            .collect();
        if values.len() < 2 {
            continue;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
        let std = var.sqrt();
        let rescale = |v: f64| if std > 0.0 { (v - mean) / std } else { 0.0 };
        for s in &mut normalized {
            if j == 0 {
                s.d0 = s.d0.map(rescale);
            } else if let Some(slot) = s.di.get_mut(j - 1) {
                *slot = slot.map(rescale);
            }
        }
    }
    normalized
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn sv(id: &str, d0: Option<f64>, di: Vec<Option<f64>>) -> ScoreVector {
        ScoreVector {
            speaker_id: id.into(),
            d0,
            di,
        }
    }

    #[test]
    fn fuse_sum_all_by_hand() {
        let s = sv("a", Some(1.0), vec![Some(2.0), Some(3.0)]);
        assert!((fuse(&s, FusionScheme::SumAll).unwrap() - 6.0).abs() < EPS);
    }

    #[test]
    fn fuse_median_by_hand() {
        let s = sv("a", Some(1.0), vec![Some(2.0), Some(3.0)]);
        assert!((fuse(&s, FusionScheme::MedianAll).unwrap() - 2.0).abs() < EPS);
        // Even count: mean of the middle two.
        let s = sv("a", Some(1.0), vec![Some(2.0), Some(3.0), Some(10.0)]);
        assert!((fuse(&s, FusionScheme::MedianAll).unwrap() - 2.5).abs() < EPS);
    }

    #[test]
    fn fuse_excludes_missing_entries() {
        let s = sv("a", Some(1.0), vec![None, Some(3.0), None]);
        assert!((fuse(&s, FusionScheme::SumAll).unwrap() - 4.0).abs() < EPS);
        assert!((fuse(&s, FusionScheme::SumCm).unwrap() - 3.0).abs() < EPS);
        assert!((fuse(&s, FusionScheme::MedianAll).unwrap() - 2.0).abs() < EPS);
    }

    #[test]
    fn fuse_vq_only_is_d0() {
        let s = sv("a", Some(0.25), vec![Some(9.0)]);
        assert_eq!(fuse(&s, FusionScheme::VqOnly).unwrap(), 0.25);
    }

    #[test]
    fn fuse_cm_only_sums_di() {
        let s = sv("a", None, vec![Some(-0.6)]);
        assert!((fuse(&s, FusionScheme::CmOnly).unwrap() + 0.6).abs() < EPS);
    }

    #[test]
    fn fuse_undecidable_cases() {
        let no_d0 = sv("a", None, vec![Some(1.0)]);
        assert!(matches!(
            fuse(&no_d0, FusionScheme::VqOnly),
            Err(Error::UndecidableScore(_))
        ));
        let no_di = sv("a", Some(1.0), vec![None, None]);
        assert!(matches!(
            fuse(&no_di, FusionScheme::SumCm),
            Err(Error::UndecidableScore(_))
        ));
        let empty = sv("a", None, vec![None]);
        assert!(matches!(
            fuse(&empty, FusionScheme::SumAll),
            Err(Error::UndecidableScore(_))
        ));
        assert!(matches!(
            fuse(&no_d0, FusionScheme::Vote),
            Err(Error::UndecidableScore(_))
        ));
    }

    #[test]
    fn fuse_is_permutation_invariant_over_di() {
        let a = sv("a", Some(0.5), vec![Some(3.0), None, Some(-1.0), Some(2.0)]);
        let b = sv("a", Some(0.5), vec![Some(-1.0), Some(2.0), Some(3.0), None]);
        for scheme in [FusionScheme::SumAll, FusionScheme::SumCm, FusionScheme::MedianAll] {
            assert_eq!(fuse(&a, scheme).unwrap(), fuse(&b, scheme).unwrap());
        }
    }

    #[test]
    fn identify_single_speaker() {
        let scores = [sv("only", Some(5.0), vec![])];
        assert_eq!(identify(&scores, FusionScheme::VqOnly).unwrap(), "only");
    }

    #[test]
    fn identify_picks_lowest_and_breaks_ties_lexicographically() {
        let scores = [
            sv("bob", Some(2.0), vec![]),
            sv("alice", Some(1.0), vec![]),
            sv("carol", Some(1.0), vec![]),
        ];
        let ranked = rank_by_score(&scores, FusionScheme::VqOnly).unwrap();
        let ids: Vec<&str> = ranked.iter().map(|r| r.speaker_id.as_str()).collect();
        assert_eq!(ids, vec!["alice", "carol", "bob"]);
        assert_eq!(identify(&scores, FusionScheme::VqOnly).unwrap(), "alice");
    }

    #[test]
    fn identify_rejects_empty_model_set() {
        assert!(matches!(
            identify(&[], FusionScheme::SumAll),
            Err(Error::EmptyModelSet)
        ));
    }

    #[test]
    fn ranking_is_invariant_under_increasing_transforms() {
        let scores = [
            sv("a", Some(0.3), vec![Some(-0.5), Some(0.1)]),
            sv("b", Some(0.1), vec![Some(0.4), None]),
            sv("c", Some(0.8), vec![Some(-0.7), Some(-0.2)]),
        ];
        let base = rank_by_score(&scores, FusionScheme::SumAll).unwrap();
        for transform in [|x: f64| x.exp(), |x: f64| x.powi(3)] {
            let transformed: Vec<ScoreVector> = base
                .iter()
                .map(|r| sv(&r.speaker_id, Some(transform(r.score)), vec![]))
                .collect();
            let re_ranked = rank_by_score(&transformed, FusionScheme::VqOnly).unwrap();
            let want: Vec<&str> = base.iter().map(|r| r.speaker_id.as_str()).collect();
            let got: Vec<&str> = re_ranked.iter().map(|r| r.speaker_id.as_str()).collect();
            assert_eq!(want, got);
        }
    }

    #[test]
    fn constant_shift_leaves_ranking_unchanged() {
        let scores = [
            sv("a", Some(0.3), vec![Some(1.0)]),
            sv("b", Some(0.1), vec![Some(2.0)]),
        ];
        let base = rank_by_score(&scores, FusionScheme::SumAll).unwrap();
        let shifted: Vec<ScoreVector> = scores
            .iter()
            .map(|s| sv(&s.speaker_id, s.d0.map(|d| d + 100.0), s.di.clone()))
            .collect();
        let moved = rank_by_score(&shifted, FusionScheme::SumAll).unwrap();
        let want: Vec<&str> = base.iter().map(|r| r.speaker_id.as_str()).collect();
        let got: Vec<&str> = moved.iter().map(|r| r.speaker_id.as_str()).collect();
        assert_eq!(want, got);
    }

    #[test]
    fn vote_unanimous_winner() {
        let scores = [
            sv("a", Some(0.1), vec![Some(0.2), Some(0.3)]),
            sv("b", Some(1.0), vec![Some(1.2), Some(1.3)]),
        ];
        let counts = vote_counts(&scores).unwrap();
        assert_eq!(counts["a"], 3);
        assert_eq!(counts["b"], 0);
        assert_eq!(identify_by_vote(&scores).unwrap(), "a");
        assert_eq!(identify(&scores, FusionScheme::Vote).unwrap(), "a");
    }

    #[test]
    fn vote_majority_two_against_one() {
        let scores = [
            sv("a", Some(0.1), vec![Some(0.2), Some(9.0)]),
            sv("b", Some(1.0), vec![Some(1.2), Some(0.5)]),
        ];
        assert_eq!(identify_by_vote(&scores).unwrap(), "a");
    }

    #[test]
    fn vote_abstains_on_missing_and_ties_break_by_sum() {
        // d0 votes a, d1 votes b, d2 abstains everywhere: 1-1 tie resolved
        // by the lower sum-all, which belongs to b.
        let scores = [
            sv("a", Some(0.1), vec![Some(5.0), None]),
            sv("b", Some(0.9), vec![Some(1.0), None]),
        ];
        let counts = vote_counts(&scores).unwrap();
        assert_eq!(counts["a"], 1);
        assert_eq!(counts["b"], 1);
        assert_eq!(identify_by_vote(&scores).unwrap(), "b");
    }

    #[test]
    fn z_normalize_centers_each_classifier() {
        let scores = [
            sv("a", Some(1.0), vec![Some(10.0)]),
            sv("b", Some(3.0), vec![Some(30.0)]),
        ];
        let normalized = z_normalize(&scores);
        // Both classifiers become ±1 around zero, preserving order.
        assert!((normalized[0].d0.unwrap() + 1.0).abs() < EPS);
        assert!((normalized[1].d0.unwrap() - 1.0).abs() < EPS);
        assert!((normalized[0].di[0].unwrap() + 1.0).abs() < EPS);
        assert!((normalized[1].di[0].unwrap() - 1.0).abs() < EPS);
        // Missing entries stay missing.
        let with_gap = [
            sv("a", Some(1.0), vec![None]),
            sv("b", Some(3.0), vec![Some(2.0)]),
        ];
        let normalized = z_normalize(&with_gap);
        assert!(normalized[0].di[0].is_none());
    }

    #[test]
    fn scheme_names_round_trip() {
        for scheme in FusionScheme::ALL {
            if scheme == FusionScheme::Vote {
                continue;
            }
            let name = scheme.to_string();
            let parsed: FusionScheme = name.parse().unwrap();
            assert_eq!(parsed, scheme);
        }
        assert_eq!("vote".parse::<FusionScheme>().unwrap(), FusionScheme::Vote);
        assert!("banana".parse::<FusionScheme>().is_err());
        // serde names match CLI names.
        let json = serde_json::to_string(&FusionScheme::SumAll).unwrap();
        assert_eq!(json, "\"sum-all\"");
    }
}
