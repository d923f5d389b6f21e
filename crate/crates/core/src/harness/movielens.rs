//! Reviewer panel built from a MovieLens `ratings.csv`.
//!
//! Each reviewer becomes a source and each movie an arm. The arm mean is the
//! panel's average rating of the movie; the source variance is the spread of
//! that reviewer's ratings over the panel movies.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::model::{NoiseFamily, ProblemInstance, SourceSpec};

/// Ratings live in `[0.5, 5]`, so the noise scale bound is 5.
pub const PANEL_ETA_BAR: f64 = 5.0;
pub const PANEL_MU_BAR: f64 = 5.0;
/// Most prolific users considered for the panel.
pub const CANDIDATE_USERS: usize = 200;
/// Greedy restarts, each seeded with one of the most prolific users.
pub const GREEDY_SEEDS: usize = 10;

/// How rewards are generated from the panel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplayMode {
    /// Gaussian noise with the reviewer's variance.
    #[default]
    Gaussian,
    /// The reviewer's own ratings, centred on the reviewer's mean.
    Residual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelInfo {
    /// Selected reviewers, in source order.
    pub user_ids: Vec<u64>,
    /// Selected movies, in arm order.
    pub movie_ids: Vec<u64>,
    pub num_ratings: usize,
    /// Movies every selected reviewer rated (before truncation).
    pub intersection_size: usize,
    pub reviewer_variances: Vec<f64>,
    pub rows_read: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MovielensPanel {
    pub info: PanelInfo,
    /// `ratings[j][i]`: reviewer `j`'s rating of movie `i`.
    pub ratings: Vec<Vec<f64>>,
    pub arm_means: Vec<f64>,
}

impl MovielensPanel {
    pub fn instance(&self, kappa_known: bool) -> Result<ProblemInstance> {
        let sources = self
            .ratings
            .iter()
            .zip(&self.info.reviewer_variances)
            .map(|(row, &v)| {
                let spec = SourceSpec::new(v, NoiseFamily::Gaussian);
                if kappa_known {
                    let mean = row.iter().sum::<f64>() / row.len() as f64;
                    let k = row.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / row.len() as f64;
                    spec.with_fourth_moment(k.max(v * v))
                } else {
                    spec
                }
            })
            .collect();
        ProblemInstance::new(self.arm_means.clone(), sources, PANEL_ETA_BAR, PANEL_MU_BAR)
    }

    pub fn environment(&self, mode: ReplayMode, kappa_known: bool) -> Result<Environment> {
        let mut inst = self.instance(kappa_known)?;
        match mode {
            ReplayMode::Gaussian => Environment::new(inst),
            ReplayMode::Residual => {
                for s in &mut inst.sources {
                    s.family = NoiseFamily::Replay;
                }
                Environment::with_replay(inst, self.ratings.clone())
            }
        }
    }
}

struct Row {
    user: u64,
    movie: u64,
    rating: f64,
}

fn read_rows(path: &Path, mut each: impl FnMut(Row)) -> Result<u64> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let expected = ["userId", "movieId", "rating", "timestamp"];
    if header.iter().ne(expected) {
        return Err(Error::RatingsFormat {
            line: 1,
            message: format!(
                "expected header `userId,movieId,rating,timestamp`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut record = csv::StringRecord::new();
    let mut line = 1u64;
    while reader.read_record(&mut record)? {
        line += 1;
        let bad = |message: String| Error::RatingsFormat { line, message };
        if record.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", record.len())));
        }
        let user = record[0]
            .parse()
            .map_err(|_| bad(format!("bad userId `{}`", &record[0])))?;
        let movie = record[1]
            .parse()
            .map_err(|_| bad(format!("bad movieId `{}`", &record[1])))?;
        let rating: f64 = record[2]
            .parse()
            .map_err(|_| bad(format!("bad rating `{}`", &record[2])))?;
        if !(0.0..=5.0).contains(&rating) {
            return Err(bad(format!("rating {rating} outside [0, 5]")));
        }
        each(Row {
            user,
            movie,
            rating,
        });
    }
    Ok(line - 1)
}

fn intersect(a: &[u64], b: &[u64]) -> Vec<u64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn intersect_len(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Greedy panel: starting from one seed user, repeatedly add the candidate
/// that keeps the shared-movie set largest. Candidates are ordered by rating
/// count (then id); ties go to the earlier candidate. Returns the chosen
/// candidate positions and their shared movies.
pub fn greedy_panel(movies: &[Vec<u64>], size: usize, seeds: usize) -> (Vec<usize>, Vec<u64>) {
    let mut best: (Vec<usize>, Vec<u64>) = (Vec::new(), Vec::new());
    for seed in 0..seeds.min(movies.len()) {
        let mut chosen = vec![seed];
        let mut shared = movies[seed].clone();
        while chosen.len() < size {
            let mut pick: Option<(usize, usize)> = None;
            for (c, m) in movies.iter().enumerate() {
                if chosen.contains(&c) {
                    continue;
                }
                let n = intersect_len(&shared, m);
                if pick.is_none_or(|(_, best_n)| n > best_n) {
                    pick = Some((c, n));
                }
            }
            let Some((c, _)) = pick else { break };
            shared = intersect(&shared, &movies[c]);
            chosen.push(c);
        }
        let better = chosen.len() > best.0.len()
            || (chosen.len() == best.0.len() && shared.len() > best.1.len());
        if best.0.is_empty() || better {
            best = (chosen, shared);
        }
    }
    best
}

/// Reads the ratings file twice: once to rank users by rating count, once to
/// collect the ratings of the [`CANDIDATE_USERS`] most prolific ones. The
/// first `num_movies` shared movies (by id) of the greedy panel become arms.
pub fn load_movielens_panel(
    path: &Path,
    num_reviewers: usize,
    num_movies: usize,
) -> Result<MovielensPanel> {
    if num_reviewers == 0 || num_movies == 0 {
        return Err(Error::InvalidParameter(
            "panel needs at least one reviewer and one movie".into(),
        ));
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let rows_read = read_rows(path, |r| *counts.entry(r.user).or_default() += 1)?;
    let mut ranked: Vec<(u64, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(CANDIDATE_USERS.max(num_reviewers));
    let position: BTreeMap<u64, usize> = ranked
        .iter()
        .enumerate()
        .map(|(p, &(u, _))| (u, p))
        .collect();

    let mut by_user: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); ranked.len()];
    read_rows(path, |r| {
        if let Some(&p) = position.get(&r.user) {
            by_user[p].insert(r.movie, r.rating);
        }
    })?;
    let movie_lists: Vec<Vec<u64>> = by_user
        .iter()
        .map(|m| m.keys().copied().collect())
        .collect();
    let (chosen, shared) = greedy_panel(&movie_lists, num_reviewers, GREEDY_SEEDS);
    if chosen.len() < num_reviewers || shared.len() < num_movies {
        return Err(Error::InfeasiblePanel {
            reviewers: num_reviewers,
            movies: num_movies,
            best: if chosen.len() < num_reviewers {
                0
            } else {
                shared.len()
            },
        });
    }
    let movie_ids: Vec<u64> = shared.iter().copied().take(num_movies).collect();
    let ratings: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&c| movie_ids.iter().map(|m| by_user[c][m]).collect())
        .collect();
    let arm_means = (0..num_movies)
        .map(|i| ratings.iter().map(|row| row[i]).sum::<f64>() / num_reviewers as f64)
        .collect();
    let reviewer_variances = ratings
        .iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / row.len() as f64
        })
        .collect();
    let distinct: BTreeSet<u64> = chosen.iter().map(|&c| ranked[c].0).collect();
    debug_assert_eq!(distinct.len(), chosen.len());
    Ok(MovielensPanel {
        info: PanelInfo {
            user_ids: chosen.iter().map(|&c| ranked[c].0).collect(),
            movie_ids,
            num_ratings: num_reviewers * num_movies,
            intersection_size: shared.len(),
            reviewer_variances,
            rows_read,
        },
        ratings,
        arm_means,
    })
}
