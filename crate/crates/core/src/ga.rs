//! Genetic search over coupling strings.
//!
//! Each generation is scored, checked against the stopping rules, and then
//! replaced by a hall of fame (the best few individuals, cloned unchanged)
//! plus children bred in pairs from tournament-selected parents by
//! single-point crossover and bit-flip mutation.
//!
//! All randomness comes from one seeded generator consumed in a fixed order,
//! so a run is fully determined by its target and [`GaConfig`]. Scoring uses
//! no randomness and runs in parallel.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctqw::{ConcatenatedDistribution, ProbeState, TimeGrid};
use crate::error::{Error, Result};
use crate::fitness::{FitnessScore, Metric, Objective};
use crate::graph::{num_couplings, CouplingString};
use crate::seed::{rng_from_seed, Rng as SearchRng};

/// Scores at or below this magnitude count as an exact match.
pub const ZERO_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub elite_fraction: f64,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub max_generations: usize,
    /// Halt as soon as the best score drops below this value.
    pub threshold: Option<f64>,
    pub seed: u64,
    pub metric: Metric,
}

impl GaConfig {
    /// Reference hyperparameters for a genome of `n_c` couplings: population
    /// `2·n_c²`, 2% elitism, tournaments of 6, crossover 0.85, mutation 0.05,
    /// at most 100 generations.
    pub fn for_genome_length(n_c: usize) -> Self {
        GaConfig {
            population_size: (2 * n_c * n_c).max(2),
            elite_fraction: 0.02,
            tournament_size: 6,
            crossover_prob: 0.85,
            mutation_prob: 0.05,
            max_generations: 100,
            threshold: None,
            seed: 0,
            metric: Metric::Kld,
        }
    }

    pub fn for_nodes(n: usize) -> Self {
        Self::for_genome_length(num_couplings(n))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.population_size < 2 {
            return bad(format!(
                "population size must be at least 2, got {}",
                self.population_size
            ));
        }
        if !(0.0..1.0).contains(&self.elite_fraction) {
            return bad(format!(
                "elite fraction must lie in [0, 1), got {}",
                self.elite_fraction
            ));
        }
        if self.tournament_size < 1 {
            return bad("tournament size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad(format!(
                "crossover probability must lie in [0, 1], got {}",
                self.crossover_prob
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad(format!(
                "mutation probability must lie in [0, 1], got {}",
                self.mutation_prob
            ));
        }
        if self.max_generations < 1 {
            return bad("at least one generation is required".into());
        }
        if let Some(t) = self.threshold {
            if t.is_nan() || t < 0.0 {
                return bad(format!("threshold must be >= 0, got {t}"));
            }
        }
        Ok(())
    }

    /// Hall-of-fame size: `round(p_e · n_p)`, bumped by one when needed so the
    /// remaining slots can be filled by pairs of children.
    pub fn elite_count(&self) -> usize {
        let n_p = self.population_size;
        let mut e = ((self.elite_fraction * n_p as f64).round() as usize).min(n_p);
        if (n_p - e) % 2 == 1 {
            e += 1;
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: CouplingString,
    pub score: Option<FitnessScore>,
}

impl Individual {
    pub fn new(chromosome: CouplingString) -> Self {
        Individual {
            chromosome,
            score: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    ZeroFitness,
    Threshold,
    MaxGenerations,
}

impl HaltReason {
    pub fn name(self) -> &'static str {
        match self {
            HaltReason::ZeroFitness => "zero_fitness",
            HaltReason::Threshold => "threshold",
            HaltReason::MaxGenerations => "max_generations",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_chromosome: CouplingString,
    pub best_score: FitnessScore,
    /// Index of the generation the run stopped in, or `n_g` when it ran out.
    pub generations_used: usize,
    pub halted_by: HaltReason,
    /// Number of distinct fitness computations performed.
    pub evaluations: usize,
}

/// State of a run after one generation was scored.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Lowest score within this generation.
    pub generation_best: FitnessScore,
    pub best_so_far: FitnessScore,
    pub best_chromosome: CouplingString,
    /// Cumulative evaluation count.
    pub evaluations: usize,
}

/// A finished run plus the per-generation history that produced it.
#[derive(Debug, Clone)]
pub struct Trace {
    pub result: RunResult,
    pub generations: Vec<GenerationRecord>,
}

impl Trace {
    /// The result the same run would have produced with halt threshold `t`.
    ///
    /// The threshold never touches the random stream, so a run configured with
    /// it follows this trajectory exactly until the first generation whose best
    /// score falls below `t`.
    pub fn halt_at_threshold(&self, t: f64) -> RunResult {
        for rec in &self.generations {
            if rec.generation_best.value() < t {
                return RunResult {
                    best_chromosome: rec.best_chromosome.clone(),
                    best_score: rec.best_so_far,
                    generations_used: rec.generation,
                    halted_by: HaltReason::Threshold,
                    evaluations: rec.evaluations,
                };
            }
        }
        self.result.clone()
    }
}

/// `n_p` random genomes for an `n`-node network, each gene a fair coin.
pub fn init_population<R: Rng + ?Sized>(n_p: usize, n: usize, rng: &mut R) -> Vec<Individual> {
    let n_c = num_couplings(n);
    (0..n_p)
        .map(|_| {
            let bits = (0..n_c).map(|_| u8::from(rng.random::<bool>())).collect();
            Individual::new(CouplingString::new(n, bits).expect("length matches n"))
        })
        .collect()
}

/// Draws `k` indices with replacement and returns the index of the lowest
/// score among them; ties go to the earliest draw.
pub fn tournament_index<R: Rng + ?Sized>(pop: &[Individual], k: usize, rng: &mut R) -> Result<usize> {
    if pop.is_empty() || k == 0 {
        return Err(Error::State(
            "tournament needs a non-empty population and k >= 1".into(),
        ));
    }
    let score = |i: usize| {
        pop[i]
            .score
            .map(FitnessScore::value)
            .ok_or_else(|| Error::State(format!("individual {i} has not been scored")))
    };
    let mut best = rng.random_range(0..pop.len());
    let mut best_score = score(best)?;
    for _ in 1..k {
        let challenger = rng.random_range(0..pop.len());
        let s = score(challenger)?;
        if s < best_score {
            best = challenger;
            best_score = s;
        }
    }
    Ok(best)
}

pub fn tournament<'a, R: Rng + ?Sized>(pop: &'a [Individual], k: usize, rng: &mut R) -> Result<&'a Individual> {
    Ok(&pop[tournament_index(pop, k, rng)?])
}

/// Children `a[..=split] ++ b[split+1..]` and `b[..=split] ++ a[split+1..]`.
pub fn crossover_at(a: &CouplingString, b: &CouplingString, split: usize) -> (CouplingString, CouplingString) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    let tail = split + 1..a.len();
    c1.bits_mut()[tail.clone()].copy_from_slice(&b.bits()[tail.clone()]);
    c2.bits_mut()[tail.clone()].copy_from_slice(&a.bits()[tail]);
    (c1, c2)
}

/// With probability `p_c` swaps the parents' tails past a split point drawn
/// from `0..=n_c-2`; otherwise returns copies of the parents.
pub fn crossover<R: Rng + ?Sized>(
    a: &CouplingString,
    b: &CouplingString,
    p_c: f64,
    rng: &mut R,
) -> Result<(CouplingString, CouplingString)> {
    if a.len() != b.len() || a.n() != b.n() {
        return Err(Error::Shape(format!(
            "cannot cross genomes of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if rng.random::<f64>() < p_c && a.len() >= 2 {
        let split = rng.random_range(0..a.len() - 1);
        Ok(crossover_at(a, b, split))
    } else {
        Ok((a.clone(), b.clone()))
    }
}

/// Flips each gene independently with probability `p_m`.
pub fn mutate<R: Rng + ?Sized>(mut child: CouplingString, p_m: f64, rng: &mut R) -> CouplingString {
    for gene in child.bits_mut() {
        if rng.random::<f64>() < p_m {
            *gene ^= 1;
        }
    }
    child
}

/// A genetic search in progress. [`GeneticSearch::run`] drives it to
/// completion; the step methods are public for inspection.
pub struct GeneticSearch<'a> {
    objective: &'a Objective,
    config: GaConfig,
    rng: SearchRng,
    population: Vec<Individual>,
    generation: usize,
    evaluations: usize,
    cache: HashMap<CouplingString, FitnessScore>,
    best: Option<(CouplingString, FitnessScore)>,
    history: Vec<GenerationRecord>,
}

impl<'a> GeneticSearch<'a> {
    pub fn new(objective: &'a Objective, config: GaConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from_seed(config.seed);
        let population = init_population(config.population_size, objective.n(), &mut rng);
        Ok(GeneticSearch {
            objective,
            config,
            rng,
            population,
            generation: 0,
            evaluations: 0,
            cache: HashMap::new(),
            best: None,
            history: Vec::new(),
        })
    }

    /// Replaces the initial population, e.g. to seed a known individual.
    pub fn with_population(mut self, population: Vec<Individual>) -> Result<Self> {
        if population.len() != self.config.population_size {
            return Err(Error::Config(format!(
                "population has {} individuals, config says {}",
                population.len(),
                self.config.population_size
            )));
        }
        if population.iter().any(|i| i.chromosome.n() != self.objective.n()) {
            return Err(Error::Shape("population genome does not match the target size".into()));
        }
        self.population = population;
        Ok(self)
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn history(&self) -> &[GenerationRecord] {
        &self.history
    }

    /// Scores every unscored individual and records the generation.
    pub fn evaluate(&mut self) -> Result<&GenerationRecord> {
        let mut pending: Vec<&CouplingString> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for ind in &self.population {
            if ind.score.is_none() && !self.cache.contains_key(&ind.chromosome) && queued.insert(&ind.chromosome) {
                pending.push(&ind.chromosome);
            }
        }
        let objective = self.objective;
        let scored: Vec<(CouplingString, FitnessScore)> = pending
            .into_par_iter()
            .map(|c| objective.score(c).map(|s| (c.clone(), s)))
            .collect::<Result<_>>()?;
        self.evaluations += scored.len();
        self.cache.extend(scored);

        for ind in &mut self.population {
            if ind.score.is_none() {
                ind.score = Some(self.cache[&ind.chromosome]);
            }
        }

        let (best_idx, generation_best) = self
            .population
            .iter()
            .enumerate()
            .map(|(i, ind)| (i, ind.score.expect("scored above")))
            .fold(None::<(usize, FitnessScore)>, |acc, (i, s)| match acc {
                Some((_, b)) if b.value() <= s.value() => acc,
                _ => Some((i, s)),
            })
            .expect("population is never empty");
        if self
            .best
            .as_ref()
            .is_none_or(|(_, b)| generation_best.value() < b.value())
        {
            self.best = Some((self.population[best_idx].chromosome.clone(), generation_best));
        }
        let (best_chromosome, best_so_far) = self.best.clone().expect("set above");
        self.history.push(GenerationRecord {
            generation: self.generation,
            generation_best,
            best_so_far,
            best_chromosome,
            evaluations: self.evaluations,
        });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Stopping rule for the generation just evaluated. The threshold is
    /// checked before the exact-zero test.
    pub fn halt_reason(&self) -> Option<HaltReason> {
        let best = self.history.last()?.generation_best.value();
        if self.config.threshold.is_some_and(|t| best < t) {
            Some(HaltReason::Threshold)
        } else if best.abs() <= ZERO_TOLERANCE {
            Some(HaltReason::ZeroFitness)
        } else {
            None
        }
    }

    /// Replaces the scored population with the next generation.
    pub fn breed(&mut self) -> Result<()> {
        let n_p = self.config.population_size;
        let elite = self.config.elite_count();

        let mut order: Vec<usize> = (0..n_p).collect();
        let score = |i: usize| self.population[i].score.map(FitnessScore::value);
        if order.iter().any(|&i| score(i).is_none()) {
            return Err(Error::State("breeding requires a fully scored population".into()));
        }
        order.sort_by(|&a, &b| score(a).unwrap().total_cmp(&score(b).unwrap()));

        let mut next: Vec<Individual> = order[..elite].iter().map(|&i| self.population[i].clone()).collect();
        let (k, p_c, p_m) = (
            self.config.tournament_size,
            self.config.crossover_prob,
            self.config.mutation_prob,
        );
        while next.len() < n_p {
            let a = tournament_index(&self.population, k, &mut self.rng)?;
            let b = tournament_index(&self.population, k, &mut self.rng)?;
            let (c1, c2) = crossover(
                &self.population[a].chromosome,
                &self.population[b].chromosome,
                p_c,
                &mut self.rng,
            )?;
            next.push(Individual::new(mutate(c1, p_m, &mut self.rng)));
            next.push(Individual::new(mutate(c2, p_m, &mut self.rng)));
        }
        debug_assert_eq!(next.len(), n_p);
        self.population = next;
        self.generation += 1;
        Ok(())
    }

    fn result(&self, halted_by: HaltReason, generations_used: usize) -> RunResult {
        let (best_chromosome, best_score) = self.best.clone().expect("at least one generation evaluated");
        RunResult {
            best_chromosome,
            best_score,
            generations_used,
            halted_by,
            evaluations: self.evaluations,
        }
    }

    pub fn run(mut self) -> Result<Trace> {
        loop {
            self.evaluate()?;
            if let Some(reason) = self.halt_reason() {
                let result = self.result(reason, self.generation);
                return Ok(Trace {
                    result,
                    generations: self.history,
                });
            }
            if self.generation + 1 >= self.config.max_generations {
                let result = self.result(HaltReason::MaxGenerations, self.config.max_generations);
                return Ok(Trace {
                    result,
                    generations: self.history,
                });
            }
            self.breed()?;
        }
    }
}

/// Runs the search against a prepared objective, keeping the history.
pub fn run_traced(objective: &Objective, config: &GaConfig) -> Result<Trace> {
    GeneticSearch::new(objective, config.clone())?.run()
}

/// Searches for the coupling string whose walk reproduces `target`.
pub fn run_ga(
    target: &ConcatenatedDistribution,
    probe: &ProbeState,
    grid: &TimeGrid,
    config: &GaConfig,
) -> Result<RunResult> {
    config.validate()?;
    let objective = Objective::new(target.clone(), probe.clone(), grid.clone(), config.metric)?;
    Ok(run_traced(&objective, config)?.result)
}
