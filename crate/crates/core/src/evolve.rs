//! Evolutionary optimization of neural broker genomes.
//!
//! Each genome is scored by running one full deterministic simulation of the
//! training scenario and combining the resulting ledger into a reimbursement-
//! penalized profit. Generations are produced by elitism, Gaussian mutation,
//! single-point crossover, fresh random genomes and randomly selected
//! survivors, with the composition fixed by the operator rates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::broker::BrokerPolicy;
use crate::engine::{run_simulation_opts, SimOptions};
use crate::neuro::{Genome, Topology};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result};

/// Multiplier on the reimbursement cost inside the fitness.
pub const REIMBURSEMENT_PENALTY: f64 = 100_000.0;

/// Parameters of the evolutionary algorithm.
#[derive(Debug, Clone)]
pub struct EvolutionParams {
    pub population_size: usize,
    /// Number of evaluated generations, counting the initial random one.
    pub generations: u32,
    pub elite_rate: f64,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub random_creation_rate: f64,
    pub random_selection_rate: f64,
    /// Standard deviation of the Gaussian gene perturbation.
    pub mutation_sigma: f64,
    pub seed: u64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 500,
            elite_rate: 0.15,
            mutation_rate: 0.40,
            crossover_rate: 0.30,
            random_creation_rate: 0.05,
            random_selection_rate: 0.10,
            mutation_sigma: 0.2,
            seed: 0,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::validation("evolution.population_size", "must be >= 2"));
        }
        let rates = [
            self.elite_rate,
            self.mutation_rate,
            self.crossover_rate,
            self.random_creation_rate,
            self.random_selection_rate,
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::validation("evolution rates", "each rate must be in [0, 1]"));
        }
        let sum: f64 = rates.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "evolution rates",
                format!("must sum to 1.0, got {sum}"),
            ));
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma > 0.0) {
            return Err(Error::validation("evolution.mutation_sigma", "must be > 0"));
        }
        Ok(())
    }

    /// Offspring composition `(elites, mutants, crossover, fresh, survivors)`
    /// for a population of `n`: floored counts with at least one elite and
    /// the remainder assigned to mutants.
    pub fn composition(&self, n: usize) -> (usize, usize, usize, usize, usize) {
        let floor = |rate: f64| (rate * n as f64).floor() as usize;
        let e = floor(self.elite_rate).max(1);
        let mut m = floor(self.mutation_rate);
        let mut c = floor(self.crossover_rate);
        let mut rn = floor(self.random_creation_rate);
        let mut rs = floor(self.random_selection_rate);
        let mut total = e + m + c + rn + rs;
        // Tiny populations can overflow once the elite floor kicks in.
        while total > n {
            if rs > 0 {
                rs -= 1;
            } else if rn > 0 {
                rn -= 1;
            } else if c > 0 {
                c -= 1;
            } else {
                m -= 1;
            }
            total -= 1;
        }
        m += n - total;
        (e, m, c, rn, rs)
    }
}

/// Fitness and profit components of one evaluated genome.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessRecord {
    pub genome_index: usize,
    /// `(Π_uGrid + Π_feedin) − (C_supply + δ_r · C_reimbursement)`.
    pub fitness: f64,
    pub income_ugrid: f64,
    pub income_feedin: f64,
    pub cost_supply: f64,
    pub cost_reimbursement: f64,
}

/// Per-generation statistics for the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: u32,
    pub best: f64,
    pub median: f64,
    pub worst: f64,
    pub best_reimbursement: f64,
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainingResult {
    pub topology: Topology,
    pub champion: Genome,
    pub champion_record: FitnessRecord,
    pub history: Vec<GenerationStats>,
}

impl TrainingResult {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("generation,best,median,worst,best_reimbursement\n");
        for row in &self.history {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                row.generation, row.best, row.median, row.worst, row.best_reimbursement
            ));
        }
        s
    }
}

/// Evolutionary trainer bound to one scenario and topology.
#[derive(Debug, Clone)]
pub struct Trainer<'a> {
    pub scenario: &'a ScenarioConfig,
    pub topology: Topology,
    pub params: EvolutionParams,
    /// Time dilation used for the fitness simulations.
    pub dilation: u64,
    pub reimbursement_penalty: f64,
}

impl<'a> Trainer<'a> {
    pub fn new(scenario: &'a ScenarioConfig, topology: Topology, params: EvolutionParams) -> Self {
        Self {
            scenario,
            topology,
            params,
            dilation: 1,
            reimbursement_penalty: REIMBURSEMENT_PENALTY,
        }
    }

    pub fn with_dilation(mut self, dilation: u64) -> Self {
        self.dilation = dilation.max(1);
        self
    }

    /// Score one genome with a full simulation of the training scenario.
    pub fn evaluate_fitness(&self, genome: &Genome, genome_index: usize) -> Result<FitnessRecord> {
        let policy = BrokerPolicy::Neural { topology: self.topology.clone(), genome: genome.clone() };
        let opts = SimOptions { seed: None, dilation: self.dilation };
        let (report, _) = run_simulation_opts(self.scenario, &policy, &opts)?;
        let fitness = (report.income_ugrid + report.income_feedin)
            - (report.cost_supply + self.reimbursement_penalty * report.cost_reimbursement);
        Ok(FitnessRecord {
            genome_index,
            fitness,
            income_ugrid: report.income_ugrid,
            income_feedin: report.income_feedin,
            cost_supply: report.cost_supply,
            cost_reimbursement: report.cost_reimbursement,
        })
    }

    fn evaluate_population(&self, population: &[Genome]) -> Result<Vec<FitnessRecord>> {
        population
            .par_iter()
            .enumerate()
            .map(|(i, g)| self.evaluate_fitness(g, i))
            .collect()
    }

    /// Run the evolution and return the champion with its history.
    pub fn evolve(&self) -> Result<TrainingResult> {
        self.params.validate()?;
        self.topology.validate()?;
        if self.topology.outputs() != self.scenario.catalog.len() {
            return Err(Error::Checkpoint(format!(
                "topology has {} outputs but the catalog has {} durations",
                self.topology.outputs(),
                self.scenario.catalog.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let n = self.params.population_size;
        let mut population: Vec<Genome> =
            (0..n).map(|_| Genome::random(&self.topology, &mut rng)).collect();

        let mut history = Vec::new();
        let mut champion: Option<(Genome, FitnessRecord)> = None;
        let evaluated_generations = self.params.generations.max(1);
        for generation in 0..evaluated_generations {
            let records = self.evaluate_population(&population)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| records[b].fitness.total_cmp(&records[a].fitness));
            let ranked: Vec<(Genome, f64)> = order
                .iter()
                .map(|&i| (population[i].clone(), records[i].fitness))
                .collect();
            let best_record = records[order[0]].clone();
            history.push(generation_stats(generation, &records, &best_record));
            let replace = match &champion {
                Some((_, incumbent)) => best_record.fitness > incumbent.fitness,
                None => true,
            };
            if replace {
                champion = Some((population[order[0]].clone(), best_record));
            }
            if generation + 1 < evaluated_generations {
                population = next_generation(&ranked, &self.topology, &self.params, &mut rng);
            }
        }
        let (champion, champion_record) = champion.expect("at least one generation evaluated");
        Ok(TrainingResult { topology: self.topology.clone(), champion, champion_record, history })
    }
}

fn generation_stats(
    generation: u32,
    records: &[FitnessRecord],
    best: &FitnessRecord,
) -> GenerationStats {
    let mut fitness: Vec<f64> = records.iter().map(|r| r.fitness).collect();
    fitness.sort_by(f64::total_cmp);
    let n = fitness.len();
    let median = if n % 2 == 1 {
        fitness[n / 2]
    } else {
        (fitness[n / 2 - 1] + fitness[n / 2]) / 2.0
    };
    GenerationStats {
        generation,
        best: fitness[n - 1],
        median,
        worst: fitness[0],
        best_reimbursement: best.cost_reimbursement,
    }
}

/// Produce the next population from the current one, ranked best-first.
pub fn next_generation<R: Rng>(
    ranked: &[(Genome, f64)],
    topology: &Topology,
    params: &EvolutionParams,
    rng: &mut R,
) -> Vec<Genome> {
    let n = ranked.len();
    let (elites, mutants, crossover, fresh, survivors) = params.composition(n);
    let mut next = Vec::with_capacity(n);

    for (genome, _) in ranked.iter().take(elites) {
        next.push(genome.clone());
    }

    let normal = Normal::new(0.0, params.mutation_sigma).expect("sigma validated > 0");
    for _ in 0..mutants {
        // Parent from the elite pool or anywhere in the old population.
        let parent = if rng.gen_bool(0.5) {
            &ranked[rng.gen_range(0..elites)].0
        } else {
            &ranked[rng.gen_range(0..n)].0
        };
        let genes = parent.genes.iter().map(|g| g + normal.sample(rng)).collect();
        next.push(Genome { genes });
    }

    for _ in 0..crossover {
        let a = tournament(ranked, rng);
        let b = tournament(ranked, rng);
        let split = rng.gen_range(0..=a.genes.len());
        let mut genes = Vec::with_capacity(a.genes.len());
        genes.extend_from_slice(&a.genes[..split]);
        genes.extend_from_slice(&b.genes[split..]);
        next.push(Genome { genes });
    }

    for _ in 0..fresh {
        next.push(Genome::random(topology, rng));
    }

    for _ in 0..survivors {
        next.push(ranked[rng.gen_range(0..n)].0.clone());
    }

    debug_assert_eq!(next.len(), n);
    next
}

/// Size-2 tournament: the better of two uniformly drawn members.
fn tournament<'p, R: Rng>(ranked: &'p [(Genome, f64)], rng: &mut R) -> &'p Genome {
    let a = rng.gen_range(0..ranked.len());
    let b = rng.gen_range(0..ranked.len());
    // Lower index = better fitness.
    &ranked[a.min(b)].0
}

/// Convenience wrapper: train with Table-2-style parameters on a scenario.
pub fn evolve(
    scenario: &ScenarioConfig,
    topology: Topology,
    params: EvolutionParams,
    dilation: u64,
) -> Result<TrainingResult> {
    Trainer::new(scenario, topology, params).with_dilation(dilation).evolve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;
    use crate::supply::WeatherSource;
    use crate::scenario::TimeSeries;

    fn tiny_params(pop: usize, generations: u32, seed: u64) -> EvolutionParams {
        EvolutionParams { population_size: pop, generations, seed, ..Default::default() }
    }

    #[test]
    fn composition_matches_table_rates() {
        let params = EvolutionParams::default();
        // floor(7.5), floor(20)+1 remainder, floor(15), floor(2.5), floor(5)
        assert_eq!(params.composition(50), (7, 21, 15, 2, 5));
    }

    #[test]
    fn composition_tiny_population_keeps_an_elite() {
        let params = EvolutionParams::default();
        let (e, m, c, rn, rs) = params.composition(2);
        assert_eq!(e, 1);
        assert_eq!(e + m + c + rn + rs, 2);
    }

    #[test]
    fn rates_must_sum_to_one() {
        let params = EvolutionParams { elite_rate: 0.5, ..Default::default() };
        assert!(params.validate().is_err());
    }

    #[test]
    fn crossover_of_identical_parents_is_identity() {
        let topology = Topology::layered(2, 7);
        let genome = Genome { genes: vec![0.25; topology.gene_count()] };
        let ranked: Vec<(Genome, f64)> = (0..4).map(|_| (genome.clone(), 1.0)).collect();
        // Crossover-only composition (one elite slot is always kept).
        let params = EvolutionParams {
            population_size: 4,
            elite_rate: 0.0,
            mutation_rate: 0.0,
            crossover_rate: 1.0,
            random_creation_rate: 0.0,
            random_selection_rate: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let next = next_generation(&ranked, &topology, &params, &mut rng);
            assert_eq!(next.len(), 4);
            for child in &next {
                assert_eq!(child.genes, genome.genes);
            }
        }
    }

    #[test]
    fn mutation_keeps_genes_finite() {
        let topology = Topology::layered(2, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ranked: Vec<(Genome, f64)> =
            (0..10).map(|i| (Genome::random(&topology, &mut rng), -(i as f64))).collect();
        let params = tiny_params(10, 1, 9);
        for _ in 0..20 {
            let next = next_generation(&ranked, &topology, &params, &mut rng);
            assert_eq!(next.len(), 10);
            for g in &next {
                assert!(g.genes.iter().all(|x| x.is_finite()));
            }
        }
    }

    fn no_flow_scenario() -> ScenarioConfig {
        let mut cfg = builtin::reference();
        cfg.appliances.clear();
        // An empty measured series produces zero renewable power everywhere.
        cfg.weather =
            WeatherSource::Measured { series: TimeSeries::new(Vec::new(), 900).unwrap() };
        cfg.sim_length = 600;
        cfg
    }

    #[test]
    fn fitness_zero_without_flows() {
        let cfg = no_flow_scenario();
        let trainer = Trainer::new(&cfg, Topology::layered(2, 7), tiny_params(2, 1, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let genome = Genome::random(&trainer.topology, &mut rng);
        let record = trainer.evaluate_fitness(&genome, 0).unwrap();
        assert_eq!(record.fitness, 0.0);
    }

    #[test]
    fn fitness_is_feed_in_for_pv_only_scenario() {
        let mut cfg = builtin::reference();
        cfg.appliances.clear();
        cfg.sim_start.second = 28_800; // sunrise
        cfg.sim_length = 7200;
        // Oracle: integrate P_re × fit directly over the simulated window.
        let mut expected = 0.0;
        for t in 28_800..(28_800 + cfg.sim_length) {
            let sod = (t % 86_400) as u32;
            let p_re = crate::supply::supply_at(&cfg.weather, &cfg.pv, t, sod);
            expected += p_re / 1000.0 / 3600.0 * cfg.tariffs.fit.price_at(sod);
        }
        assert!(expected > 0.0);
        let trainer = Trainer::new(&cfg, Topology::layered(2, 7), tiny_params(2, 1, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let genome = Genome::random(&trainer.topology, &mut rng);
        let record = trainer.evaluate_fitness(&genome, 0).unwrap();
        assert!(record.fitness > 0.0);
        assert!((record.fitness - expected).abs() < 1e-9);
    }

    #[test]
    fn reimbursement_penalty_dominates_fitness() {
        let gross = 50.0;
        let reimbursement = 0.001;
        let fitness = gross - REIMBURSEMENT_PENALTY * reimbursement;
        assert_eq!(fitness, -50.0);
    }

    #[test]
    fn zero_generations_returns_best_random() {
        let cfg = no_flow_scenario();
        let trainer = Trainer::new(&cfg, Topology::layered(2, 7), tiny_params(4, 0, 5));
        let result = trainer.evolve().unwrap();
        assert_eq!(result.history.len(), 1);
        assert_eq!(result.champion.len(), 35);
    }

    #[test]
    fn same_seed_same_history() {
        let cfg = no_flow_scenario();
        let params = tiny_params(6, 4, 11);
        let a = Trainer::new(&cfg, Topology::layered(2, 7), params.clone()).evolve().unwrap();
        let b = Trainer::new(&cfg, Topology::layered(2, 7), params).evolve().unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.champion.genes, b.champion.genes);
    }
}
