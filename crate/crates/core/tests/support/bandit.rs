//! A two-armed deterministic bandit played through the rule engine: two
//! rules always match, arm `a` returns -10 and arm `b` returns -20.

use std::collections::BTreeMap;
use std::sync::Arc;

use kbrl::graph::{load_ontology, Graph, Ontology, SemanticNode};
use kbrl::inference::{
    run_episode, EnvError, Environment, EpisodeConfig, EpisodeLimits, HandlerError, HandlerSet,
    Issue, OutcomeKind,
};
use kbrl::ki::{parse_rules, KnowledgeItem};
use kbrl::rl::{
    action_probabilities, policy_params, EpisodeReturns, PolicyResolver, StateActionTable,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ONTOLOGY: &str = "@prefix : <x> .\n:Lever a kb:Entity .\n\
    :id a kb:Attribute ; kb:domain :Lever ; kb:range xsd:integer .\n";

const RULES: &str = r#"
ki pull-a {} on { match Lever as $l {} } when {} do { handler bandit "a" }
ki pull-b {} on { match Lever as $l {} } when {} do { handler bandit "b" }
"#;

pub const BEST: &str = "/pull-a";
pub const WORST: &str = "/pull-b";

#[derive(Default)]
pub struct BanditEnv {
    pub pulled: Option<String>,
}

impl HandlerSet for BanditEnv {
    fn check(&self, handler: &str, _command: &str) -> Result<(), HandlerError> {
        if handler == "bandit" {
            Ok(())
        } else {
            Err(HandlerError::NotConfigured(handler.to_string()))
        }
    }

    fn dispatch(&mut self, handler: &str, command: &str) -> Result<(), HandlerError> {
        self.check(handler, command)?;
        self.pulled = Some(command.to_string());
        Ok(())
    }
}

impl Environment for BanditEnv {
    fn sync(&mut self, graph: &mut Graph) -> Result<(), EnvError> {
        graph
            .upsert_node(SemanticNode::new("lever", "Lever").with("id", 1))
            .expect("lever fits the ontology");
        Ok(())
    }

    fn end_turn(&mut self) -> Result<(), EnvError> {
        Ok(())
    }

    fn turn(&self) -> u32 {
        0
    }

    fn outcome(&self) -> Option<OutcomeKind> {
        self.pulled.as_ref().map(|_| OutcomeKind::Won)
    }
}

pub fn reward(arm: &str) -> f64 {
    match arm {
        "a" => -10.0,
        "b" => -20.0,
        other => panic!("unknown arm {other}"),
    }
}

pub struct BanditRun {
    pub table: StateActionTable,
    pub q_best: f64,
    pub q_worst: f64,
    /// Policy mass on the better arm at ε = 0.
    pub p_best: f64,
    /// Share of greedy draws that pick the better arm.
    pub greedy_share: f64,
}

fn setup() -> (Arc<Ontology>, Vec<KnowledgeItem>) {
    let ontology = Arc::new(load_ontology(ONTOLOGY).expect("bandit ontology"));
    let kb = parse_rules(RULES).expect("bandit rules");
    (ontology, kb)
}

fn play(
    kb: &[KnowledgeItem],
    ontology: &Arc<Ontology>,
    resolver: &PolicyResolver,
    seed: u64,
) -> (kbrl::inference::EpisodeRecord, f64) {
    let mut env = BanditEnv::default();
    let rec = run_episode(
        kb,
        ontology.clone(),
        &mut env,
        resolver,
        EpisodeConfig {
            limits: EpisodeLimits::default(),
            seed,
            issue: Issue::start_playing("bandit"),
        },
    )
    .expect("bandit episode");
    let g = reward(env.pulled.as_deref().expect("an arm was pulled"));
    (rec, g)
}

/// Trains for `episodes` at a constant `epsilon`, then measures the greedy
/// policy over `draws` further episodes.
pub fn run(episodes: usize, epsilon: f64, draws: usize, seed: u64) -> BanditRun {
    let (ontology, kb) = setup();
    let mut table = StateActionTable::new();
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..episodes {
        let resolver = PolicyResolver::single_state(&table, epsilon);
        let (rec, g) = play(&kb, &ontology, &resolver, rand::Rng::gen(&mut seeds));
        let returns = EpisodeReturns {
            g,
            per_cluster: BTreeMap::from([(0, g)]),
        };
        table.update_values(&rec, &returns);
    }
    let stats = table.cluster(0).expect("state 0 was visited");
    let q_best = stats.actions.get(BEST).map_or(f64::NAN, |a| a.q_mean);
    let q_worst = stats.actions.get(WORST).map_or(f64::NAN, |a| a.q_mean);
    let params = policy_params(&table, 0);
    let p_best = action_probabilities(&[params.get(BEST), params.get(WORST)])[0];
    let greedy = PolicyResolver::single_state(&table, 0.0);
    let mut best = 0;
    for _ in 0..draws {
        let (rec, _) = play(&kb, &ontology, &greedy, rand::Rng::gen(&mut seeds));
        if rec.decisions.first().is_some_and(|d| d.chosen == BEST) {
            best += 1;
        }
    }
    BanditRun {
        table,
        q_best,
        q_worst,
        p_best,
        greedy_share: best as f64 / draws.max(1) as f64,
    }
}
