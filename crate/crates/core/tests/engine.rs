use precarity_core::engine::*;
use precarity_core::metrics::precarity_index;
use precarity_core::policy::{classify, Intervention, InterventionConfig};
use precarity_core::population::PopulationSpec;
use proptest::prelude::*;

fn small(model: AgentModel, seed: u64) -> SimulationConfig {
    SimulationConfig {
        agent_model: model,
        seed,
        rounds: 5,
        population: PopulationSpec {
            n: 600,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn precarity_rows_match_sequence_prefixes() {
    for model in [AgentModel::Mdp, AgentModel::Ifp] {
        let cfg = small(model, 4);
        let rec = run_simulation(&cfg).unwrap();
        assert_eq!(rec.rounds(), 5);
        for (h, seqs) in rec.sequences.iter().enumerate() {
            for a in Attribute::ALL {
                let s = &seqs[a.index()];
                assert_eq!(s.len(), 6);
                for round in 0..=5 {
                    let want = precarity_index(&s.prefix(round + 1), &cfg.precarity);
                    assert_eq!(rec.precarity[round][h][a.index()], want);
                }
            }
        }
    }
}

#[test]
fn both_models_see_the_same_first_decisions() {
    let mdp = Simulation::new(&small(AgentModel::Mdp, 9)).unwrap();
    let ifp = Simulation::new(&small(AgentModel::Ifp, 9)).unwrap();
    assert_eq!(mdp.classifier(), ifp.classifier());
    for (a, b) in mdp.households().iter().zip(ifp.households()) {
        assert_eq!(classify(a, mdp.classifier()), classify(b, ifp.classifier()));
    }
}

#[test]
fn threshold_is_income_median() {
    let sim = Simulation::new(&small(AgentModel::Mdp, 1)).unwrap();
    let above = sim
        .households()
        .iter()
        .filter(|h| h.income >= sim.classifier().threshold_income)
        .count();
    assert_eq!(above, 300);
}

#[test]
fn stimulus_reaches_only_households_below_threshold() {
    let mut cfg = small(AgentModel::Mdp, 2);
    cfg.intervention = InterventionConfig {
        kind: Intervention::FixedStimulus { amount: 1500.0 },
        start_round: 2,
    };
    let mut sim = Simulation::new(&cfg).unwrap();
    sim.run_round().unwrap();
    assert!(sim.households().iter().all(|h| h.transfer == 0.0));
    let before: Vec<f64> = sim.households().iter().map(|h| h.income).collect();
    sim.run_round().unwrap();
    let t = sim.classifier().threshold_income;
    for (h, &inc) in sim.households().iter().zip(&before) {
        let expected = if inc < t { 1500.0 } else { 0.0 };
        assert_eq!(h.transfer, expected);
    }
}

#[test]
fn rational_agents_keep_finite_net_worth() {
    let sim = {
        let mut sim = Simulation::new(&small(AgentModel::Ifp, 3)).unwrap();
        for _ in 0..5 {
            sim.run_round().unwrap();
        }
        sim
    };
    assert!(sim.consumption_policy().is_some());
    for h in sim.households() {
        assert!(h.net_worth.is_finite());
    }
}

#[test]
fn resistance_zero_removes_downward_income_moves() {
    let mut cfg = small(AgentModel::Mdp, 5);
    cfg.intervention.kind = Intervention::PrecarityResistance {
        negative_prob_scale: 0.0,
    };
    let mut sim = Simulation::new(&cfg).unwrap();
    let before: Vec<f64> = sim.households().iter().map(|h| h.income).collect();
    sim.run_round().unwrap();
    for (h, &b) in sim.households().iter().zip(&before) {
        assert!(h.income >= b);
    }
}

#[test]
fn zero_rounds_is_rejected() {
    let mut cfg = small(AgentModel::Mdp, 0);
    cfg.rounds = 0;
    assert!(run_simulation(&cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), ifp in any::<bool>()) {
        let model = if ifp { AgentModel::Ifp } else { AgentModel::Mdp };
        let mut cfg = small(model, seed);
        cfg.rounds = 3;
        let a = run_simulation(&cfg).unwrap();
        cfg.parallel = !cfg.parallel;
        let b = run_simulation(&cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
