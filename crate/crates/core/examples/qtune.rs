// Scratch harness: compare eta schedules for the Q-learning agent against
// the CV-picked logistic regression, and measure greedy-policy accuracy.
use sentq_core::backtest::{run, Strategy};
use sentq_core::classify::{cross_validate, default_logreg_grid, evaluate, train_model};
use sentq_core::features::{build_dataset, aligned_target_returns, TargetKind, WindowConfig};
use sentq_core::qlearn::{
    greedy_action, phi, select_action, state_value, td_step, AgentState, EpisodeConfig, QWeights,
    TradeAction,
};
use sentq_core::rng::Pcg32;
use sentq_core::synth::{generate, SynthParams};

fn train_custom(
    ds: &sentq_core::features::Dataset,
    bars: &[sentq_core::ingest::PriceBar],
    cfg: &EpisodeConfig,
    eta0: f64,
    discount: f64,
    epochs: usize,
    schedule: &str,
) -> QWeights {
    let train = ds.train_rows();
    let returns = aligned_target_returns(train, bars, ds.target_kind).unwrap();
    let mut w = QWeights::for_dataset(ds, eta0, discount);
    let mut rng = Pcg32::new(cfg.seed, 10);
    for epoch in 0..epochs {
        let mut pos = 0i32;
        let mut equity = 1.0;
        for t in 0..train.len() {
            let s = AgentState { market: train[t].values.clone(), position: pos, equity_ratio: equity };
            let eps = cfg.epsilon_at(w.steps);
            let a = select_action(&w, &s, cfg, eps, &mut rng).unwrap();
            let np = a.apply(pos, cfg.leverage_limit);
            let r = f64::from(np) * returns[t];
            let ne = equity * (1.0 + r);
            let v = if t + 1 < train.len() {
                let sn = AgentState { market: train[t + 1].values.clone(), position: np, equity_ratio: ne };
                state_value(&w, &sn, cfg).unwrap()
            } else { 0.0 };
            let eta = match schedule {
                "step" => eta0 / ((w.steps + 1) as f64).sqrt(),
                "epoch" => eta0 / ((epoch + 1) as f64).sqrt(),
                "const" => eta0,
                _ => unreachable!(),
            };
            td_step(&mut w, &phi(&s, a), r + discount * v, eta);
            pos = np;
            equity = ne;
        }
    }
    w
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eta: f64 = args[1].parse().unwrap();
    let discount: f64 = args[2].parse().unwrap();
    let epochs: usize = args[3].parse().unwrap();
    let schedule = args[4].as_str();
    let eps_decay: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(0.999);

    let mut ql_wins = 0;
    let mut ql_total = 0.0;
    let mut ml_total = 0.0;
    let mut ql_acc_total = 0.0;
    let mut ml_acc_total = 0.0;
    for seed in 0..10u64 {
        let params = SynthParams {
            n_days: 500, seed, signal_strength: 0.05, noise_vol: 0.01,
            market_vol: 0.02, tweet_rate: 20.0, regime_switch_prob: 0.05,
        };
        let (bars, sent) = generate(&params).unwrap();
        let ds = build_dataset(&bars, &sent, TargetKind::Alpha, &WindowConfig::default()).unwrap();

        let report = cross_validate(&ds.feature_names, ds.train_rows(), &default_logreg_grid(), 3).unwrap();
        let model = train_model(report.best().spec, &ds.feature_names, ds.train_rows()).unwrap();
        let ml_acc = evaluate(&model, ds.test_rows()).unwrap().accuracy;
        let ml = run(&Strategy::MlSignal { model }, &ds, &bars, 0.0).unwrap();

        let cfg = EpisodeConfig { seed, epsilon_decay: eps_decay, ..EpisodeConfig::default() };
        let w = train_custom(&ds, &bars, &cfg, eta, discount, epochs, schedule);

        // Greedy-from-flat accuracy vs labels on the test slice.
        let mut hits = 0;
        for row in ds.test_rows() {
            let s = AgentState { market: row.values.clone(), position: 0, equity_ratio: 1.0 };
            let a = greedy_action(&w, &s, &cfg).unwrap();
            let pred: i8 = match a { TradeAction::Buy => 1, TradeAction::Sell => -1, TradeAction::Hold => 0 };
            if pred == row.label { hits += 1; }
        }
        let ql_acc = hits as f64 / ds.test_rows().len() as f64;

        let ql = run(&Strategy::QLearning { weights: w, cfg, online_updates: true }, &ds, &bars, 0.0).unwrap();
        let (qf, mf) = (ql.final_equity(), ml.final_equity());
        ql_total += qf; ml_total += mf;
        ql_acc_total += ql_acc; ml_acc_total += ml_acc;
        if qf > mf { ql_wins += 1; }
    }
    println!(
        "eta={eta} g={discount} ep={epochs} sched={schedule} epsdec={eps_decay}: wins {ql_wins}/10 | mean eq ql {:.2} ml {:.2} | acc ql {:.3} ml {:.3}",
        ql_total / 10.0, ml_total / 10.0, ql_acc_total / 10.0, ml_acc_total / 10.0
    );
}
