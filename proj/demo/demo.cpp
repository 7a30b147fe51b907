// A short tour: one explained update, a small simulated experiment, and the
// policy ranking under the default effect inputs.

#include <iostream>

#include "paradoxsim/paradoxsim.hpp"

namespace ps = paradoxsim;

int main() {
    const ps::SignalModel model(0.73, ps::DiagnosisSpace(5));
    const auto prior = ps::BeliefVector({0.5, 0.2, 0.1, 0.1, 0.1});
    const auto plain = ps::bayes_posterior(prior, model, 1);
    const auto explained = ps::explained_posterior(prior, model, 1, ps::BehaviorParams{0.7, 0.0}, 0.8);
    std::cout << "posterior on B: plain " << plain[1] << ", explained " << explained[1] << "\n";

    ps::SimConfig cfg;
    cfg.n_trials = 300;
    cfg.behavior.lambda = 0.78;
    const auto data = ps::run_experiment(cfg);
    const auto measured = ps::measure_all(data, model.mu);
    const auto table = ps::aggregate_paradox(measured, ps::ShareWeights::empirical());
    std::cout << "explanation effect: +" << table.delta_plus << " pp when the AI is right, " << table.delta_minus
              << " pp when it is wrong\n";

    for (const auto& r : ps::compare_policies(ps::published_policy_menu(), ps::EffectInputs::published(), ps::Valuation{}))
        std::cout << r.policy << ": " << r.W << " pp, $" << r.dollar_value / 1e9 << "B\n";
}
