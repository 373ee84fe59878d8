#include "train.hpp"

#include <thread>

#include "optim.hpp"

namespace cdln {

TrainTrace train_neural(NeuralGrader& model, const std::vector<TokenizedEssay>& essays,
                        const std::vector<double>& targets, const RunConfig& cfg,
                        const EpochCallback& on_epoch) {
    if (essays.empty()) fail(errc::data, "train: empty training set");
    if (essays.size() != targets.size())
        fail(errc::contract, "train: essays and targets must align");
    const int epochs = cfg.resolved_epochs();
    if (epochs < 1) fail(errc::config, "train: epochs must be >= 1");

    std::vector<Parameter*> params = model.parameters();
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.learning_rate;
    Adam opt(adam_cfg);

    const std::size_t n = essays.size();
    const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
    const int workers = std::max(1, cfg.resolved_threads());

    TrainTrace trace;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, derive_seed(0xe70c4, epoch)));
        shuffle_rng.shuffle(order);

        double epoch_sq_err = 0.0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(n, start + batch_size);
            const std::size_t members = end - start;
            const double inv_batch = 1.0 / static_cast<double>(members);

            // one forward+backward per member; gradients accumulate for Adam.
            auto member_pass = [&](std::size_t slot, GradSink* sink) {
                const std::size_t idx = order[start + slot];
                Tape tape;
                const std::uint64_t drop_seed =
                    derive_seed(cfg.seed, derive_seed(static_cast<std::uint64_t>(epoch), idx));
                Tape::NodeId pred = model.forward(tape, essays[idx], true, drop_seed);
                Tape::NodeId diff = tape.axpb(pred, 1.0, -targets[idx]);
                Tape::NodeId loss = tape.scale(tape.mul(diff, diff), inv_batch);
                tape.backward(loss, sink);
                const double d = tape.value(pred)[0] - targets[idx];
                return d * d;
            };

            if (workers == 1 || members == 1) {
                for (std::size_t slot = 0; slot < members; ++slot)
                    epoch_sq_err += member_pass(slot, nullptr);
            } else {
                const std::size_t lanes =
                    std::min<std::size_t>(static_cast<std::size_t>(workers), members);
                std::vector<GradSink> sinks;
                sinks.reserve(lanes);
                for (std::size_t l = 0; l < lanes; ++l) sinks.emplace_back(params);
                std::vector<double> lane_err(lanes, 0.0);
                std::vector<std::thread> pool;
                for (std::size_t l = 0; l < lanes; ++l) {
                    pool.emplace_back([&, l] {
                        for (std::size_t slot = l; slot < members; slot += lanes)
                            lane_err[l] += member_pass(slot, &sinks[l]);
                    });
                }
                for (std::thread& t : pool) t.join();
                // reduce in lane order for a reproducible summation order
                for (std::size_t l = 0; l < lanes; ++l) {
                    sinks[l].flush_into_params();
                    epoch_sq_err += lane_err[l];
                }
            }

            model.table().mask_pad_gradient();
            opt.step(params);
        }

        const double epoch_loss = epoch_sq_err / static_cast<double>(n);
        trace.epoch_losses.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    return trace;
}

}  // namespace cdln
