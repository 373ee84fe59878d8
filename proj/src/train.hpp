#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "baselines.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "svm.hpp"

namespace cdln {

using EpochCallback = std::function<void(int epoch, double loss)>;

struct TrainTrace {
    std::vector<double> epoch_losses;  // mean squared error over the epoch's forwards
};

// Mini-batch Adam loop on normalized scores. Shuffling, dropout and
// initialization all derive from cfg.seed; a fixed seed and thread count
// reproduce parameters exactly. Batch members can run on cfg.threads workers
// with per-thread gradient buffers reduced in a fixed order.
TrainTrace train_neural(NeuralGrader& model, const std::vector<TokenizedEssay>& essays,
                        const std::vector<double>& targets, const RunConfig& cfg,
                        const EpochCallback& on_epoch = {});

}  // namespace cdln
