#pragma once

#include "satnn/cnf.hpp"
#include "satnn/datasets.hpp"
#include "satnn/encoder.hpp"
#include "satnn/hyperparams.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace satnn {

struct Provenance {
    int batch_id = -1;
    std::uint64_t seed = 0;
    int solution_index = 0;
    bool shared_clauses = false;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct TrainedModel {
    NetworkSpec net;
    Hyperparams hp;
    WeightValues values;
    Provenance provenance;

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Two's-complement decode of every weight, bias and kernel bit-vector.
/// Kernelised layer-0 weights are recomputed from the decoded kernels.
/// Throws DecodeError naming the first variable label the assignment lacks.
TrainedModel decode_weights(const Assignment& assignment, const WeightVars& vars, const CnfFormula& formula,
                            const NetworkSpec& net, const Hyperparams& hp);

struct Overflow {
    int layer = 0;
    int neuron = 0;
    std::string reason;
};

struct Inference {
    std::int64_t output = 0;
    std::optional<Overflow> overflow;
};

/// Integer replica of the encoded forward pass. Every step the circuit
/// guards with a side constraint is range-checked here and reported as an
/// overflow instead of wrapping.
Inference infer(const TrainedModel& model, std::span<const int> features);

/// Whether `output` meets the encoded margin constraint for `label`.
bool satisfies_margin(std::int64_t output, int label, const Hyperparams& hp);

enum class AccuracyMode {
    Plain,      // predict +1 iff output >= 0
    TrainMargin // predict +1 iff output >= 2^cost_bits
};

double accuracy(const TrainedModel& model, const Dataset& ds, AccuracyMode mode);
double accuracy_serial(const TrainedModel& model, const Dataset& ds, AccuracyMode mode);

/// Fraction of examples whose output satisfies the encoded margin.
double margin_fraction(const TrainedModel& model, std::span<const Example> batch);

struct OracleVerdict {
    bool sat = false;
    std::optional<TrainedModel> witness; // lowest-index satisfying assignment
    std::uint64_t assignments_checked = 0;
};

/// Exhaustive search over every weight-bit assignment of a tiny vanilla
/// network. Refuses (ConfigError) above 24 free bits.
OracleVerdict exhaustive_train_oracle(const NetworkSpec& net, std::span<const Example> batch, const Hyperparams& hp);
OracleVerdict exhaustive_train_oracle_serial(const NetworkSpec& net, std::span<const Example> batch, const Hyperparams& hp);

/// Number of free weight and bias bits of a vanilla network.
int weight_bit_count(const NetworkSpec& net, const Hyperparams& hp);

/// The model whose bits spell `index`, in declaration order (MSB first).
TrainedModel model_from_index(const NetworkSpec& net, const Hyperparams& hp, std::uint64_t index);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace satnn
