#include "satnn/runtime.hpp"

#include "satnn/errors.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <limits>
#include <sstream>

namespace satnn {

namespace {

std::int64_t decode_checked(const BitVec& bv, const Assignment& assignment, const CnfFormula& formula) {
    for (Lit l : bv.bits()) {
        if (l.is_constant() || l.var() <= assignment.var_count()) continue;
        auto it = formula.labels().find(l.var());
        const std::string name = it == formula.labels().end() ? "#" + std::to_string(l.var()) : it->second;
        throw DecodeError("assignment does not cover weight variable " + name);
    }
    return decode(bv, assignment);
}

} // namespace

TrainedModel decode_weights(const Assignment& assignment, const WeightVars& vars, const CnfFormula& formula,
                            const NetworkSpec& net, const Hyperparams& hp) {
    TrainedModel model;
    model.net = net;
    model.hp = hp;
    for (const auto& kernel : vars.kernels) {
        std::vector<std::int64_t> cells;
        for (const BitVec& cell : kernel) cells.push_back(decode_checked(cell, assignment, formula));
        model.values.kernels.push_back(std::move(cells));
    }
    for (std::size_t l = 0; l < vars.layers.size(); ++l) {
        LayerValues lv;
        const bool derived = l == 0 && net.kind == NetKind::Kernelised;
        if (derived) {
            lv.weights = kernel_to_weights(net, model.values.kernels);
        } else {
            for (const auto& row : vars.layers[l].weights) {
                std::vector<std::int64_t> vals;
                for (const BitVec& w : row) vals.push_back(decode_checked(w, assignment, formula));
                lv.weights.push_back(std::move(vals));
            }
        }
        for (const BitVec& b : vars.layers[l].biases) lv.biases.push_back(decode_checked(b, assignment, formula));
        model.values.layers.push_back(std::move(lv));
    }
    return model;
}

Inference infer(const TrainedModel& model, std::span<const int> features) {
    const NetworkSpec& net = model.net;
    const Hyperparams& hp = model.hp;
    if (features.size() != static_cast<std::size_t>(net.input_dim))
        throw ShapeError("infer: " + std::to_string(features.size()) + " features, network expects " +
                         std::to_string(net.input_dim));
    const std::int64_t wmin = hp.weight_min(), wmax = hp.weight_max();
    const std::int64_t smin = hp.slack_min(), smax = hp.slack_max();
    const std::int64_t product_limit = std::int64_t{1} << hp.product_magnitude_bits;

    Inference result;
    auto overflow = [&](int layer, int neuron, std::string reason) {
        result.overflow = Overflow{layer, neuron, std::move(reason)};
        return result;
    };

    std::vector<std::int64_t> act(features.begin(), features.end());
    for (std::int64_t x : act)
        if (x < wmin || x > wmax) return overflow(0, -1, "input feature " + std::to_string(x) + " outside num_bits range");

    for (int l = 0; l < net.num_layers(); ++l) {
        const LayerValues& layer = model.values.layers.at(static_cast<std::size_t>(l));
        const bool output_layer = l + 1 == net.num_layers();
        std::vector<std::int64_t> next;
        next.reserve(static_cast<std::size_t>(net.width(l)));
        for (int n = 0; n < net.width(l); ++n) {
            const auto& w = layer.weights.at(static_cast<std::size_t>(n));
            const std::int64_t bias = layer.biases.at(static_cast<std::size_t>(n));
            if (bias < smin || bias > smax) return overflow(l, n, "bias outside slack_bits range");
            std::int64_t acc = 0;
            for (std::size_t i = 0; i < act.size(); ++i) {
                const std::int64_t wi = w[i], xi = act[i];
                if (wi < wmin || wi > wmax) return overflow(l, n, "weight outside num_bits range");
                // Sign-magnitude multiplication cannot represent |-2^(num_bits-1)|.
                if (wi == wmin || xi == wmin) return overflow(l, n, "operand magnitude not representable");
                const std::int64_t p = wi * xi;
                if (p >= product_limit || -p >= product_limit) return overflow(l, n, "product exceeds product_magnitude_bits");
                acc = i == 0 ? p : acc + p;
                if (acc < smin || acc > smax) return overflow(l, n, "partial sum exceeds slack_bits");
            }
            acc += bias;
            if (acc < smin || acc > smax) return overflow(l, n, "sum with bias exceeds slack_bits");
            if (output_layer) {
                result.output = acc;
                return result;
            }
            const std::int64_t shifted = acc >> hp.regret_bits;
            next.push_back(std::clamp<std::int64_t>(shifted, 0, wmax));
        }
        act = std::move(next);
    }
    throw ShapeError("network has no output layer");
}

bool satisfies_margin(std::int64_t output, int label, const Hyperparams& hp) {
    if (label > 0) return output >= (std::int64_t{1} << hp.cost_bits);
    if (hp.margin_rule == MarginRule::Stated) return output <= -(std::int64_t{1} << hp.cost_bits);
    // Sign set and bits 1..n-cost_bits-1 clear: output <= -2^(n-1) + 2^cost_bits - 1.
    return output <= hp.slack_min() + (std::int64_t{1} << hp.cost_bits) - 1;
}

namespace {

bool predicted_correctly(const TrainedModel& model, const Example& ex, AccuracyMode mode) {
    const Inference r = infer(model, ex.features);
    if (r.overflow) return false;
    const std::int64_t threshold = mode == AccuracyMode::Plain ? 0 : (std::int64_t{1} << model.hp.cost_bits);
    const int predicted = r.output >= threshold ? 1 : -1;
    return predicted == ex.label;
}

} // namespace

double accuracy_serial(const TrainedModel& model, const Dataset& ds, AccuracyMode mode) {
    if (ds.examples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const Example& ex : ds.examples)
        if (predicted_correctly(model, ex, mode)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double accuracy(const TrainedModel& model, const Dataset& ds, AccuracyMode mode) {
    if (ds.examples.empty()) return 0.0;
    const auto n = static_cast<std::int64_t>(ds.size());
    std::int64_t correct = 0;
#pragma omp parallel for reduction(+ : correct) schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        if (predicted_correctly(model, ds.examples[static_cast<std::size_t>(i)], mode)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(n);
}

double margin_fraction(const TrainedModel& model, std::span<const Example> batch) {
    if (batch.empty()) return 0.0;
    std::size_t ok = 0;
    for (const Example& ex : batch) {
        const Inference r = infer(model, ex.features);
        if (!r.overflow && satisfies_margin(r.output, ex.label, model.hp)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(batch.size());
}

int weight_bit_count(const NetworkSpec& net, const Hyperparams& hp) {
    int bits = 0;
    for (int l = 0; l < net.num_layers(); ++l) bits += net.width(l) * (net.fan_in(l) * hp.num_bits + hp.slack_bits);
    return bits;
}

TrainedModel model_from_index(const NetworkSpec& net, const Hyperparams& hp, std::uint64_t index) {
    const int total = weight_bit_count(net, hp);
    int consumed = 0;
    auto take = [&](int width) {
        // Bits are consumed MSB-first from the top of `index`.
        const int shift = total - consumed - width;
        consumed += width;
        const std::uint64_t raw = (index >> shift) & ((std::uint64_t{1} << width) - 1);
        const std::uint64_t sign = std::uint64_t{1} << (width - 1);
        return static_cast<std::int64_t>(raw ^ sign) - static_cast<std::int64_t>(sign);
    };
    TrainedModel model;
    model.net = net;
    model.hp = hp;
    for (int l = 0; l < net.num_layers(); ++l) {
        LayerValues lv;
        for (int n = 0; n < net.width(l); ++n) {
            std::vector<std::int64_t> row;
            for (int i = 0; i < net.fan_in(l); ++i) row.push_back(take(hp.num_bits));
            lv.weights.push_back(std::move(row));
            lv.biases.push_back(take(hp.slack_bits));
        }
        model.values.layers.push_back(std::move(lv));
    }
    return model;
}

namespace {

constexpr int kOracleBitLimit = 24;

std::uint64_t oracle_space(const NetworkSpec& net, std::span<const Example> batch, const Hyperparams& hp) {
    hp.validate();
    net.validate();
    if (net.kind != NetKind::Vanilla) throw ConfigError("exhaustive oracle supports vanilla networks only");
    if (batch.empty()) throw ConfigError("exhaustive oracle needs a non-empty batch");
    const int bits = weight_bit_count(net, hp);
    if (bits > kOracleBitLimit)
        throw ConfigError("exhaustive oracle refuses " + std::to_string(bits) + " weight bits (limit " +
                          std::to_string(kOracleBitLimit) + ")");
    return std::uint64_t{1} << bits;
}

bool fits_batch(const TrainedModel& model, std::span<const Example> batch) {
    for (const Example& ex : batch) {
        const Inference r = infer(model, ex.features);
        if (r.overflow || !satisfies_margin(r.output, ex.label, model.hp)) return false;
    }
    return true;
}

} // namespace

OracleVerdict exhaustive_train_oracle_serial(const NetworkSpec& net, std::span<const Example> batch, const Hyperparams& hp) {
    const std::uint64_t space = oracle_space(net, batch, hp);
    OracleVerdict verdict;
    for (std::uint64_t idx = 0; idx < space; ++idx) {
        ++verdict.assignments_checked;
        TrainedModel m = model_from_index(net, hp, idx);
        if (fits_batch(m, batch)) {
            verdict.sat = true;
            verdict.witness = std::move(m);
            break;
        }
    }
    return verdict;
}

OracleVerdict exhaustive_train_oracle(const NetworkSpec& net, std::span<const Example> batch, const Hyperparams& hp) {
    const std::uint64_t space = oracle_space(net, batch, hp);
    constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();
    std::atomic<std::uint64_t> best{kNone};
    std::uint64_t checked = 0;
    const auto n = static_cast<std::int64_t>(space);
#pragma omp parallel for schedule(dynamic, 1024) reduction(+ : checked)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        if (idx > best.load(std::memory_order_relaxed)) continue;
        ++checked;
        if (!fits_batch(model_from_index(net, hp, idx), batch)) continue;
        std::uint64_t cur = best.load();
        while (idx < cur && !best.compare_exchange_weak(cur, idx)) {
        }
    }
    OracleVerdict verdict;
    verdict.assignments_checked = checked;
    if (best.load() != kNone) {
        verdict.sat = true;
        verdict.witness = model_from_index(net, hp, best.load());
    }
    return verdict;
}

// ---------------------------------------------------------------- JSON ----

namespace {

using ojson = nlohmann::ordered_json;

const char* kind_name(NetKind k) { return k == NetKind::Vanilla ? "vanilla" : "kernelised"; }

NetKind parse_kind(const std::string& s) {
    if (s == "vanilla") return NetKind::Vanilla;
    if (s == "kernelised") return NetKind::Kernelised;
    throw FormatError("unknown network kind '" + s + "'");
}

} // namespace

std::string model_to_json(const TrainedModel& model) {
    ojson j;
    j["format"] = "satnn-model/1";
    ojson net;
    net["kind"] = kind_name(model.net.kind);
    net["input_dim"] = model.net.input_dim;
    net["hidden"] = model.net.hidden;
    net["grid_side"] = model.net.grid_side;
    net["window_size"] = model.net.window_size;
    net["window_stride"] = model.net.window_stride;
    j["network"] = net;
    const Hyperparams& hp = model.hp;
    j["hyperparams"] = ojson{{"num_bits", hp.num_bits},
                             {"slack_bits", hp.slack_bits},
                             {"regret_bits", hp.regret_bits},
                             {"cost_bits", hp.cost_bits},
                             {"product_magnitude_bits", hp.product_magnitude_bits},
                             {"alpha", hp.alpha},
                             {"batch_size", hp.batch_size},
                             {"num_batches", hp.num_batches},
                             {"margin_rule", to_string(hp.margin_rule)}};
    ojson layers = ojson::array();
    for (const LayerValues& lv : model.values.layers) layers.push_back(ojson{{"weights", lv.weights}, {"biases", lv.biases}});
    j["layers"] = layers;
    if (!model.values.kernels.empty()) j["kernels"] = model.values.kernels;
    const Provenance& p = model.provenance;
    j["provenance"] = ojson{{"batch_id", p.batch_id},
                            {"seed", p.seed},
                            {"solution_index", p.solution_index},
                            {"shared_clauses", p.shared_clauses}};
    return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    TrainedModel m;
    try {
        const auto j = ojson::parse(text);
        if (j.at("format") != "satnn-model/1") throw FormatError("unsupported model format");
        const auto& net = j.at("network");
        m.net.kind = parse_kind(net.at("kind").get<std::string>());
        m.net.input_dim = net.at("input_dim").get<int>();
        m.net.hidden = net.at("hidden").get<std::vector<int>>();
        m.net.grid_side = net.at("grid_side").get<int>();
        m.net.window_size = net.at("window_size").get<int>();
        m.net.window_stride = net.at("window_stride").get<int>();
        const auto& hp = j.at("hyperparams");
        m.hp.num_bits = hp.at("num_bits").get<int>();
        m.hp.slack_bits = hp.at("slack_bits").get<int>();
        m.hp.regret_bits = hp.at("regret_bits").get<int>();
        m.hp.cost_bits = hp.at("cost_bits").get<int>();
        m.hp.product_magnitude_bits = hp.at("product_magnitude_bits").get<int>();
        m.hp.alpha = hp.at("alpha").get<int>();
        m.hp.batch_size = hp.at("batch_size").get<int>();
        m.hp.num_batches = hp.at("num_batches").get<int>();
        m.hp.margin_rule = parse_margin_rule(hp.value("margin_rule", std::string("literal")));
        for (const auto& lj : j.at("layers")) {
            LayerValues lv;
            lv.weights = lj.at("weights").get<std::vector<std::vector<std::int64_t>>>();
            lv.biases = lj.at("biases").get<std::vector<std::int64_t>>();
            m.values.layers.push_back(std::move(lv));
        }
        if (j.contains("kernels")) m.values.kernels = j.at("kernels").get<std::vector<std::vector<std::int64_t>>>();
        const auto& p = j.at("provenance");
        m.provenance.batch_id = p.at("batch_id").get<int>();
        m.provenance.seed = p.at("seed").get<std::uint64_t>();
        m.provenance.solution_index = p.at("solution_index").get<int>();
        m.provenance.shared_clauses = p.at("shared_clauses").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad model file: ") + e.what());
    }
    m.net.validate();
    if (m.values.layers.size() != static_cast<std::size_t>(m.net.num_layers()))
        throw FormatError("model layer count does not match the network");
    return m;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentError("cannot write " + path.string());
    out << model_to_json(model);
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentError("cannot open model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

} // namespace satnn
