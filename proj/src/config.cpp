#include "satnn/config.hpp"

#include "satnn/errors.hpp"

#include <fstream>
#include <sstream>

namespace satnn {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::map<std::string, std::string> parse_config(std::string_view text) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw FormatError("config line " + std::to_string(line_no) + " has no '='");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + " has an empty key");
        out[key] = trim(std::string_view(body).substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EnvironmentError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

bool set_hyperparam(Hyperparams& hp, const std::string& key, const std::string& value) {
    if (key == "margin_rule") {
        hp.margin_rule = parse_margin_rule(value);
        return true;
    }
    int* field = nullptr;
    if (key == "num_bits") field = &hp.num_bits;
    else if (key == "slack_bits") field = &hp.slack_bits;
    else if (key == "regret_bits") field = &hp.regret_bits;
    else if (key == "cost_bits") field = &hp.cost_bits;
    else if (key == "product_magnitude_bits") field = &hp.product_magnitude_bits;
    else if (key == "alpha") field = &hp.alpha;
    else if (key == "batch_size") field = &hp.batch_size;
    else if (key == "num_batches") field = &hp.num_batches;
    if (!field) return false;
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        *field = v;
    } catch (const std::exception&) {
        throw ConfigError("hyperparameter " + key + " needs an integer, got '" + value + "'");
    }
    return true;
}

} // namespace satnn
