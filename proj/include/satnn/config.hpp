#pragma once

#include "satnn/hyperparams.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace satnn {

/// "key = value" lines; '#' starts a comment. Later keys override earlier ones.
std::map<std::string, std::string> parse_config(std::string_view text);
std::map<std::string, std::string> load_config(const std::filesystem::path& path);

/// Sets the hyperparameter named `key`; returns false for unknown keys.
bool set_hyperparam(Hyperparams& hp, const std::string& key, const std::string& value);

} // namespace satnn
