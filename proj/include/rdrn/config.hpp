#pragma once

// Flat "key = value" configuration files. One key per line, '#' starts a
// comment. Keys mirror RdrnConfig, TrainConfig and DegradationSpec fields.

#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "rdrn/degradation.hpp"
#include "rdrn/model.hpp"
#include "rdrn/training.hpp"

namespace rdrn {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

// "3,4,5", "3..5" or "" (empty set).
std::set<int> parse_int_set(const std::string& s);
std::string format_int_set(const std::set<int>& s);

// Recognised keys, by group.
const std::set<std::string>& model_keys();
const std::set<std::string>& train_keys();
const std::set<std::string>& degradation_keys();

// Overlay recognised keys onto `base`; ConfigError on malformed values.
RdrnConfig model_config_from(const KeyValues& kv, RdrnConfig base = {});
TrainConfig train_config_from(const KeyValues& kv, TrainConfig base = {});
// `degradation` selects the kind; `scale` is shared with the model.
DegradationSpec degradation_from(const KeyValues& kv, DegradationSpec base = {});

KeyValues to_key_values(const RdrnConfig& cfg);
KeyValues to_key_values(const TrainConfig& cfg);
KeyValues to_key_values(const DegradationSpec& spec);

}  // namespace rdrn
