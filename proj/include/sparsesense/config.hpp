// Experiment and synthetic-panel configuration files.
//
// INI-style text: `[section]` headers followed by `key = value` lines, or
// dotted keys (`alloc.k = 4`) outside any section. Strings may be quoted,
// lists are comma separated, `#` and `;` start comments.
#pragma once

#include "sparsesense/simulate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sparsesense {

struct ExperimentConfig {
    SimulationConfig sim;
    /// Keys that were not recognized (only populated in lenient mode).
    std::vector<std::string> unknown_keys;

    /// Canonical `key = value` listing of every setting, sorted by key.
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string checksum() const;
};

/// Unknown keys raise ConfigError when `strict`, else are collected.
ExperimentConfig parse_config_text(const std::string &text, bool strict = true);
ExperimentConfig parse_config(const std::filesystem::path &path, bool strict = true);

SyntheticSpec parse_synthetic_spec_text(const std::string &text, bool strict = true);
SyntheticSpec parse_synthetic_spec(const std::filesystem::path &path, bool strict = true);

} // namespace sparsesense
