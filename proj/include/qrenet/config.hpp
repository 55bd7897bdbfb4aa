#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qrenet/annealed.hpp"
#include "qrenet/experiments.hpp"
#include "qrenet/game.hpp"
#include "qrenet/graph.hpp"
#include "qrenet/noise.hpp"

namespace qrenet {

// Validation failure anchored to a line of the config text.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::size_t line, const std::string& message);
    std::size_t line;
};

// Line of every key and array element, addressed by JSON pointer.
class SourceMap {
  public:
    SourceMap() = default;
    explicit SourceMap(std::string_view text);
    // Nearest recorded ancestor's line; 1 when nothing matches.
    std::size_t line_of(const std::string& pointer) const;

  private:
    std::map<std::string, std::size_t> lines_;
};

// A value inside the config with enough context to report where it came from.
class ConfigNode {
  public:
    ConfigNode(const nlohmann::json& value, std::string pointer, const SourceMap& map)
        : value_(&value), pointer_(std::move(pointer)), map_(&map) {}

    const nlohmann::json& json() const { return *value_; }
    const std::string& pointer() const { return pointer_; }
    std::size_t line() const { return map_->line_of(pointer_); }
    [[noreturn]] void fail(const std::string& message) const;

    // Requires an object whose keys all appear in `allowed`.
    void allow_keys(std::initializer_list<std::string_view> allowed) const;
    bool has(std::string_view key) const;
    ConfigNode at(std::string_view key) const;
    std::optional<ConfigNode> get(std::string_view key) const;
    std::size_t size() const;
    ConfigNode element(std::size_t index) const;

    double number() const;
    double positive() const;
    long long integer() const;
    std::size_t count() const; // nonnegative integer
    std::uint64_t seed() const;
    std::string string() const;
    bool boolean() const;
    std::vector<double> numbers() const; // scalar or array of numbers

    double number_or(std::string_view key, double fallback) const;
    double positive_or(std::string_view key, double fallback) const;
    std::size_t count_or(std::string_view key, std::size_t fallback) const;
    std::string string_or(std::string_view key, std::string fallback) const;
    bool boolean_or(std::string_view key, bool fallback) const;

  private:
    const nlohmann::json* value_;
    std::string pointer_;
    const SourceMap* map_;
};

struct GraphConfig {
    std::string type;            // complete | star | cycle | edge_list | configuration | annealed
    std::size_t n = 0;
    std::string path;            // edge_list file
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    bool directed = false;
    std::optional<DegreeDistribution> degree;
    std::optional<std::uint64_t> seed;
    std::optional<GraphSpec> fixed; // every type except configuration is built while parsing
    std::size_t line = 1;
};

struct ModelConfig {
    GraphConfig graph;
    CouplingSpec coupling;
    std::vector<double> fields{0.0};
    std::vector<NoiseModel> noise{NoiseModel::logistic(1.0)};
    std::size_t line = 1;
};

struct OutputConfig {
    std::string dir = ".";
    std::string prefix = "qrenet";
    bool json = true;
    bool csv = true;
    std::string path(std::string_view suffix) const;
};

struct Overrides {
    std::optional<double> J;
    std::optional<double> H;
    std::optional<double> beta;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

class RunConfig {
  public:
    // `base_dir` resolves relative file paths inside the config.
    static RunConfig parse(std::string_view text, const std::string& base_dir = ".");
    static RunConfig load(const std::string& path);

    RunConfig(const RunConfig&) = delete;
    RunConfig& operator=(const RunConfig&) = delete;
    RunConfig(RunConfig&&) = default;
    RunConfig& operator=(RunConfig&&) = default;

    void apply(const Overrides& overrides);

    ModelConfig model;
    OutputConfig output;
    std::optional<std::uint64_t> seed; // absent: the caller picks and reports one
    std::optional<unsigned> threads;

    ConfigNode task() const;
    ConfigNode root() const { return ConfigNode(*doc_, "", *map_); }

    bool has_nodes() const { return model.graph.type != "annealed"; }
    GraphSpec build_graph(std::uint64_t seed) const;
    GameModel build_game(std::uint64_t seed) const;
    ModelTemplate build_template(std::uint64_t seed) const;
    // Prescribed pmf for configuration/annealed graphs, otherwise the graph's own.
    DegreeDistribution degree_distribution(std::uint64_t seed) const;
    const NoiseModel& shared_noise() const;

  private:
    RunConfig() = default;
    std::unique_ptr<nlohmann::json> doc_;
    std::unique_ptr<SourceMap> map_;
    std::unique_ptr<nlohmann::json> empty_;
};

} // namespace qrenet
