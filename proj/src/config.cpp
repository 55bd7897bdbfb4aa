#include "qrenet/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace qrenet {

using nlohmann::json;

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(fmt::format("line {}: {}", line, message)), line(line) {}

namespace {

std::string escape_token(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

std::string child_pointer(const std::string& parent, std::string_view key) {
    return parent + "/" + escape_token(key);
}

std::string type_name(const json& v) { return v.type_name(); }

} // namespace

SourceMap::SourceMap(std::string_view text) {
    struct Frame {
        bool object;
        std::string path;
        std::size_t index = 0;
        std::string key;
        bool expect_key = true;
    };
    std::vector<Frame> stack;
    std::size_t line = 1;
    lines_.emplace("", 1);

    auto value_path = [&]() -> std::string {
        if (stack.empty())
            return "";
        const Frame& f = stack.back();
        return f.object ? child_pointer(f.path, f.key) : f.path + "/" + std::to_string(f.index);
    };
    auto value_start = [&]() {
        if (!stack.empty() && !stack.back().object)
            lines_.emplace(value_path(), line);
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == ':')
            continue;
        if (c == '"') {
            std::string s;
            std::size_t j = i + 1;
            for (; j < text.size() && text[j] != '"'; ++j) {
                if (text[j] == '\\' && j + 1 < text.size())
                    s += text[++j];
                else
                    s += text[j];
            }
            i = j;
            if (!stack.empty() && stack.back().object && stack.back().expect_key) {
                stack.back().key = s;
                stack.back().expect_key = false;
                lines_.emplace(child_pointer(stack.back().path, s), line);
            } else {
                value_start();
            }
            continue;
        }
        if (c == ',') {
            if (!stack.empty()) {
                if (stack.back().object) stack.back().expect_key = true;
                else ++stack.back().index;
            }
            continue;
        }
        if (c == '{' || c == '[') {
            value_start();
            stack.push_back(Frame{c == '{', value_path(), 0, {}, true});
            continue;
        }
        if (c == '}' || c == ']') {
            if (!stack.empty())
                stack.pop_back();
            continue;
        }
        // number or literal
        value_start();
        while (i + 1 < text.size() && std::string_view(",]}\n \t\r").find(text[i + 1]) == std::string_view::npos)
            ++i;
    }
}

std::size_t SourceMap::line_of(const std::string& pointer) const {
    std::string p = pointer;
    while (true) {
        if (auto it = lines_.find(p); it != lines_.end())
            return it->second;
        const auto slash = p.rfind('/');
        if (slash == std::string::npos)
            return 1;
        p.resize(slash);
    }
}

void ConfigNode::fail(const std::string& message) const {
    const std::string where = pointer_.empty() ? std::string("config") : pointer_;
    throw ConfigError(line(), fmt::format("{}: {}", where, message));
}

void ConfigNode::allow_keys(std::initializer_list<std::string_view> allowed) const {
    if (!value_->is_object())
        fail(fmt::format("expected an object, found {}", type_name(*value_)));
    for (const auto& item : value_->items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            std::string list;
            for (auto a : allowed)
                list += (list.empty() ? "" : ", ") + std::string(a);
            ConfigNode(item.value(), child_pointer(pointer_, item.key()), *map_)
                .fail(fmt::format("unknown key '{}' (allowed: {})", item.key(), list));
        }
    }
}

bool ConfigNode::has(std::string_view key) const {
    return value_->is_object() && value_->contains(std::string(key));
}

ConfigNode ConfigNode::at(std::string_view key) const {
    if (!value_->is_object())
        fail(fmt::format("expected an object, found {}", type_name(*value_)));
    auto it = value_->find(std::string(key));
    if (it == value_->end())
        fail(fmt::format("missing required key '{}'", key));
    return ConfigNode(*it, child_pointer(pointer_, key), *map_);
}

std::optional<ConfigNode> ConfigNode::get(std::string_view key) const {
    if (!has(key))
        return std::nullopt;
    return at(key);
}

std::size_t ConfigNode::size() const {
    if (!value_->is_array())
        fail(fmt::format("expected an array, found {}", type_name(*value_)));
    return value_->size();
}

ConfigNode ConfigNode::element(std::size_t index) const {
    if (index >= size())
        fail(fmt::format("index {} out of range", index));
    return ConfigNode((*value_)[index], pointer_ + "/" + std::to_string(index), *map_);
}

double ConfigNode::number() const {
    if (!value_->is_number())
        fail(fmt::format("expected a number, found {}", type_name(*value_)));
    const double v = value_->get<double>();
    if (!std::isfinite(v))
        fail("number must be finite");
    return v;
}

double ConfigNode::positive() const {
    const double v = number();
    if (!(v > 0.0))
        fail(fmt::format("must be positive, got {}", v));
    return v;
}

long long ConfigNode::integer() const {
    if (value_->is_number_integer())
        return value_->get<long long>();
    if (value_->is_number_float()) {
        const double v = value_->get<double>();
        if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15)
            return static_cast<long long>(v);
    }
    fail(fmt::format("expected an integer, found {}", type_name(*value_)));
}

std::size_t ConfigNode::count() const {
    const long long v = integer();
    if (v < 0)
        fail(fmt::format("must be nonnegative, got {}", v));
    return static_cast<std::size_t>(v);
}

std::uint64_t ConfigNode::seed() const {
    if (value_->is_number_unsigned())
        return value_->get<std::uint64_t>();
    return static_cast<std::uint64_t>(count());
}

std::string ConfigNode::string() const {
    if (!value_->is_string())
        fail(fmt::format("expected a string, found {}", type_name(*value_)));
    return value_->get<std::string>();
}

bool ConfigNode::boolean() const {
    if (!value_->is_boolean())
        fail(fmt::format("expected true or false, found {}", type_name(*value_)));
    return value_->get<bool>();
}

std::vector<double> ConfigNode::numbers() const {
    if (value_->is_number())
        return {number()};
    std::vector<double> out;
    for (std::size_t k = 0, n = size(); k < n; ++k)
        out.push_back(element(k).number());
    if (out.empty())
        fail("expected a number or a nonempty array of numbers");
    return out;
}

double ConfigNode::number_or(std::string_view key, double fallback) const {
    auto v = get(key);
    return v ? v->number() : fallback;
}
double ConfigNode::positive_or(std::string_view key, double fallback) const {
    auto v = get(key);
    return v ? v->positive() : fallback;
}
std::size_t ConfigNode::count_or(std::string_view key, std::size_t fallback) const {
    auto v = get(key);
    return v ? v->count() : fallback;
}
std::string ConfigNode::string_or(std::string_view key, std::string fallback) const {
    auto v = get(key);
    return v ? v->string() : fallback;
}
bool ConfigNode::boolean_or(std::string_view key, bool fallback) const {
    auto v = get(key);
    return v ? v->boolean() : fallback;
}

std::string OutputConfig::path(std::string_view suffix) const {
    return (std::filesystem::path(dir) / fmt::format("{}_{}", prefix, suffix)).string();
}

namespace {

std::string resolve(const std::string& base, const std::string& path) {
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(base) / p).lexically_normal().string();
}

std::string read_file(const ConfigNode& where, const std::string& path) {
    std::ifstream in(path);
    if (!in)
        where.fail(fmt::format("cannot open '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Runs `fn`, turning library validation errors into errors at `where`.
template <class Fn>
auto anchored(const ConfigNode& where, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        where.fail(e.what());
    } catch (const std::runtime_error& e) {
        where.fail(e.what());
    }
}

DegreeDistribution parse_degree(const ConfigNode& graph, const std::string& base) {
    if (graph.has("degree") == graph.has("degree_file"))
        graph.fail("give exactly one of 'degree' or 'degree_file'");
    if (auto file = graph.get("degree_file")) {
        const std::string path = resolve(base, file->string());
        const std::string text = read_file(*file, path);
        return anchored(*file, [&] { return parse_degree_pmf(text); });
    }
    const ConfigNode deg = graph.at("degree");
    if (!deg.json().is_object() || deg.json().empty())
        deg.fail("expected an object mapping degree to probability, e.g. {\"3\": 1.0}");
    std::string text;
    for (const auto& item : deg.json().items()) {
        const ConfigNode p = deg.at(item.key());
        std::size_t used = 0;
        long long k = 0;
        try {
            k = std::stoll(item.key(), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.key().size() || k < 0)
            p.fail(fmt::format("degree '{}' is not a nonnegative integer", item.key()));
        text += fmt::format("{} {}\n", k, p.number());
    }
    return anchored(deg, [&] { return parse_degree_pmf(text); });
}

GraphConfig parse_graph(const ConfigNode& g, const std::string& base) {
    GraphConfig out;
    out.line = g.line();
    out.type = g.at("type").string();
    const std::string& t = out.type;
    if (t == "complete" || t == "star" || t == "cycle") {
        g.allow_keys({"type", "n"});
        out.n = g.at("n").count();
        out.fixed = anchored(g, [&] {
            if (t == "complete") return complete_graph(out.n);
            if (t == "star") return star_graph(out.n);
            return cycle_graph(out.n);
        });
    } else if (t == "edge_list") {
        g.allow_keys({"type", "n", "path", "edges", "directed"});
        out.n = g.count_or("n", 0);
        out.directed = g.boolean_or("directed", false);
        if (g.has("path") == g.has("edges"))
            g.fail("give exactly one of 'path' or 'edges'");
        if (auto p = g.get("path")) {
            out.path = resolve(base, p->string());
            const std::string text = read_file(*p, out.path);
            out.fixed = anchored(*p, [&] { return parse_edge_list(text, out.directed, out.n); });
        } else {
            const ConfigNode edges = g.at("edges");
            std::size_t max_node = 0;
            for (std::size_t k = 0, m = edges.size(); k < m; ++k) {
                const ConfigNode e = edges.element(k);
                if (e.size() != 2)
                    e.fail("an edge is a pair [i, j]");
                out.edges.emplace_back(e.element(0).count(), e.element(1).count());
                if (out.n && (out.edges.back().first >= out.n || out.edges.back().second >= out.n))
                    e.fail(fmt::format("edge [{}, {}] names a node outside 0..{}", out.edges.back().first,
                                       out.edges.back().second, out.n - 1));
                if (out.edges.back().first == out.edges.back().second)
                    e.fail("self-loops are not allowed");
                max_node = std::max({max_node, out.edges.back().first + 1, out.edges.back().second + 1});
            }
            const std::size_t n = out.n ? out.n : max_node;
            out.fixed = anchored(edges, [&] { return GraphSpec(n, out.edges, out.directed); });
        }
        out.n = out.fixed->num_nodes();
    } else if (t == "configuration") {
        g.allow_keys({"type", "n", "degree", "degree_file", "seed"});
        out.n = g.at("n").count();
        out.degree = parse_degree(g, base);
        if (auto s = g.get("seed"))
            out.seed = s->seed();
    } else if (t == "annealed") {
        g.allow_keys({"type", "degree", "degree_file"});
        out.degree = parse_degree(g, base);
    } else {
        g.at("type").fail(
            fmt::format("unknown graph type '{}' (complete, star, cycle, edge_list, configuration, annealed)", t));
    }
    return out;
}

CouplingSpec parse_coupling(const ConfigNode& c, const std::string& base) {
    c.allow_keys({"mode", "J", "entries", "path"});
    const std::string mode_name = c.string_or("mode", "uniform");
    const CouplingMode mode = anchored(c, [&] { return coupling_mode_from_string(mode_name); });
    if (mode != CouplingMode::full_matrix) {
        if (c.has("entries") || c.has("path"))
            c.fail("'entries' and 'path' only apply to mode 'matrix'");
        const double J = c.at("J").number();
        return mode == CouplingMode::uniform ? CouplingSpec::uniform(J) : CouplingSpec::uniform_over_n(J);
    }
    if (c.has("J"))
        c.at("J").fail("mode 'matrix' takes its couplings from 'entries' or 'path'");
    if (c.has("entries") == c.has("path"))
        c.fail("mode 'matrix' needs exactly one of 'entries' or 'path'");
    std::vector<CouplingEntry> entries;
    if (auto list = c.get("entries")) {
        for (std::size_t k = 0, m = list->size(); k < m; ++k) {
            const ConfigNode e = list->element(k);
            if (e.size() != 3)
                e.fail("a coupling entry is [i, j, J_ij]");
            entries.push_back({e.element(0).count(), e.element(1).count(), e.element(2).number()});
        }
    } else {
        const ConfigNode p = c.at("path");
        std::istringstream in(read_file(p, resolve(base, p.string())));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#')
                continue;
            std::istringstream fields(line);
            long long i = -1;
            long long j = -1;
            double w = 0.0;
            std::string rest;
            if (!(fields >> i >> j >> w) || (fields >> rest) || i < 0 || j < 0 || !std::isfinite(w))
                p.fail(fmt::format("coupling file line {}: expected 'i j J_ij'", line_no));
            entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), w});
        }
    }
    return CouplingSpec::matrix(std::move(entries));
}

NoiseModel parse_noise(const ConfigNode& nz, const std::string& base) {
    const std::string family = nz.at("family").string();
    if (family == "logistic") {
        nz.allow_keys({"family", "beta"});
        return NoiseModel::logistic(nz.at("beta").positive());
    }
    if (family == "gaussian") {
        nz.allow_keys({"family", "sigma"});
        return NoiseModel::gaussian(nz.at("sigma").positive());
    }
    if (family == "uniform") {
        nz.allow_keys({"family", "half_width"});
        return NoiseModel::uniform(nz.at("half_width").positive());
    }
    if (family == "custom") {
        nz.allow_keys({"family", "path", "grid"});
        if (nz.has("path") == nz.has("grid"))
            nz.fail("custom noise needs exactly one of 'path' or 'grid'");
        if (auto p = nz.get("path")) {
            const std::string text = read_file(*p, resolve(base, p->string()));
            return anchored(*p, [&] { return build_custom(parse_density_text(text)); });
        }
        const ConfigNode grid = nz.at("grid");
        grid.allow_keys({"lo", "hi", "values"});
        DensityGrid dg{grid.at("lo").number(), grid.at("hi").number(), {}};
        const ConfigNode values = grid.at("values");
        for (std::size_t k = 0, m = values.size(); k < m; ++k)
            dg.values.push_back(values.element(k).number());
        return anchored(grid, [&] { return build_custom(dg); });
    }
    nz.at("family").fail(fmt::format("unknown noise family '{}' (logistic, gaussian, uniform, custom)", family));
}

} // namespace

RunConfig RunConfig::parse(std::string_view text, const std::string& base_dir) {
    RunConfig cfg;
    cfg.doc_ = std::make_unique<json>();
    cfg.empty_ = std::make_unique<json>(json::object());
    try {
        *cfg.doc_ = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
        std::string what = e.what();
        if (const auto pos = what.find("syntax error"); pos != std::string::npos)
            what = what.substr(pos);
        throw ConfigError(line, fmt::format("malformed JSON: {}", what));
    }
    cfg.map_ = std::make_unique<SourceMap>(text);

    const ConfigNode root = cfg.root();
    root.allow_keys({"model", "task", "output", "seed", "threads"});

    const ConfigNode model = root.at("model");
    model.allow_keys({"graph", "coupling", "H", "noise"});
    cfg.model.line = model.line();
    cfg.model.graph = parse_graph(model.at("graph"), base_dir);
    cfg.model.coupling = parse_coupling(model.at("coupling"), base_dir);
    if (auto h = model.get("H"))
        cfg.model.fields = h->numbers();
    if (auto nz = model.get("noise")) {
        cfg.model.noise.clear();
        if (nz->json().is_array()) {
            for (std::size_t k = 0, m = nz->size(); k < m; ++k)
                cfg.model.noise.push_back(parse_noise(nz->element(k), base_dir));
            if (cfg.model.noise.empty())
                nz->fail("noise list is empty");
        } else {
            cfg.model.noise.push_back(parse_noise(*nz, base_dir));
        }
    }
    const std::size_t n = cfg.model.graph.type == "annealed" ? 0 : cfg.model.graph.n;
    if (n > 0) {
        if (cfg.model.fields.size() != 1 && cfg.model.fields.size() != n)
            model.at("H").fail(fmt::format("H has {} entries for {} nodes", cfg.model.fields.size(), n));
        if (cfg.model.noise.size() != 1 && cfg.model.noise.size() != n)
            model.at("noise").fail(fmt::format("noise has {} entries for {} nodes", cfg.model.noise.size(), n));
    } else if (cfg.model.fields.size() != 1 || cfg.model.noise.size() != 1) {
        model.fail("annealed models take a scalar H and a single noise");
    }

    if (auto task = root.get("task"); task && !task->json().is_object())
        task->fail("expected an object");
    if (auto out = root.get("output")) {
        out->allow_keys({"dir", "prefix", "formats"});
        cfg.output.dir = resolve(base_dir, out->string_or("dir", "."));
        cfg.output.prefix = out->string_or("prefix", "qrenet");
        if (auto formats = out->get("formats")) {
            cfg.output.json = cfg.output.csv = false;
            for (std::size_t k = 0, m = formats->size(); k < m; ++k) {
                const ConfigNode f = formats->element(k);
                const std::string name = f.string();
                if (name == "json") cfg.output.json = true;
                else if (name == "csv") cfg.output.csv = true;
                else f.fail(fmt::format("unknown output format '{}' (json, csv)", name));
            }
        }
    } else {
        cfg.output.dir = resolve(base_dir, ".");
    }
    if (auto s = root.get("seed"))
        cfg.seed = s->seed();
    if (auto t = root.get("threads"))
        cfg.threads = static_cast<unsigned>(t->count());
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(1, fmt::format("cannot open config '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const auto parent = std::filesystem::path(path).parent_path();
    return parse(buffer.str(), parent.empty() ? std::string(".") : parent.string());
}

void RunConfig::apply(const Overrides& o) {
    if (o.J) {
        if (model.coupling.mode == CouplingMode::full_matrix)
            throw ConfigError(model.line, "--J cannot override a full coupling matrix");
        model.coupling.J = *o.J;
    }
    if (o.H)
        model.fields = {*o.H};
    if (o.beta) {
        for (auto& nz : model.noise) {
            if (nz.kind() != NoiseKind::logistic_difference)
                throw ConfigError(model.line, "--beta only applies to logistic noise");
            try {
                nz = NoiseModel::logistic(*o.beta);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(model.line, fmt::format("--beta: {}", e.what()));
            }
        }
    }
    if (o.seed)
        seed = o.seed;
    if (o.out)
        output.dir = *o.out;
    if (o.threads)
        threads = o.threads;
}

ConfigNode RunConfig::task() const {
    if (auto t = root().get("task"))
        return *t;
    return ConfigNode(*empty_, "/task", *map_);
}

GraphSpec RunConfig::build_graph(std::uint64_t run_seed) const {
    const GraphConfig& g = model.graph;
    if (g.fixed)
        return *g.fixed;
    if (g.type == "annealed")
        throw ConfigError(g.line, "graph type 'annealed' has no explicit nodes; use the annealed or transition subcommand");
    try {
        return configuration_model_sample(*g.degree, g.n, g.seed.value_or(run_seed));
    } catch (const std::exception& e) {
        throw ConfigError(g.line, fmt::format("/model/graph: {}", e.what()));
    }
}

GameModel RunConfig::build_game(std::uint64_t run_seed) const {
    GraphSpec graph = build_graph(run_seed);
    try {
        return GameModel::on_graph(std::move(graph), model.coupling, model.fields, model.noise);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(model.line, fmt::format("/model: {}", e.what()));
    }
}

ModelTemplate RunConfig::build_template(std::uint64_t run_seed) const {
    if (model.noise.size() != 1)
        throw ConfigError(model.line, "parameter sweeps need a single shared noise");
    ModelTemplate t{build_graph(run_seed), model.coupling, model.fields, model.noise.front()};
    (void)build_game(run_seed);  // validates the combination
    return t;
}

DegreeDistribution RunConfig::degree_distribution(std::uint64_t run_seed) const {
    if (model.graph.degree)
        return *model.graph.degree;
    return qrenet::degree_distribution(build_graph(run_seed));
}

const NoiseModel& RunConfig::shared_noise() const {
    if (model.noise.size() != 1)
        throw ConfigError(model.line, "this task needs a single shared noise");
    return model.noise.front();
}

} // namespace qrenet
