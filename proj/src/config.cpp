#include "rdgcn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rdgcn/hash.hpp"
#include "text_io.hpp"

namespace rdgcn {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F&& format) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += format(values[i]);
    }
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
    throw std::invalid_argument("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

double as_double(std::string_view key, std::string_view v) {
    double out = 0;
    if (!detail::parse_number(v, out)) bad_value(key, v);
    return out;
}

std::uint64_t as_uint(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    if (!detail::parse_number(v, out)) bad_value(key, v);
    return out;
}

std::size_t as_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(as_uint(key, v)); }

bool as_bool(std::string_view key, std::string_view v) {
    v = detail::trim(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v);
}

template <typename F>
auto as_list(std::string_view v, F&& parse_one) {
    std::vector<decltype(parse_one(std::string_view{}))> out;
    for (const auto tok : detail::split(v, ',')) {
        const auto t = detail::trim(tok);
        if (!t.empty()) out.push_back(parse_one(t));
    }
    return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

void RunConfig::set(std::string_view key, std::string_view raw) {
    const auto v = detail::trim(raw);
    const std::string value(v);
    auto& m = model;
    auto& t = training;
    if (key == "dataset") dataset = value;
    else if (key == "names") names = value;
    else if (key == "synth") use_synth = as_bool(key, v);
    else if (key == "synth.entities") synth.entities_per_kg = as_size(key, v);
    else if (key == "synth.relations") synth.relation_count = as_size(key, v);
    else if (key == "synth.triples") synth.triple_count = as_size(key, v);
    else if (key == "synth.dropout") synth.edge_dropout = as_double(key, v);
    else if (key == "synth.noise") synth.name_noise = as_double(key, v);
    else if (key == "synth.triangles") synth.planted_triangles = as_size(key, v);
    else if (key == "dim") m.dim = as_size(key, v);
    else if (key == "interactions") m.interactions = as_size(key, v);
    else if (key == "gcn_layers") m.gcn_layers = as_size(key, v);
    else if (key == "betas") m.betas = as_list(v, [&](std::string_view s) { return as_double(key, s); });
    else if (key == "share_scorers") m.share_scorers = as_bool(key, v);
    else if (key == "leaky_slope") m.leaky_slope = as_double(key, v);
    else if (key == "dual_activation") m.dual_activation = parse_activation(v);
    else if (key == "primal_activation") m.primal_activation = parse_activation(v);
    else if (key == "gcn_init") m.gcn_init = parse_weight_init(v);
    else if (key == "gate_bias_init") m.gate_bias_init = as_double(key, v);
    else if (key == "variant") m.variant = parse_variant(v);
    else if (key == "margin") t.margin = as_double(key, v);
    else if (key == "negatives") t.negatives_per_side = as_size(key, v);
    else if (key == "refresh") t.negative_refresh_epochs = as_size(key, v);
    else if (key == "lr") t.learning_rate = as_double(key, v);
    else if (key == "epochs") t.epochs = as_size(key, v);
    else if (key == "optimizer") t.optimizer = parse_optimizer(v);
    else if (key == "adam_beta1") t.adam_beta1 = as_double(key, v);
    else if (key == "adam_beta2") t.adam_beta2 = as_double(key, v);
    else if (key == "adam_eps") t.adam_epsilon = as_double(key, v);
    else if (key == "early_stop") t.early_stop = as_bool(key, v);
    else if (key == "patience") t.patience = as_size(key, v);
    else if (key == "validation_fraction") t.validation_fraction = as_double(key, v);
    else if (key == "eval_every") t.eval_every = as_size(key, v);
    else if (key == "split") split_fraction = as_double(key, v);
    else if (key == "seed") rng_seed = as_uint(key, v);
    else if (key == "ks") eval.ks = as_list(v, [&](std::string_view s) { return as_size(key, s); });
    else if (key == "direction") eval.direction = parse_direction(v);
    else if (key == "candidate_pool") eval.pool = parse_candidate_pool(v);
    else if (key == "per_pair_ranks") eval.per_pair_ranks = as_bool(key, v);
    else if (key == "out") output_dir = value;
    else if (key == "precision") {
        if (value != "float" && value != "double") bad_value(key, v);
        precision = value;
    }
    else if (key == "fractions") fractions = as_list(v, [&](std::string_view s) { return as_double(key, s); });
    else if (key == "variants") variants = as_list(v, [](std::string_view s) { return parse_variant(s); });
    else throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

std::string RunConfig::to_text() const {
    std::ostringstream o;
    auto kv = [&o](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
    kv("dataset", dataset);
    kv("names", names);
    kv("synth", bool_text(use_synth));
    kv("synth.entities", std::to_string(synth.entities_per_kg));
    kv("synth.relations", std::to_string(synth.relation_count));
    kv("synth.triples", std::to_string(synth.triple_count));
    kv("synth.dropout", fmt(synth.edge_dropout));
    kv("synth.noise", fmt(synth.name_noise));
    kv("synth.triangles", std::to_string(synth.planted_triangles));
    kv("dim", std::to_string(model.dim));
    kv("interactions", std::to_string(model.interactions));
    kv("gcn_layers", std::to_string(model.gcn_layers));
    kv("betas", join(model.betas, fmt));
    kv("share_scorers", bool_text(model.share_scorers));
    kv("leaky_slope", fmt(model.leaky_slope));
    kv("dual_activation", to_string(model.dual_activation));
    kv("primal_activation", to_string(model.primal_activation));
    kv("gcn_init", to_string(model.gcn_init));
    kv("gate_bias_init", fmt(model.gate_bias_init));
    kv("variant", to_string(model.variant));
    kv("margin", fmt(training.margin));
    kv("negatives", std::to_string(training.negatives_per_side));
    kv("refresh", std::to_string(training.negative_refresh_epochs));
    kv("lr", fmt(training.learning_rate));
    kv("epochs", std::to_string(training.epochs));
    kv("optimizer", to_string(training.optimizer));
    kv("adam_beta1", fmt(training.adam_beta1));
    kv("adam_beta2", fmt(training.adam_beta2));
    kv("adam_eps", fmt(training.adam_epsilon));
    kv("early_stop", bool_text(training.early_stop));
    kv("patience", std::to_string(training.patience));
    kv("validation_fraction", fmt(training.validation_fraction));
    kv("eval_every", std::to_string(training.eval_every));
    kv("split", fmt(split_fraction));
    kv("seed", std::to_string(rng_seed));
    kv("ks", join(eval.ks, [](std::size_t k) { return std::to_string(k); }));
    kv("direction", to_string(eval.direction));
    kv("candidate_pool", to_string(eval.pool));
    kv("per_pair_ranks", bool_text(eval.per_pair_ranks));
    kv("out", output_dir);
    kv("precision", precision);
    kv("fractions", join(fractions, fmt));
    kv("variants", join(variants, [](Variant v) { return to_string(v); }));
    return o.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_text()); }

void RunConfig::resolve() {
    synth.embedding_dim = model.dim;
    synth.rng_seed = rng_seed;
    synth.seed_fraction = split_fraction;
    training.rng_seed = rng_seed;
    model.validate();
    training.validate();
    if (use_synth) synth.validate();
    if (!use_synth && dataset.empty()) throw std::invalid_argument("either 'dataset' or 'synth = true' is required");
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw std::invalid_argument("split must lie in (0,1)");
    for (const auto f : fractions)
        if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("sweep fractions must lie in (0,1)");
    if (eval.ks.empty()) throw std::invalid_argument("ks must not be empty");
}

void RunConfig::apply_text(std::string_view text) {
    std::size_t line_no = 0;
    for (const auto raw : detail::split(text, '\n')) {
        ++line_no;
        auto line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
        try {
            set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::apply_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open config file: " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply_text(buf.str());
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig cfg;
    cfg.apply_text(text);
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
    RunConfig cfg;
    cfg.apply_file(file);
    return cfg;
}

RunConfig synthetic_defaults() {
    RunConfig cfg;
    cfg.use_synth = true;
    cfg.model.dim = 50;
    cfg.training.epochs = 300;
    return cfg;
}

}  // namespace rdgcn
