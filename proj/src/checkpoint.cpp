#include "rdgcn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rdgcn/hash.hpp"
#include "text_io.hpp"

namespace rdgcn {

namespace {

constexpr std::string_view kMagic = "rdgcn-checkpoint 1";

std::uint64_t parse_hex(const std::string& s, const std::filesystem::path& file) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(file.string() + ": bad hash '" + s + "'");
    return v;
}

}  // namespace

std::uint64_t compat_hash(std::size_t entities, std::size_t relations, std::size_t dim, Variant variant) {
    return fnv1a64("n=" + std::to_string(entities) + ";m=" + std::to_string(relations) + ";d=" + std::to_string(dim) +
                   ";variant=" + to_string(variant));
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& file, const ModelParams<Scalar>& params, const PrimalGraph& graph,
                     const RunConfig& config) {
    auto out = detail::open_output(file);
    const auto text = config.to_text();
    std::size_t config_lines = 0;
    for (const char c : text) config_lines += c == '\n';

    out << kMagic << '\n';
    out << "entities " << graph.entity_count() << '\n';
    out << "relations " << graph.relation_count() << '\n';
    out << "compat " << hex64(compat_hash(graph.entity_count(), graph.relation_count(), params.options.dim,
                                          params.options.variant))
        << '\n';
    out << "config_hash " << hex64(config.hash()) << '\n';
    out << "config " << config_lines << '\n' << text;

    std::size_t tensors = 0;
    params.tensors.for_each_tensor([&](const std::string&, const Scalar*, std::size_t) { ++tensors; });
    out << "tensors " << tensors << '\n';
    char buf[64];
    params.tensors.for_each_tensor([&](const std::string& name, const Scalar* data, std::size_t size) {
        out << name << ' ' << size << '\n';
        for (std::size_t i = 0; i < size; ++i) {
            std::snprintf(buf, sizeof buf, "%a", static_cast<double>(data[i]));
            out << (i == 0 ? "" : " ") << buf;
        }
        out << '\n';
    });
    if (!out) throw DataError("failed writing checkpoint: " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) throw DataError("missing file: " + file.string());
    std::ifstream in(file);
    std::string line;
    const auto fail = [&](const std::string& what) -> DataError { return DataError(file.string() + ": " + what); };
    const auto expect = [&](std::string_view key) {
        if (!std::getline(in, line) || line.rfind(std::string(key) + ' ', 0) != 0)
            throw fail("expected '" + std::string(key) + "' line");
        return line.substr(key.size() + 1);
    };
    const auto expect_size = [&](std::string_view key) {
        std::size_t v = 0;
        if (!detail::parse_number(expect(key), v)) throw fail("bad value for '" + std::string(key) + "'");
        return v;
    };

    if (!std::getline(in, line) || line != kMagic) throw fail("not a checkpoint (bad header)");
    Checkpoint ck;
    ck.entities = expect_size("entities");
    ck.relations = expect_size("relations");
    ck.compat = parse_hex(expect("compat"), file);
    ck.config_hash = parse_hex(expect("config_hash"), file);
    const auto config_lines = expect_size("config");
    std::string text;
    for (std::size_t i = 0; i < config_lines; ++i) {
        if (!std::getline(in, line)) throw fail("truncated config block");
        text += line + '\n';
    }
    ck.config = RunConfig::parse(text);
    if (ck.config.hash() != ck.config_hash) throw fail("embedded config does not match its hash");
    const auto& opts = ck.config.model;
    if (compat_hash(ck.entities, ck.relations, opts.dim, opts.variant) != ck.compat)
        throw fail("compatibility hash does not match header");

    // Shape template from the options, then overwrite every tensor.
    ck.params = init_params<double>(opts, Matrix<double>::Zero(static_cast<Eigen::Index>(ck.entities),
                                                                static_cast<Eigen::Index>(opts.dim)),
                                    0);
    std::size_t expected_tensors = 0;
    ck.params.tensors.for_each_tensor([&](const std::string&, double*, std::size_t) { ++expected_tensors; });
    if (expect_size("tensors") != expected_tensors) throw fail("tensor count does not match the model options");
    ck.params.tensors.for_each_tensor([&](const std::string& name, double* data, std::size_t size) {
        if (!std::getline(in, line)) throw fail("truncated before tensor " + name);
        if (line != name + ' ' + std::to_string(size)) throw fail("expected tensor '" + name + "' of size " +
                                                                  std::to_string(size) + ", found '" + line + "'");
        if (!std::getline(in, line)) throw fail("missing values for " + name);
        const char* p = line.c_str();
        for (std::size_t i = 0; i < size; ++i) {
            char* end = nullptr;
            data[i] = std::strtod(p, &end);
            if (end == p) throw fail("bad value in tensor " + name);
            p = end;
        }
        while (*p == ' ') ++p;
        if (*p != '\0') throw fail("extra values in tensor " + name);
    });
    return ck;
}

void check_compatible(const Checkpoint& checkpoint, const PrimalGraph& graph) {
    const auto expected = compat_hash(graph.entity_count(), graph.relation_count(), checkpoint.config.model.dim,
                                      checkpoint.config.model.variant);
    if (expected != checkpoint.compat) {
        throw DataError("checkpoint shape (n=" + std::to_string(checkpoint.entities) +
                        ", m=" + std::to_string(checkpoint.relations) + ") does not match dataset (n=" +
                        std::to_string(graph.entity_count()) + ", m=" + std::to_string(graph.relation_count()) + ")");
    }
}

template void save_checkpoint<float>(const std::filesystem::path&, const ModelParams<float>&, const PrimalGraph&,
                                     const RunConfig&);
template void save_checkpoint<double>(const std::filesystem::path&, const ModelParams<double>&, const PrimalGraph&,
                                      const RunConfig&);

}  // namespace rdgcn
