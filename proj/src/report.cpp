#include "rdgcn/report.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rdgcn/hash.hpp"
#include "text_io.hpp"

namespace rdgcn {

namespace {

nlohmann::json directional_json(const DirectionalResult& r, const std::vector<std::size_t>& ks, bool ranks) {
    nlohmann::json j;
    j["direction"] = to_string(r.direction);
    nlohmann::json hits = nlohmann::json::object();
    for (std::size_t i = 0; i < ks.size(); ++i) hits[std::to_string(ks[i])] = r.hits[i];
    j["hits"] = hits;
    j["triangles"] = {{"correct", r.triangles.correct}, {"total", r.triangles.total}, {"rate", r.triangles.rate()}};
    if (ranks) j["ranks"] = r.ranks;
    return j;
}

}  // namespace

std::string format_report(const AlignmentReport& report, const RunConfig& config) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(4);
    o << "variant        " << to_string(config.model.variant) << '\n';
    o << "direction      " << to_string(report.direction) << '\n';
    o << "candidates     " << to_string(report.pool) << '\n';
    o << "test pairs     " << report.test_pairs << '\n';
    for (std::size_t i = 0; i < report.ks.size(); ++i) {
        o << "Hits@" << std::left << std::setw(9) << report.ks[i] << report.hits[i] * 100.0 << '\n';
    }
    for (const auto& d : report.directions) {
        if (report.directions.size() > 1) {
            o << "  " << to_string(d.direction) << ':';
            for (std::size_t i = 0; i < report.ks.size(); ++i) o << " H@" << report.ks[i] << '=' << d.hits[i] * 100.0;
            o << '\n';
        }
        o << "triangles " << (report.directions.size() > 1 ? to_string(d.direction) + " " : std::string())
          << d.triangles.correct << '/' << d.triangles.total << " correct (" << d.triangles.rate() * 100.0 << "%)\n";
    }
    o << "runtime        " << report.runtime_seconds << " s\n";
    o << "config hash    " << hex64(config.hash()) << '\n';
    return o.str();
}

std::string report_json(const AlignmentReport& report, const RunConfig& config) {
    const bool ranks = config.eval.per_pair_ranks;
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["variant"] = to_string(config.model.variant);
    j["direction"] = to_string(report.direction);
    j["candidate_pool"] = to_string(report.pool);
    j["test_pairs"] = report.test_pairs;
    nlohmann::json hits = nlohmann::json::object();
    for (std::size_t i = 0; i < report.ks.size(); ++i) hits[std::to_string(report.ks[i])] = report.hits[i];
    j["hits"] = hits;
    j["directions"] = nlohmann::json::array();
    for (const auto& d : report.directions) j["directions"].push_back(directional_json(d, report.ks, ranks));
    j["runtime_seconds"] = report.runtime_seconds;
    j["config_hash"] = hex64(config.hash());
    j["config"] = config.to_text();
    return j.dump(2) + '\n';
}

void write_report(const std::filesystem::path& dir, const AlignmentReport& report, const RunConfig& config) {
    detail::open_output(dir / "report.txt") << format_report(report, config);
    detail::open_output(dir / "report.json") << report_json(report, config);
}

void write_log_line(std::ostream& out, const EpochRecord& record) {
    nlohmann::json j;
    j["epoch"] = record.epoch;
    j["loss"] = record.loss;
    if (record.hits1) {
        j["hits1"] = *record.hits1;
        j["hits1_split"] = record.validation ? "validation" : "train";
    }
    j["wall_seconds"] = record.wall_seconds;
    out << j.dump() << '\n';
}

}  // namespace rdgcn
