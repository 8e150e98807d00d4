#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ansatz.hpp"
#include "common.hpp"
#include "problem.hpp"

namespace qesolve::io {

using nlohmann::json;

inline constexpr const char *kInstanceSchema = "qesolve.instance/1";
inline constexpr const char *kManifestSchema = "qesolve.manifest/1";

/// Decimal text with 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw RuntimeError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path &path, const std::string &text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw RuntimeError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw RuntimeError("write to '" + path.string() + "' failed");
    }
}

// ---------------------------------------------------------------------------
// Instance files.
// ---------------------------------------------------------------------------

/// JSON with every i < j weight listed explicitly as [i, j, w].
inline std::string instance_to_json(const SKInstance &inst) {
    std::ostringstream os;
    os << "{\n  \"schema\": \"" << kInstanceSchema << "\",\n"
       << "  \"n_vars\": " << inst.n_vars() << ",\n"
       << "  \"weight_kind\": \"" << to_string(inst.weight_kind()) << "\",\n"
       << "  \"seed\": " << inst.seed() << ",\n"
       << "  \"weights\": [";
    bool first = true;
    for (std::size_t i = 0; i < inst.n_vars(); ++i) {
        for (std::size_t j = i + 1; j < inst.n_vars(); ++j) {
            os << (first ? "\n    " : ",\n    ") << '[' << i << ", " << j << ", "
               << fmt17(inst.weight(i, j)) << ']';
            first = false;
        }
    }
    os << "\n  ]\n}\n";
    return os.str();
}

inline SKInstance instance_from_json(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ValidationError(std::string("instance file is not valid JSON: ") + e.what());
    }
    std::vector<std::string> problems;
    auto fail = [&](const std::string &m) { problems.push_back(m); };
    if (!doc.is_object()) {
        throw ValidationError("instance file must hold a JSON object");
    }
    if (doc.value("schema", std::string{}) != kInstanceSchema) {
        fail(std::string("schema must be \"") + kInstanceSchema + "\"");
    }
    if (!doc.contains("n_vars") || !doc["n_vars"].is_number_unsigned() ||
        doc["n_vars"].get<std::size_t>() < 2) {
        fail("n_vars must be an integer >= 2");
    }
    WeightKind kind = WeightKind::pm1;
    try {
        kind = parse_weight_kind(doc.value("weight_kind", std::string{}));
    } catch (const ValidationError &e) {
        fail(e.what());
    }
    if (!doc.contains("seed") || !doc["seed"].is_number_unsigned()) {
        fail("seed must be a non-negative integer");
    }
    if (!doc.contains("weights") || !doc["weights"].is_array()) {
        fail("weights must be an array of [i, j, w] entries");
    }
    if (!problems.empty()) {
        std::string msg = "invalid instance file:";
        for (const auto &p : problems) {
            msg += "\n  - " + p;
        }
        throw ValidationError(msg);
    }
    const auto n = doc["n_vars"].get<std::size_t>();
    SKInstance inst(n, kind, doc["seed"].get<std::uint64_t>());
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::size_t k = 0;
    for (const auto &e : doc["weights"]) {
        const std::string where = "weights[" + std::to_string(k++) + "]";
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() ||
            !e[1].is_number_unsigned() || !e[2].is_number()) {
            throw ValidationError(where + " must be [i, j, w]");
        }
        auto i = e[0].get<std::size_t>();
        auto j = e[1].get<std::size_t>();
        const double w = e[2].get<double>();
        require(i < n && j < n && i != j, where + " has an invalid index pair");
        require(std::isfinite(w), where + " weight is not finite");
        if (i > j) {
            std::swap(i, j);
        }
        require(seen.insert({i, j}).second, where + " duplicates an earlier pair");
        inst.set_weight(i, j, w);
    }
    return inst;
}

inline SKInstance load_instance(const std::filesystem::path &path) {
    try {
        return instance_from_json(read_file(path));
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV tables.
// ---------------------------------------------------------------------------

using CsvRow = std::vector<std::string>;

inline std::string csv_field(const std::string &v) {
    if (v.find_first_of(",\"\n") == std::string::npos) {
        return v;
    }
    std::string out = "\"";
    for (char c : v) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

inline std::string csv_line(const CsvRow &row) {
    std::string line;
    for (std::size_t k = 0; k < row.size(); ++k) {
        line += (k == 0 ? "" : ",") + csv_field(row[k]);
    }
    return line + "\n";
}

/// Appends rows to a CSV file, writing the header for a new file and
/// refusing to mix headers in an existing one.
inline void append_csv(const std::filesystem::path &path, const CsvRow &header,
                       const std::vector<CsvRow> &rows) {
    const std::string head = csv_line(header);
    const bool exists = std::filesystem::exists(path);
    if (exists) {
        std::ifstream in(path);
        std::string first;
        std::getline(in, first);
        if (first + "\n" != head) {
            throw RuntimeError("'" + path.string() +
                               "' already holds a table with different columns");
        }
    } else if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw RuntimeError("cannot open '" + path.string() + "' for writing");
    }
    if (!exists) {
        out << head;
    }
    for (const auto &r : rows) {
        require(r.size() == header.size(), "CSV row width does not match the header");
        out << csv_line(r);
    }
    if (!out) {
        throw RuntimeError("write to '" + path.string() + "' failed");
    }
}

// ---------------------------------------------------------------------------
// Parameter strings: "beta:gamma:bias" per layer, layers joined by ';'.
// ---------------------------------------------------------------------------

inline std::string params_to_string(const std::vector<LayerParams> &params) {
    std::string s;
    for (std::size_t k = 0; k < params.size(); ++k) {
        s += (k == 0 ? "" : ";") + fmt17(params[k].beta) + ":" + fmt17(params[k].gamma) +
             ":" + fmt17(params[k].gamma_bias);
    }
    return s;
}

inline std::vector<LayerParams> params_from_string(const std::string &text) {
    std::vector<LayerParams> out;
    std::stringstream layers(text);
    std::string layer;
    while (std::getline(layers, layer, ';')) {
        std::stringstream parts(layer);
        std::string field;
        std::vector<double> v;
        while (std::getline(parts, field, ':')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(field, &used));
                require(used == field.size(), "");
            } catch (const std::exception &) {
                throw ValidationError("malformed parameter '" + field + "'");
            }
        }
        require(v.size() == 2 || v.size() == 3,
                "each layer needs beta:gamma or beta:gamma:bias, got '" + layer + "'");
        out.push_back({v[0], v[1], v.size() == 3 ? v[2] : 0.0});
    }
    require(!out.empty(), "parameter string is empty");
    return out;
}

inline std::string spins_to_string(const SpinString &z) {
    std::string s;
    for (int v : z) {
        s += v == 1 ? '+' : '-';
    }
    return s;
}

// ---------------------------------------------------------------------------
// Run manifests.
// ---------------------------------------------------------------------------

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Path of the manifest accompanying `output`.
inline std::filesystem::path manifest_path(const std::filesystem::path &output) {
    return output.string() + ".manifest.json";
}

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    json config = json::object();
    json seeds = json::object();
    std::string version;
    std::string started;
    std::string finished;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    [[nodiscard]] json to_json() const {
        return json{{"schema", kManifestSchema},
                    {"command", command},
                    {"argv", argv},
                    {"config", config},
                    {"seeds", seeds},
                    {"version", version},
                    {"started_utc", started},
                    {"finished_utc", finished},
                    {"inputs", inputs},
                    {"outputs", outputs}};
    }

    static Manifest from_json(const json &j) {
        require(j.is_object() && j.value("schema", std::string{}) == kManifestSchema,
                std::string("manifest schema must be \"") + kManifestSchema + "\"");
        Manifest m;
        try {
            m.command = j.at("command").get<std::string>();
            m.argv = j.at("argv").get<std::vector<std::string>>();
            m.config = j.value("config", json::object());
            m.seeds = j.value("seeds", json::object());
            m.version = j.value("version", std::string{});
            m.started = j.value("started_utc", std::string{});
            m.finished = j.value("finished_utc", std::string{});
            m.inputs = j.value("inputs", std::vector<std::string>{});
            m.outputs = j.value("outputs", std::vector<std::string>{});
        } catch (const json::exception &e) {
            throw ValidationError(std::string("malformed manifest: ") + e.what());
        }
        return m;
    }
};

inline void write_manifest(const std::filesystem::path &output, const Manifest &m) {
    write_file(manifest_path(output), m.to_json().dump(2) + "\n");
}

inline Manifest load_manifest(const std::filesystem::path &path) {
    try {
        return Manifest::from_json(json::parse(read_file(path)));
    } catch (const json::parse_error &e) {
        throw ValidationError(path.string() + ": manifest is not valid JSON: " + e.what());
    }
}

} // namespace qesolve::io
